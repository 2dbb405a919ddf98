use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use scgl_core::datagen::{
    ratio_for_samples, sample_er_cg_stream, sample_signals_stream, spherical_cg_with, ErParams, GroundTruth,
    SignalMatrix, SphereParams, Stream,
};
use scgl_core::io::{
    load_ground_truth, load_json, read_matrix, save_ground_truth, save_json, write_laplacian, write_matrix_csv, FitRecord,
};
use scgl_core::metrics::{evaluate, EvalOptions, ResultRow};
use scgl_core::solver::{covariance, cross_validate, fit as run_fit, FitResult, Hyperparams};

use crate::config::{load_hyperparams, ExperimentConfig, Family};
use crate::{CrossvalArgs, EvalArgs, FitArgs, SolverArgs, SweepArgs, Usage};

pub const RESOLVED_CONFIG: &str = "config.resolved.json";

/// What `scgl fit` writes: the fit itself plus the run coordinates needed to
/// score it later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutput {
    pub samples: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    #[serde(flatten)]
    pub record: FitRecord,
}

pub fn resolve_sweep(args: &SweepArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(args.config.as_deref(), args.family)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(r) = &args.ratios {
        cfg.ratios = r.clone();
        cfg.samples.clear();
    }
    if let Some(m) = &args.method {
        cfg.methods = m.clone();
    }
    if let Some(c1) = args.c1 {
        cfg.hyperparams.c1 = c1;
    }
    if let Some(c2) = args.c2 {
        cfg.hyperparams.c2 = c2;
    }
    if let Some(eps) = args.eps_edge {
        cfg.eps_edge = eps;
    }
    cfg.set_penalties(args.alpha, args.beta);
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_solver(args: &SolverArgs) -> Result<Hyperparams> {
    let mut hp = load_hyperparams(args.config.as_deref())?;
    if let Some(a) = args.alpha {
        hp.alpha = a;
    }
    if let Some(b) = args.beta {
        hp.beta = b;
    }
    if let Some(c1) = args.c1 {
        hp.c1 = c1;
    }
    if let Some(c2) = args.c2 {
        hp.c2 = c2;
    }
    hp.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(hp)
}

pub fn ground_truth(cfg: &ExperimentConfig, trial: u32) -> Result<GroundTruth> {
    let gt = match cfg.family {
        Family::Er => {
            let p = (cfg.p_scale * (cfg.v as f64).ln() / cfg.v as f64).min(1.0);
            let params = ErParams { v: cfg.v, n: cfg.n, p, w_lo: cfg.w_lo, w_hi: cfg.w_hi };
            sample_er_cg_stream(&params, cfg.seed, Stream::Graph { trial })?
        }
        Family::Sphere => {
            if cfg.n != 2 {
                bail!(Usage(format!("the sphere family has n = 2, got n = {}", cfg.n)));
            }
            spherical_cg_with(&SphereParams::new(cfg.v, cfg.k), cfg.seed)?
        }
    };
    Ok(gt)
}

pub fn train_signals(cfg: &ExperimentConfig, gt: &GroundTruth, trial: u32, slot: u32, m: usize) -> Result<SignalMatrix> {
    Ok(sample_signals_stream(&gt.laplacian, m, cfg.seed, Stream::Train { trial, ratio_slot: slot })?)
}

pub fn test_signals(cfg: &ExperimentConfig, gt: &GroundTruth, trial: u32) -> Result<SignalMatrix> {
    Ok(sample_signals_stream(&gt.laplacian, cfg.test_samples, cfg.seed, Stream::Test { trial })?)
}

pub fn trial_dir(out: &Path, trial: usize) -> PathBuf {
    out.join(format!("trial_{trial:03}"))
}

pub fn generate(args: &SweepArgs) -> Result<()> {
    let cfg = resolve_sweep(args)?;
    let out = &args.out;
    save_json(&out.join(RESOLVED_CONFIG), &cfg)?;
    let sweep = cfg.sweep();
    let mut files = Vec::new();
    for trial in 0..cfg.trials {
        let t = trial as u32;
        let dir = trial_dir(out, trial);
        let gt = ground_truth(&cfg, t)?;
        save_ground_truth(&dir.join("ground_truth.json"), &gt)?;
        write_laplacian(&dir.join("laplacian.mtx"), &gt.laplacian)?;
        let test = test_signals(&cfg, &gt, t)?;
        write_matrix_csv(&dir.join("heldout.csv"), &test.x, cfg.v, cfg.n)?;
        let mut signals = Vec::new();
        for (slot, &(m, r)) in sweep.iter().enumerate() {
            let x = train_signals(&cfg, &gt, t, slot as u32, m)?;
            let name = format!("signals_r{slot}.csv");
            write_matrix_csv(&dir.join(&name), &x.x, cfg.v, cfg.n)?;
            signals.push(json!({ "file": name, "M": m, "r": r }));
        }
        files.push(json!({
            "trial": trial,
            "dir": dir.strip_prefix(out).unwrap_or(&dir),
            "ground_truth": "ground_truth.json",
            "laplacian": "laplacian.mtx",
            "heldout": "heldout.csv",
            "signals": signals,
        }));
    }
    save_json(&out.join("manifest.json"), &json!({ "command": "generate", "config": cfg, "trials": files }))?;
    println!("generated {} trials x {} ratios in {}", cfg.trials, sweep.len(), out.display());
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let hp = resolve_solver(&args.solver)?;
    let (x, v, n) = read_matrix(&args.signals)?;
    let s = covariance(&x)?;
    let start = Instant::now();
    let res = run_fit(&s, v, n, &hp, args.solver.method)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let output = FitOutput { samples: x.ncols(), seed: args.seed, wall_time_s, record: FitRecord::from_fit(&res) };

    save_json(&args.out.join(RESOLVED_CONFIG), &json!({
        "command": "fit",
        "signals": args.signals,
        "method": args.solver.method,
        "seed": args.seed,
        "hyperparams": hp,
    }))?;
    save_json(&args.out.join("fit.json"), &output)?;
    write_laplacian(&args.out.join("laplacian.mtx"), &res.laplacian)?;
    println!("{}", summary_line(&res, x.ncols(), wall_time_s));
    Ok(())
}

pub fn summary_line(res: &FitResult, m: usize, secs: f64) -> String {
    let st = &res.state;
    format!(
        "{} v={} n={} M={} iterations={} converged={} objective={:.6e} edges={} kernel_dim={} time={:.2}s",
        res.method,
        st.v,
        st.n,
        m,
        st.iteration,
        res.converged,
        res.objective_trace.last().copied().unwrap_or(f64::NAN),
        st.w.iter().filter(|w| **w > 0.0).count(),
        res.kernel_dim,
        secs
    )
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let fit: FitOutput = load_json(&args.fit)?;
    let truth = load_ground_truth(&args.truth)?;
    let (test, tv, tn) = read_matrix(&args.test)?;
    let rec = &fit.record;
    if (rec.v, rec.n) != (truth.nodes(), truth.stalk_dim()) {
        bail!(
            "dimension mismatch: {} has v = {}, n = {} but {} has v = {}, n = {}",
            args.fit.display(),
            rec.v,
            rec.n,
            args.truth.display(),
            truth.nodes(),
            truth.stalk_dim()
        );
    }
    if (tv, tn) != (rec.v, rec.n) {
        bail!(
            "dimension mismatch: {} has v = {}, n = {} but {} has v = {tv}, n = {tn}",
            args.fit.display(),
            rec.v,
            rec.n,
            args.test.display()
        );
    }
    let l_hat = rec.laplacian()?;
    let opts = EvalOptions { eps_edge: args.eps_edge, ..EvalOptions::default() };
    let report = evaluate(l_hat.matrix(), &rec.weights(), truth.laplacian.matrix(), &truth.cg.weight_vector(), &test, &opts)?;
    let row = ResultRow {
        seed: args.seed.unwrap_or(fit.seed),
        method: rec.method.to_string(),
        family: truth.provenance.family().to_string(),
        v: rec.v,
        n: rec.n,
        m: fit.samples,
        r: ratio_for_samples(fit.samples, rec.v),
        alpha: rec.hyperparams.alpha,
        beta: rec.hyperparams.beta,
        report,
        wall_time_s: fit.wall_time_s,
    };
    append_row(&args.out, ResultRow::HEADER, &row.to_string())?;
    println!("{row}");
    Ok(())
}

/// Appends one line, writing the header first when the file is new. An
/// existing file must carry the same header.
pub fn append_row(path: &Path, header: &str, line: &str) -> Result<()> {
    let exists = path.exists();
    if exists {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if text.lines().next() != Some(header) {
            bail!("{} does not start with the results header", path.display());
        }
    } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if !exists {
        writeln!(f, "{header}")?;
    }
    writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn parse_grid(items: &[String]) -> Result<Vec<(f64, f64)>, Usage> {
    items
        .iter()
        .map(|item| {
            let (a, b) = item.split_once(':').ok_or_else(|| Usage(format!("grid entry '{item}' is not alpha:beta")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Usage(format!("grid entry '{item}': {e}")));
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

pub fn crossval(args: &CrossvalArgs) -> Result<()> {
    let hp = resolve_solver(&args.solver)?;
    let grid = parse_grid(&args.grid)?;
    for &(alpha, beta) in &grid {
        Hyperparams { alpha, beta, ..hp }.validate().map_err(|e| Usage(e.to_string()))?;
    }
    let (x, v, n) = read_matrix(&args.signals)?;
    let cv = cross_validate(&x, v, n, &grid, args.folds, &hp, args.solver.method, args.seed)?;
    for (&(alpha, beta), score) in grid.iter().zip(&cv.scores) {
        println!("alpha={alpha} beta={beta} score={score:.6e}");
    }
    println!("best alpha={} beta={}", cv.best.alpha, cv.best.beta);
    if let Some(out) = &args.out {
        save_json(out, &json!({
            "signals": args.signals,
            "method": args.solver.method,
            "folds": args.folds,
            "seed": args.seed,
            "grid": grid,
            "scores": cv.scores,
            "best_index": cv.best_index,
            "best": cv.best,
        }))?;
    }
    Ok(())
}
