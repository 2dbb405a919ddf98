use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use scgl_core::datagen::{stream_rng, Stream};
use scgl_core::io::{save_json, write_text};
use scgl_core::metrics::{evaluate, EvalOptions, EvalReport, ResultRow};
use scgl_core::solver::{covariance, cross_validate, fit, Hyperparams, Method};

use crate::commands::{ground_truth, resolve_sweep, test_signals, train_signals, RESOLVED_CONFIG};
use crate::config::ExperimentConfig;
use crate::{SweepArgs, Usage};

#[derive(Debug, Clone, Copy)]
struct Job {
    method_slot: usize,
    ratio_slot: usize,
    trial: usize,
}

/// Per-trial output, also written as its own JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub ratio_slot: usize,
    pub row: ResultRow,
    pub ok: bool,
    pub error: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    /// Mean held-out score per grid point when cross-validation ran.
    pub cv_scores: Option<Vec<f64>>,
}

pub const RESULTS_HEADER_EXTRA: &str = "trial,status";

const METRICS: [&str; 6] = ["f1", "weight_mse", "empirical_tv", "spectral_dist", "heat_dist", "kernel_dim_est"];

fn metric_values(r: &EvalReport) -> [f64; 6] {
    [r.f1, r.weight_mse, r.empirical_tv, r.spectral_distance, r.heat_distance, r.kernel_dim_est as f64]
}

pub fn run(args: &SweepArgs, threads: Option<usize>) -> Result<()> {
    let cfg = resolve_sweep(args)?;
    if threads == Some(0) {
        return Err(Usage("--threads must be at least 1".into()).into());
    }
    let out = &args.out;
    save_json(&out.join(RESOLVED_CONFIG), &cfg)?;

    let sweep = cfg.sweep();
    let mut jobs = Vec::new();
    for method_slot in 0..cfg.methods.len() {
        for ratio_slot in 0..sweep.len() {
            for trial in 0..cfg.trials {
                jobs.push(Job { method_slot, ratio_slot, trial });
            }
        }
    }
    log::info!("{} jobs ({} methods x {} ratios x {} trials)", jobs.len(), cfg.methods.len(), sweep.len(), cfg.trials);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    let start = Instant::now();
    let records: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(|job| run_job(&cfg, *job, out)).collect::<Result<_>>())?;

    let mut csv = format!("{},{RESULTS_HEADER_EXTRA}\n", ResultRow::HEADER);
    for rec in &records {
        csv.push_str(&results_line(rec));
        csv.push('\n');
    }
    write_text(&out.join("results.csv"), &csv)?;
    let groups = aggregate(&cfg, &records);
    write_text(&out.join("aggregate.csv"), &aggregate_csv(&cfg, &groups))?;

    let failures: Vec<_> = records
        .iter()
        .filter(|r| !r.ok)
        .map(|r| json!({ "method": r.row.method, "trial": r.trial, "ratio_slot": r.ratio_slot, "error": r.error }))
        .collect();
    let mut fit_seconds: BTreeMap<String, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.ok) {
        *fit_seconds.entry(r.row.method.clone()).or_default() += r.row.wall_time_s;
    }
    save_json(&out.join("summary.json"), &json!({
        "family": cfg.family,
        "jobs": records.len(),
        "failed": failures.len(),
        "failures": failures,
        "groups": groups,
        "fit_seconds_by_method": fit_seconds,
        "elapsed_s": start.elapsed().as_secs_f64(),
    }))?;
    save_json(&out.join("manifest.json"), &json!({
        "command": "experiment",
        "config": cfg,
        "files": ["results.csv", "aggregate.csv", "summary.json", RESOLVED_CONFIG, "trials/"],
        "trial_files": records.iter().map(trial_file_name).collect::<Vec<_>>(),
    }))?;
    println!(
        "{} fits ({} failed) in {:.1}s; results in {}",
        records.len(),
        records.iter().filter(|r| !r.ok).count(),
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn trial_file_name(rec: &TrialRecord) -> String {
    format!("trials/{}_r{}_t{:03}.json", rec.row.method, rec.ratio_slot, rec.trial)
}

fn run_job(cfg: &ExperimentConfig, job: Job, out: &Path) -> Result<TrialRecord> {
    let method = cfg.methods[job.method_slot];
    let (m, r) = cfg.sweep()[job.ratio_slot];
    let hp0 = Hyperparams { alpha: cfg.grid[0].0, beta: cfg.grid[0].1, ..cfg.hyperparams };
    let mut rec = TrialRecord {
        trial: job.trial,
        ratio_slot: job.ratio_slot,
        row: ResultRow {
            seed: cfg.seed,
            method: method.to_string(),
            family: cfg.family.as_str().to_string(),
            v: cfg.v,
            n: cfg.n,
            m,
            r,
            alpha: hp0.alpha,
            beta: hp0.beta,
            report: EvalReport {
                f1: f64::NAN,
                weight_mse: f64::NAN,
                empirical_tv: f64::NAN,
                spectral_distance: f64::NAN,
                heat_distance: f64::NAN,
                kernel_dim_est: 0,
                kernel_dim_true: 0,
            },
            wall_time_s: f64::NAN,
        },
        ok: false,
        error: None,
        iterations: 0,
        converged: false,
        cv_scores: None,
    };
    if let Err(e) = fit_and_score(cfg, job, method, &mut rec) {
        log::warn!("{} r={} trial {} failed: {e:#}", method, r, job.trial);
        rec.error = Some(format!("{e:#}"));
    }
    save_json(&out.join(trial_file_name(&rec)), &rec)?;
    log::info!("{} r={} trial {}: {}", method, r, job.trial, if rec.ok { "ok" } else { "failed" });
    Ok(rec)
}

fn fit_and_score(cfg: &ExperimentConfig, job: Job, method: Method, rec: &mut TrialRecord) -> Result<()> {
    let trial = job.trial as u32;
    let slot = job.ratio_slot as u32;
    let gt = ground_truth(cfg, trial)?;
    let (m, _) = cfg.sweep()[job.ratio_slot];
    let train = train_signals(cfg, &gt, trial, slot, m)?;
    let test = test_signals(cfg, &gt, trial)?;

    let start = Instant::now();
    let mut hp = Hyperparams { alpha: cfg.grid[0].0, beta: cfg.grid[0].1, ..cfg.hyperparams };
    if cfg.grid.len() > 1 {
        let fold_seed: u64 = stream_rng(cfg.seed, Stream::Folds { trial, ratio_slot: slot }).random();
        let cv = cross_validate(&train.x, cfg.v, cfg.n, &cfg.grid, cfg.folds, &cfg.hyperparams, method, fold_seed)?;
        hp = cv.best;
        rec.cv_scores = Some(cv.scores);
    }
    let res = fit(&covariance(&train.x)?, cfg.v, cfg.n, &hp, method)?;
    let secs = start.elapsed().as_secs_f64();

    let opts = EvalOptions { eps_edge: cfg.eps_edge, zero_tol: hp.zero_tol };
    rec.row.report = evaluate(
        res.laplacian.matrix(),
        res.weights(),
        gt.laplacian.matrix(),
        &gt.cg.weight_vector(),
        &test.x,
        &opts,
    )?;
    rec.row.alpha = hp.alpha;
    rec.row.beta = hp.beta;
    rec.row.wall_time_s = secs;
    rec.iterations = res.state.iteration;
    rec.converged = res.converged;
    rec.ok = true;
    Ok(())
}

fn results_line(rec: &TrialRecord) -> String {
    if rec.ok {
        return format!("{},{},ok", rec.row, rec.trial);
    }
    let r = &rec.row;
    format!(
        "{},{},{},{},{},{},{},{},{},NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,{},failed",
        r.seed, r.method, r.family, r.v, r.n, r.m, r.r, r.alpha, r.beta, rec.trial
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub r: f64,
    pub count: usize,
    pub failed: usize,
    /// `metric -> (mean, sample standard deviation)` over successful trials.
    pub metrics: BTreeMap<String, (f64, f64)>,
}

/// Mean and standard deviation per (method, ratio, metric), in config order.
/// Only depends on the set of records, not on the order they finished in.
pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<GroupStats> {
    let sweep = cfg.sweep();
    let mut groups = Vec::new();
    for method in &cfg.methods {
        for (slot, &(m, r)) in sweep.iter().enumerate() {
            let mut members: Vec<&TrialRecord> = records
                .iter()
                .filter(|rec| rec.ratio_slot == slot && rec.row.method == method.as_str())
                .collect();
            members.sort_by_key(|rec| rec.trial);
            let ok: Vec<[f64; 6]> = members.iter().filter(|rec| rec.ok).map(|rec| metric_values(&rec.row.report)).collect();
            let metrics = METRICS
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let xs: Vec<f64> = ok.iter().map(|v| v[i]).collect();
                    (name.to_string(), mean_std(&xs))
                })
                .collect();
            groups.push(GroupStats {
                method: method.to_string(),
                m,
                r,
                count: ok.len(),
                failed: members.len() - ok.len(),
                metrics,
            });
        }
    }
    groups
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_csv(cfg: &ExperimentConfig, groups: &[GroupStats]) -> String {
    let mut s = String::from("family,method,M,r,metric,mean,std,count,failed\n");
    for g in groups {
        for name in METRICS {
            let (mean, std) = g.metrics[name];
            s.push_str(&format!(
                "{},{},{},{},{name},{mean},{std},{},{}\n",
                cfg.family.as_str(),
                g.method,
                g.m,
                g.r,
                g.count,
                g.failed
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, slot: usize, trial: usize, f1: f64, ok: bool) -> TrialRecord {
        TrialRecord {
            trial,
            ratio_slot: slot,
            row: ResultRow {
                seed: 1,
                method: method.into(),
                family: "er".into(),
                v: 30,
                n: 2,
                m: 90,
                r: 1.5,
                alpha: 0.0,
                beta: 2.0,
                report: EvalReport {
                    f1,
                    weight_mse: 0.0,
                    empirical_tv: 0.0,
                    spectral_distance: 0.0,
                    heat_distance: 0.0,
                    kernel_dim_est: 2,
                    kernel_dim_true: 2,
                },
                wall_time_s: 1.0,
            },
            ok,
            error: None,
            iterations: 1,
            converged: true,
            cv_scores: None,
        }
    }

    #[test]
    fn aggregation_is_order_free() {
        let cfg = ExperimentConfig { ratios: vec![1.5], methods: vec![Method::Scgl], ..ExperimentConfig::default() };
        let a = vec![record("scgl", 0, 0, 0.5, true), record("scgl", 0, 1, 0.7, true), record("scgl", 0, 2, 0.0, false)];
        let mut b = a.clone();
        b.reverse();
        let ga = aggregate(&cfg, &a);
        assert_eq!(ga, aggregate(&cfg, &b));
        assert_eq!(aggregate_csv(&cfg, &ga), aggregate_csv(&cfg, &aggregate(&cfg, &b)));
        let (mean, std) = ga[0].metrics["f1"];
        assert!((mean - 0.6).abs() < 1e-12);
        assert!((std - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!((ga[0].count, ga[0].failed), (2, 1));
    }

    #[test]
    fn failed_rows_keep_the_column_count() {
        let ok = results_line(&record("scgl", 0, 0, 0.5, true));
        let bad = results_line(&record("scgl", 0, 0, 0.5, false));
        let cols = ResultRow::HEADER.split(',').count() + 2;
        assert_eq!(ok.split(',').count(), cols);
        assert_eq!(bad.split(',').count(), cols);
        assert!(bad.ends_with(",failed"));
    }
}
