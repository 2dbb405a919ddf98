use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use scgl_core::datagen::{ratio_for_samples, samples_for_ratio};
use scgl_core::solver::{Hyperparams, Method};

use crate::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Er,
    Sphere,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Er => "er",
            Family::Sphere => "sphere",
        }
    }
}

/// Everything that determines a generated data set and an experiment sweep.
///
/// For the sphere family `v` is the number of lattice points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub v: usize,
    pub n: usize,
    /// Neighbours per point (sphere only).
    pub k: usize,
    /// ER edge probability is `p_scale * ln(v) / v`.
    pub p_scale: f64,
    pub w_lo: f64,
    pub w_hi: f64,
    /// Sampling ratios `r = M / (2v)`; ignored when `samples` is set.
    pub ratios: Vec<f64>,
    /// Explicit training sample counts.
    pub samples: Vec<usize>,
    pub test_samples: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub hyperparams: Hyperparams,
    /// `(alpha, beta)` candidates; more than one triggers cross-validation.
    pub grid: Vec<(f64, f64)>,
    pub folds: usize,
    pub seed: u64,
    pub eps_edge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_family(Family::Er)
    }
}

impl ExperimentConfig {
    pub fn for_family(family: Family) -> Self {
        let hp = Hyperparams::experiment();
        let base = Self {
            family,
            v: 30,
            n: 2,
            k: 4,
            p_scale: 1.1,
            w_lo: 0.2,
            w_hi: 3.0,
            ratios: vec![1.5, 5.0, 15.0],
            samples: Vec::new(),
            test_samples: 2000,
            trials: 20,
            methods: vec![Method::Scgl, Method::Kron],
            hyperparams: hp,
            grid: vec![(hp.alpha, hp.beta)],
            folds: 5,
            seed: 2024,
            eps_edge: 1e-4,
        };
        match family {
            Family::Er => base,
            Family::Sphere => Self { v: 50, ratios: Vec::new(), samples: vec![2000], ..base },
        }
    }

    /// Family defaults, then the JSON file, then nothing else; flags are
    /// applied by the caller.
    pub fn load(path: Option<&Path>, family: Option<Family>) -> Result<Self> {
        let file: Option<Value> = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Some(serde_json::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", p.display())))?)
            }
            None => None,
        };
        let from_file = file
            .as_ref()
            .and_then(|v| v.get("family"))
            .map(|f| serde_json::from_value::<Family>(f.clone()))
            .transpose()
            .map_err(|e| Usage(format!("config family: {e}")))?;
        let family = family.or(from_file).unwrap_or(Family::Er);
        let mut merged = serde_json::to_value(Self::for_family(family))?;
        if let Some(Value::Object(fields)) = file {
            let target = merged.as_object_mut().expect("config serializes to an object");
            for (k, v) in fields {
                if k == "hyperparams" {
                    if let (Some(Value::Object(dst)), Value::Object(src)) = (target.get_mut("hyperparams"), &v) {
                        for (hk, hv) in src {
                            dst.insert(hk.clone(), hv.clone());
                        }
                        continue;
                    }
                }
                target.insert(k, v);
            }
        } else if file.is_some() {
            return Err(Usage("config file must hold a JSON object".into()).into());
        }
        merged["family"] = serde_json::to_value(family)?;
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Usage(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Usage> {
        if self.trials == 0 {
            return Err(Usage("trials must be at least 1".into()));
        }
        if self.v < 2 || self.n == 0 {
            return Err(Usage(format!("need v >= 2 and n >= 1, got v = {}, n = {}", self.v, self.n)));
        }
        if self.samples.is_empty() && self.ratios.is_empty() {
            return Err(Usage("no sampling ratios or sample counts given".into()));
        }
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Usage("sampling ratios must be positive".into()));
        }
        if self.sweep().iter().any(|&(m, _)| m < 2) || self.test_samples < 2 {
            return Err(Usage("every sample count must be at least 2".into()));
        }
        if self.grid.is_empty() {
            return Err(Usage("hyperparameter grid is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Usage("no methods selected".into()));
        }
        if !(self.eps_edge >= 0.0) {
            return Err(Usage("eps_edge must be nonnegative".into()));
        }
        for &(alpha, beta) in &self.grid {
            Hyperparams { alpha, beta, ..self.hyperparams }.validate().map_err(|e| Usage(e.to_string()))?;
        }
        if self.grid.len() > 1 && self.folds < 2 {
            return Err(Usage("cross-validation needs at least 2 folds".into()));
        }
        Ok(())
    }

    /// `(M, r)` per sweep slot.
    pub fn sweep(&self) -> Vec<(usize, f64)> {
        if self.samples.is_empty() {
            self.ratios.iter().map(|&r| (samples_for_ratio(r, self.v), r)).collect()
        } else {
            self.samples.iter().map(|&m| (m, ratio_for_samples(m, self.v))).collect()
        }
    }

    pub fn set_penalties(&mut self, alpha: Option<f64>, beta: Option<f64>) {
        if alpha.is_none() && beta.is_none() {
            return;
        }
        let alpha = alpha.unwrap_or(self.hyperparams.alpha);
        let beta = beta.unwrap_or(self.hyperparams.beta);
        self.hyperparams.alpha = alpha;
        self.hyperparams.beta = beta;
        self.grid = vec![(alpha, beta)];
    }
}

/// Solver settings for `fit` and `crossval`: library defaults overlaid by an
/// optional JSON file holding a bare hyperparameter object.
pub fn load_hyperparams(path: Option<&Path>) -> Result<Hyperparams> {
    match path {
        None => Ok(Hyperparams::experiment()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let mut merged = serde_json::to_value(Hyperparams::experiment())?;
            let file: Value = serde_json::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", p.display())))?;
            let Value::Object(fields) = file else {
                return Err(Usage("config file must hold a JSON object".into()).into());
            };
            let src = match fields.get("hyperparams") {
                Some(Value::Object(h)) => h.clone(),
                _ => fields,
            };
            let dst = merged.as_object_mut().expect("hyperparams serialize to an object");
            for (k, v) in src {
                dst.insert(k, v);
            }
            Ok(serde_json::from_value(merged).map_err(|e| Usage(format!("hyperparams: {e}")))?)
        }
    }
}
