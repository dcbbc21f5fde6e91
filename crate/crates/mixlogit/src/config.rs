//! Sampler run configuration and its on-disk form.

use crate::error::{Error, Result};
use crate::metropolis::MhConfig;
use crate::model::CovariateMatrix;
use crate::rng::NiwParams;
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

/// Settings shared by every chain type.
///
/// Defaults follow the simulation-study settings: total mass 1, truncation at
/// 100 atoms, standard normal-inverse-Wishart base (`m = 0`, `lambda = 1`,
/// `nu = 2`, `s = I`), 10^4 burn-in and retained sweeps.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    /// Sweeps discarded before recording starts.
    pub burnin: usize,
    /// Post-burn-in sweeps; every `thin`-th is recorded.
    pub iterations: usize,
    pub thin: usize,
    /// Truncation level `N` of the stick-breaking representation.
    pub n_atoms: usize,
    /// Dirichlet-process total mass `a`.
    pub dp_mass: f64,
    pub prior: NiwParams,
    pub mh: MhConfig,
    /// Monte Carlo draws behind each predictive choice-probability estimate.
    pub predictive_draws: usize,
    /// Covariate points at which per-iteration summaries are recorded.
    pub eval_points: Vec<CovariateMatrix>,
    /// Record full sampler states (memory-heavy; off by default).
    pub store_states: bool,
    /// Level of the equal-tailed credible intervals in summaries.
    pub credible_level: f64,
}

impl RunConfig {
    /// Simulation-study defaults for coefficient dimension `d`.
    pub fn default_for_dim(d: usize) -> Self {
        Self {
            seed: 0,
            burnin: 10_000,
            iterations: 10_000,
            thin: 1,
            n_atoms: 100,
            dp_mass: 1.0,
            prior: NiwParams::new(
                DVector::zeros(d),
                1.0,
                2.0,
                DMatrix::identity(d, d),
            )
            .expect("identity base prior is valid"),
            mh: MhConfig::default(),
            predictive_draws: 10_000,
            eval_points: Vec::new(),
            store_states: false,
            credible_level: 0.95,
        }
    }

    /// Checks internal consistency and agreement with a dataset layout.
    pub fn validate(&self, j: usize, d: usize) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Validation("thin must be >= 1".into()));
        }
        if self.n_atoms == 0 {
            return Err(Error::Validation("truncation level must be >= 1".into()));
        }
        if !(self.dp_mass > 0.0) || !self.dp_mass.is_finite() {
            return Err(Error::Validation(format!(
                "total mass must be positive, got {}",
                self.dp_mass
            )));
        }
        if self.predictive_draws == 0 {
            return Err(Error::Validation("predictive_draws must be >= 1".into()));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::Validation(format!(
                "credible level must lie in (0,1), got {}",
                self.credible_level
            )));
        }
        self.mh.validate().map_err(|e| Error::Validation(e.to_string()))?;
        if self.prior.dim() != d {
            return Err(Error::Validation(format!(
                "prior.mean has dimension {}, data has {d} covariates",
                self.prior.dim()
            )));
        }
        for (i, x) in self.eval_points.iter().enumerate() {
            if x.n_alternatives() != j || x.n_covariates() != d {
                return Err(Error::Validation(format!(
                    "eval.points[{i}] is {}x{}, data layout is {j}x{d}",
                    x.n_alternatives(),
                    x.n_covariates()
                )));
            }
        }
        Ok(())
    }
}

/// The configuration file as written by users: every field optional, unknown
/// keys rejected. Missing fields fall back to the simulation-study defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Chain kind; a command-line flag takes precedence when both are given.
    pub model: Option<String>,
    seed: Option<u64>,
    burnin: Option<usize>,
    iterations: Option<usize>,
    thin: Option<usize>,
    n_atoms: Option<usize>,
    dp_mass: Option<f64>,
    predictive_draws: Option<usize>,
    store_states: Option<bool>,
    credible_level: Option<f64>,
    prior: Option<FilePrior>,
    mh: Option<FileMh>,
    eval_points: Option<Vec<FilePoint>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePrior {
    mean: Option<Vec<f64>>,
    lambda: Option<f64>,
    nu: Option<f64>,
    scale: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMh {
    proposal_scale: Option<f64>,
    steps_per_update: Option<usize>,
    target_acceptance: Option<f64>,
    adapt: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePoint {
    /// One row of covariates per alternative.
    rows: Vec<Vec<f64>>,
}

impl FileConfig {
    /// Parses the TOML text of a configuration file.
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Fills defaults for a `j` x `d` data layout and validates the result.
    pub fn resolve(&self, j: usize, d: usize) -> Result<RunConfig> {
        let mut cfg = RunConfig::default_for_dim(d);
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.burnin {
            cfg.burnin = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.thin {
            cfg.thin = v;
        }
        if let Some(v) = self.n_atoms {
            cfg.n_atoms = v;
        }
        if let Some(v) = self.dp_mass {
            cfg.dp_mass = v;
        }
        if let Some(v) = self.predictive_draws {
            cfg.predictive_draws = v;
        }
        if let Some(v) = self.store_states {
            cfg.store_states = v;
        }
        if let Some(v) = self.credible_level {
            cfg.credible_level = v;
        }
        if let Some(p) = &self.prior {
            let mean = match &p.mean {
                Some(m) => DVector::from_column_slice(m),
                None => DVector::zeros(d),
            };
            let scale = match &p.scale {
                Some(rows) => {
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        return Err(Error::Validation(format!(
                            "prior.scale must be a {d}x{d} matrix"
                        )));
                    }
                    DMatrix::from_fn(d, d, |r, c| rows[r][c])
                }
                None => DMatrix::identity(d, d),
            };
            cfg.prior = NiwParams::new(
                mean,
                p.lambda.unwrap_or(1.0),
                p.nu.unwrap_or(2.0),
                scale,
            )
            .map_err(|e| Error::Validation(format!("prior: {e}")))?;
        }
        if let Some(m) = &self.mh {
            if let Some(v) = m.proposal_scale {
                cfg.mh.proposal_scale = v;
            }
            if let Some(v) = m.steps_per_update {
                cfg.mh.steps_per_update = v;
            }
            if let Some(v) = m.target_acceptance {
                cfg.mh.target_acceptance = v;
            }
            if let Some(v) = m.adapt {
                cfg.mh.adapt = v;
            }
        }
        if let Some(points) = &self.eval_points {
            cfg.eval_points.clear();
            for (i, p) in points.iter().enumerate() {
                if p.rows.len() != j || p.rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Validation(format!(
                        "eval_points[{i}].rows must be {j} rows of {d} covariates"
                    )));
                }
                let flat: Vec<f64> = p.rows.iter().flatten().copied().collect();
                cfg.eval_points.push(CovariateMatrix::from_row_major(j, d, &flat)?);
            }
        }
        cfg.validate(j, d)?;
        Ok(cfg)
    }
}
