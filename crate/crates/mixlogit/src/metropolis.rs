//! Random-walk Metropolis-Hastings kernel with optional scale adaptation.
//!
//! Proposals are `beta' = beta + scale * L z` with `L` the Cholesky factor of
//! the proposal covariance. Acceptance decisions are made purely from log
//! density differences, so targets of any magnitude are safe.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Smallest value the adapted proposal scale may reach.
pub const SCALE_FLOOR: f64 = 1e-6;

/// Gain of the multiplicative scale adaptation.
const ADAPT_GAIN: f64 = 0.5;

/// Eigenvalue threshold below which a proposal covariance falls back to the
/// identity.
const PROPOSAL_EIGEN_MIN: f64 = 1e-10;

/// Random-walk kernel settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    /// Step-size multiplier applied to the proposal Cholesky factor.
    pub proposal_scale: f64,
    /// Proposals attempted per update call.
    pub steps_per_update: usize,
    /// Acceptance rate the adaptation steers toward.
    pub target_acceptance: f64,
    /// Whether `adapt_scale` adjusts the scale at all.
    pub adapt: bool,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            proposal_scale: 1.0,
            steps_per_update: 2,
            target_acceptance: 0.30,
            adapt: true,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_scale >= 0.0) || !self.proposal_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "proposal scale must be finite and nonnegative, got {}",
                self.proposal_scale
            )));
        }
        if self.steps_per_update == 0 {
            return Err(Error::InvalidArgument("steps_per_update must be >= 1".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target acceptance must lie in (0,1), got {}",
                self.target_acceptance
            )));
        }
        Ok(())
    }
}

/// Result of one `mh_update` call.
#[derive(Debug, Clone)]
pub struct MhOutcome {
    pub state: DVector<f64>,
    pub log_target: f64,
    pub accepted: usize,
    pub steps: usize,
}

/// Single accept/reject decision from a log density difference.
pub fn accept_log_ratio(delta: f64, rng: &mut RngStream) -> bool {
    if delta >= 0.0 {
        return true;
    }
    if delta.is_nan() {
        return false;
    }
    rng.uniform_open01().ln() < delta
}

/// Proposal covariance rule: the supplied matrix, or the identity when it is
/// near-singular (smallest eigenvalue below 1e-10) or not symmetric positive
/// definite.
pub fn proposal_covariance(tau: &DMatrix<f64>) -> DMatrix<f64> {
    let d = tau.nrows();
    if !tau.is_square() {
        return DMatrix::identity(d, d);
    }
    let sym = (tau + tau.transpose()) * 0.5;
    let eigen = sym.symmetric_eigenvalues();
    if eigen.iter().any(|e| !e.is_finite() || *e < PROPOSAL_EIGEN_MIN) {
        return DMatrix::identity(d, d);
    }
    sym
}

/// Runs `cfg.steps_per_update` random-walk proposals against `log_target`,
/// starting from `current`.
///
/// The target value at the entry state must be finite; proposals where the
/// target is non-finite are rejected.
pub fn mh_update(
    current: &DVector<f64>,
    mut log_target: impl FnMut(&DVector<f64>) -> f64,
    proposal_cov: &DMatrix<f64>,
    cfg: &MhConfig,
    rng: &mut RngStream,
) -> Result<MhOutcome> {
    cfg.validate()?;
    let d = current.len();
    if proposal_cov.nrows() != d || proposal_cov.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "proposal covariance is {}x{}, state has length {d}",
            proposal_cov.nrows(),
            proposal_cov.ncols()
        )));
    }
    let chol = Cholesky::new(proposal_cov.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("proposal covariance".into()))?;
    let l = chol.l_dirty().lower_triangle();

    let mut state = current.clone();
    let mut lt = log_target(&state);
    if !lt.is_finite() {
        return Err(Error::NonFinite(format!(
            "log target at the current state is {lt}"
        )));
    }

    let mut accepted = 0;
    for _ in 0..cfg.steps_per_update {
        let z = DVector::from_fn(d, |_, _| rng.standard_normal());
        let proposal = &state + &l * z * cfg.proposal_scale;
        let lt_prop = log_target(&proposal);
        let delta = lt_prop - lt;
        if lt_prop.is_finite() && accept_log_ratio(delta, rng) {
            state = proposal;
            lt = lt_prop;
            accepted += 1;
        }
    }
    Ok(MhOutcome {
        state,
        log_target: lt,
        accepted,
        steps: cfg.steps_per_update,
    })
}

/// Multiplicative adjustment of the proposal scale toward the target
/// acceptance rate, floored at [`SCALE_FLOOR`]. A no-op when adaptation is
/// disabled or the observed rate equals the target.
pub fn adapt_scale(scale: f64, observed_rate: f64, cfg: &MhConfig) -> f64 {
    if !cfg.adapt {
        return scale;
    }
    let adjusted = scale * (ADAPT_GAIN * (observed_rate - cfg.target_acceptance)).exp();
    adjusted.max(SCALE_FLOOR)
}
