//! Truncated stick-breaking representation of the Dirichlet process.
//!
//! A truncation at `N` atoms keeps sticks `V_1..V_{N-1}` and pins `V_N = 1`,
//! so the weights always sum to one and the truncation error relative to the
//! full process decays like `4 n exp(-(N-1)/a)` in total variation of the
//! predictive over `n` observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_beta, RngStream};

/// Sticks `V_1..V_{N-1}` of a truncation at `N` atoms; `V_N = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickVector {
    sticks: Vec<f64>,
}

impl StickVector {
    /// Wraps sticks for a truncation level of `sticks.len() + 1` atoms.
    pub fn new(sticks: Vec<f64>) -> Result<Self> {
        for v in &sticks {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "stick value {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { sticks })
    }

    /// Truncation level `N` (number of atoms).
    pub fn n_atoms(&self) -> usize {
        self.sticks.len() + 1
    }

    /// The free sticks, excluding the pinned final one.
    pub fn sticks(&self) -> &[f64] {
        &self.sticks
    }
}

/// Occupancy counts `e_k` of the `N` atoms under an assignment vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCounts {
    counts: Vec<usize>,
}

impl ClusterCounts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("empty count vector".into()));
        }
        Ok(Self { counts })
    }

    /// Tallies zero-based atom assignments into counts of length `n_atoms`.
    pub fn from_assignments(assignments: &[usize], n_atoms: usize) -> Result<Self> {
        let mut counts = vec![0usize; n_atoms.max(1)];
        for &k in assignments {
            if k >= n_atoms {
                return Err(Error::InvalidArgument(format!(
                    "assignment {k} out of range for {n_atoms} atoms"
                )));
            }
            counts[k] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_atoms(&self) -> usize {
        self.counts.len()
    }

    /// Total number of assigned observations.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of occupied atoms.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }
}

/// Stick-breaking weights: `p_1 = V_1`, `p_k = V_k prod_{l<k} (1 - V_l)`,
/// `p_N` the remaining mass.
///
/// The running remainder is kept in the log domain when any stick exceeds
/// `1 - 1e-8`, otherwise in the linear domain; either way the weights are
/// nonnegative and sum to one up to rounding because the final stick is one.
pub fn weights_from_sticks(v: &StickVector) -> Vec<f64> {
    let n = v.n_atoms();
    let mut p = vec![0.0; n];
    if n == 1 {
        p[0] = 1.0;
        return p;
    }
    let log_domain = v.sticks().iter().any(|s| *s > 1.0 - 1e-8);
    if log_domain {
        let mut log_rem = 0.0f64;
        for (k, s) in v.sticks().iter().enumerate() {
            p[k] = s * log_rem.exp();
            log_rem += (1.0 - s).ln();
        }
        p[n - 1] = log_rem.exp();
    } else {
        let mut rem = 1.0f64;
        for (k, s) in v.sticks().iter().enumerate() {
            p[k] = s * rem;
            rem *= 1.0 - s;
        }
        p[n - 1] = rem;
    }
    p
}

/// Prior sticks: `V_k ~ Beta(1, a)` independently.
pub fn sample_prior_sticks(n_atoms: usize, a: f64, rng: &mut RngStream) -> Result<StickVector> {
    check_mass(a)?;
    check_atoms(n_atoms)?;
    let mut sticks = Vec::with_capacity(n_atoms - 1);
    for _ in 0..n_atoms - 1 {
        sticks.push(sample_beta(1.0, a, rng)?);
    }
    StickVector::new(sticks)
}

/// Posterior Beta parameters for each free stick given occupancy counts:
/// `V_k ~ Beta(1 + e_k, a + sum_{l>k} e_l)`.
pub fn posterior_stick_params(counts: &ClusterCounts, a: f64) -> Result<Vec<(f64, f64)>> {
    check_mass(a)?;
    let e = counts.counts();
    let n = e.len();
    let mut params = Vec::with_capacity(n.saturating_sub(1));
    let mut tail: usize = e.iter().sum();
    for &ek in e.iter().take(n - 1) {
        tail -= ek;
        params.push((1.0 + ek as f64, a + tail as f64));
    }
    Ok(params)
}

/// Posterior stick update (blocked Gibbs step 2).
pub fn sample_posterior_sticks(
    counts: &ClusterCounts,
    a: f64,
    rng: &mut RngStream,
) -> Result<StickVector> {
    let params = posterior_stick_params(counts, a)?;
    let mut sticks = Vec::with_capacity(params.len());
    for (alpha, beta) in params {
        sticks.push(sample_beta(alpha, beta, rng)?);
    }
    StickVector::new(sticks)
}

/// Truncation error bound `4 n exp(-(N-1)/a)` on the L1 distance between the
/// truncated and full Dirichlet-process predictive over `n` observations.
pub fn truncation_error_bound(n: usize, n_atoms: usize, a: f64) -> Result<f64> {
    check_mass(a)?;
    check_atoms(n_atoms)?;
    Ok(4.0 * n as f64 * (-((n_atoms - 1) as f64) / a).exp())
}

fn check_mass(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "total mass parameter must be positive and finite, got {a}"
        )));
    }
    Ok(())
}

fn check_atoms(n_atoms: usize) -> Result<()> {
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("need at least one atom".into()));
    }
    Ok(())
}
