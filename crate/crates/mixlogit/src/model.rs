//! Multinomial logit kernel, finite mixing distributions, and dataset types.
//!
//! Choice probabilities are always computed in the log domain with a
//! max-subtracted log-sum-exp, so utilities of any sign and magnitude are safe.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "sums to one" checks on probability vectors and weights.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Covariate rows for one choice situation: `J` alternatives by `d` covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateMatrix {
    j: usize,
    d: usize,
    /// Row-major entries: row `j` holds the covariates of alternative `j`.
    data: Vec<f64>,
}

impl CovariateMatrix {
    /// Builds a `J x d` matrix from row-major entries.
    pub fn from_row_major(j: usize, d: usize, data: &[f64]) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 alternatives, got {j}"
            )));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("need at least 1 covariate".into()));
        }
        if data.len() != j * d {
            return Err(Error::DimensionMismatch(format!(
                "covariate matrix expects {} entries ({j} x {d}), got {}",
                j * d,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariate entry".into()));
        }
        Ok(Self { j, d, data: data.to_vec() })
    }

    pub fn n_alternatives(&self) -> usize {
        self.j
    }

    pub fn n_covariates(&self) -> usize {
        self.d
    }

    /// Covariate row of alternative `alt`.
    pub fn row(&self, alt: usize) -> &[f64] {
        &self.data[alt * self.d..(alt + 1) * self.d]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Utility of alternative `alt` under coefficients `beta`.
    #[inline]
    pub fn utility(&self, alt: usize, beta: &DVector<f64>) -> f64 {
        let row = self.row(alt);
        let mut u = 0.0;
        for k in 0..self.d {
            u += row[k] * beta[k];
        }
        u
    }
}

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Simplex(Vec<f64>);

impl Simplex {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "probability entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Simplex {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for Simplex {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(de)?;
        Simplex::new(v).map_err(serde::de::Error::custom)
    }
}

/// One choice observation: a covariate matrix and the chosen alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Index of the chosen alternative, zero-based.
    pub choice: usize,
    pub x: CovariateMatrix,
}

impl Observation {
    pub fn new(choice: usize, x: CovariateMatrix) -> Result<Self> {
        if choice >= x.n_alternatives() {
            return Err(Error::InvalidArgument(format!(
                "choice index {choice} out of range for {} alternatives",
                x.n_alternatives()
            )));
        }
        Ok(Self { choice, x })
    }
}

/// Repeated choices of one individual; covariates are redrawn per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub id: u64,
    pub periods: Vec<Observation>,
}

impl PanelObservation {
    pub fn new(id: u64, periods: Vec<Observation>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "individual {id} has no periods"
            )));
        }
        let (j, d) = (
            periods[0].x.n_alternatives(),
            periods[0].x.n_covariates(),
        );
        for p in &periods {
            if p.x.n_alternatives() != j || p.x.n_covariates() != d {
                return Err(Error::DimensionMismatch(format!(
                    "individual {id} mixes covariate shapes"
                )));
            }
        }
        Ok(Self { id, periods })
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }
}

/// Cross-sectional dataset: one observation per individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDataset {
    j: usize,
    d: usize,
    observations: Vec<Observation>,
}

impl ChoiceDataset {
    /// Builds a dataset with the given layout; `observations` may be empty.
    pub fn new(j: usize, d: usize, observations: Vec<Observation>) -> Result<Self> {
        if j < 2 || d < 1 {
            return Err(Error::InvalidArgument(format!(
                "invalid layout: {j} alternatives, {d} covariates"
            )));
        }
        for (i, o) in observations.iter().enumerate() {
            if o.x.n_alternatives() != j || o.x.n_covariates() != d {
                return Err(Error::DimensionMismatch(format!(
                    "observation {i} does not match dataset layout {j} x {d}"
                )));
            }
        }
        Ok(Self { j, d, observations })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn n_alternatives(&self) -> usize {
        self.j
    }

    pub fn n_covariates(&self) -> usize {
        self.d
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }
}

/// Panel dataset: one `PanelObservation` per individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    j: usize,
    d: usize,
    individuals: Vec<PanelObservation>,
}

impl PanelDataset {
    pub fn new(j: usize, d: usize, individuals: Vec<PanelObservation>) -> Result<Self> {
        if j < 2 || d < 1 {
            return Err(Error::InvalidArgument(format!(
                "invalid layout: {j} alternatives, {d} covariates"
            )));
        }
        for ind in &individuals {
            for p in &ind.periods {
                if p.x.n_alternatives() != j || p.x.n_covariates() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "individual {} does not match dataset layout {j} x {d}",
                        ind.id
                    )));
                }
            }
        }
        Ok(Self { j, d, individuals })
    }

    pub fn n(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_alternatives(&self) -> usize {
        self.j
    }

    pub fn n_covariates(&self) -> usize {
        self.d
    }

    pub fn individuals(&self) -> &[PanelObservation] {
        &self.individuals
    }
}

/// A finitely supported mixing distribution over coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDistribution {
    weights: Vec<f64>,
    atoms: Vec<DVector<f64>>,
}

impl MixingDistribution {
    pub fn new(weights: Vec<f64>, atoms: Vec<DVector<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != atoms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights vs {} atoms",
                weights.len(),
                atoms.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "mixing weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "mixing weights sum to {sum}, expected 1"
            )));
        }
        let d = atoms[0].len();
        for a in &atoms {
            if a.len() != d {
                return Err(Error::DimensionMismatch("atoms of unequal length".into()));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("atom entry".into()));
            }
        }
        Ok(Self { weights, atoms })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }
}

fn check_beta(x: &CovariateMatrix, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != x.n_covariates() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, covariates have {}",
            beta.len(),
            x.n_covariates()
        )));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("beta entry".into()));
    }
    Ok(())
}

/// Multinomial logit choice probabilities for all alternatives.
///
/// `P(j) = exp(x_j' beta) / sum_l exp(x_l' beta)`, evaluated via max-subtracted
/// log-sum-exp and renormalized, so every entry is strictly positive and the
/// vector sums to one up to rounding.
pub fn mnl_prob(x: &CovariateMatrix, beta: &DVector<f64>) -> Result<Simplex> {
    check_beta(x, beta)?;
    let j = x.n_alternatives();
    let mut u = vec![0.0; j];
    let mut max = f64::NEG_INFINITY;
    for alt in 0..j {
        let v = x.utility(alt, beta);
        u[alt] = v;
        if v > max {
            max = v;
        }
    }
    let mut sum = 0.0;
    for v in u.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in u.iter_mut() {
        *v /= sum;
    }
    Ok(Simplex(u))
}

/// Log probability of the chosen alternative, without allocating.
pub fn log_choice_prob(x: &CovariateMatrix, choice: usize, beta: &DVector<f64>) -> Result<f64> {
    check_beta(x, beta)?;
    if choice >= x.n_alternatives() {
        return Err(Error::InvalidArgument(format!(
            "choice index {choice} out of range"
        )));
    }
    Ok(log_choice_prob_unchecked(x, choice, beta))
}

/// As `log_choice_prob` but assumes dimensions were validated upstream.
///
/// Two passes over the utilities avoid any heap allocation; this is the inner
/// kernel of the classification and Metropolis steps.
#[inline]
pub(crate) fn log_choice_prob_unchecked(
    x: &CovariateMatrix,
    choice: usize,
    beta: &DVector<f64>,
) -> f64 {
    debug_assert!(choice < x.n_alternatives());
    debug_assert_eq!(beta.len(), x.n_covariates());
    let j = x.n_alternatives();
    let mut max = f64::NEG_INFINITY;
    for alt in 0..j {
        let v = x.utility(alt, beta);
        if v > max {
            max = v;
        }
    }
    let mut sum = 0.0;
    for alt in 0..j {
        sum += (x.utility(alt, beta) - max).exp();
    }
    x.utility(choice, beta) - max - sum.ln()
}

/// Choice probabilities under a finite mixing distribution.
///
/// `P(j | G, x) = sum_k w_k * mnl_prob(x, z_k)[j]`.
pub fn mixture_choice_prob(x: &CovariateMatrix, g: &MixingDistribution) -> Result<Simplex> {
    if g.dim() != x.n_covariates() {
        return Err(Error::DimensionMismatch(format!(
            "mixing atoms have length {}, covariates have {}",
            g.dim(),
            x.n_covariates()
        )));
    }
    let j = x.n_alternatives();
    let mut acc = vec![0.0; j];
    for (w, z) in g.weights().iter().zip(g.atoms()) {
        if *w == 0.0 {
            continue;
        }
        let p = mnl_prob(x, z)?;
        for alt in 0..j {
            acc[alt] += w * p[alt];
        }
    }
    // Renormalize away accumulation rounding; weights already sum to one.
    let sum: f64 = acc.iter().sum();
    for v in acc.iter_mut() {
        *v /= sum;
    }
    Ok(Simplex(acc))
}

/// Joint log likelihood of one individual's panel of choices under a single
/// coefficient vector: the sum over periods of the chosen alternative's log
/// probability.
pub fn panel_log_likelihood(obs: &PanelObservation, beta: &DVector<f64>) -> Result<f64> {
    let mut ll = 0.0;
    for p in &obs.periods {
        ll += log_choice_prob(&p.x, p.choice, beta)?;
    }
    Ok(ll)
}
