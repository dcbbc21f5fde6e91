//! Random-utility data generators for the two artificial designs used
//! throughout, plus exact or Monte Carlo evaluation of the generating
//! mixtures' true choice probabilities.
//!
//! Draw order is part of the reproducibility contract. Per individual: one
//! uniform for the mixture component, then (for normal mixtures) one
//! standard normal per coordinate; per period: the covariate matrix row by
//! row with one Uniform(-2,2) draw per entry, then one Gumbel error per
//! alternative in index order. Ties in the utility argmax break to the
//! lowest index, a probability-zero event under continuous errors.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{
    mixture_choice_prob, mnl_prob, ChoiceDataset, CovariateMatrix, MixingDistribution,
    Observation, PanelDataset, PanelObservation, Simplex,
};
use crate::rng::{sample_gumbel, RngStream};

/// Alternatives in the fixed simulation design.
pub const DESIGN_ALTERNATIVES: usize = 3;
/// Covariates per alternative in the fixed simulation design.
pub const DESIGN_COVARIATES: usize = 2;
/// Half-width of the uniform covariate distribution.
pub const COVARIATE_BOUND: f64 = 2.0;

/// Draw count for Monte Carlo true-probability evaluation.
const TRUE_PROB_DRAWS: usize = 1_000_000;
/// Fixed seed for Monte Carlo true-probability evaluation.
const TRUE_PROB_SEED: u64 = 0x7A5E_11D0_31AB_52C4;

/// Coefficient distribution of a data-generating process.
#[derive(Debug, Clone)]
pub enum GeneratingMixture {
    /// Equal-weight point masses at the listed coefficient vectors.
    PointMasses(Vec<DVector<f64>>),
    /// Equal-weight isotropic normals around the listed centers, sharing one
    /// variance per coordinate.
    IsotropicNormals { centers: Vec<DVector<f64>>, variance: f64 },
}

impl GeneratingMixture {
    /// The cross-sectional design's coefficient law: point masses at
    /// (-5, 5) and (5, -5).
    pub fn two_point_default() -> Self {
        Self::PointMasses(vec![
            DVector::from_column_slice(&[-5.0, 5.0]),
            DVector::from_column_slice(&[5.0, -5.0]),
        ])
    }

    /// The panel design's coefficient law: normals with variance 2 around
    /// (-5, 5) and (5, -5).
    pub fn two_normal_default() -> Self {
        Self::IsotropicNormals {
            centers: vec![
                DVector::from_column_slice(&[-5.0, 5.0]),
                DVector::from_column_slice(&[5.0, -5.0]),
            ],
            variance: 2.0,
        }
    }

    fn validate(&self) -> Result<usize> {
        let centers = match self {
            Self::PointMasses(c) => c,
            Self::IsotropicNormals { centers, variance } => {
                if !(*variance > 0.0) || !variance.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "mixture variance must be positive and finite, got {variance}"
                    )));
                }
                centers
            }
        };
        if centers.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        let d = centers[0].len();
        if d == 0 || centers.iter().any(|c| c.len() != d) {
            return Err(Error::DimensionMismatch(
                "mixture components must share one nonzero dimension".into(),
            ));
        }
        Ok(d)
    }

    /// Dimension of the coefficient vectors.
    pub fn dim(&self) -> usize {
        match self {
            Self::PointMasses(c) => c[0].len(),
            Self::IsotropicNormals { centers, .. } => centers[0].len(),
        }
    }

    /// One coefficient draw: a uniform component pick, then for normal
    /// mixtures one standard normal per coordinate.
    pub fn draw(&self, rng: &mut RngStream) -> DVector<f64> {
        match self {
            Self::PointMasses(centers) => {
                let k = (rng.uniform(0.0, centers.len() as f64) as usize).min(centers.len() - 1);
                centers[k].clone()
            }
            Self::IsotropicNormals { centers, variance } => {
                let k = (rng.uniform(0.0, centers.len() as f64) as usize).min(centers.len() - 1);
                let sd = variance.sqrt();
                DVector::from_fn(centers[k].len(), |r, _| {
                    centers[k][r] + sd * rng.standard_normal()
                })
            }
        }
    }
}

/// True choice probabilities at `x` under the generating mixture: exact for
/// point masses, Monte Carlo with a million fixed-seed draws for normal
/// mixtures.
pub fn true_choice_prob(x: &CovariateMatrix, mixture: &GeneratingMixture) -> Result<Simplex> {
    true_choice_prob_with(x, mixture, TRUE_PROB_DRAWS, TRUE_PROB_SEED)
}

/// As [`true_choice_prob`], with explicit Monte Carlo draw count and seed for
/// the normal-mixture case.
pub fn true_choice_prob_with(
    x: &CovariateMatrix,
    mixture: &GeneratingMixture,
    draws: usize,
    seed: u64,
) -> Result<Simplex> {
    let d = mixture.validate()?;
    if d != x.n_covariates() {
        return Err(Error::DimensionMismatch(format!(
            "mixture dimension {d} vs {} covariates",
            x.n_covariates()
        )));
    }
    match mixture {
        GeneratingMixture::PointMasses(centers) => {
            let w = 1.0 / centers.len() as f64;
            let g = MixingDistribution::new(vec![w; centers.len()], centers.clone())?;
            mixture_choice_prob(x, &g)
        }
        GeneratingMixture::IsotropicNormals { .. } => {
            if draws == 0 {
                return Err(Error::InvalidArgument("need at least one draw".into()));
            }
            let mut rng = RngStream::from_seed(seed);
            let j = x.n_alternatives();
            let mut acc = vec![0.0; j];
            for _ in 0..draws {
                let beta = mixture.draw(&mut rng);
                let p = mnl_prob(x, &beta)?;
                for (a, v) in acc.iter_mut().zip(p.as_slice()) {
                    *a += v;
                }
            }
            let total: f64 = acc.iter().sum();
            for a in acc.iter_mut() {
                *a /= total;
            }
            Simplex::new(acc)
        }
    }
}

/// Utility argmax with the errors supplied: `U_j = x_j' beta + e_j`, ties to
/// the lowest index.
pub(crate) fn choose_with_errors(x: &CovariateMatrix, beta: &DVector<f64>, errors: &[f64]) -> usize {
    let mut best = 0;
    let mut best_u = f64::NEG_INFINITY;
    for alt in 0..x.n_alternatives() {
        let u = x.utility(alt, beta) + errors[alt];
        if u > best_u {
            best_u = u;
            best = alt;
        }
    }
    best
}

/// One simulated choice at `x` under coefficients `beta`: independent Gumbel
/// errors added to each alternative's utility, argmax recorded.
pub fn simulate_choice(x: &CovariateMatrix, beta: &DVector<f64>, rng: &mut RngStream) -> usize {
    let errors: Vec<f64> = (0..x.n_alternatives())
        .map(|_| sample_gumbel(rng.uniform_open01()).expect("open-interval draw"))
        .collect();
    choose_with_errors(x, beta, &errors)
}

fn draw_covariates(rng: &mut RngStream) -> CovariateMatrix {
    let vals: Vec<f64> = (0..DESIGN_ALTERNATIVES * DESIGN_COVARIATES)
        .map(|_| rng.uniform(-COVARIATE_BOUND, COVARIATE_BOUND))
        .collect();
    CovariateMatrix::from_row_major(DESIGN_ALTERNATIVES, DESIGN_COVARIATES, &vals)
        .expect("fixed design dimensions")
}

/// Cross-sectional generator: `n` individuals, each with one coefficient
/// draw from the two-point mixture, fresh uniform covariates, and one
/// Gumbel-argmax choice.
pub fn simulate_nonpanel(n: usize, rng: &mut RngStream) -> ChoiceDataset {
    let mixture = GeneratingMixture::two_point_default();
    let obs: Vec<Observation> = (0..n)
        .map(|_| {
            let beta = mixture.draw(rng);
            let x = draw_covariates(rng);
            let choice = simulate_choice(&x, &beta, rng);
            Observation::new(choice, x).expect("choice within range")
        })
        .collect();
    ChoiceDataset::new(DESIGN_ALTERNATIVES, DESIGN_COVARIATES, obs)
        .expect("consistent simulated layout")
}

/// Panel generator: `n` individuals with one coefficient draw each from the
/// two-normal mixture, making `t` choices with fresh covariates every
/// period. Also returns the drawn coefficients, one per individual.
pub fn simulate_panel_with_coefficients(
    n: usize,
    t: usize,
    rng: &mut RngStream,
) -> (PanelDataset, Vec<DVector<f64>>) {
    let mixture = GeneratingMixture::two_normal_default();
    let mut coefficients = Vec::with_capacity(n);
    let individuals: Vec<PanelObservation> = (0..n)
        .map(|i| {
            let beta = mixture.draw(rng);
            let periods: Vec<Observation> = (0..t)
                .map(|_| {
                    let x = draw_covariates(rng);
                    let choice = simulate_choice(&x, &beta, rng);
                    Observation::new(choice, x).expect("choice within range")
                })
                .collect();
            coefficients.push(beta);
            PanelObservation::new(i as u64, periods).expect("nonempty periods")
        })
        .collect();
    let data = PanelDataset::new(DESIGN_ALTERNATIVES, DESIGN_COVARIATES, individuals)
        .expect("consistent simulated layout");
    (data, coefficients)
}

/// Panel generator without the coefficient report.
pub fn simulate_panel(n: usize, t: usize, rng: &mut RngStream) -> PanelDataset {
    simulate_panel_with_coefficients(n, t, rng).0
}
