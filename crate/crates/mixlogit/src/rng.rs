//! Seeded random streams and the samplers used by the Gibbs machinery.
//!
//! All randomness flows through [`RngStream`], a ChaCha20 generator. ChaCha20
//! is counter-based with 2^64 independent streams per seed, so sub-streams for
//! chains or replicates are derived by stream id rather than by reseeding.
//! Equal seeds and equal call sequences reproduce draws bitwise on every
//! platform.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Variance scale below which a covariance is treated as numerically singular.
///
/// Cholesky factors with a squared diagonal entry under this bound are
/// rejected; legitimate tiny posteriors (for example `tau / lambda` with
/// `lambda = 1e12`) stay well above it.
pub const SPD_MIN_VARIANCE: f64 = 1e-15;

/// A reproducible random stream (ChaCha20, 64-bit seed, 64-bit stream id).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    /// Stream 0 of the given seed.
    pub fn from_seed(seed: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(0);
        Self { seed, stream: 0, inner }
    }

    /// An independent stream sharing this stream's seed.
    ///
    /// Sub-streams are indexed by ChaCha20's stream id, so any two distinct
    /// ids yield non-overlapping sequences regardless of how much either
    /// stream has consumed.
    pub fn substream(&self, id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(self.seed);
        inner.set_stream(id);
        Self { seed: self.seed, stream: id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform draw on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// Standard Gumbel quantile: `-ln(-ln u)` for `u` in the open unit interval.
pub fn sample_gumbel(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gumbel quantile needs u in (0,1), got {u}"
        )));
    }
    Ok(-(-u.ln()).ln())
}

/// Standard Gumbel draw.
pub fn draw_gumbel(rng: &mut RngStream) -> f64 {
    sample_gumbel(rng.uniform_open01()).expect("uniform_open01 is interior")
}

/// Beta draw, clamped into the open interval (0, 1).
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta parameters must be positive and finite, got ({a}, {b})"
        )));
    }
    let dist = BetaDist::new(a, b)
        .map_err(|e| Error::InvalidArgument(format!("beta({a}, {b}): {e}")))?;
    let v: f64 = dist.sample(rng);
    // Boundary values can appear through rounding; keep the draw interior.
    Ok(v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Index draw proportional to `weights` (not necessarily normalized).
pub fn sample_categorical(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("empty weight vector".into()));
    }
    let mut total = 0.0;
    for w in weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    let u = rng.uniform(0.0, 1.0) * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding pushed u past the final cumulative sum.
    Ok(last_positive)
}

/// Cholesky factor of a symmetric positive definite matrix, with the
/// singularity guard of [`SPD_MIN_VARIANCE`].
fn checked_cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-8 * (1.0 + m[(i, i)].abs() + m[(j, j)].abs()) {
                return Err(Error::NotPositiveDefinite(format!("{what} is not symmetric")));
            }
        }
    }
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotPositiveDefinite(what.into()))?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d * d >= SPD_MIN_VARIANCE) {
            return Err(Error::NotPositiveDefinite(format!(
                "{what} is numerically singular (pivot {d:e})"
            )));
        }
    }
    Ok(chol)
}

/// Restore factorability of a nearly singular symmetric matrix by clamping
/// its spectrum at a relative floor.
///
/// At small degrees of freedom the inverse-Wishart is heavy-tailed enough
/// that a draw can be effectively rank-deficient, and its Gram-product
/// representation then rounds to an indefinite matrix. Clamping replaces such
/// a draw with the nearest usable one; the perturbation is below the rounding
/// error of the construction itself, and well-conditioned draws never take
/// this path.
fn clamp_spectrum(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let floor = (eig.eigenvalues.max() * 1e-10).max(1e-12);
    let clamped = eig.eigenvalues.map(|x| x.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Multivariate normal draw via the Cholesky factor of `cov`.
pub fn sample_mvn(mean: &DVector<f64>, cov: &DMatrix<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    if cov.nrows() != mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {}, covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = checked_cholesky(cov, "mvn covariance")?;
    let z = DVector::from_fn(mean.len(), |_, _| rng.standard_normal());
    Ok(mean + chol.l_dirty().lower_triangle() * z)
}

/// Chi-squared draw with (possibly non-integer) positive degrees of freedom.
fn sample_chi2(df: f64, rng: &mut RngStream) -> f64 {
    let g = Gamma::new(df / 2.0, 2.0).expect("positive chi-squared df");
    g.sample(rng)
}

/// Inverse-Wishart draw under the mean-anchored convention:
///
/// density proportional to `|tau|^{-(nu+d+1)/2} exp(-1/2 tr(nu psi tau^{-1}))`,
/// so `E[tau] = nu psi / (nu - d - 1)` and `psi` is the prior guess for `tau`
/// when `nu` is large. Sampling uses the Bartlett decomposition of the Wishart
/// for `tau^{-1}`; the draw is assembled from triangular solves without ever
/// forming an explicit inverse.
pub fn sample_inverse_wishart(nu: f64, psi: &DMatrix<f64>, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    let d = psi.nrows();
    if !(nu > d as f64 - 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inverse-Wishart needs nu > d - 1, got nu = {nu}, d = {d}"
        )));
    }
    let scaled = psi * nu;
    let l = checked_cholesky(&scaled, "inverse-Wishart scale")?
        .l_dirty()
        .lower_triangle();

    // Bartlett factor: lower triangular, chi-squared diagonal, normal
    // subdiagonal. Draw order is fixed (diagonal first, then rows) so the
    // stream consumption is reproducible.
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = sample_chi2(nu - i as f64, rng).sqrt();
    }
    for i in 1..d {
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }

    // tau^{-1} ~ Wishart(nu, (nu psi)^{-1}) is (U A)(U A)' with U = L'^{-1},
    // hence tau = M' M with M = A^{-1} L'. Solve A M = L' by forward
    // substitution.
    let mut m = l.transpose();
    a.solve_lower_triangular_mut(&mut m);
    let tau = m.transpose() * m;
    if checked_cholesky(&tau, "inverse-Wishart draw").is_err() {
        return Ok(clamp_spectrum(tau));
    }
    Ok(tau)
}

/// Normal-inverse-Wishart parameters `(m, lambda, nu, s)`.
///
/// `s` is the prior guess for the covariance `tau` (the inverse-Wishart scale
/// in the convention of [`sample_inverse_wishart`]), `lambda` scales the
/// conditional precision of the mean, and `nu > d - 1` are the degrees of
/// freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwParams {
    pub m: DVector<f64>,
    pub lambda: f64,
    pub nu: f64,
    pub s: DMatrix<f64>,
}

impl NiwParams {
    pub fn new(m: DVector<f64>, lambda: f64, nu: f64, s: DMatrix<f64>) -> Result<Self> {
        let d = m.len();
        if d == 0 {
            return Err(Error::InvalidArgument("empty location vector".into()));
        }
        if s.nrows() != d || s.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "scale matrix is {}x{}, location has length {d}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !(nu > d as f64 - 1.0) || !nu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "nu must exceed d - 1 = {}, got {nu}",
                d as f64 - 1.0
            )));
        }
        if m.iter().any(|v| !v.is_finite()) || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("normal-inverse-Wishart parameter".into()));
        }
        // Fail fast on a scale matrix that cannot be factored.
        checked_cholesky(&s, "normal-inverse-Wishart scale")?;
        Ok(Self { m, lambda, nu, s })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// Draw `(mu, tau)` from the normal-inverse-Wishart distribution:
/// `tau ~ IW(nu, s)`, then `mu | tau ~ MVN(m, tau / lambda)`.
pub fn sample_niw(params: &NiwParams, rng: &mut RngStream) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let tau = sample_inverse_wishart(params.nu, &params.s, rng)?;
    let mu = sample_mvn(&params.m, &(&tau / params.lambda), rng)?;
    Ok((mu, tau))
}

/// Multivariate normal with a precomputed Cholesky factor, for repeated
/// density evaluations and draws against the same covariance.
#[derive(Debug, Clone)]
pub struct MvnFactor {
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl MvnFactor {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = checked_cholesky(cov, "mvn covariance")?;
        let d = mean.len() as f64;
        let mut log_det = 0.0;
        let l = chol.l_dirty();
        for i in 0..mean.len() {
            log_det += l[(i, i)].ln();
        }
        let log_norm = -0.5 * d * (2.0 * std::f64::consts::PI).ln() - log_det;
        Ok(Self { mean, chol, log_norm })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let solved = self.chol.solve(&diff);
        self.log_norm - 0.5 * diff.dot(&solved)
    }

    pub fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.standard_normal());
        &self.mean + self.chol.l_dirty().lower_triangle() * z
    }
}

/// Log density of `MVN(mean, cov)` at `x`, via Cholesky.
pub fn mvn_log_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mean.len() {
        return Err(Error::DimensionMismatch("mvn log density".into()));
    }
    Ok(MvnFactor::new(mean.clone(), cov)?.log_density(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gumbel_quantile_fixed_points() {
        assert_abs_diff_eq!(sample_gumbel((-1.0f64).exp()).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            sample_gumbel((-std::f64::consts::E).exp()).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        let median = sample_gumbel(0.5).unwrap();
        assert_abs_diff_eq!(median, -(2.0f64.ln().ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(median, 0.3665, epsilon = 1e-4);
    }

    #[test]
    fn gumbel_quantile_rejects_boundary() {
        for u in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(sample_gumbel(u).is_err());
        }
    }

    #[test]
    fn gumbel_draws_match_cdf() {
        let mut rng = RngStream::from_seed(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_gumbel(&mut rng)).collect();
        for x in [-1.0, 0.0, 1.0, 2.0] {
            let f = (-(-x as f64).exp()).exp();
            let emp = draws.iter().filter(|v| **v <= x).count() as f64 / n as f64;
            let se = (f * (1.0 - f) / n as f64).sqrt();
            assert!(
                (emp - f).abs() <= 3.0 * se,
                "cdf mismatch at {x}: {emp} vs {f}"
            );
        }
    }

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn beta_moments() {
        let mut rng = RngStream::from_seed(5);
        let n = 100_000;
        let u: Vec<f64> = (0..n).map(|_| sample_beta(1.0, 1.0, &mut rng).unwrap()).collect();
        let (mu, se) = mean_and_se(&u);
        assert!((mu - 0.5).abs() <= 3.0 * se);

        let v: Vec<f64> = (0..n).map(|_| sample_beta(3.0, 2.0, &mut rng).unwrap()).collect();
        let (mv, sev) = mean_and_se(&v);
        assert!((mv - 0.6).abs() <= 3.0 * sev);
    }

    #[test]
    fn beta_extreme_parameters_stay_interior() {
        let mut rng = RngStream::from_seed(6);
        for _ in 0..10_000 {
            let v = sample_beta(1.0, 1e6, &mut rng).unwrap();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn beta_rejects_nonpositive_parameters() {
        let mut rng = RngStream::from_seed(0);
        assert!(sample_beta(0.0, 1.0, &mut rng).is_err());
        assert!(sample_beta(1.0, -2.0, &mut rng).is_err());
        assert!(sample_beta(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn categorical_point_mass() {
        let mut rng = RngStream::from_seed(1);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = RngStream::from_seed(2);
        let n = 100_000;
        let mut counts = [0usize; 2];
        for _ in 0..n {
            counts[sample_categorical(&[0.1, 0.4], &mut rng).unwrap()] += 1;
        }
        let f0 = counts[0] as f64 / n as f64;
        let se = (0.2f64 * 0.8 / n as f64).sqrt();
        assert!((f0 - 0.2).abs() <= 3.0 * se, "got {f0}");
    }

    #[test]
    fn categorical_rejects_degenerate_weights() {
        let mut rng = RngStream::from_seed(0);
        assert!(sample_categorical(&[], &mut rng).is_err());
        assert!(sample_categorical(&[0.0, 0.0], &mut rng).is_err());
        assert!(sample_categorical(&[1.0, -1.0], &mut rng).is_err());
    }

    #[test]
    fn mvn_rejects_indefinite_and_singular_covariance() {
        let mut rng = RngStream::from_seed(3);
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(sample_mvn(&mean, &indefinite, &mut rng).is_err());
        let tiny = DMatrix::from_row_slice(2, 2, &[1e-18, 0.0, 0.0, 1e-18]);
        assert!(sample_mvn(&mean, &tiny, &mut rng).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(sample_mvn(&mean, &asym, &mut rng).is_err());
    }

    #[test]
    fn mvn_moments() {
        let mut rng = RngStream::from_seed(4);
        let mean = DVector::from_column_slice(&[1.0, -2.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let n = 100_000;
        let draws: Vec<DVector<f64>> = (0..n)
            .map(|_| sample_mvn(&mean, &cov, &mut rng).unwrap())
            .collect();
        for k in 0..2 {
            let coord: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let (m, se) = mean_and_se(&coord);
            assert!((m - mean[k]).abs() <= 3.0 * se, "mean coord {k}");
        }
        // Covariance entries, with plug-in standard errors.
        let emp_mean: DVector<f64> =
            draws.iter().sum::<DVector<f64>>() / n as f64;
        for a in 0..2 {
            for b in 0..2 {
                let prods: Vec<f64> = draws
                    .iter()
                    .map(|d| (d[a] - emp_mean[a]) * (d[b] - emp_mean[b]))
                    .collect();
                let (c, se) = mean_and_se(&prods);
                assert!(
                    (c - cov[(a, b)]).abs() <= 3.0 * se,
                    "cov entry ({a},{b}): {c} vs {}",
                    cov[(a, b)]
                );
            }
        }
    }

    #[test]
    fn inverse_wishart_rejects_bad_inputs() {
        let mut rng = RngStream::from_seed(0);
        let psi = DMatrix::identity(2, 2);
        assert!(sample_inverse_wishart(1.0, &psi, &mut rng).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(sample_inverse_wishart(5.0, &indefinite, &mut rng).is_err());
    }

    #[test]
    fn inverse_wishart_degenerate_draws_stay_factorable() {
        // A draw that is numerically rank one at huge scale once rounded to
        // its Gram product; the spectral clamp must hand back a matrix the
        // normal sampler accepts, moved by less than a part in 1e9.
        let near_singular = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.46501399827572e16,
                4.445338903384504e15,
                4.445338903384504e15,
                1.3488634230936995e15,
            ],
        );
        assert!(Cholesky::new(near_singular.clone()).is_none());
        let repaired = clamp_spectrum(near_singular.clone());
        assert!(checked_cholesky(&repaired, "repaired draw").is_ok());
        let rel = (&repaired - &near_singular).norm() / near_singular.norm();
        assert!(rel < 1e-9, "repair moved the matrix by {rel}");

        // Heavy-tailed regime: minimal degrees of freedom at d = 2; every
        // draw must be usable by the downstream samplers.
        let mut rng = RngStream::from_seed(13);
        let psi = DMatrix::identity(2, 2);
        let mean = DVector::zeros(2);
        for _ in 0..200_000 {
            let tau = sample_inverse_wishart(2.0, &psi, &mut rng).unwrap();
            sample_mvn(&mean, &tau, &mut rng).unwrap();
        }
    }

    #[test]
    fn inverse_wishart_mean_d2() {
        let mut rng = RngStream::from_seed(7);
        let psi = DMatrix::identity(2, 2);
        let nu = 10.0;
        let n = 100_000;
        let mut entries: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 4];
        for _ in 0..n {
            let tau = sample_inverse_wishart(nu, &psi, &mut rng).unwrap();
            assert_abs_diff_eq!(tau[(0, 1)], tau[(1, 0)], epsilon = 1e-10);
            assert!(Cholesky::new(tau.clone()).is_some(), "draw not SPD");
            for a in 0..2 {
                for b in 0..2 {
                    entries[a * 2 + b].push(tau[(a, b)]);
                }
            }
        }
        // E[tau] = nu psi / (nu - d - 1) = (10/7) I.
        let expect = [10.0 / 7.0, 0.0, 0.0, 10.0 / 7.0];
        for (idx, e) in expect.iter().enumerate() {
            let (m, se) = mean_and_se(&entries[idx]);
            assert!((m - e).abs() <= 3.0 * se, "entry {idx}: {m} vs {e}");
        }
    }

    #[test]
    fn inverse_wishart_mean_d1() {
        let mut rng = RngStream::from_seed(8);
        let psi = DMatrix::from_element(1, 1, 2.0);
        let nu = 4.0;
        let n = 200_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_inverse_wishart(nu, &psi, &mut rng).unwrap()[(0, 0)])
            .collect();
        // E[tau] = nu psi / (nu - 2) = 4.
        let (m, se) = mean_and_se(&draws);
        assert!((m - 4.0).abs() <= 3.0 * se, "{m} vs 4 (se {se})");
    }

    #[test]
    fn niw_tight_lambda_pins_mu() {
        let mut rng = RngStream::from_seed(9);
        let params = NiwParams::new(
            DVector::from_column_slice(&[0.5, -0.5]),
            1e12,
            10.0,
            DMatrix::identity(2, 2),
        )
        .unwrap();
        for _ in 0..200 {
            let (mu, _) = sample_niw(&params, &mut rng).unwrap();
            assert!((mu[0] - 0.5).abs() < 1e-5 && (mu[1] + 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn niw_moments() {
        let mut rng = RngStream::from_seed(10);
        let params = NiwParams::new(
            DVector::zeros(2),
            1.0,
            10.0,
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let n = 100_000;
        let mu_draws: Vec<DVector<f64>> = (0..n)
            .map(|_| sample_niw(&params, &mut rng).unwrap().0)
            .collect();
        // Var(mu) = E[tau] / lambda = (10/7) I.
        for k in 0..2 {
            let coord: Vec<f64> = mu_draws.iter().map(|d| d[k]).collect();
            let (m, se) = mean_and_se(&coord);
            assert!(m.abs() <= 3.0 * se, "mu mean coord {k}");
            let sq: Vec<f64> = coord.iter().map(|x| (x - m).powi(2)).collect();
            let (v, sev) = mean_and_se(&sq);
            assert!((v - 10.0 / 7.0).abs() <= 3.0 * sev, "mu var coord {k}: {v}");
        }
    }

    #[test]
    fn niw_rejects_invalid_parameters() {
        let m = DVector::zeros(2);
        let s = DMatrix::identity(2, 2);
        assert!(NiwParams::new(m.clone(), 0.0, 2.0, s.clone()).is_err());
        assert!(NiwParams::new(m.clone(), 1.0, 1.0, s.clone()).is_err());
        assert!(NiwParams::new(m, 1.0, 2.0, DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn streams_reproduce_bitwise() {
        let mut a = RngStream::from_seed(42);
        let mut b = RngStream::from_seed(42);
        for _ in 0..50 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let c = RngStream::from_seed(43);
        assert_ne!(a.substream(1).next_u64(), c.substream(1).next_u64());

        let mut s1 = RngStream::from_seed(42).substream(7);
        let mut s2 = RngStream::from_seed(42).substream(7);
        let mut s3 = RngStream::from_seed(42).substream(8);
        let x1: Vec<u64> = (0..10).map(|_| s1.next_u64()).collect();
        let x2: Vec<u64> = (0..10).map(|_| s2.next_u64()).collect();
        let x3: Vec<u64> = (0..10).map(|_| s3.next_u64()).collect();
        assert_eq!(x1, x2);
        assert_ne!(x1, x3);
    }

    #[test]
    fn mvn_log_density_matches_direct_formula() {
        let mean = DVector::from_column_slice(&[1.0, 2.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let x = DVector::from_column_slice(&[0.0, 3.0]);
        let det: f64 = 2.0 * 1.0 - 0.25;
        let inv = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 2.0]) / det;
        let diff = &x - &mean;
        let quad = (inv * &diff).dot(&diff);
        let expect = -0.5 * (2.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + quad);
        assert_abs_diff_eq!(
            mvn_log_density(&x, &mean, &cov).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }
}
