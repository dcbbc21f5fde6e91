//! Evaluation metrics for fitted chains: root-mean-square error of
//! per-iteration choice probabilities, grid-discretized L1 distance between
//! choice-probability functions, autocorrelation, a prior tail-moment
//! stability check, and histogram export.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{CovariateMatrix, Simplex};

/// Root mean square deviation of per-iteration probabilities from a
/// reference: the square root of the average over alternatives of the
/// average squared deviation over iterations.
pub fn rms(trace_probs: &[Simplex], p0: &Simplex) -> Result<f64> {
    if trace_probs.is_empty() {
        return Err(Error::InvalidArgument("need at least one iteration".into()));
    }
    let j = p0.len();
    if trace_probs.iter().any(|s| s.len() != j) {
        return Err(Error::DimensionMismatch("iteration length differs from reference".into()));
    }
    let m = trace_probs.len() as f64;
    let mut total = 0.0;
    for alt in 0..j {
        let mut sq = 0.0;
        for s in trace_probs {
            sq += (s[alt] - p0[alt]).powi(2);
        }
        total += sq / m;
    }
    Ok((total / j as f64).sqrt())
}

/// Equally spaced points over `[lo, hi]` with both endpoints included.
pub fn equally_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument("need at least two grid points per axis".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid axis range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// A full-factorial grid over covariate matrices: every entry of the J x d
/// matrix ranges over the same axis points.
#[derive(Debug, Clone)]
pub struct CovariateGrid {
    j: usize,
    d: usize,
    axis: Vec<f64>,
}

impl CovariateGrid {
    pub fn new(j: usize, d: usize, axis: Vec<f64>) -> Result<Self> {
        if j < 2 || d == 0 {
            return Err(Error::InvalidArgument(format!("invalid grid shape {j} x {d}")));
        }
        if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("axis points must be finite and nonempty".into()));
        }
        Ok(Self { j, d, axis })
    }

    /// Number of grid points: axis-length to the power J times d.
    pub fn len(&self) -> usize {
        self.axis.len().pow((self.j * self.d) as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The grid point at a flat index, entries filled row-major.
    pub fn point(&self, mut index: usize) -> CovariateMatrix {
        let cells = self.j * self.d;
        let base = self.axis.len();
        let mut vals = vec![0.0; cells];
        for v in vals.iter_mut() {
            *v = self.axis[index % base];
            index /= base;
        }
        CovariateMatrix::from_row_major(self.j, self.d, &vals).expect("grid entries are finite")
    }

    /// Hypercube volume spanned by the axis endpoints.
    pub fn volume(&self) -> f64 {
        let lo = self.axis.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.axis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo).powi((self.j * self.d) as i32)
    }
}

/// Grid-discretized L1 distance in both normalizations.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct L1Error {
    /// Mean over grid points of the Euclidean gap (uniform-measure reading).
    pub mean: f64,
    /// The mean scaled by the hypercube volume (Lebesgue reading).
    pub volume_scaled: f64,
}

/// Mean Euclidean distance between two choice-probability functions over the
/// grid, with the volume-scaled variant alongside.
pub fn l1_grid_error<F, G>(mut q_hat: F, mut q0: G, grid: &CovariateGrid) -> Result<L1Error>
where
    F: FnMut(&CovariateMatrix) -> Result<Simplex>,
    G: FnMut(&CovariateMatrix) -> Result<Simplex>,
{
    let total = grid.len();
    let mut acc = 0.0;
    for idx in 0..total {
        let x = grid.point(idx);
        let a = q_hat(&x)?;
        let b = q0(&x)?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch("probability lengths differ".into()));
        }
        let gap: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        acc += gap;
    }
    let mean = acc / total as f64;
    Ok(L1Error { mean, volume_scaled: mean * grid.volume() })
}

/// Sample autocorrelation through `max_lag`, lag 0 normalized to one.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "series of length {} cannot support lag {max_lag}",
            series.len()
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|v| (v - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::InvalidArgument(
            "autocorrelation of a constant series is undefined".into(),
        ));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = (0..n - lag)
            .map(|t| (series[t] - mean) * (series[t + lag] - mean))
            .sum();
        out.push(num / denom);
    }
    Ok(out)
}

/// Result of the prior tail-moment check.
#[derive(Debug, Clone, Copy)]
pub struct TailCheck {
    /// Monte Carlo estimate of the mean coefficient norm.
    pub estimate: f64,
    /// The same mean over only the first half of the draws.
    pub half_estimate: f64,
    /// False when the half-sample mean drifts more than 20% from the full
    /// mean, the signature of a diverging first moment.
    pub stable: bool,
}

/// Estimates the mean norm of draws from a coefficient distribution and
/// flags running-mean instability. The integrability of this norm is the
/// tail condition the consistency theory places on the mixing prior.
pub fn tail_moment_check<F>(mut draw: F, n_samples: usize) -> Result<TailCheck>
where
    F: FnMut() -> DVector<f64>,
{
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples, got {n_samples}"
        )));
    }
    let half = n_samples / 2;
    let mut total = 0.0;
    let mut half_total = 0.0;
    for i in 0..n_samples {
        let norm = draw().norm();
        total += norm;
        if i < half {
            half_total += norm;
        }
    }
    let estimate = total / n_samples as f64;
    let half_estimate = half_total / half as f64;
    let stable = if estimate == 0.0 {
        half_estimate == 0.0
    } else {
        ((half_estimate - estimate) / estimate).abs() <= 0.2
    };
    Ok(TailCheck { estimate, half_estimate, stable })
}

/// Equal-width histogram spanning the sample range.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Histogram {
    /// Bin edges, one more than the number of bins.
    pub edges: Vec<f64>,
    /// Per-bin counts, summing to the sample size.
    pub counts: Vec<u64>,
}

/// Bins the samples into `bins` equal-width cells over `[min, max]`. The
/// last bin is closed on the right; a zero-width range puts everything in
/// the first bin.
pub fn histogram_export(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot bin an empty sample".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("histogram samples must be finite".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| lo + width * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0u64; bins];
    for v in samples {
        let idx = if width == 0.0 {
            0
        } else {
            (((v - lo) / width * bins as f64) as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}
