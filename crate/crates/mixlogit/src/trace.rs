//! Chain output: per-iteration summaries, optional full states, estimators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CovariateMatrix, Simplex};

/// Recorded output of one chain.
///
/// `plugin[p][t]` is the mixture choice probability at evaluation point `p`
/// for retained iteration `t`; `predictive[p][t]` the posterior-predictive
/// estimate where the chain supports it (empty otherwise). States are kept
/// only when requested.
#[derive(Debug, Clone, Serialize)]
pub struct Trace<S> {
    pub eval_points: Vec<CovariateMatrix>,
    pub plugin: Vec<Vec<Simplex>>,
    pub predictive: Vec<Vec<Simplex>>,
    pub accepted: u64,
    pub attempted: u64,
    pub states: Option<Vec<S>>,
}

impl<S> Trace<S> {
    pub(crate) fn empty(eval_points: Vec<CovariateMatrix>, with_predictive: bool) -> Self {
        let points = eval_points.len();
        Self {
            eval_points,
            plugin: vec![Vec::new(); points],
            predictive: if with_predictive {
                vec![Vec::new(); points]
            } else {
                vec![Vec::new(); 0]
            },
            accepted: 0,
            attempted: 0,
            states: None,
        }
    }

    /// Number of retained iterations.
    pub fn retained(&self) -> usize {
        self.plugin.first().map_or_else(
            || self.states.as_ref().map_or(0, |s| s.len()),
            |series| series.len(),
        )
    }

    /// Overall Metropolis-Hastings acceptance rate (0 when nothing was
    /// attempted).
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }

    pub fn has_predictive(&self) -> bool {
        !self.predictive.is_empty()
    }
}

/// Posterior mean estimates at one evaluation point.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorMeanEstimate {
    /// Average of the per-iteration posterior-predictive rule, when recorded.
    pub predictive: Option<Simplex>,
    /// Average of the per-iteration plug-in mixture probabilities.
    pub plugin: Simplex,
}

fn mean_simplex(series: &[Simplex]) -> Result<Simplex> {
    let m = series.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let j = series[0].len();
    let mut acc = vec![0.0; j];
    for s in series {
        if s.len() != j {
            return Err(Error::DimensionMismatch("ragged trace".into()));
        }
        for (a, v) in acc.iter_mut().zip(s.as_slice()) {
            *a += v;
        }
    }
    for a in acc.iter_mut() {
        *a /= m as f64;
    }
    Simplex::new(acc)
}

/// Averages the recorded per-iteration estimates at evaluation point `point`.
///
/// Returns both the posterior-predictive average (primary, when the chain
/// records one) and the plug-in average.
pub fn posterior_mean_choice_prob<S>(
    trace: &Trace<S>,
    point: usize,
) -> Result<PosteriorMeanEstimate> {
    if point >= trace.plugin.len() {
        return Err(Error::InvalidArgument(format!(
            "evaluation point {point} out of range ({} recorded)",
            trace.plugin.len()
        )));
    }
    let plugin = mean_simplex(&trace.plugin[point])?;
    let predictive = if trace.has_predictive() {
        Some(mean_simplex(&trace.predictive[point])?)
    } else {
        None
    };
    Ok(PosteriorMeanEstimate { predictive, plugin })
}

/// Equal-tailed credible interval of each alternative's choice probability at
/// evaluation point `point`, from the posterior-predictive series when the
/// chain records one, otherwise the plug-in series.
pub fn credible_intervals<S>(
    trace: &Trace<S>,
    point: usize,
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "credible level must lie in (0,1), got {level}"
        )));
    }
    if point >= trace.plugin.len() {
        return Err(Error::InvalidArgument(format!(
            "evaluation point {point} out of range"
        )));
    }
    let series = if trace.has_predictive() {
        &trace.predictive[point]
    } else {
        &trace.plugin[point]
    };
    if series.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let j = series[0].len();
    let alpha = (1.0 - level) / 2.0;
    let mut out = Vec::with_capacity(j);
    for alt in 0..j {
        let mut vals: Vec<f64> = series.iter().map(|s| s[alt]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are ordered"));
        out.push((quantile_sorted(&vals, alpha), quantile_sorted(&vals, 1.0 - alpha)));
    }
    Ok(out)
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point() -> CovariateMatrix {
        CovariateMatrix::from_row_major(3, 2, &[1.0, -0.9, 1.0, 0.2, 1.0, 0.9]).unwrap()
    }

    fn trace_with(plugin: Vec<Vec<f64>>) -> Trace<()> {
        let mut t = Trace::<()>::empty(vec![point()], false);
        t.plugin[0] = plugin.into_iter().map(|v| Simplex::new(v).unwrap()).collect();
        t
    }

    #[test]
    fn single_iteration_mean_is_identity() {
        let t = trace_with(vec![vec![0.2, 0.3, 0.5]]);
        let est = posterior_mean_choice_prob(&t, 0).unwrap();
        assert_eq!(est.plugin.as_slice(), &[0.2, 0.3, 0.5]);
        assert!(est.predictive.is_none());
    }

    #[test]
    fn two_iteration_mean() {
        let t = trace_with(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let est = posterior_mean_choice_prob(&t, 0).unwrap();
        assert_eq!(est.plugin.as_slice(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn constant_series_has_degenerate_interval() {
        let t = trace_with(vec![vec![0.25, 0.35, 0.4]; 50]);
        let ci = credible_intervals(&t, 0, 0.95).unwrap();
        for (alt, expect) in [0.25, 0.35, 0.4].iter().enumerate() {
            assert_abs_diff_eq!(ci[alt].0, *expect, epsilon = 1e-12);
            assert_abs_diff_eq!(ci[alt].1, *expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn interval_brackets_the_spread() {
        let series: Vec<Vec<f64>> = (0..101)
            .map(|i| {
                let p = i as f64 / 100.0 * 0.5;
                vec![p, 0.5 - p, 0.5]
            })
            .collect();
        let t = trace_with(series);
        let ci = credible_intervals(&t, 0, 0.9).unwrap();
        assert_abs_diff_eq!(ci[0].0, 0.025, epsilon = 1e-12);
        assert_abs_diff_eq!(ci[0].1, 0.475, epsilon = 1e-12);
    }

    #[test]
    fn empty_trace_is_an_error() {
        let t = trace_with(vec![]);
        assert!(posterior_mean_choice_prob(&t, 0).is_err());
        assert!(credible_intervals(&t, 0, 0.95).is_err());
        assert!(posterior_mean_choice_prob(&t, 1).is_err());
    }
}
