//! End-to-end reruns of the simulation study.
//!
//! Each experiment regenerates its synthetic data, fits the relevant chains,
//! and reduces the output to the published table or figure layout. `Desk`
//! scale trims budgets to minutes on a laptop; `Paper` scale uses the full
//! settings.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::config::RunConfig;
use crate::diagnostics::{acf, histogram_export, l1_grid_error, CovariateGrid, Histogram};
use crate::error::{Error, Result};
use crate::gibbs::run_chain;
use crate::gibbs_panel::run_chain_panel;
use crate::gml::run_gml_chain;
use crate::model::{mixture_choice_prob, CovariateMatrix, MixingDistribution, Simplex};
use crate::rng::{NiwParams, RngStream};
use crate::simulate::{
    simulate_nonpanel, simulate_panel, true_choice_prob, GeneratingMixture,
};
use crate::trace::{credible_intervals, posterior_mean_choice_prob, Trace};

/// The study's reference covariate point.
pub fn x_star() -> CovariateMatrix {
    CovariateMatrix::from_row_major(3, 2, &[1.0, -0.9, 1.0, 0.2, 1.0, 0.9])
        .expect("fixed reference point")
}

/// Experiment size: trimmed desk budgets or the full published settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

/// Sweep counts and Monte Carlo depth for one experiment.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub burnin: usize,
    pub iterations: usize,
    pub predictive_draws: usize,
}

impl Budget {
    pub fn table1(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self { burnin: 4000, iterations: 6000, predictive_draws: 1000 },
            Scale::Paper => Self { burnin: 10_000, iterations: 10_000, predictive_draws: 10_000 },
        }
    }

    pub fn table2(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self { burnin: 2500, iterations: 4000, predictive_draws: 500 },
            Scale::Paper => Self { burnin: 10_000, iterations: 10_000, predictive_draws: 10_000 },
        }
    }

    pub fn table3(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self { burnin: 2000, iterations: 2000, predictive_draws: 100 },
            Scale::Paper => Self { burnin: 10_000, iterations: 10_000, predictive_draws: 10_000 },
        }
    }

    pub fn figure(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self { burnin: 2000, iterations: 4000, predictive_draws: 100 },
            Scale::Paper => Self { burnin: 10_000, iterations: 10_000, predictive_draws: 10_000 },
        }
    }
}

/// Study configuration at the reference point for coefficient dimension 2.
pub fn study_config(chain_seed: u64, budget: Budget) -> RunConfig {
    let mut cfg = RunConfig::default_for_dim(2);
    cfg.seed = chain_seed;
    cfg.burnin = budget.burnin;
    cfg.iterations = budget.iterations;
    cfg.predictive_draws = budget.predictive_draws;
    cfg.eval_points = vec![x_star()];
    cfg
}

/// Exact choice probabilities at the reference point under the two-point
/// generating mixture (data set 1).
pub fn truth_nonpanel() -> Simplex {
    true_choice_prob(&x_star(), &GeneratingMixture::two_point_default())
        .expect("two-point truth is exact")
}

/// Choice probabilities at the reference point under the two-normal
/// generating mixture (data set 2), by deep fixed-seed Monte Carlo.
pub fn truth_panel() -> Simplex {
    static CACHE: OnceLock<Simplex> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            true_choice_prob(&x_star(), &GeneratingMixture::two_normal_default())
                .expect("two-normal truth")
        })
        .clone()
}

/// Sample median; the input order is not preserved.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One fitted chain reduced to the table row it produces.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Posterior mean of the primary estimator per alternative.
    pub est: Vec<f64>,
    /// Equal-tailed 95% credible interval per alternative.
    pub ci: Vec<(f64, f64)>,
    /// Root mean square deviation of the per-iteration estimates from truth.
    pub rms: f64,
    pub acceptance: f64,
}

/// Reduces a finished trace against the known truth at the reference point.
pub fn report_from_trace<S>(trace: &Trace<S>, truth: &Simplex) -> Result<FitReport> {
    let est = posterior_mean_choice_prob(trace, 0)?;
    let primary = est.predictive.as_ref().unwrap_or(&est.plugin);
    let series = if trace.has_predictive() {
        &trace.predictive[0]
    } else {
        &trace.plugin[0]
    };
    Ok(FitReport {
        est: primary.as_slice().to_vec(),
        ci: credible_intervals(trace, 0, 0.95)?,
        rms: crate::diagnostics::rms(series, truth)?,
        acceptance: trace.acceptance_rate(),
    })
}

/// Fits the nonparametric chain to a fresh draw of data set 1.
pub fn fit_nonpanel_study(
    n: usize,
    data_seed: u64,
    chain_seed: u64,
    budget: Budget,
) -> Result<FitReport> {
    let data = simulate_nonpanel(n, &mut RngStream::from_seed(data_seed));
    let trace = run_chain(&data, &study_config(chain_seed, budget))?;
    report_from_trace(&trace, &truth_nonpanel())
}

/// Fits the parametric normal baseline to the same draw of data set 1.
pub fn fit_gml_study(
    n: usize,
    data_seed: u64,
    chain_seed: u64,
    budget: Budget,
) -> Result<FitReport> {
    let data = simulate_nonpanel(n, &mut RngStream::from_seed(data_seed));
    let trace = run_gml_chain(&data, &study_config(chain_seed, budget))?;
    report_from_trace(&trace, &truth_nonpanel())
}

/// Fits the panel chain to a fresh draw of data set 2.
pub fn fit_panel_study(
    n: usize,
    t: usize,
    data_seed: u64,
    chain_seed: u64,
    budget: Budget,
) -> Result<FitReport> {
    let data = simulate_panel(n, t, &mut RngStream::from_seed(data_seed));
    let trace = run_chain_panel(&data, &study_config(chain_seed, budget))?;
    report_from_trace(&trace, &truth_panel())
}

/// Posterior-mean and credible-interval comparison at the reference point:
/// the nonparametric model against the normal baseline on data set 1, and the
/// panel model on data set 2.
#[derive(Debug, Clone)]
pub struct Table1 {
    pub n_nonpanel: usize,
    pub n_panel: usize,
    pub t_panel: usize,
    pub truth1: Simplex,
    pub mmnl: FitReport,
    pub gml: FitReport,
    pub truth2: Simplex,
    pub panel: FitReport,
}

pub fn table1(scale: Scale, seed: u64) -> Result<Table1> {
    let budget = Budget::table1(scale);
    let (n1, n2, t2) = (500, 100, 10);
    Ok(Table1 {
        n_nonpanel: n1,
        n_panel: n2,
        t_panel: t2,
        truth1: truth_nonpanel(),
        mmnl: fit_nonpanel_study(n1, seed, seed.wrapping_add(1), budget)?,
        gml: fit_gml_study(n1, seed, seed.wrapping_add(2), budget)?,
        truth2: truth_panel(),
        panel: fit_panel_study(n2, t2, seed.wrapping_add(3), seed.wrapping_add(4), budget)?,
    })
}

fn ci_text(ci: (f64, f64)) -> String {
    format!("({:.4}, {:.4})", ci.0, ci.1)
}

/// Lays the comparison out with True, Est. and C.I. columns and an RMS row.
pub fn render_table1(t: &Table1) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "data set 1: cross-sectional, n={}, two-point mixing truth\n",
        t.n_nonpanel
    ));
    out.push_str(&format!(
        "{:<12}{:>8}  {:>10} {:<18} {:>10} {:<18}\n",
        "", "True", "MMNL Est.", " MMNL 95% C.I.", "GML Est.", " GML 95% C.I."
    ));
    for alt in 0..3 {
        out.push_str(&format!(
            "{:<12}{:>8.4}  {:>10.4} {:<18} {:>10.4} {:<18}\n",
            format!("P({{{}}}|x*)", alt + 1),
            t.truth1[alt],
            t.mmnl.est[alt],
            ci_text(t.mmnl.ci[alt]),
            t.gml.est[alt],
            ci_text(t.gml.ci[alt]),
        ));
    }
    out.push_str(&format!(
        "{:<12}{:>8}  {:>10.4} {:<18} {:>10.4}\n\n",
        "RMS", "", t.mmnl.rms, "", t.gml.rms
    ));
    out.push_str(&format!(
        "data set 2: panel, n={}, T={}, two-normal mixing truth\n",
        t.n_panel, t.t_panel
    ));
    out.push_str(&format!(
        "{:<12}{:>8}  {:>10} {:<18}\n",
        "", "True", "MMNL Est.", " MMNL 95% C.I."
    ));
    for alt in 0..3 {
        out.push_str(&format!(
            "{:<12}{:>8.4}  {:>10.4} {:<18}\n",
            format!("P({{{}}}|x*)", alt + 1),
            t.truth2[alt],
            t.panel.est[alt],
            ci_text(t.panel.ci[alt]),
        ));
    }
    out.push_str(&format!("{:<12}{:>8}  {:>10.4}\n", "RMS", "", t.panel.rms));
    out
}

/// Machine-readable form of [`Table1`].
pub fn render_table1_csv(t: &Table1) -> String {
    let mut out = String::from(
        "design,model,alternative,true,est,ci_lo,ci_hi,rms\n",
    );
    let mut push = |design: &str, model: &str, truth: &Simplex, fit: &FitReport| {
        for alt in 0..3 {
            out.push_str(&format!(
                "{design},{model},{},{},{},{},{},{}\n",
                alt + 1,
                truth[alt],
                fit.est[alt],
                fit.ci[alt].0,
                fit.ci[alt].1,
                fit.rms
            ));
        }
    };
    push("nonpanel", "mmnl", &t.truth1, &t.mmnl);
    push("nonpanel", "gml", &t.truth1, &t.gml);
    push("panel", "mmnl", &t.truth2, &t.panel);
    out
}

/// One sample-size cell of an error trend.
#[derive(Debug, Clone)]
pub struct TrendCell {
    pub n: usize,
    /// One value per seed or replicate.
    pub values: Vec<f64>,
    pub median: f64,
}

fn trend_cell(n: usize, values: Vec<f64>) -> TrendCell {
    let mut sorted = values.clone();
    let median = median(&mut sorted);
    TrendCell { n, values, median }
}

/// RMS against sample size for both designs.
#[derive(Debug, Clone)]
pub struct Table2 {
    pub nonpanel: Vec<TrendCell>,
    pub panel: Vec<TrendCell>,
}

/// Runs the RMS trend: data set 1 at n in {50, 100, 500} and data set 2 at
/// n in {10, 50, 100}, one fresh dataset and chain per seed.
pub fn table2(scale: Scale, seeds: &[u64]) -> Result<Table2> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let budget = Budget::table2(scale);
    let mut nonpanel = Vec::new();
    for &n in &[50usize, 100, 500] {
        let mut values = Vec::new();
        for &s in seeds {
            let data_seed = s.wrapping_mul(7919).wrapping_add(n as u64);
            values.push(fit_nonpanel_study(n, data_seed, data_seed.wrapping_add(1), budget)?.rms);
        }
        nonpanel.push(trend_cell(n, values));
    }
    let mut panel = Vec::new();
    for &n in &[10usize, 50, 100] {
        let mut values = Vec::new();
        for &s in seeds {
            let data_seed = s.wrapping_mul(104_729).wrapping_add(n as u64);
            values.push(
                fit_panel_study(n, 10, data_seed, data_seed.wrapping_add(1), budget)?.rms,
            );
        }
        panel.push(trend_cell(n, values));
    }
    Ok(Table2 { nonpanel, panel })
}

pub fn render_table2_csv(t: &Table2) -> String {
    let mut out = String::from("design,n,median_rms,per_seed_rms\n");
    for (design, cells) in [("nonpanel", &t.nonpanel), ("panel", &t.panel)] {
        for cell in cells.iter() {
            let per_seed: Vec<String> = cell.values.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!(
                "{design},{},{:.4},{}\n",
                cell.n,
                cell.median,
                per_seed.join(";")
            ));
        }
    }
    out
}

/// Interquartile range of a cell's replicate values.
pub fn quartiles(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    (
        crate::trace::quantile_sorted(&sorted, 0.25),
        crate::trace::quantile_sorted(&sorted, 0.75),
    )
}

/// One cell of the grid-error trend.
#[derive(Debug, Clone)]
pub struct Table3Cell {
    pub n: usize,
    pub l1: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Mean posterior choice-probability function over stored states, evaluated
/// on the grid; at most `max_states` evenly spaced states are used.
pub fn posterior_mean_on_grid(
    states: &[crate::gibbs::GibbsStateNp],
    grid: &CovariateGrid,
    max_states: usize,
) -> Result<Vec<Simplex>> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("no stored states".into()));
    }
    let step = states.len().div_ceil(max_states);
    let used: Vec<&crate::gibbs::GibbsStateNp> = states.iter().step_by(step).collect();
    let total = grid.len();
    let mut acc = vec![vec![0.0f64; 3]; total];
    for state in &used {
        let g = MixingDistribution::new(state.weights(), state.atoms.clone())?;
        for (idx, cell) in acc.iter_mut().enumerate() {
            let p = mixture_choice_prob(&grid.point(idx), &g)?;
            for (a, v) in cell.iter_mut().zip(p.as_slice()) {
                *a += v;
            }
        }
    }
    let m = used.len() as f64;
    acc.into_iter()
        .map(|cell| Simplex::new(cell.into_iter().map(|v| v / m).collect()))
        .collect()
}

/// Grid-discretized L1 error of the nonparametric estimator against the
/// two-point truth, replicated over fresh data sets at each sample size.
pub fn table3_lite(
    scale: Scale,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<Table3Cell>> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let budget = Budget::table3(scale);
    let grid = CovariateGrid::new(3, 2, vec![-2.0, 0.0, 2.0])?;
    let mixture = GeneratingMixture::two_point_default();
    let mut truth = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        truth.push(true_choice_prob(&grid.point(idx), &mixture)?);
    }
    let mut cells = Vec::new();
    for &n in &[100usize, 500, 1000] {
        let mut l1 = Vec::with_capacity(replicates);
        for r in 0..replicates {
            let data_seed = base_seed
                .wrapping_mul(31)
                .wrapping_add(1009 * r as u64)
                .wrapping_add(n as u64);
            let data = simulate_nonpanel(n, &mut RngStream::from_seed(data_seed));
            let mut cfg = study_config(data_seed.wrapping_add(1), budget);
            cfg.store_states = true;
            let trace = run_chain(&data, &cfg)?;
            let states = trace.states.as_ref().expect("states were requested");
            let estimates = posterior_mean_on_grid(states, &grid, 400)?;
            let mut est_it = estimates.iter();
            let mut truth_it = truth.iter();
            let err = l1_grid_error(
                move |_| Ok(est_it.next().expect("grid length").clone()),
                move |_| Ok(truth_it.next().expect("grid length").clone()),
                &grid,
            )?;
            l1.push(err.mean);
        }
        let (q1, q3) = quartiles(&l1);
        let mut sorted = l1.clone();
        let median = median(&mut sorted);
        cells.push(Table3Cell { n, l1, median, q1, q3 });
    }
    Ok(cells)
}

pub fn render_table3_csv(cells: &[Table3Cell]) -> String {
    let mut out = String::from("n,median_l1,q1,q3,per_replicate_l1\n");
    for cell in cells {
        let per: Vec<String> = cell.l1.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            cell.n,
            cell.median,
            cell.q1,
            cell.q3,
            per.join(";")
        ));
    }
    out
}

/// Autocorrelation of the first alternative's per-iteration probability under
/// a diffuse and a unit prior precision scaling, for both designs.
#[derive(Debug, Clone)]
pub struct Figure1 {
    pub max_lag: usize,
    /// Labelled autocorrelation series, one per (design, lambda) pair.
    pub series: Vec<(String, Vec<f64>)>,
}

pub fn figure1(scale: Scale, seed: u64) -> Result<Figure1> {
    let budget = Budget::figure(scale);
    let max_lag = 50;
    let mut series = Vec::new();
    let data1 = simulate_nonpanel(500, &mut RngStream::from_seed(seed));
    let data2 = simulate_panel(100, 10, &mut RngStream::from_seed(seed.wrapping_add(1)));
    for &lambda in &[0.01, 1.0] {
        let mut cfg = study_config(seed.wrapping_add(2), budget);
        cfg.prior = NiwParams::new(
            DVector::zeros(2),
            lambda,
            2.0,
            DMatrix::identity(2, 2),
        )?;
        let trace = run_chain(&data1, &cfg)?;
        let values: Vec<f64> = trace.plugin[0].iter().map(|s| s[0]).collect();
        series.push((format!("data set 1, lambda={lambda}"), acf(&values, max_lag)?));
        let trace = run_chain_panel(&data2, &cfg)?;
        let values: Vec<f64> = trace.plugin[0].iter().map(|s| s[0]).collect();
        series.push((format!("data set 2, lambda={lambda}"), acf(&values, max_lag)?));
    }
    Ok(Figure1 { max_lag, series })
}

pub fn render_figure1_csv(f: &Figure1) -> String {
    let mut out = String::from("lag");
    for (label, _) in &f.series {
        out.push(',');
        out.push_str(&label.replace(',', ";"));
    }
    out.push('\n');
    for lag in 0..=f.max_lag {
        out.push_str(&format!("{lag}"));
        for (_, values) in &f.series {
            out.push_str(&format!(",{:.4}", values[lag]));
        }
        out.push('\n');
    }
    out
}

/// Marginal posterior of the first coefficient against the generating
/// mixture, across sample sizes.
#[derive(Debug, Clone)]
pub struct Figure2Cell {
    pub label: String,
    pub histogram: Histogram,
    /// True mixing density of the first coefficient at the bin centers, for
    /// the absolutely continuous generating mixture only.
    pub true_density: Option<Vec<f64>>,
}

fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = (x - mean) * (x - mean) / variance;
    (-0.5 * z).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

fn bin_centers(h: &Histogram) -> Vec<f64> {
    h.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

pub fn figure2(scale: Scale, seed: u64) -> Result<Vec<Figure2Cell>> {
    let budget = Budget::figure(scale);
    let bins = 30;
    let mut cells = Vec::new();
    for &n in &[50usize, 500] {
        let data = simulate_nonpanel(n, &mut RngStream::from_seed(seed.wrapping_add(n as u64)));
        let mut cfg = study_config(seed.wrapping_add(n as u64 + 1), budget);
        cfg.store_states = true;
        let trace = run_chain(&data, &cfg)?;
        let states = trace.states.as_ref().expect("states were requested");
        let mut samples = Vec::new();
        for state in states.iter().step_by(5) {
            for i in 0..n {
                samples.push(state.beta_of(i)[0]);
            }
        }
        cells.push(Figure2Cell {
            label: format!("ds1_n{n}"),
            histogram: histogram_export(&samples, bins)?,
            true_density: None,
        });
    }
    for &n in &[10usize, 100] {
        let data = simulate_panel(
            n,
            10,
            &mut RngStream::from_seed(seed.wrapping_add(1000 + n as u64)),
        );
        let mut cfg = study_config(seed.wrapping_add(1001 + n as u64), budget);
        cfg.store_states = true;
        let trace = run_chain_panel(&data, &cfg)?;
        let states = trace.states.as_ref().expect("states were requested");
        let mut samples = Vec::new();
        for state in states.iter().step_by(5) {
            for beta in &state.betas {
                samples.push(beta[0]);
            }
        }
        let histogram = histogram_export(&samples, bins)?;
        let density = bin_centers(&histogram)
            .into_iter()
            .map(|c| 0.5 * normal_pdf(c, -5.0, 2.0) + 0.5 * normal_pdf(c, 5.0, 2.0))
            .collect();
        cells.push(Figure2Cell {
            label: format!("ds2_n{n}"),
            histogram,
            true_density: Some(density),
        });
    }
    Ok(cells)
}

pub fn render_figure2_csv(cell: &Figure2Cell) -> String {
    let mut out = String::from(if cell.true_density.is_some() {
        "bin_lo,bin_hi,count,true_density\n"
    } else {
        "bin_lo,bin_hi,count\n"
    });
    for (i, count) in cell.histogram.counts.iter().enumerate() {
        out.push_str(&format!(
            "{:.4},{:.4},{count}",
            cell.histogram.edges[i],
            cell.histogram.edges[i + 1]
        ));
        if let Some(density) = &cell.true_density {
            out.push_str(&format!(",{:.6}", density[i]));
        }
        out.push('\n');
    }
    out
}
