//! Dataset, trace, and state persistence, plus the fit summary document.
//!
//! Datasets travel as CSV with one row per observation (cross-sectional) or
//! per period (panel). Covariate columns are named `x_<alternative>_<covariate>`
//! with the alternative index varying slowest, both indices one-based, and the
//! choice column is one-based as well. Values are printed in shortest
//! round-trip form, so `read(write(d)) == d` bit for bit.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{
    ChoiceDataset, CovariateMatrix, Observation, PanelDataset, PanelObservation, Simplex,
};
use crate::stick::truncation_error_bound;
use crate::trace::{credible_intervals, posterior_mean_choice_prob, Trace};

/// Magic string identifying a stored-state file.
pub const STATE_FORMAT: &str = "mixlogit-states";
/// Version of the stored-state layout this build reads and writes.
pub const STATE_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn covariate_header(j: usize, d: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(j * d);
    for alt in 1..=j {
        for cov in 1..=d {
            cols.push(format!("x_{alt}_{cov}"));
        }
    }
    cols
}

/// Parses a header's `x_<alt>_<cov>` block and returns the layout it spells.
fn layout_from_header(cols: &[String], fixed: &[&str], row: u64) -> Result<(usize, usize)> {
    for (i, name) in fixed.iter().enumerate() {
        if cols.get(i).map(String::as_str) != Some(*name) {
            return Err(Error::Validation(format!(
                "row {row}: expected column {} to be '{name}', found '{}'",
                i + 1,
                cols.get(i).cloned().unwrap_or_default()
            )));
        }
    }
    let rest = &cols[fixed.len()..];
    if rest.is_empty() {
        return Err(Error::Validation(format!("row {row}: no covariate columns")));
    }
    let mut j = 0usize;
    let mut d = 0usize;
    for name in rest {
        let parts: Vec<&str> = name.split('_').collect();
        let parsed = if parts.len() == 3 && parts[0] == "x" {
            parts[1].parse::<usize>().ok().zip(parts[2].parse::<usize>().ok())
        } else {
            None
        };
        let Some((a, c)) = parsed else {
            return Err(Error::Validation(format!(
                "row {row}: unrecognized column '{name}'"
            )));
        };
        j = j.max(a);
        d = d.max(c);
    }
    let want = covariate_header(j, d);
    if rest != want.as_slice() {
        return Err(Error::Validation(format!(
            "row {row}: covariate columns do not form the x_1_1..x_{j}_{d} block"
        )));
    }
    Ok((j, d))
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, row: u64) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Validation(format!("row {row}: cannot parse {name} from '{field}'"))
    })
}

fn parse_row_x(record: &csv::StringRecord, skip: usize, j: usize, d: usize, row: u64) -> Result<CovariateMatrix> {
    if record.len() != skip + j * d {
        return Err(Error::Validation(format!(
            "row {row}: expected {} fields, found {}",
            skip + j * d,
            record.len()
        )));
    }
    let mut vals = Vec::with_capacity(j * d);
    for (i, field) in record.iter().skip(skip).enumerate() {
        let v: f64 = parse_field(field, &format!("covariate {}", i + 1), row)?;
        vals.push(v);
    }
    CovariateMatrix::from_row_major(j, d, &vals)
        .map_err(|e| Error::Validation(format!("row {row}: {e}")))
}

fn parse_choice(field: &str, j: usize, row: u64) -> Result<usize> {
    let choice: usize = parse_field(field, "choice", row)?;
    if choice < 1 || choice > j {
        return Err(Error::Validation(format!(
            "row {row}: choice {choice} outside 1..={j}"
        )));
    }
    Ok(choice - 1)
}

/// Writes a cross-sectional dataset as CSV, one observation per row.
pub fn write_choice_csv<W: Write>(data: &ChoiceDataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let (j, d) = (data.n_alternatives(), data.n_covariates());
    let mut header = vec!["id".to_string(), "choice".to_string()];
    header.extend(covariate_header(j, d));
    out.write_record(&header)?;
    for (i, obs) in data.observations().iter().enumerate() {
        let mut rec = vec![(i + 1).to_string(), (obs.choice + 1).to_string()];
        rec.extend(obs.x.as_slice().iter().map(|v| fmt_f64(*v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a cross-sectional dataset; the layout is inferred from the header.
pub fn read_choice_csv<R: Read>(r: R) -> Result<ChoiceDataset> {
    let mut input = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = input.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(Error::Validation("row 1: missing header".into())),
    };
    let cols: Vec<String> = header.iter().map(str::to_string).collect();
    let (j, d) = layout_from_header(&cols, &["id", "choice"], 1)?;
    let mut observations = Vec::new();
    for (idx, rec) in records.enumerate() {
        let row = idx as u64 + 2;
        let rec = rec?;
        let _id: u64 = parse_field(&rec[0], "id", row)?;
        let choice = parse_choice(&rec[1], j, row)?;
        let x = parse_row_x(&rec, 2, j, d, row)?;
        observations.push(Observation::new(choice, x).expect("choice validated"));
    }
    ChoiceDataset::new(j, d, observations)
}

/// Writes a panel dataset as CSV, one period per row, ids repeated and the
/// period column running 1..T for each individual.
pub fn write_panel_csv<W: Write>(data: &PanelDataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let (j, d) = (data.n_alternatives(), data.n_covariates());
    let mut header = vec!["id".to_string(), "t".to_string(), "choice".to_string()];
    header.extend(covariate_header(j, d));
    out.write_record(&header)?;
    for ind in data.individuals() {
        for (t, obs) in ind.periods.iter().enumerate() {
            let mut rec = vec![
                ind.id.to_string(),
                (t + 1).to_string(),
                (obs.choice + 1).to_string(),
            ];
            rec.extend(obs.x.as_slice().iter().map(|v| fmt_f64(*v)));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a panel dataset; rows of one individual must be contiguous with the
/// period column counting 1..T.
pub fn read_panel_csv<R: Read>(r: R) -> Result<PanelDataset> {
    let mut input = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = input.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(Error::Validation("row 1: missing header".into())),
    };
    let cols: Vec<String> = header.iter().map(str::to_string).collect();
    let (j, d) = layout_from_header(&cols, &["id", "t", "choice"], 1)?;
    let mut individuals: Vec<PanelObservation> = Vec::new();
    let mut current: Option<(u64, Vec<Observation>)> = None;
    let mut seen: std::collections::HashSet<u64> = std::collections::HashSet::new();
    for (idx, rec) in records.enumerate() {
        let row = idx as u64 + 2;
        let rec = rec?;
        let id: u64 = parse_field(&rec[0], "id", row)?;
        let t: usize = parse_field(&rec[1], "t", row)?;
        let choice = parse_choice(&rec[2], j, row)?;
        let x = parse_row_x(&rec, 3, j, d, row)?;
        let obs = Observation::new(choice, x).expect("choice validated");
        match current.as_mut() {
            Some((cur_id, periods)) if *cur_id == id => {
                if t != periods.len() + 1 {
                    return Err(Error::Validation(format!(
                        "row {row}: individual {id} has period {t} where {} was expected",
                        periods.len() + 1
                    )));
                }
                periods.push(obs);
            }
            _ => {
                if let Some((done_id, periods)) = current.take() {
                    individuals.push(PanelObservation::new(done_id, periods)?);
                }
                if !seen.insert(id) {
                    return Err(Error::Validation(format!(
                        "row {row}: rows of individual {id} are not contiguous"
                    )));
                }
                if t != 1 {
                    return Err(Error::Validation(format!(
                        "row {row}: individual {id} starts at period {t}, expected 1"
                    )));
                }
                current = Some((id, vec![obs]));
            }
        }
    }
    if let Some((done_id, periods)) = current.take() {
        individuals.push(PanelObservation::new(done_id, periods)?);
    }
    PanelDataset::new(j, d, individuals)
}

/// The per-iteration series of a persisted trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    /// `plugin[p][t]`: plug-in probabilities at point `p`, iteration `t`.
    pub plugin: Vec<Vec<Simplex>>,
    /// Posterior-predictive series, empty when the chain records none.
    pub predictive: Vec<Vec<Simplex>>,
}

/// Writes retained per-iteration probabilities as long-format CSV with
/// columns `sweep,point,estimator,p_1..p_J`.
pub fn write_trace_csv<S, W: Write>(trace: &Trace<S>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let j = trace
        .eval_points
        .first()
        .map(CovariateMatrix::n_alternatives)
        .unwrap_or(0);
    let mut header = vec!["sweep".to_string(), "point".to_string(), "estimator".to_string()];
    header.extend((1..=j).map(|a| format!("p_{a}")));
    out.write_record(&header)?;
    for (p, series) in trace.plugin.iter().enumerate() {
        for (m, probs) in series.iter().enumerate() {
            let mut rec = vec![(m + 1).to_string(), (p + 1).to_string(), "plugin".to_string()];
            rec.extend(probs.as_slice().iter().map(|v| fmt_f64(*v)));
            out.write_record(&rec)?;
        }
    }
    for (p, series) in trace.predictive.iter().enumerate() {
        for (m, probs) in series.iter().enumerate() {
            let mut rec = vec![
                (m + 1).to_string(),
                (p + 1).to_string(),
                "predictive".to_string(),
            ];
            rec.extend(probs.as_slice().iter().map(|v| fmt_f64(*v)));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a long-format trace CSV back into per-point series.
pub fn read_trace_csv<R: Read>(r: R) -> Result<TraceSeries> {
    let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut plugin: Vec<Vec<Simplex>> = Vec::new();
    let mut predictive: Vec<Vec<Simplex>> = Vec::new();
    for (idx, rec) in input.records().enumerate() {
        let row = idx as u64 + 2;
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Validation(format!("row {row}: too few fields")));
        }
        let sweep: usize = parse_field(&rec[0], "sweep", row)?;
        let point: usize = parse_field(&rec[1], "point", row)?;
        if point == 0 {
            return Err(Error::Validation(format!("row {row}: point index is one-based")));
        }
        let mut probs = Vec::with_capacity(rec.len() - 3);
        for field in rec.iter().skip(3) {
            probs.push(parse_field::<f64>(field, "probability", row)?);
        }
        let simplex = Simplex::new(probs)
            .map_err(|e| Error::Validation(format!("row {row}: {e}")))?;
        let target = match &rec[2] {
            "plugin" => &mut plugin,
            "predictive" => &mut predictive,
            other => {
                return Err(Error::Validation(format!(
                    "row {row}: unknown estimator '{other}'"
                )))
            }
        };
        if target.len() < point {
            target.resize(point, Vec::new());
        }
        if target[point - 1].len() + 1 != sweep {
            return Err(Error::Validation(format!(
                "row {row}: sweep {sweep} out of order for point {point}"
            )));
        }
        target[point - 1].push(simplex);
    }
    Ok(TraceSeries { plugin, predictive })
}

#[derive(Serialize)]
struct StateFileRef<'a, S> {
    format: &'a str,
    version: u32,
    model: &'a str,
    states: &'a [S],
}

#[derive(Deserialize)]
struct StateFile<S> {
    format: String,
    version: u32,
    model: String,
    states: Vec<S>,
}

/// Persists sampler states with a versioned header.
pub fn write_states_json<S: Serialize, W: Write>(
    model: &str,
    states: &[S],
    w: W,
) -> Result<()> {
    let doc = StateFileRef {
        format: STATE_FORMAT,
        version: STATE_VERSION,
        model,
        states,
    };
    serde_json::to_writer(w, &doc)?;
    Ok(())
}

/// Reads stored states, refusing a wrong format, version, or model kind.
pub fn read_states_json<S: DeserializeOwned, R: Read>(
    expect_model: &str,
    r: R,
) -> Result<Vec<S>> {
    let doc: StateFile<S> = serde_json::from_reader(r)?;
    if doc.format != STATE_FORMAT {
        return Err(Error::Validation(format!(
            "not a state file (format '{}')",
            doc.format
        )));
    }
    if doc.version != STATE_VERSION {
        return Err(Error::Validation(format!(
            "state file version {} is not supported (this build reads {STATE_VERSION})",
            doc.version
        )));
    }
    if doc.model != expect_model {
        return Err(Error::Validation(format!(
            "state file holds '{}' states, expected '{expect_model}'",
            doc.model
        )));
    }
    Ok(doc.states)
}

/// Everything `fit` reports about one evaluation point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSummary {
    /// Covariate matrix of the point.
    pub x: CovariateMatrix,
    /// Posterior-predictive mean probabilities, absent for the parametric
    /// baseline.
    pub posterior_mean: Option<Vec<f64>>,
    /// Plug-in mean probabilities.
    pub plugin_mean: Vec<f64>,
    /// Equal-tailed credible interval per alternative.
    pub credible_interval: Vec<(f64, f64)>,
    /// True probabilities, when a generating truth was supplied.
    pub true_prob: Option<Vec<f64>>,
    /// Root mean square deviation of the per-iteration estimates from the
    /// truth, when supplied.
    pub rms: Option<f64>,
}

/// The summary document written next to every fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub n_observations: usize,
    pub n_alternatives: usize,
    pub n_covariates: usize,
    pub seed: u64,
    pub burnin: usize,
    pub iterations: usize,
    pub thin: usize,
    /// Number of retained sweeps behind the summaries.
    pub retained: usize,
    pub n_atoms: usize,
    pub dp_mass: f64,
    pub credible_level: f64,
    /// Overall Metropolis-Hastings acceptance rate.
    pub acceptance_rate: f64,
    /// Stick-breaking truncation error bound for (n, N, a); absent for the
    /// parametric baseline.
    pub truncation_bound: Option<f64>,
    pub points: Vec<PointSummary>,
}

/// Per-iteration series the summary statistics are computed from: the
/// posterior-predictive series when the chain records one, else plug-in.
fn primary_series<'a, S>(trace: &'a Trace<S>, point: usize) -> &'a [Simplex] {
    if trace.has_predictive() {
        &trace.predictive[point]
    } else {
        &trace.plugin[point]
    }
}

/// Assembles the summary document for a finished chain.
///
/// `truth` supplies the generating probabilities per evaluation point when
/// known (simulation studies); RMS entries are filled only then.
pub fn build_summary<S>(
    model: &str,
    n_observations: usize,
    n_alternatives: usize,
    n_covariates: usize,
    cfg: &RunConfig,
    trace: &Trace<S>,
    truth: Option<&[Simplex]>,
) -> Result<FitSummary> {
    if let Some(t) = truth {
        if t.len() != trace.eval_points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} truth points for {} evaluation points",
                t.len(),
                trace.eval_points.len()
            )));
        }
    }
    let truncation_bound = if model == "gml" {
        None
    } else {
        Some(truncation_error_bound(n_observations, cfg.n_atoms, cfg.dp_mass)?)
    };
    let mut points = Vec::with_capacity(trace.eval_points.len());
    for (p, x) in trace.eval_points.iter().enumerate() {
        let est = posterior_mean_choice_prob(trace, p)?;
        let ci = credible_intervals(trace, p, cfg.credible_level)?;
        let true_prob = truth.map(|t| t[p].as_slice().to_vec());
        let rms = match truth {
            Some(t) => Some(crate::diagnostics::rms(primary_series(trace, p), &t[p])?),
            None => None,
        };
        points.push(PointSummary {
            x: x.clone(),
            posterior_mean: est.predictive.map(|s| s.as_slice().to_vec()),
            plugin_mean: est.plugin.as_slice().to_vec(),
            credible_interval: ci,
            true_prob,
            rms,
        });
    }
    Ok(FitSummary {
        model: model.to_string(),
        n_observations,
        n_alternatives,
        n_covariates,
        seed: cfg.seed,
        burnin: cfg.burnin,
        iterations: cfg.iterations,
        thin: cfg.thin,
        retained: trace.retained(),
        n_atoms: cfg.n_atoms,
        dp_mass: cfg.dp_mass,
        credible_level: cfg.credible_level,
        acceptance_rate: trace.acceptance_rate(),
        truncation_bound,
        points,
    })
}

/// Writes the summary as pretty-printed JSON.
pub fn write_summary_json<W: Write>(summary: &FitSummary, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, summary)?;
    Ok(())
}

/// Reads a summary document.
pub fn read_summary_json<R: Read>(r: R) -> Result<FitSummary> {
    Ok(serde_json::from_reader(r)?)
}
