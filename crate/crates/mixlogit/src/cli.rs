//! Command-line surface: simulate, fit, evaluate, reproduce.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration validation
//! error, 3 numerical failure. `MIXLOGIT_SEED` and `MIXLOGIT_OUT_DIR`
//! override the seed and output directory; no other environment is read.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{FileConfig, RunConfig};
use crate::diagnostics::{acf, l1_grid_error, CovariateGrid, L1Error};
use crate::error::{Error, Result};
use crate::gibbs::run_chain;
use crate::gibbs_panel::run_chain_panel;
use crate::gml::run_gml_chain;
use crate::io::{
    build_summary, read_choice_csv, read_panel_csv, read_states_json, read_summary_json,
    read_trace_csv, write_choice_csv, write_panel_csv, write_states_json, write_summary_json,
    write_trace_csv, FitSummary, TraceSeries,
};
use crate::model::Simplex;
use crate::reproduce::{self, posterior_mean_on_grid, Scale};
use crate::rng::RngStream;
use crate::simulate::{
    simulate_nonpanel, simulate_panel, true_choice_prob, GeneratingMixture,
};
use crate::trace::Trace;

#[derive(Parser)]
#[command(
    name = "mixlogit",
    version,
    about = "Bayesian mixed multinomial logit choice model estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic choice dataset and write it as CSV.
    Simulate {
        /// Study design to generate.
        #[arg(long, value_enum)]
        design: Design,
        /// Number of individuals.
        #[arg(long)]
        n: usize,
        /// Choice periods per individual (panel design only).
        #[arg(long, default_value_t = 10)]
        t_periods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a chain to a dataset CSV under a TOML configuration.
    Fit {
        /// Chain kind; may also come from the config file's `model` key.
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// TOML configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory receiving summary.json, trace.csv and optional states.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Generating truth, enabling RMS entries in the summary.
        #[arg(long, value_enum)]
        truth: Option<TruthKind>,
    },
    /// Score a finished fit against a known generating truth.
    Evaluate {
        /// summary.json of the fit.
        #[arg(long)]
        summary: PathBuf,
        /// trace.csv of the fit.
        #[arg(long)]
        trace: PathBuf,
        /// Generating truth to score against.
        #[arg(long, value_enum)]
        truth: TruthKind,
        /// Stored states; enables the grid error (mmnl-nonpanel only).
        #[arg(long)]
        states: Option<PathBuf>,
        /// Longest autocorrelation lag reported.
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a named study experiment end to end.
    Reproduce {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Design {
    Nonpanel,
    Panel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    #[value(name = "mmnl-nonpanel")]
    MmnlNonpanel,
    #[value(name = "mmnl-panel")]
    MmnlPanel,
    #[value(name = "gml")]
    Gml,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            Self::MmnlNonpanel => "mmnl-nonpanel",
            Self::MmnlPanel => "mmnl-panel",
            Self::Gml => "gml",
        }
    }

    fn from_name(name: &str) -> Result<Self> {
        match name {
            "mmnl-nonpanel" => Ok(Self::MmnlNonpanel),
            "mmnl-panel" => Ok(Self::MmnlPanel),
            "gml" => Ok(Self::Gml),
            other => Err(Error::Validation(format!(
                "model: unknown kind '{other}' (expected mmnl-nonpanel, mmnl-panel or gml)"
            ))),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthKind {
    /// Two point masses at (-5, 5) and (5, -5).
    TwoPoint,
    /// Two normals at the same centers, variance 2.
    TwoNormal,
}

impl TruthKind {
    fn mixture(self) -> GeneratingMixture {
        match self {
            Self::TwoPoint => GeneratingMixture::two_point_default(),
            Self::TwoNormal => GeneratingMixture::two_normal_default(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::TwoPoint => "two-point",
            Self::TwoNormal => "two-normal",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Table1,
    Table2,
    #[value(name = "table3-lite")]
    Table3Lite,
    Figure1,
    Figure2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

/// Runs the interface on the given arguments and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_)
        | Error::ConfigParse(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch(_) => 2,
        Error::NotPositiveDefinite(_) | Error::NonFinite(_) => 3,
        Error::Io(_) => 1,
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("MIXLOGIT_SEED") {
        Ok(text) => text
            .parse()
            .map(Some)
            .map_err(|_| Error::Validation(format!("MIXLOGIT_SEED: cannot parse '{text}'"))),
        Err(_) => Ok(None),
    }
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os("MIXLOGIT_OUT_DIR").map(PathBuf::from)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(p, bytes)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { design, n, t_periods, seed, out } => {
            simulate_cmd(design, n, t_periods, seed, out)
        }
        Command::Fit { model, data, config, out_dir, truth } => {
            fit_cmd(model, &data, config.as_deref(), out_dir, truth)
        }
        Command::Evaluate { summary, trace, truth, states, max_lag, out } => {
            evaluate_cmd(&summary, &trace, truth, states.as_deref(), max_lag, out.as_deref())
        }
        Command::Reproduce { experiment, scale, seed, out_dir } => {
            reproduce_cmd(experiment, scale.into(), seed, out_dir)
        }
    }
}

fn simulate_cmd(
    design: Design,
    n: usize,
    t_periods: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let seed = env_seed()?.unwrap_or(seed);
    let mut rng = RngStream::from_seed(seed);
    let mut buf = Vec::new();
    match design {
        Design::Nonpanel => write_choice_csv(&simulate_nonpanel(n, &mut rng), &mut buf)?,
        Design::Panel => {
            if t_periods == 0 {
                return Err(Error::Validation("t_periods must be >= 1".into()));
            }
            write_panel_csv(&simulate_panel(n, t_periods, &mut rng), &mut buf)?
        }
    }
    write_output(out.as_deref(), &buf)
}

/// Evaluation points default to the study's reference point when the data
/// has its 3 x 2 layout and the config registers none.
fn default_eval_points(cfg: &mut RunConfig, j: usize, d: usize) {
    if cfg.eval_points.is_empty() && j == 3 && d == 2 {
        cfg.eval_points = vec![reproduce::x_star()];
    }
}

fn truth_at_points(kind: TruthKind, cfg: &RunConfig) -> Result<Vec<Simplex>> {
    cfg.eval_points
        .iter()
        .map(|x| true_choice_prob(x, &kind.mixture()))
        .collect()
}

struct FitArtifacts {
    summary: FitSummary,
    trace_csv: Vec<u8>,
    states_json: Option<Vec<u8>>,
}

fn reduce_trace<S: Serialize>(
    model: ModelKind,
    n: usize,
    j: usize,
    d: usize,
    cfg: &RunConfig,
    trace: &Trace<S>,
    truth: Option<&[Simplex]>,
) -> Result<FitArtifacts> {
    let summary = build_summary(model.name(), n, j, d, cfg, trace, truth)?;
    let mut trace_csv = Vec::new();
    write_trace_csv(trace, &mut trace_csv)?;
    let states_json = match &trace.states {
        Some(states) => {
            let mut buf = Vec::new();
            write_states_json(model.name(), states, &mut buf)?;
            Some(buf)
        }
        None => None,
    };
    Ok(FitArtifacts { summary, trace_csv, states_json })
}

fn fit_cmd(
    model: Option<ModelKind>,
    data_path: &Path,
    config_path: Option<&Path>,
    out_dir: PathBuf,
    truth: Option<TruthKind>,
) -> Result<()> {
    let file_cfg = match config_path {
        Some(p) => FileConfig::parse(&fs::read_to_string(p)?)?,
        None => FileConfig::default(),
    };
    let model = match model {
        Some(m) => m,
        None => match &file_cfg.model {
            Some(name) => ModelKind::from_name(name)?,
            None => {
                return Err(Error::Validation(
                    "model: pass --model or set it in the config file".into(),
                ))
            }
        },
    };
    let text = fs::read_to_string(data_path)?;
    let is_panel_file = text.lines().next().is_some_and(|l| l.starts_with("id,t,"));
    let out_dir = env_out_dir().unwrap_or(out_dir);
    fs::create_dir_all(&out_dir)?;

    let artifacts = match (model, is_panel_file) {
        (ModelKind::MmnlNonpanel, true) => {
            return Err(Error::Validation(format!(
                "data: '{}' is a panel file but model mmnl-nonpanel is cross-sectional",
                data_path.display()
            )))
        }
        (ModelKind::MmnlPanel, false) => {
            return Err(Error::Validation(format!(
                "data: '{}' is a cross-sectional file but model mmnl-panel needs a 't' column",
                data_path.display()
            )))
        }
        (ModelKind::MmnlNonpanel, false) | (ModelKind::Gml, false) => {
            let data = read_choice_csv(text.as_bytes())?;
            let (j, d) = (data.n_alternatives(), data.n_covariates());
            let mut cfg = file_cfg.resolve(j, d)?;
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
            default_eval_points(&mut cfg, j, d);
            let truths = truth.map(|k| truth_at_points(k, &cfg)).transpose()?;
            if model == ModelKind::MmnlNonpanel {
                let trace = run_chain(&data, &cfg)?;
                reduce_trace(model, data.n(), j, d, &cfg, &trace, truths.as_deref())?
            } else {
                let trace = run_gml_chain(&data, &cfg)?;
                reduce_trace(model, data.n(), j, d, &cfg, &trace, truths.as_deref())?
            }
        }
        (ModelKind::MmnlPanel, true) | (ModelKind::Gml, true) => {
            let data = read_panel_csv(text.as_bytes())?;
            let (j, d) = (data.n_alternatives(), data.n_covariates());
            let mut cfg = file_cfg.resolve(j, d)?;
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
            default_eval_points(&mut cfg, j, d);
            let truths = truth.map(|k| truth_at_points(k, &cfg)).transpose()?;
            if model == ModelKind::MmnlPanel {
                let trace = run_chain_panel(&data, &cfg)?;
                reduce_trace(model, data.n(), j, d, &cfg, &trace, truths.as_deref())?
            } else {
                let trace = run_gml_chain(&data, &cfg)?;
                reduce_trace(model, data.n(), j, d, &cfg, &trace, truths.as_deref())?
            }
        }
    };

    let summary_path = out_dir.join("summary.json");
    let mut buf = Vec::new();
    write_summary_json(&artifacts.summary, &mut buf)?;
    fs::write(&summary_path, &buf)?;
    fs::write(out_dir.join("trace.csv"), &artifacts.trace_csv)?;
    if let Some(states) = &artifacts.states_json {
        fs::write(out_dir.join("states.json"), states)?;
    }
    println!(
        "wrote {} and trace.csv ({} retained sweeps, acceptance {:.3})",
        summary_path.display(),
        artifacts.summary.retained,
        artifacts.summary.acceptance_rate
    );
    Ok(())
}

/// Scores recorded against true probabilities at one evaluation point.
#[derive(Debug, Serialize, Deserialize)]
pub struct PointEvaluation {
    pub true_prob: Vec<f64>,
    /// RMS of the primary per-iteration series against the truth.
    pub rms: f64,
    /// RMS of the plug-in series.
    pub rms_plugin: f64,
    /// Autocorrelation of the first alternative's primary series.
    pub acf: Vec<f64>,
}

/// The report written by `evaluate`.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub truth: String,
    pub points: Vec<PointEvaluation>,
    /// Grid-discretized L1 error, present when states were supplied.
    pub grid_l1: Option<L1Error>,
}

fn evaluate_cmd(
    summary_path: &Path,
    trace_path: &Path,
    truth: TruthKind,
    states_path: Option<&Path>,
    max_lag: usize,
    out: Option<&Path>,
) -> Result<()> {
    let summary = read_summary_json(fs::File::open(summary_path)?)?;
    let series = read_trace_csv(fs::File::open(trace_path)?)?;
    if series.plugin.len() != summary.points.len() {
        return Err(Error::Validation(format!(
            "trace has {} evaluation points, summary has {}",
            series.plugin.len(),
            summary.points.len()
        )));
    }
    let mixture = truth.mixture();
    let mut points = Vec::with_capacity(summary.points.len());
    for (p, point) in summary.points.iter().enumerate() {
        let true_prob = true_choice_prob(&point.x, &mixture)?;
        let primary = primary_series(&series, p);
        let lag = max_lag.min(primary.len().saturating_sub(1));
        let first: Vec<f64> = primary.iter().map(|s| s[0]).collect();
        points.push(PointEvaluation {
            true_prob: true_prob.as_slice().to_vec(),
            rms: crate::diagnostics::rms(primary, &true_prob)?,
            rms_plugin: crate::diagnostics::rms(&series.plugin[p], &true_prob)?,
            acf: acf(&first, lag)?,
        });
    }
    let grid_l1 = match states_path {
        Some(path) => {
            if summary.model != "mmnl-nonpanel" {
                return Err(Error::Validation(format!(
                    "states: grid error is computed for mmnl-nonpanel fits, not '{}'",
                    summary.model
                )));
            }
            let states: Vec<crate::gibbs::GibbsStateNp> =
                read_states_json("mmnl-nonpanel", fs::File::open(path)?)?;
            Some(grid_error_from_states(&states, &mixture)?)
        }
        None => None,
    };
    let report = EvaluationReport {
        model: summary.model.clone(),
        truth: truth.name().to_string(),
        points,
        grid_l1,
    };
    let mut buf = serde_json::to_vec_pretty(&report)?;
    buf.push(b'\n');
    write_output(out, &buf)
}

fn primary_series(series: &TraceSeries, point: usize) -> &[Simplex] {
    if series.predictive.is_empty() {
        &series.plugin[point]
    } else {
        &series.predictive[point]
    }
}

fn grid_error_from_states(
    states: &[crate::gibbs::GibbsStateNp],
    mixture: &GeneratingMixture,
) -> Result<L1Error> {
    let grid = CovariateGrid::new(3, 2, vec![-2.0, 0.0, 2.0])?;
    let estimates = posterior_mean_on_grid(states, &grid, 200)?;
    let mut est_it = estimates.iter();
    l1_grid_error(
        move |_| Ok(est_it.next().expect("grid length").clone()),
        |x| true_choice_prob(x, mixture),
        &grid,
    )
}

fn reproduce_cmd(
    experiment: Experiment,
    scale: Scale,
    seed: u64,
    out_dir: PathBuf,
) -> Result<()> {
    let seed = env_seed()?.unwrap_or(seed);
    let out_dir = env_out_dir().unwrap_or(out_dir);
    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();
    match experiment {
        Experiment::Table1 => {
            let t = reproduce::table1(scale, seed)?;
            let txt = out_dir.join("table1.txt");
            fs::write(&txt, reproduce::render_table1(&t))?;
            let csv = out_dir.join("table1.csv");
            fs::write(&csv, reproduce::render_table1_csv(&t))?;
            written.push(txt);
            written.push(csv);
        }
        Experiment::Table2 => {
            let seeds = [seed, seed.wrapping_add(1), seed.wrapping_add(2)];
            let t = reproduce::table2(scale, &seeds)?;
            let path = out_dir.join("table2.csv");
            fs::write(&path, reproduce::render_table2_csv(&t))?;
            written.push(path);
        }
        Experiment::Table3Lite => {
            let cells = reproduce::table3_lite(scale, 10, seed)?;
            let path = out_dir.join("table3_lite.csv");
            fs::write(&path, reproduce::render_table3_csv(&cells))?;
            written.push(path);
        }
        Experiment::Figure1 => {
            let f = reproduce::figure1(scale, seed)?;
            let path = out_dir.join("figure1.csv");
            fs::write(&path, reproduce::render_figure1_csv(&f))?;
            written.push(path);
        }
        Experiment::Figure2 => {
            for cell in reproduce::figure2(scale, seed)? {
                let path = out_dir.join(format!("figure2_{}.csv", cell.label));
                fs::write(&path, reproduce::render_figure2_csv(&cell))?;
                written.push(path);
            }
        }
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
