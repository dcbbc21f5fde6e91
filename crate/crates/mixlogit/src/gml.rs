//! Parametric Gaussian mixed logit baseline: every individual draws its
//! coefficient vector from one shared normal, whose parameters carry a
//! normal-inverse-Wishart prior. Fit by Metropolis-within-Gibbs, alternating
//! coefficient moves with the conjugate parameter draw.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::conjugacy::draw_theta_posterior;
use crate::error::{Error, Result};
use crate::gibbs::SweepStats;
use crate::metropolis::{adapt_scale, mh_update, proposal_covariance, MhConfig};
use crate::model::{
    log_choice_prob_unchecked, mnl_prob, panel_log_likelihood, ChoiceDataset, PanelDataset,
    Simplex,
};
use crate::rng::{sample_niw, MvnFactor, RngStream};
use crate::trace::Trace;

/// Stream id offset for per-iteration summary Monte Carlo, matching the
/// other chain modules.
const PREDICTIVE_STREAM_BASE: u64 = 1 << 32;

/// Per-individual likelihood access shared by the cross-sectional and panel
/// dataset types.
pub trait IndividualLikelihood {
    fn n(&self) -> usize;
    fn n_alternatives(&self) -> usize;
    fn n_covariates(&self) -> usize;
    /// Log-likelihood of individual `i` under coefficients `beta`.
    fn log_likelihood(&self, i: usize, beta: &DVector<f64>) -> f64;
}

impl IndividualLikelihood for ChoiceDataset {
    fn n(&self) -> usize {
        ChoiceDataset::n(self)
    }
    fn n_alternatives(&self) -> usize {
        ChoiceDataset::n_alternatives(self)
    }
    fn n_covariates(&self) -> usize {
        ChoiceDataset::n_covariates(self)
    }
    fn log_likelihood(&self, i: usize, beta: &DVector<f64>) -> f64 {
        let obs = &self.observations()[i];
        log_choice_prob_unchecked(&obs.x, obs.choice, beta)
    }
}

impl IndividualLikelihood for PanelDataset {
    fn n(&self) -> usize {
        PanelDataset::n(self)
    }
    fn n_alternatives(&self) -> usize {
        PanelDataset::n_alternatives(self)
    }
    fn n_covariates(&self) -> usize {
        PanelDataset::n_covariates(self)
    }
    fn log_likelihood(&self, i: usize, beta: &DVector<f64>) -> f64 {
        panel_log_likelihood(&self.individuals()[i], beta).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Full state of the baseline sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmlState {
    /// Per-individual coefficient vectors.
    pub betas: Vec<DVector<f64>>,
    /// Shared normal mean.
    pub mu: DVector<f64>,
    /// Shared normal covariance.
    pub tau: DMatrix<f64>,
}

/// Draws an initial state from the prior: parameters from the
/// normal-inverse-Wishart, coefficients i.i.d. from the resulting normal.
pub fn init_gml_state(n: usize, cfg: &RunConfig, rng: &mut RngStream) -> Result<GmlState> {
    let (mu, tau) = sample_niw(&cfg.prior, rng)?;
    let base = MvnFactor::new(mu.clone(), &tau)?;
    let betas: Vec<DVector<f64>> = (0..n).map(|_| base.sample(rng)).collect();
    Ok(GmlState { betas, mu, tau })
}

/// One sweep: a Metropolis move per coefficient against likelihood times the
/// shared normal density, then the conjugate draw of the normal parameters
/// from all coefficients.
pub fn gml_sweep<D: IndividualLikelihood>(
    state: &mut GmlState,
    data: &D,
    cfg: &RunConfig,
    mh_scale: f64,
    rng: &mut RngStream,
) -> Result<SweepStats> {
    let base = MvnFactor::new(state.mu.clone(), &state.tau)?;
    let prop = proposal_covariance(&state.tau);
    let mh_cfg = MhConfig { proposal_scale: mh_scale, ..cfg.mh.clone() };
    let mut stats = SweepStats::default();
    for i in 0..data.n() {
        let target = |beta: &DVector<f64>| data.log_likelihood(i, beta) + base.log_density(beta);
        let out = mh_update(&state.betas[i], target, &prop, &mh_cfg, rng)?;
        state.betas[i] = out.state;
        stats.accepted += out.accepted;
        stats.attempted += out.steps;
    }
    let (mu, tau) = draw_theta_posterior(&cfg.prior, &state.betas, rng)?;
    state.mu = mu;
    state.tau = tau;
    Ok(stats)
}

/// Per-iteration summary: Monte Carlo choice probabilities at each evaluation
/// point under the current normal.
fn record_gml_summaries(
    state: &GmlState,
    cfg: &RunConfig,
    sweep_index: usize,
    trace: &mut Trace<GmlState>,
) -> Result<()> {
    for (p_idx, x) in cfg.eval_points.iter().enumerate() {
        let mut mc_rng = RngStream::from_seed(cfg.seed)
            .substream(PREDICTIVE_STREAM_BASE + sweep_index as u64);
        let base = MvnFactor::new(state.mu.clone(), &state.tau)?;
        let j = x.n_alternatives();
        let mut acc = vec![0.0; j];
        for _ in 0..cfg.predictive_draws {
            let beta = base.sample(&mut mc_rng);
            let p = mnl_prob(x, &beta)?;
            for (a, v) in acc.iter_mut().zip(p.as_slice()) {
                *a += v;
            }
        }
        let s: f64 = acc.iter().sum();
        for a in acc.iter_mut() {
            *a /= s;
        }
        trace.plugin[p_idx].push(Simplex::new(acc)?);
    }
    Ok(())
}

/// Runs the baseline sampler with the shared run protocol: prior
/// initialization, adaptive burn-in, then recording every `thin`-th sweep.
/// The truncation level in `cfg` is ignored. Identical inputs reproduce the
/// trace exactly.
pub fn run_gml_chain<D: IndividualLikelihood>(
    data: &D,
    cfg: &RunConfig,
) -> Result<Trace<GmlState>> {
    cfg.validate(data.n_alternatives(), data.n_covariates())?;
    if cfg.predictive_draws == 0 {
        return Err(Error::InvalidArgument("need at least one predictive draw".into()));
    }
    let mut rng = RngStream::from_seed(cfg.seed);
    let mut state = init_gml_state(data.n(), cfg, &mut rng)?;
    let mut scale = cfg.mh.proposal_scale;

    for _ in 0..cfg.burnin {
        let stats = gml_sweep(&mut state, data, cfg, scale, &mut rng)?;
        if cfg.mh.adapt && stats.attempted > 0 {
            scale = adapt_scale(scale, stats.rate(), &cfg.mh);
        }
    }

    let mut trace = Trace::empty(cfg.eval_points.clone(), false);
    if cfg.store_states {
        trace.states = Some(Vec::with_capacity(cfg.iterations / cfg.thin));
    }
    for m in 1..=cfg.iterations {
        let stats = gml_sweep(&mut state, data, cfg, scale, &mut rng)?;
        trace.accepted += stats.accepted as u64;
        trace.attempted += stats.attempted as u64;
        if m % cfg.thin == 0 {
            record_gml_summaries(&state, cfg, m, &mut trace)?;
            if let Some(states) = trace.states.as_mut() {
                states.push(state.clone());
            }
        }
    }
    Ok(trace)
}
