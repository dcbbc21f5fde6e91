//! Blocked Gibbs sampler for the cross-sectional model: a Dirichlet-process
//! mixture of multinomial logits, truncated at `N` atoms.
//!
//! Each sweep runs four steps. Individuals are reassigned to atoms by weighted
//! likelihood (step 1), the sticks are refreshed from their Beta conditionals
//! (step 2), unoccupied atoms are redrawn from the base measure while occupied
//! atoms move by random-walk Metropolis against their members' likelihood
//! (step 3), and the base-measure parameters are drawn from the conjugate
//! update over the distinct occupied atoms (step 4).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metropolis::{adapt_scale, mh_update, proposal_covariance, MhConfig};
use crate::model::{
    log_choice_prob_unchecked, mnl_prob, ChoiceDataset, CovariateMatrix, Observation, Simplex,
};
use crate::rng::{sample_niw, MvnFactor, RngStream};
use crate::stick::{
    sample_posterior_sticks, sample_prior_sticks, weights_from_sticks, ClusterCounts, StickVector,
};
use crate::conjugacy::draw_theta_posterior;
use crate::trace::Trace;

/// Stream id offset for the per-iteration predictive Monte Carlo draws, so
/// they never touch the chain's own stream.
const PREDICTIVE_STREAM_BASE: u64 = 1 << 32;

/// Full state of the cross-sectional sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsStateNp {
    /// Atom index of each individual, zero-based.
    pub assignments: Vec<usize>,
    pub sticks: StickVector,
    /// The `N` atom coefficient vectors.
    pub atoms: Vec<DVector<f64>>,
    /// Base-measure mean.
    pub mu: DVector<f64>,
    /// Base-measure covariance.
    pub tau: DMatrix<f64>,
}

impl GibbsStateNp {
    /// Stick-breaking weights of the current sticks.
    pub fn weights(&self) -> Vec<f64> {
        weights_from_sticks(&self.sticks)
    }

    /// Coefficient vector currently attached to individual `i`.
    pub fn beta_of(&self, i: usize) -> &DVector<f64> {
        &self.atoms[self.assignments[i]]
    }
}

/// Accept/attempt counts of one sweep's Metropolis moves.
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepStats {
    pub accepted: usize,
    pub attempted: usize,
}

impl SweepStats {
    pub fn rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }
}

/// Draws an initial state from the prior: base parameters from the
/// normal-inverse-Wishart, sticks from their Beta prior, atoms i.i.d. from the
/// base measure, assignments uniform over atoms.
pub fn init_state(
    n: usize,
    cfg: &RunConfig,
    rng: &mut RngStream,
) -> Result<GibbsStateNp> {
    let (mu, tau) = sample_niw(&cfg.prior, rng)?;
    let sticks = sample_prior_sticks(cfg.n_atoms, cfg.dp_mass, rng)?;
    let base = MvnFactor::new(mu.clone(), &tau)?;
    let atoms: Vec<DVector<f64>> = (0..cfg.n_atoms).map(|_| base.sample(rng)).collect();
    let assignments: Vec<usize> = (0..n)
        .map(|_| rng.uniform(0.0, cfg.n_atoms as f64) as usize)
        .collect();
    Ok(GibbsStateNp { assignments, sticks, atoms, mu, tau })
}

/// Classification probabilities of one observation across atoms:
/// `w_k` proportional to `p_k * L(y | x, z_k)`, computed in the log domain.
/// Atoms with zero prior weight get exactly zero posterior weight.
pub fn classification_weights(
    weights: &[f64],
    atoms: &[DVector<f64>],
    obs: &Observation,
) -> Result<Vec<f64>> {
    if weights.len() != atoms.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} atoms",
            weights.len(),
            atoms.len()
        )));
    }
    let d = obs.x.n_covariates();
    if atoms.iter().any(|z| z.len() != d) {
        return Err(Error::DimensionMismatch("atom dimension".into()));
    }
    let mut lw = vec![f64::NEG_INFINITY; weights.len()];
    let mut max = f64::NEG_INFINITY;
    for (k, (w, z)) in weights.iter().zip(atoms).enumerate() {
        if *w > 0.0 {
            let v = w.ln() + log_choice_prob_unchecked(&obs.x, obs.choice, z);
            lw[k] = v;
            if v > max {
                max = v;
            }
        }
    }
    if !max.is_finite() {
        return Err(Error::InvalidArgument("all classification weights vanish".into()));
    }
    let mut sum = 0.0;
    for v in lw.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in lw.iter_mut() {
        *v /= sum;
    }
    Ok(lw)
}

/// One full sweep of the four-step blocked update. `mh_scale` is the current
/// (possibly adapted) proposal scale.
pub fn gibbs_sweep(
    state: &mut GibbsStateNp,
    data: &ChoiceDataset,
    cfg: &RunConfig,
    mh_scale: f64,
    rng: &mut RngStream,
) -> Result<SweepStats> {
    let n_atoms = cfg.n_atoms;

    // Step 1: reassign individuals.
    let weights = state.weights();
    let log_w: Vec<f64> = weights
        .iter()
        .map(|w| if *w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut scratch = vec![0.0; n_atoms];
    for (i, obs) in data.observations().iter().enumerate() {
        let mut max = f64::NEG_INFINITY;
        for k in 0..n_atoms {
            let v = if log_w[k].is_finite() {
                log_w[k] + log_choice_prob_unchecked(&obs.x, obs.choice, &state.atoms[k])
            } else {
                f64::NEG_INFINITY
            };
            scratch[k] = v;
            if v > max {
                max = v;
            }
        }
        let mut total = 0.0;
        for v in scratch.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        let u = rng.uniform(0.0, 1.0) * total;
        let mut acc = 0.0;
        let mut pick = n_atoms - 1;
        for (k, v) in scratch.iter().enumerate() {
            acc += v;
            if u < acc {
                pick = k;
                break;
            }
        }
        state.assignments[i] = pick;
    }
    let counts = ClusterCounts::from_assignments(&state.assignments, n_atoms)?;

    // Step 2: refresh sticks from their Beta conditionals.
    state.sticks = sample_posterior_sticks(&counts, cfg.dp_mass, rng)?;

    // Step 3: redraw unoccupied atoms from the base measure; move occupied
    // atoms by Metropolis against base density times member likelihood.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_atoms];
    for (i, &k) in state.assignments.iter().enumerate() {
        members[k].push(i);
    }
    let base = MvnFactor::new(state.mu.clone(), &state.tau)?;
    let prop_cov = proposal_covariance(&state.tau);
    let mh_cfg = MhConfig { proposal_scale: mh_scale, ..cfg.mh.clone() };
    let mut stats = SweepStats::default();
    for k in 0..n_atoms {
        if members[k].is_empty() {
            state.atoms[k] = base.sample(rng);
        } else {
            let obs = data.observations();
            let member_ids = &members[k];
            let target = |beta: &DVector<f64>| {
                let mut lt = base.log_density(beta);
                for &i in member_ids {
                    lt += log_choice_prob_unchecked(&obs[i].x, obs[i].choice, beta);
                }
                lt
            };
            let out = mh_update(&state.atoms[k], target, &prop_cov, &mh_cfg, rng)?;
            state.atoms[k] = out.state;
            stats.accepted += out.accepted;
            stats.attempted += out.steps;
        }
    }

    // Step 4: conjugate update of the base parameters over the distinct
    // occupied atoms.
    let occupied: Vec<DVector<f64>> = counts
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(k, _)| state.atoms[k].clone())
        .collect();
    let (mu, tau) = draw_theta_posterior(&cfg.prior, &occupied, rng)?;
    state.mu = mu;
    state.tau = tau;

    Ok(stats)
}

/// Monte Carlo settings for predictive choice-probability estimates.
#[derive(Debug, Clone)]
pub struct McSettings {
    pub draws: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        // Fixed sub-seed so the estimate is a deterministic function of its
        // arguments.
        Self { draws: 10_000, seed: 0x9E37_79B9_7F4A_7C15 }
    }
}

/// Choice probabilities under the base measure `MVN(mu, tau)`, by Monte Carlo
/// integration of the logit kernel.
pub fn base_choice_prob(
    mu: &DVector<f64>,
    tau: &DMatrix<f64>,
    x: &CovariateMatrix,
    mc: &McSettings,
) -> Result<Simplex> {
    if mc.draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let base = MvnFactor::new(mu.clone(), tau)?;
    let mut rng = RngStream::from_seed(mc.seed);
    let j = x.n_alternatives();
    let mut acc = vec![0.0; j];
    for _ in 0..mc.draws {
        let beta = base.sample(&mut rng);
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

/// Combines a base-measure guess with individual-level logit probabilities by
/// the posterior-predictive rule: weight `a/(a+n)` on the guess and `1/(a+n)`
/// on each individual.
pub fn combine_prediction(
    base_guess: &Simplex,
    individual: &[Simplex],
    dp_mass: f64,
) -> Result<Simplex> {
    if !(dp_mass > 0.0) {
        return Err(Error::InvalidArgument("total mass must be positive".into()));
    }
    let n = individual.len();
    let j = base_guess.len();
    let denom = dp_mass + n as f64;
    let mut acc: Vec<f64> = base_guess.as_slice().iter().map(|v| v * dp_mass / denom).collect();
    for s in individual {
        if s.len() != j {
            return Err(Error::DimensionMismatch("simplex lengths differ".into()));
        }
        for (a, v) in acc.iter_mut().zip(s.as_slice()) {
            *a += v / denom;
        }
    }
    Simplex::new(acc)
}

/// Posterior-predictive estimate of the choice probabilities at `x` given the
/// base parameters and the individuals' coefficient vectors:
///
/// `a/(a+n) * P(. | base, x) + sum_i 1/(a+n) * logit(x, beta_i)`.
///
/// The base-measure term is integrated by Monte Carlo with `mc.draws` draws
/// from a stream seeded by `mc.seed`, so the value is deterministic in its
/// arguments.
pub fn predictive_estimate(
    mu: &DVector<f64>,
    tau: &DMatrix<f64>,
    betas: &[DVector<f64>],
    x: &CovariateMatrix,
    dp_mass: f64,
    mc: &McSettings,
) -> Result<Simplex> {
    let guess = base_choice_prob(mu, tau, x, mc)?;
    let individual: Vec<Simplex> = betas
        .iter()
        .map(|b| mnl_prob(x, b))
        .collect::<Result<_>>()?;
    combine_prediction(&guess, &individual, dp_mass)
}

/// Per-iteration summary at each evaluation point: the plug-in mixture
/// probability and the posterior-predictive estimate. Individuals are grouped
/// by atom, so the logit kernel is evaluated once per atom.
fn record_summaries(
    state: &GibbsStateNp,
    n: usize,
    counts: &[usize],
    cfg: &RunConfig,
    sweep_index: usize,
    trace: &mut Trace<GibbsStateNp>,
) -> Result<()> {
    let weights = state.weights();
    let mc = McSettings {
        draws: cfg.predictive_draws,
        seed: cfg.seed,
    };
    let denom = cfg.dp_mass + n as f64;
    for (p_idx, x) in cfg.eval_points.iter().enumerate() {
        let j = x.n_alternatives();
        let mut plugin = vec![0.0; j];
        let mut individual = vec![0.0; j];
        for (k, z) in state.atoms.iter().enumerate() {
            if weights[k] == 0.0 && counts[k] == 0 {
                continue;
            }
            let probs = mnl_prob(x, z)?;
            for alt in 0..j {
                plugin[alt] += weights[k] * probs[alt];
                individual[alt] += counts[k] as f64 * probs[alt];
            }
        }
        let total: f64 = plugin.iter().sum();
        for v in plugin.iter_mut() {
            *v /= total;
        }
        trace.plugin[p_idx].push(Simplex::new(plugin)?);

        // Base-measure term from a dedicated sub-stream per retained sweep.
        let mut mc_rng = RngStream::from_seed(mc.seed)
            .substream(PREDICTIVE_STREAM_BASE + sweep_index as u64);
        let base = MvnFactor::new(state.mu.clone(), &state.tau)?;
        let mut guess = vec![0.0; j];
        for _ in 0..mc.draws {
            let beta = base.sample(&mut mc_rng);
            let p = mnl_prob(x, &beta)?;
            for (g, v) in guess.iter_mut().zip(p.as_slice()) {
                *g += v;
            }
        }
        let gt: f64 = guess.iter().sum();
        let mut pred = vec![0.0; j];
        for alt in 0..j {
            pred[alt] = (cfg.dp_mass / denom) * (guess[alt] / gt) + individual[alt] / denom;
        }
        let pt: f64 = pred.iter().sum();
        for v in pred.iter_mut() {
            *v /= pt;
        }
        trace.predictive[p_idx].push(Simplex::new(pred)?);
    }
    Ok(())
}

/// Runs the cross-sectional sampler: prior initialization, `burnin` adaptive
/// sweeps, then `iterations` sweeps at frozen scale with every `thin`-th
/// recorded. Identical inputs reproduce the trace exactly.
pub fn run_chain(data: &ChoiceDataset, cfg: &RunConfig) -> Result<Trace<GibbsStateNp>> {
    cfg.validate(data.n_alternatives(), data.n_covariates())?;
    let mut rng = RngStream::from_seed(cfg.seed);
    let mut state = init_state(data.n(), cfg, &mut rng)?;
    let mut scale = cfg.mh.proposal_scale;

    for _ in 0..cfg.burnin {
        let stats = gibbs_sweep(&mut state, data, cfg, scale, &mut rng)?;
        if cfg.mh.adapt && stats.attempted > 0 {
            scale = adapt_scale(scale, stats.rate(), &cfg.mh);
        }
    }

    let mut trace = Trace::empty(cfg.eval_points.clone(), true);
    if cfg.store_states {
        trace.states = Some(Vec::with_capacity(cfg.iterations / cfg.thin));
    }
    for m in 1..=cfg.iterations {
        let stats = gibbs_sweep(&mut state, data, cfg, scale, &mut rng)?;
        trace.accepted += stats.accepted as u64;
        trace.attempted += stats.attempted as u64;
        if m % cfg.thin == 0 {
            let counts = ClusterCounts::from_assignments(&state.assignments, cfg.n_atoms)?;
            record_summaries(&state, data.n(), counts.counts(), cfg, m, &mut trace)?;
            if let Some(states) = trace.states.as_mut() {
                states.push(state.clone());
            }
        }
    }
    Ok(trace)
}
