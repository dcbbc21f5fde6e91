//! Blocked Gibbs sampler for panel data. Clusters live on normal parameter
//! pairs (mean, covariance) drawn from the truncated stick-breaking prior,
//! and each individual keeps a distinct coefficient vector drawn from its
//! cluster's normal.
//!
//! Each sweep reassigns individuals by weighted normal density (step 1),
//! refreshes the sticks (step 2), redraws every atom, unoccupied from the
//! normal-inverse-Wishart prior and occupied from its conjugate posterior
//! over member coefficients (step 3), then moves each coefficient vector by
//! random-walk Metropolis against its panel likelihood times the cluster
//! normal density (step 4).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::conjugacy::niw_posterior;
use crate::error::{Error, Result};
use crate::gibbs::SweepStats;
use crate::metropolis::{adapt_scale, mh_update, proposal_covariance, MhConfig};
use crate::model::{mnl_prob, panel_log_likelihood, CovariateMatrix, PanelDataset, Simplex};
use crate::rng::{sample_mvn, sample_niw, MvnFactor, NiwParams, RngStream};
use crate::stick::{
    sample_posterior_sticks, sample_prior_sticks, weights_from_sticks, ClusterCounts, StickVector,
};
use crate::trace::Trace;

/// Stream id offset for per-iteration summary Monte Carlo, matching the
/// cross-sectional sampler's layout.
const PREDICTIVE_STREAM_BASE: u64 = 1 << 32;

/// One mixture component: a normal's mean and covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalAtom {
    pub mu: DVector<f64>,
    pub tau: nalgebra::DMatrix<f64>,
}

/// Full state of the panel sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsStatePanel {
    /// Atom index of each individual, zero-based.
    pub assignments: Vec<usize>,
    pub sticks: StickVector,
    pub atoms: Vec<NormalAtom>,
    /// Per-individual coefficient vectors, kept distinct.
    pub betas: Vec<DVector<f64>>,
}

impl GibbsStatePanel {
    /// Stick-breaking weights of the current sticks.
    pub fn weights(&self) -> Vec<f64> {
        weights_from_sticks(&self.sticks)
    }

    /// Normal parameters currently attached to individual `i`.
    pub fn atom_of(&self, i: usize) -> &NormalAtom {
        &self.atoms[self.assignments[i]]
    }
}

/// Classification probabilities of one coefficient vector across atoms:
/// `w_k` proportional to `p_k * phi(beta | mu_k, tau_k)`, computed in the log
/// domain and normalized to sum to one. Atoms with zero weight get exactly
/// zero probability.
pub fn classification_weights_panel(
    weights: &[f64],
    atoms: &[NormalAtom],
    beta: &DVector<f64>,
) -> Result<Vec<f64>> {
    if weights.len() != atoms.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} atoms",
            weights.len(),
            atoms.len()
        )));
    }
    let mut lw = vec![f64::NEG_INFINITY; weights.len()];
    let mut max = f64::NEG_INFINITY;
    for (k, (w, z)) in weights.iter().zip(atoms).enumerate() {
        if *w > 0.0 {
            let factor = MvnFactor::new(z.mu.clone(), &z.tau)?;
            let v = w.ln() + factor.log_density(beta);
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

/// Redraws every atom given the current assignments and coefficients:
/// unoccupied atoms from the prior, occupied atoms from the conjugate
/// posterior over exactly their member coefficients.
pub fn refresh_cluster_atoms(
    assignments: &[usize],
    betas: &[DVector<f64>],
    n_atoms: usize,
    prior: &NiwParams,
    rng: &mut RngStream,
) -> Result<Vec<NormalAtom>> {
    if assignments.len() != betas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments vs {} coefficient vectors",
            assignments.len(),
            betas.len()
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_atoms];
    for (i, &k) in assignments.iter().enumerate() {
        if k >= n_atoms {
            return Err(Error::InvalidArgument(format!(
                "assignment {k} out of range for {n_atoms} atoms"
            )));
        }
        members[k].push(i);
    }
    let mut atoms = Vec::with_capacity(n_atoms);
    for ids in &members {
        let (mu, tau) = if ids.is_empty() {
            sample_niw(prior, rng)?
        } else {
            let data: Vec<DVector<f64>> = ids.iter().map(|&i| betas[i].clone()).collect();
            let post = niw_posterior(prior, &data)?;
            sample_niw(&post, rng)?
        };
        atoms.push(NormalAtom { mu, tau });
    }
    Ok(atoms)
}

/// Draws an initial state from the prior: sticks from their Beta prior, atoms
/// i.i.d. from the normal-inverse-Wishart, each coefficient vector from its
/// own fresh prior-predictive draw, assignments uniform.
pub fn init_state_panel(n: usize, cfg: &RunConfig, rng: &mut RngStream) -> Result<GibbsStatePanel> {
    let sticks = sample_prior_sticks(cfg.n_atoms, cfg.dp_mass, rng)?;
    let mut atoms = Vec::with_capacity(cfg.n_atoms);
    for _ in 0..cfg.n_atoms {
        let (mu, tau) = sample_niw(&cfg.prior, rng)?;
        atoms.push(NormalAtom { mu, tau });
    }
    let mut betas = Vec::with_capacity(n);
    for _ in 0..n {
        let (mu, tau) = sample_niw(&cfg.prior, rng)?;
        betas.push(sample_mvn(&mu, &tau, rng)?);
    }
    let assignments: Vec<usize> = (0..n)
        .map(|_| rng.uniform(0.0, cfg.n_atoms as f64) as usize)
        .collect();
    Ok(GibbsStatePanel { assignments, sticks, atoms, betas })
}

/// One full sweep of the four-step panel update. `mh_scale` is the current
/// (possibly adapted) proposal scale for the coefficient moves.
pub fn gibbs_sweep_panel(
    state: &mut GibbsStatePanel,
    data: &PanelDataset,
    cfg: &RunConfig,
    mh_scale: f64,
    rng: &mut RngStream,
) -> Result<SweepStats> {
    let n = data.n();
    let n_atoms = cfg.n_atoms;

    // Step 1: reassign individuals by cluster density of their coefficients.
    let weights = state.weights();
    let log_w: Vec<f64> = weights
        .iter()
        .map(|w| if *w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
        .collect();
    let factors: Vec<MvnFactor> = state
        .atoms
        .iter()
        .map(|z| MvnFactor::new(z.mu.clone(), &z.tau))
        .collect::<Result<_>>()?;
    let mut scratch = vec![0.0; n_atoms];
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for k in 0..n_atoms {
            let v = if log_w[k].is_finite() {
                log_w[k] + factors[k].log_density(&state.betas[i])
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

    // Step 3: redraw all atoms, conjugately where occupied.
    state.atoms =
        refresh_cluster_atoms(&state.assignments, &state.betas, n_atoms, &cfg.prior, rng)?;

    // Step 4: refresh each coefficient vector by Metropolis against its panel
    // likelihood times its cluster's normal density.
    let mh_cfg = MhConfig { proposal_scale: mh_scale, ..cfg.mh.clone() };
    let mut cluster_factor: Vec<Option<(MvnFactor, nalgebra::DMatrix<f64>)>> =
        vec![None; n_atoms];
    for k in 0..n_atoms {
        if counts.counts()[k] > 0 {
            let z = &state.atoms[k];
            cluster_factor[k] =
                Some((MvnFactor::new(z.mu.clone(), &z.tau)?, proposal_covariance(&z.tau)));
        }
    }
    let mut stats = SweepStats::default();
    for i in 0..n {
        let k = state.assignments[i];
        let (factor, prop) = cluster_factor[k].as_ref().expect("occupied cluster");
        let obs = &data.individuals()[i];
        let target = |beta: &DVector<f64>| match panel_log_likelihood(obs, beta) {
            Ok(ll) => ll + factor.log_density(beta),
            Err(_) => f64::NEG_INFINITY,
        };
        let out = mh_update(&state.betas[i], target, prop, &mh_cfg, rng)?;
        state.betas[i] = out.state;
        stats.accepted += out.accepted;
        stats.attempted += out.steps;
    }
    Ok(stats)
}

/// Choice probabilities at `x` under a mixture of normals over coefficients,
/// by Monte Carlo: component by weight, coefficient from its normal, logit
/// averaged. Weights need not be normalized.
pub fn mixture_normal_choice_prob(
    weights: &[f64],
    atoms: &[NormalAtom],
    x: &CovariateMatrix,
    draws: usize,
    rng: &mut RngStream,
) -> Result<Simplex> {
    if weights.len() != atoms.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} atoms",
            weights.len(),
            atoms.len()
        )));
    }
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be nonnegative with positive sum".into()));
    }
    let factors: Vec<Option<MvnFactor>> = atoms
        .iter()
        .zip(weights)
        .map(|(z, w)| {
            if *w > 0.0 {
                MvnFactor::new(z.mu.clone(), &z.tau).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let j = x.n_alternatives();
    let mut acc = vec![0.0; j];
    for _ in 0..draws {
        let u = rng.uniform(0.0, 1.0) * total;
        let mut cum = 0.0;
        let mut pick = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            cum += w;
            if u < cum {
                pick = k;
                break;
            }
        }
        let factor = factors[pick].as_ref().expect("positive-weight component");
        let beta = factor.sample(rng);
        let p = mnl_prob(x, &beta)?;
        for (a, v) in acc.iter_mut().zip(p.as_slice()) {
            *a += v;
        }
    }
    let s: f64 = acc.iter().sum();
    for a in acc.iter_mut() {
        *a /= s;
    }
    Simplex::new(acc)
}

/// Choice probabilities at `x` under the prior predictive: normal parameters
/// from the normal-inverse-Wishart, a coefficient from that normal, logit
/// averaged over `draws` repetitions.
pub fn prior_predictive_choice_prob(
    prior: &NiwParams,
    x: &CovariateMatrix,
    draws: usize,
    rng: &mut RngStream,
) -> Result<Simplex> {
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let j = x.n_alternatives();
    let mut acc = vec![0.0; j];
    for _ in 0..draws {
        let (mu, tau) = sample_niw(prior, rng)?;
        let beta = sample_mvn(&mu, &tau, rng)?;
        let p = mnl_prob(x, &beta)?;
        for (a, v) in acc.iter_mut().zip(p.as_slice()) {
            *a += v;
        }
    }
    let s: f64 = acc.iter().sum();
    for a in acc.iter_mut() {
        *a /= s;
    }
    Simplex::new(acc)
}

/// Per-iteration summaries: the plug-in Monte Carlo estimate over the current
/// weighted mixture of normals, and the posterior-predictive combination of
/// the prior guess with the occupied clusters weighted by their counts.
fn record_summaries_panel(
    state: &GibbsStatePanel,
    n: usize,
    counts: &[usize],
    cfg: &RunConfig,
    sweep_index: usize,
    trace: &mut Trace<GibbsStatePanel>,
) -> Result<()> {
    let weights = state.weights();
    let count_weights: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let denom = cfg.dp_mass + n as f64;
    for (p_idx, x) in cfg.eval_points.iter().enumerate() {
        let mut mc_rng = RngStream::from_seed(cfg.seed)
            .substream(PREDICTIVE_STREAM_BASE + sweep_index as u64);
        let plugin =
            mixture_normal_choice_prob(&weights, &state.atoms, x, cfg.predictive_draws, &mut mc_rng)?;
        let guess = prior_predictive_choice_prob(&cfg.prior, x, cfg.predictive_draws, &mut mc_rng)?;
        let pred = if n == 0 {
            guess
        } else {
            let occupied = mixture_normal_choice_prob(
                &count_weights,
                &state.atoms,
                x,
                cfg.predictive_draws,
                &mut mc_rng,
            )?;
            let j = x.n_alternatives();
            let mut v = vec![0.0; j];
            for alt in 0..j {
                v[alt] = (cfg.dp_mass * guess[alt] + n as f64 * occupied[alt]) / denom;
            }
            let s: f64 = v.iter().sum();
            for e in v.iter_mut() {
                *e /= s;
            }
            Simplex::new(v)?
        };
        trace.plugin[p_idx].push(plugin);
        trace.predictive[p_idx].push(pred);
    }
    Ok(())
}

/// Runs the panel sampler: prior initialization, `burnin` adaptive sweeps,
/// then `iterations` sweeps at frozen scale with every `thin`-th recorded.
/// Identical inputs reproduce the trace exactly.
pub fn run_chain_panel(data: &PanelDataset, cfg: &RunConfig) -> Result<Trace<GibbsStatePanel>> {
    cfg.validate(data.n_alternatives(), data.n_covariates())?;
    let mut rng = RngStream::from_seed(cfg.seed);
    let mut state = init_state_panel(data.n(), cfg, &mut rng)?;
    let mut scale = cfg.mh.proposal_scale;

    for _ in 0..cfg.burnin {
        let stats = gibbs_sweep_panel(&mut state, data, cfg, scale, &mut rng)?;
        if cfg.mh.adapt && stats.attempted > 0 {
            scale = adapt_scale(scale, stats.rate(), &cfg.mh);
        }
    }

    let mut trace = Trace::empty(cfg.eval_points.clone(), true);
    if cfg.store_states {
        trace.states = Some(Vec::with_capacity(cfg.iterations / cfg.thin));
    }
    for m in 1..=cfg.iterations {
        let stats = gibbs_sweep_panel(&mut state, data, cfg, scale, &mut rng)?;
        trace.accepted += stats.accepted as u64;
        trace.attempted += stats.attempted as u64;
        if m % cfg.thin == 0 {
            let counts = ClusterCounts::from_assignments(&state.assignments, cfg.n_atoms)?;
            record_summaries_panel(&state, data.n(), counts.counts(), cfg, m, &mut trace)?;
            if let Some(states) = trace.states.as_mut() {
                states.push(state.clone());
            }
        }
    }
    Ok(trace)
}
