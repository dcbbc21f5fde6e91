//! Acceptance gate: eleven end-to-end checks, one printed line each. The
//! expensive stages share fits where two checks are defined over the same
//! runs, and every stage is fully seeded, so the outcome is reproducible.

use mixlogit::conjugacy::niw_posterior;
use mixlogit::diagnostics::tail_moment_check;
use mixlogit::gibbs::run_chain;
use mixlogit::gibbs_panel::{mixture_normal_choice_prob, run_chain_panel, NormalAtom};
use mixlogit::gml::run_gml_chain;
use mixlogit::io::{build_summary, write_trace_csv};
use mixlogit::model::{
    mixture_choice_prob, mnl_prob, ChoiceDataset, CovariateMatrix, MixingDistribution,
    PanelDataset, Simplex,
};
use mixlogit::reproduce::{
    fit_gml_study, fit_nonpanel_study, fit_panel_study, median, study_config, table2,
    table3_lite, truth_nonpanel, x_star, Budget, FitReport, Scale,
};
use mixlogit::rng::{sample_niw, MvnFactor, NiwParams, RngStream};
use mixlogit::simulate::{simulate_choice, simulate_nonpanel, simulate_panel};
use mixlogit::stick::{sample_prior_sticks, truncation_error_bound, weights_from_sticks};
use mixlogit::trace::Trace;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use std::time::Instant;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn run_check(
    name: &'static str,
    f: impl FnOnce() -> mixlogit::Result<(bool, String)>,
) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("errored: {e}")),
    };
    let tag = if passed { "pass" } else { "FAIL" };
    println!("[{tag}] {name} ({:.1}s): {detail}", start.elapsed().as_secs_f64());
    Outcome { name, passed, detail }
}

fn fmt3(v: &[f64]) -> String {
    format!("({:.4}, {:.4}, {:.4})", v[0], v[1], v[2])
}

fn strictly_decreasing(vals: &[f64]) -> bool {
    vals.windows(2).all(|w| w[1] < w[0])
}

/// Per-component median across seed replicates.
fn component_medians(fits: &[FitReport]) -> Vec<f64> {
    (0..fits[0].est.len())
        .map(|j| {
            let mut vals: Vec<f64> = fits.iter().map(|r| r.est[j]).collect();
            median(&mut vals)
        })
        .collect()
}

fn median_rms(fits: &[FitReport]) -> f64 {
    let mut vals: Vec<f64> = fits.iter().map(|r| r.rms).collect();
    median(&mut vals)
}

fn check_truth_oracle() -> mixlogit::Result<(bool, String)> {
    let truth = truth_nonpanel();
    let want = [0.4980, 0.0167, 0.4853];
    let max_dev = truth
        .as_slice()
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((
        max_dev < 5e-5,
        format!("{}, max deviation from the reference column {max_dev:.1e}", fmt3(truth.as_slice())),
    ))
}

fn check_logit_frequencies() -> mixlogit::Result<(bool, String)> {
    let x = CovariateMatrix::from_row_major(3, 2, &[0.8, -1.2, 0.0, 0.4, -0.6, 1.0])?;
    let beta = DVector::from_vec(vec![0.7, -0.3]);
    let p = mnl_prob(&x, &beta)?;
    let n = 1_000_000usize;
    let mut rng = RngStream::from_seed(71);
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[simulate_choice(&x, &beta, &mut rng)] += 1;
    }
    let mut worst_z: f64 = 0.0;
    for (j, pj) in p.as_slice().iter().enumerate() {
        let freq = counts[j] as f64 / n as f64;
        let se = (pj * (1.0 - pj) / n as f64).sqrt();
        worst_z = worst_z.max((freq - pj).abs() / se);
    }
    Ok((
        worst_z <= 3.0,
        format!("10^6 simulated choices, worst component |z| {worst_z:.2}"),
    ))
}

fn check_study_nonpanel(fits: &[FitReport]) -> mixlogit::Result<(bool, String)> {
    let truth = truth_nonpanel();
    let med_est = component_medians(fits);
    let max_dev = med_est
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let med_rms = median_rms(fits);
    Ok((
        max_dev <= 0.05 && med_rms < 0.05,
        format!(
            "median estimate {} over {} seeds, max deviation {max_dev:.4}, median RMS {med_rms:.4}",
            fmt3(&med_est),
            fits.len()
        ),
    ))
}

fn check_misspecification_gap(
    mmnl: &[FitReport],
    gml: &[FitReport],
) -> mixlogit::Result<(bool, String)> {
    let med_mmnl = median_rms(mmnl);
    let med_gml = median_rms(gml);
    let ratio = med_gml / med_mmnl;
    let per_seed: Vec<String> = mmnl
        .iter()
        .zip(gml)
        .map(|(m, g)| format!("{:.2}", g.rms / m.rms))
        .collect();
    let passed = ratio >= 3.0;
    let mut detail = format!(
        "gaussian median RMS {med_gml:.4} vs nonparametric {med_mmnl:.4}, ratio {ratio:.2} (per seed {}), required >= 3",
        per_seed.join(", ")
    );
    if !passed {
        detail.push_str(
            "; the gaussian chain escapes to a zero-mean anti-correlated covariance whose \
             choice probabilities mimic the two-point truth, so the gap stays near 2x",
        );
    }
    Ok((passed, detail))
}

fn check_study_panel() -> mixlogit::Result<(bool, String)> {
    let budget = Budget::table1(Scale::Desk);
    let mut fits = Vec::new();
    for s in [11u64, 12, 13] {
        fits.push(fit_panel_study(100, 10, s, s + 303, budget)?);
    }
    let want = [0.4939, 0.0279, 0.4782];
    let med_est = component_medians(&fits);
    let max_dev = med_est
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let med_rms = median_rms(&fits);
    Ok((
        max_dev <= 0.06 && med_rms < 0.06,
        format!(
            "median estimate {} over 3 seeds, max deviation {max_dev:.4}, median RMS {med_rms:.4}",
            fmt3(&med_est)
        ),
    ))
}

fn check_rms_trend() -> mixlogit::Result<(bool, String)> {
    let t = table2(Scale::Desk, &[11, 12, 13])?;
    let np: Vec<f64> = t.nonpanel.iter().map(|c| c.median).collect();
    let pn: Vec<f64> = t.panel.iter().map(|c| c.median).collect();
    Ok((
        strictly_decreasing(&np) && strictly_decreasing(&pn),
        format!(
            "cross-sectional median RMS {} for n=50/100/500, panel {} for n=10/50/100",
            fmt3(&np),
            fmt3(&pn)
        ),
    ))
}

fn check_grid_trend() -> mixlogit::Result<(bool, String)> {
    let cells = table3_lite(Scale::Desk, 10, 11)?;
    let meds: Vec<f64> = cells.iter().map(|c| c.median).collect();
    let first = cells.first().expect("three cells");
    let last = cells.last().expect("three cells");
    let separated = first.q1 > last.q3;
    Ok((
        strictly_decreasing(&meds) && separated,
        format!(
            "median grid L1 {} for n=100/500/1000 over 10 replicates; smallest-n lower quartile {:.4} vs largest-n upper quartile {:.4}",
            fmt3(&meds),
            first.q1,
            last.q3
        ),
    ))
}

/// Mean, variance, and their standard errors for one scalar series.
fn series_stats(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se_mean = (var / n).sqrt();
    let se_var = ((m4 - var * var).max(0.0) / n).sqrt();
    (mean, var, se_mean, se_var)
}

fn worst_moment_gap(
    label: &str,
    chain: &[Vec<Simplex>],
    direct: &[Vec<Simplex>],
    worst: &mut f64,
    worst_at: &mut String,
) {
    for (p_idx, (cp, dp)) in chain.iter().zip(direct).enumerate() {
        for j in 0..3 {
            let cs: Vec<f64> = cp.iter().map(|s| s.as_slice()[j]).collect();
            let ds: Vec<f64> = dp.iter().map(|s| s.as_slice()[j]).collect();
            let (cm, cv, cse_m, cse_v) = series_stats(&cs);
            let (dm, dv, dse_m, dse_v) = series_stats(&ds);
            let z_mean = (cm - dm).abs() / cse_m.hypot(dse_m);
            let z_var = (cv - dv).abs() / cse_v.hypot(dse_v);
            for (stat, z) in [("mean", z_mean), ("variance", z_var)] {
                if z > *worst {
                    *worst = z;
                    *worst_at = format!("{label}, point {}, alternative {}, {stat}", p_idx + 1, j + 1);
                }
            }
        }
    }
}

fn check_prior_reproduction() -> mixlogit::Result<(bool, String)> {
    let points = vec![
        x_star(),
        CovariateMatrix::from_row_major(3, 2, &[0.5, 1.0, -1.0, 0.3, 0.2, -0.8])?,
        CovariateMatrix::from_row_major(3, 2, &[1.5, -0.5, -0.7, -1.1, 0.0, 0.9])?,
    ];
    let sweeps = 4000usize;
    let mut cfg = study_config(
        17,
        Budget { burnin: 50, iterations: sweeps, predictive_draws: 200 },
    );
    cfg.eval_points = points.clone();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();

    // With no observations every sweep redraws the state from the prior, so
    // the recorded series must match a direct simulation of the same law.
    let chain = run_chain(&ChoiceDataset::new(3, 2, Vec::new())?, &cfg)?;
    let mut rng = RngStream::from_seed(9001);
    let mut direct: Vec<Vec<Simplex>> = vec![Vec::new(); points.len()];
    for _ in 0..sweeps {
        let (mu, tau) = sample_niw(&cfg.prior, &mut rng)?;
        let sticks = sample_prior_sticks(cfg.n_atoms, cfg.dp_mass, &mut rng)?;
        let weights = weights_from_sticks(&sticks);
        let base = MvnFactor::new(mu, &tau)?;
        let atoms: Vec<DVector<f64>> = (0..cfg.n_atoms).map(|_| base.sample(&mut rng)).collect();
        let g = MixingDistribution::new(weights, atoms)?;
        for (p_idx, x) in points.iter().enumerate() {
            direct[p_idx].push(mixture_choice_prob(x, &g)?);
        }
    }
    worst_moment_gap("cross-sectional", &chain.plugin, &direct, &mut worst, &mut worst_at);

    let chain = run_chain_panel(&PanelDataset::new(3, 2, Vec::new())?, &cfg)?;
    let mut rng = RngStream::from_seed(9002);
    let mut direct: Vec<Vec<Simplex>> = vec![Vec::new(); points.len()];
    for _ in 0..sweeps {
        let sticks = sample_prior_sticks(cfg.n_atoms, cfg.dp_mass, &mut rng)?;
        let weights = weights_from_sticks(&sticks);
        let atoms: Vec<NormalAtom> = (0..cfg.n_atoms)
            .map(|_| sample_niw(&cfg.prior, &mut rng).map(|(mu, tau)| NormalAtom { mu, tau }))
            .collect::<mixlogit::Result<_>>()?;
        for (p_idx, x) in points.iter().enumerate() {
            direct[p_idx].push(mixture_normal_choice_prob(
                &weights,
                &atoms,
                x,
                cfg.predictive_draws,
                &mut rng,
            )?);
        }
    }
    worst_moment_gap("panel", &chain.plugin, &direct, &mut worst, &mut worst_at);

    let chain = run_gml_chain(&PanelDataset::new(3, 2, Vec::new())?, &cfg)?;
    let mut rng = RngStream::from_seed(9003);
    let mut direct: Vec<Vec<Simplex>> = vec![Vec::new(); points.len()];
    for _ in 0..sweeps {
        let (mu, tau) = sample_niw(&cfg.prior, &mut rng)?;
        let base = MvnFactor::new(mu, &tau)?;
        for (p_idx, x) in points.iter().enumerate() {
            let mut acc = vec![0.0; 3];
            for _ in 0..cfg.predictive_draws {
                let beta = base.sample(&mut rng);
                let p = mnl_prob(x, &beta)?;
                for (a, v) in acc.iter_mut().zip(p.as_slice()) {
                    *a += v / cfg.predictive_draws as f64;
                }
            }
            direct[p_idx].push(Simplex::new(acc)?);
        }
    }
    worst_moment_gap("gaussian", &chain.plugin, &direct, &mut worst, &mut worst_at);

    Ok((
        worst <= 3.0,
        format!("worst |z| {worst:.2} ({worst_at}) across 3 samplers x 3 points x mean/variance"),
    ))
}

fn check_conjugacy_oracle() -> mixlogit::Result<(bool, String)> {
    // Two-dimensional single-datum update against hand-worked values.
    let prior = NiwParams::new(DVector::zeros(2), 1.0, 2.0, DMatrix::identity(2, 2))?;
    let post = niw_posterior(&prior, &[DVector::from_vec(vec![2.0, 0.0])])?;
    let exact_gap = [
        (post.m[0] - 1.0).abs(),
        post.m[1].abs(),
        (post.lambda - 2.0).abs(),
        (post.nu - 3.0).abs(),
        (post.s[(0, 0)] - 4.0 / 3.0).abs(),
        (post.s[(1, 1)] - 2.0 / 3.0).abs(),
        post.s[(0, 1)].abs(),
        post.s[(1, 0)].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    // Scalar case against Simpson quadrature of prior times likelihood in
    // (w, u) with mu = ybar + w e^{u/2}, tau = e^u, a substitution that keeps
    // the conditional width of the first coordinate bounded on the grid.
    let y = [0.5f64, -0.2, 1.1];
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let (m0, l0, n0, s0) = (0.3f64, 1.5f64, 3.0f64, 0.8f64);
    let logp = |w: f64, u: f64| -> f64 {
        let tau = u.exp();
        let mu = ybar + w * (u / 2.0).exp();
        let mut lp = -(n0 + 2.0) / 2.0 * u - n0 * s0 / (2.0 * tau);
        lp += -0.5 * u - l0 * (mu - m0).powi(2) / (2.0 * tau);
        for yi in &y {
            lp += -0.5 * u - (yi - mu).powi(2) / (2.0 * tau);
        }
        lp + 1.5 * u
    };
    let pts = 801usize;
    let (w_lo, w_hi) = (-6.0f64, 6.0f64);
    let (u_lo, u_hi) = (-9.0f64, 13.0f64);
    let hw = (w_hi - w_lo) / (pts - 1) as f64;
    let hu = (u_hi - u_lo) / (pts - 1) as f64;
    let simpson = |i: usize| -> f64 {
        if i == 0 || i == pts - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut max_lp = f64::NEG_INFINITY;
    for iu in 0..pts {
        let u = u_lo + iu as f64 * hu;
        for iw in 0..pts {
            max_lp = max_lp.max(logp(w_lo + iw as f64 * hw, u));
        }
    }
    let (mut z, mut z_mu, mut z_tau) = (0.0f64, 0.0f64, 0.0f64);
    for iu in 0..pts {
        let u = u_lo + iu as f64 * hu;
        let wu = simpson(iu);
        for iw in 0..pts {
            let w = w_lo + iw as f64 * hw;
            let f = (logp(w, u) - max_lp).exp() * wu * simpson(iw);
            z += f;
            z_mu += f * (ybar + w * (u / 2.0).exp());
            z_tau += f * u.exp();
        }
    }
    let prior1 = NiwParams::new(
        DVector::from_vec(vec![m0]),
        l0,
        n0,
        DMatrix::from_element(1, 1, s0),
    )?;
    let data1: Vec<DVector<f64>> = y.iter().map(|v| DVector::from_vec(vec![*v])).collect();
    let post1 = niw_posterior(&prior1, &data1)?;
    let e_mu = post1.m[0];
    let e_tau = post1.nu * post1.s[(0, 0)] / (post1.nu - 2.0);
    let rel_mu = (z_mu / z - e_mu).abs() / e_mu.abs();
    let rel_tau = (z_tau / z - e_tau).abs() / e_tau.abs();

    Ok((
        exact_gap <= 1e-12 && rel_mu <= 1e-6 && rel_tau <= 1e-6,
        format!(
            "closed-form gap {exact_gap:.1e}; quadrature relative gap {rel_mu:.1e} on E[mu], {rel_tau:.1e} on E[tau]"
        ),
    ))
}

fn pipeline_bytes(which: &str) -> mixlogit::Result<(String, Vec<u8>)> {
    fn render<S>(
        model: &str,
        n: usize,
        cfg: &mixlogit::config::RunConfig,
        trace: &Trace<S>,
    ) -> mixlogit::Result<(String, Vec<u8>)> {
        let summary = build_summary(model, n, 3, 2, cfg, trace, None)?;
        let json = serde_json::to_string(&summary).map_err(mixlogit::Error::from)?;
        let mut csv = Vec::new();
        write_trace_csv(trace, &mut csv)?;
        Ok((json, csv))
    }
    let mut cfg = study_config(10, Budget { burnin: 30, iterations: 60, predictive_draws: 25 });
    cfg.thin = 2;
    match which {
        "cross-sectional" => {
            let data = simulate_nonpanel(40, &mut RngStream::from_seed(9));
            render("mmnl-nonpanel", data.n(), &cfg, &run_chain(&data, &cfg)?)
        }
        "panel" => {
            let data = simulate_panel(8, 3, &mut RngStream::from_seed(9));
            render("mmnl-panel", data.n(), &cfg, &run_chain_panel(&data, &cfg)?)
        }
        _ => {
            let data = simulate_panel(8, 3, &mut RngStream::from_seed(9));
            render("gml", data.n(), &cfg, &run_gml_chain(&data, &cfg)?)
        }
    }
}

fn check_structural_invariants() -> mixlogit::Result<(bool, String)> {
    let mut failed: Vec<&str> = Vec::new();

    let sticks = sample_prior_sticks(100, 1.0, &mut RngStream::from_seed(5))?;
    let total: f64 = weights_from_sticks(&sticks).iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        failed.push("stick weights");
    }

    let beta = DVector::from_vec(vec![0.9, -1.4]);
    let x = CovariateMatrix::from_row_major(3, 2, &[0.8, -1.2, 0.0, 0.4, -0.6, 1.0])?;
    let shifted = CovariateMatrix::from_row_major(
        3,
        3,
        &[0.8, -1.2, 1.0, 0.0, 0.4, 1.0, -0.6, 1.0, 1.0],
    )?;
    let beta_shift = DVector::from_vec(vec![0.9, -1.4, 17.5]);
    let p = mnl_prob(&x, &beta)?;
    let q = mnl_prob(&shifted, &beta_shift)?;
    let shift_gap = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if shift_gap > 1e-12 {
        failed.push("utility shift invariance");
    }

    if truncation_error_bound(7, 1, 2.5)? != 28.0 {
        failed.push("degenerate truncation bound");
    }
    // 2000 e^{-99}, evaluated in extended precision.
    let reference = 2.0224429852208971e-40;
    let bound = truncation_error_bound(500, 100, 1.0)?;
    if ((bound - reference) / reference).abs() > 1e-3 {
        failed.push("deep truncation bound");
    }

    let prior = NiwParams::new(DVector::zeros(2), 1.0, 2.0, DMatrix::identity(2, 2))?;
    let head: Vec<DVector<f64>> = vec![
        DVector::from_vec(vec![2.0, 0.0]),
        DVector::from_vec(vec![-1.0, 1.0]),
    ];
    let tail = [DVector::from_vec(vec![0.5, -0.5])];
    let all: Vec<DVector<f64>> = head.iter().chain(&tail).cloned().collect();
    let batch = niw_posterior(&prior, &all)?;
    let chained = niw_posterior(&niw_posterior(&prior, &head)?, &tail)?;
    let seq_gap = (batch.m - &chained.m)
        .amax()
        .max((batch.s - &chained.s).amax())
        .max((batch.lambda - chained.lambda).abs())
        .max((batch.nu - chained.nu).abs());
    if seq_gap > 1e-10 {
        failed.push("sequential conjugate update");
    }

    for which in ["cross-sectional", "panel", "gaussian"] {
        if pipeline_bytes(which)? != pipeline_bytes(which)? {
            failed.push("pipeline determinism");
            break;
        }
    }

    Ok((
        failed.is_empty(),
        if failed.is_empty() {
            "stick sums, shift invariance, truncation bound values, sequential updates, and repeated pipelines all agree".into()
        } else {
            format!("violated: {}", failed.join(", "))
        },
    ))
}

fn check_tail_diagnostic() -> mixlogit::Result<(bool, String)> {
    let n = 1_000_000usize;
    let mut rng = RngStream::from_seed(201);
    let normal = tail_moment_check(|| DVector::from_fn(2, |_, _| rng.standard_normal()), n)?;
    let want = (PI / 2.0).sqrt();
    let se = ((2.0 - PI / 2.0) / n as f64).sqrt();
    let normal_ok = (normal.estimate - want).abs() <= 3.0 * se && normal.stable;

    let mut rng = RngStream::from_seed(31);
    let mut cauchy_coord = move || {
        let u: f64 = rng.uniform_open01();
        (PI * (u - 0.5)).tan()
    };
    let cauchy = tail_moment_check(|| DVector::from_fn(2, |_, _| cauchy_coord()), n)?;

    Ok((
        normal_ok && !cauchy.stable,
        format!(
            "normal-norm estimate {:.4} for target {want:.4} (tolerance {:.4}); heavy-tail flag raised: {}",
            normal.estimate,
            3.0 * se,
            !cauchy.stable
        ),
    ))
}

#[test]
fn acceptance_suite() {
    println!("acceptance: 11 checks");
    let mut outcomes = Vec::new();
    outcomes.push(run_check("two-point truth oracle", check_truth_oracle));
    outcomes.push(run_check("random-utility draws match the logit", check_logit_frequencies));

    let budget = Budget::table1(Scale::Desk);
    let (mut mmnl, mut gml) = (Vec::new(), Vec::new());
    let mut fit_err = None;
    for s in [11u64, 12, 13] {
        match (
            fit_nonpanel_study(500, s, s + 101, budget),
            fit_gml_study(500, s, s + 202, budget),
        ) {
            (Ok(m), Ok(g)) => {
                mmnl.push(m);
                gml.push(g);
            }
            (Err(e), _) | (_, Err(e)) => {
                fit_err = Some(e);
                break;
            }
        }
    }
    match fit_err {
        None => {
            outcomes.push(run_check("study reproduction, cross-sectional", || {
                check_study_nonpanel(&mmnl)
            }));
            outcomes.push(run_check("misspecification gap", || {
                check_misspecification_gap(&mmnl, &gml)
            }));
        }
        Some(e) => {
            let msg = format!("shared fits errored: {e}");
            for name in ["study reproduction, cross-sectional", "misspecification gap"] {
                println!("[FAIL] {name} (0.0s): {msg}");
                outcomes.push(Outcome { name, passed: false, detail: msg.clone() });
            }
        }
    }

    outcomes.push(run_check("study reproduction, panel", check_study_panel));
    outcomes.push(run_check("error trend in the sample size", check_rms_trend));
    outcomes.push(run_check("grid error trend in the sample size", check_grid_trend));
    outcomes.push(run_check("zero-data chains reproduce the prior", check_prior_reproduction));
    outcomes.push(run_check("conjugate update oracle", check_conjugacy_oracle));
    outcomes.push(run_check("structural invariants", check_structural_invariants));
    outcomes.push(run_check("tail moment diagnostic", check_tail_diagnostic));

    let failures: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{}: {}", o.name, o.detail))
        .collect();
    println!(
        "acceptance: {} of {} checks passed",
        outcomes.len() - failures.len(),
        outcomes.len()
    );
    assert!(
        failures.is_empty(),
        "{} of {} acceptance checks failed:\n{}",
        failures.len(),
        outcomes.len(),
        failures.join("\n")
    );
}
