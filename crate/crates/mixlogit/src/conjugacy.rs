//! Conjugate normal-inverse-Wishart update for a multivariate normal sample.
//!
//! With the mean-anchored inverse-Wishart convention of [`crate::rng`], a
//! prior `(m, lambda, nu, s)` observing `n0` vectors with mean `bbar` and
//! within-sample covariance `S_n0` updates to
//!
//! ```text
//! m'      = (lambda m + n0 bbar) / (lambda + n0)
//! lambda' = lambda + n0
//! nu'     = nu + n0
//! s'      = (nu s + n0 S_n0 + R) / (nu + n0),
//! R       = (lambda n0 / (lambda + n0)) (bbar - m)(bbar - m)'
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::{sample_niw, NiwParams, RngStream};

/// Posterior normal-inverse-Wishart parameters given observed vectors.
///
/// An empty sample returns the prior unchanged.
pub fn niw_posterior(prior: &NiwParams, data: &[DVector<f64>]) -> Result<NiwParams> {
    let d = prior.dim();
    for (i, b) in data.iter().enumerate() {
        if b.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "data vector {i} has length {}, prior has dimension {d}",
                b.len()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("data vector {i}")));
        }
    }
    let n0 = data.len();
    if n0 == 0 {
        return Ok(prior.clone());
    }
    let nf = n0 as f64;

    let mut bbar = DVector::<f64>::zeros(d);
    for b in data {
        bbar += b;
    }
    bbar /= nf;

    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for b in data {
        let c = b - &bbar;
        scatter += &c * c.transpose();
    }

    let lambda_post = prior.lambda + nf;
    let nu_post = prior.nu + nf;
    let m_post = (&prior.m * prior.lambda + &bbar * nf) / lambda_post;

    let drift = &bbar - &prior.m;
    let r = (&drift * drift.transpose()) * (prior.lambda * nf / lambda_post);
    let s_post = (&prior.s * prior.nu + scatter + r) / nu_post;

    NiwParams::new(m_post, lambda_post, nu_post, s_post)
}

/// Draws `(mu, tau)` from the posterior normal-inverse-Wishart.
pub fn draw_theta_posterior(
    prior: &NiwParams,
    data: &[DVector<f64>],
    rng: &mut RngStream,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let post = niw_posterior(prior, data)?;
    sample_niw(&post, rng)
}
