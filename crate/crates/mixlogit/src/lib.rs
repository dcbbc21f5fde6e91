//! Bayesian estimation of mixed multinomial logit choice models.

pub mod cli;
pub mod config;
pub mod conjugacy;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod gibbs_panel;
pub mod gml;
pub mod io;
pub mod metropolis;
pub mod model;
pub mod reproduce;
pub mod rng;
pub mod simulate;
pub mod stick;
pub mod trace;

pub use error::{Error, Result};
