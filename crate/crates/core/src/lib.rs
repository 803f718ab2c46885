//! Bayesian covariance graph and latent position model: samplers, Gibbs
//! updates, chain driver, synthetic data and network summaries.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;

pub mod cgm;
pub mod dgp;
pub mod graph;
pub mod linalg;
pub mod lpm;
pub mod mcmc;
pub mod metrics;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod var;

pub use error::{Error, Result};
pub use graph::Graph;
pub use mcmc::{fit, FitConfig, FitResult, PosteriorSummary};
pub use rng::RngStream;
pub use var::{LagMode, TimeSeriesPanel};
pub use nalgebra;
