//! Multi-channel sampling of graph signals: graphs and spectra, spectral
//! filters, greedy sampling set selection, single and two-channel recovery,
//! bipartite filter banks, signal models and seeded experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod filterbank;
pub mod filters;
pub mod graph;
pub mod linalg;
pub mod operator;
pub mod rng;
pub mod sampling;
pub mod signals;
pub mod spectral;

pub use error::{Error, Result};
