//! Simulation and validation of axially symmetric Gaussian processes on the
//! unit sphere through truncated Karhunen-Loeve expansions in spherical
//! harmonics.

pub mod cli;
pub mod config;
pub mod covariance;
pub mod diagnostics;
pub mod geom;
pub mod legendre;
pub mod quadrature;
pub mod sampler;
pub mod spectrum;
