//! Brownian flights started near a rough domain boundary.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: domains given by signed distance functions, including
//!   Koch snowflake prefractals with exact polygon distance.
//! - [`whitney`]: certified Whitney decomposition into dyadic cubes, layers
//!   `S_r` and per-generation counts.
//! - [`oracles`]: exact exit-time survival for intervals and cubes.
//! - [`flight`]: the time-stepped flight sampler, campaigns and the
//!   harmonic-measure (Δ-regularity) estimator.
//! - [`analysis`]: empirical survival curves, power-law tail fits with
//!   bootstrap intervals, dimension estimates and verification reports.

pub mod analysis;
pub mod error;
pub mod flight;
pub mod geometry;
pub mod oracles;
mod serde_array;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{AnyDomain, Domain, DomainSpec, Point};
pub use whitney::{DyadicCube, WhitneyDecomposition};
