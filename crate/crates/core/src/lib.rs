//! Simulation and two-timescale optimization of a base station whose antenna
//! arrays slide along a horizontal circular rail while every element switches
//! among a discrete set of radiation patterns.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be embedded
//! anywhere; file formats, configuration and the command line live in the
//! companion `hmet` crate. Enable the `parallel` feature to evaluate Monte
//! Carlo samples on a rayon pool; results are identical with and without it.
//!
//! Module map:
//! - [`geometry`]: coordinate frames, rail placement, separation constraint and
//!   projection onto the feasible arcs.
//! - [`radiation`]: the pattern codebook, per-mode gains and power calibration.
//! - [`channel`]: steering vectors, per-user channels and the log-det sum-rate.
//! - [`scenarios`]: seeded user generation (static hotspots and time-varying).
//! - [`optimizer`]: projected gradient position updates, greedy pattern
//!   selection and the alternating solver.
//! - [`baselines`]: the fixed-array, position-only and pattern-only schemes.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod channel;
mod error;
pub mod geometry;
pub(crate) mod linalg;
pub mod optimizer;
pub mod radiation;
pub mod scenarios;
pub mod seed;

pub use error::{Error, Result};

/// Cartesian 3-vector in meters (positions) or dimensionless (directions).
pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

/// dB to linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::exp10(db / 10.0)
}

/// Linear power ratio to dB.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * libm::log10(linear)
}
