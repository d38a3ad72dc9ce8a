//! Kinetic Monte Carlo toolkit for jump processes with fast and slow
//! degrees of freedom.
//!
//! Three model families ship as presets: a landscape with two metastable
//! macro-states, a landscape with infinitely many macro-states on a lattice,
//! and a two-particle spin system exchanging energy. For each one the crate
//! provides
//!
//! - exact event-driven simulation with reproducible, replicable random
//!   streams ([`ctmc`]),
//! - invariant measures of the fast internal dynamics ([`stationary`]),
//! - the analytic limit dynamics of the slow variable under complete
//!   time-scale separation, itself simulable ([`effective`]),
//! - a statistical harness comparing finite-separation exit-time laws to the
//!   limit law: moments with confidence intervals, histogram densities, L¹
//!   error, Kolmogorov–Smirnov discrepancy, jump-amplitude tallies, and a
//!   martingale-residual diagnostic ([`stats`]),
//! - an end-to-end validation suite with pinned seeds and tolerances
//!   ([`validation`]).

pub mod ctmc;
pub mod effective;
pub mod error;
pub mod models;
pub mod stationary;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
