//! Simulation and analysis toolkit for diagnosing on-off element failures in
//! phased arrays from Constrained-View Radiated Power (CVRP).
//!
//! The pipeline synthesizes total-EIRP patterns of a 2×8 cosine-element array
//! ([`pattern`]), optionally rotates them ([`sphere`]), evaluates CVRP over
//! polar caps ([`metrics`]), propagates ripple measurement error into
//! confidence intervals ([`uncertainty`]) and decides which failure counts
//! are distinguishable ([`diagnosis`]). [`experiment`] runs whole scenario
//! matrices and writes the results as CSV.

pub mod diagnosis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod pattern;
pub mod sphere;
pub mod uncertainty;
pub mod units;

pub use error::{Error, Result};
