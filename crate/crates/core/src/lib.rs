//! Simulation toolkit for an entangled optical lattice clock.
//!
//! Clock atoms sit in a magic-wavelength lattice while a single J = 1/2 head
//! atom is carried site to site by winding the relative phase of two
//! circularly polarized standing waves. Collisional phase gates between the
//! head and each clock atom build a GHZ state, which turns an N-atom Ramsey
//! measurement into one with Heisenberg (1/N) scaling.
//!
//! - [`lattice`]: light shifts, well depths, trap frequencies, transport feasibility
//! - [`rates`] and [`schedule`]: scattering lifetimes, gate timing, step list, survival
//! - [`register`]: dense and branch-product register backends, protocol, trajectories
//! - [`estimator`]: fringe scans, fits, sensitivity, optimal atom number
//! - [`model`]: the chained budget from lattice parameters to decoherence rates

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod lattice;
pub mod model;
pub mod rates;
pub mod register;
pub mod schedule;
pub mod units;

pub use error::{Error, Result};
