//! Simulation of a multi-control Rydberg Toffoli gate whose controls sit on
//! a sphere around a single target atom.
//!
//! The crate builds spheroidal layouts and their asymmetric interactions
//! ([`geometry`]), assembles the five-pulse register model ([`model`]),
//! propagates it with no-jump, quantum-trajectory or master-equation
//! dynamics ([`solver`]), scores the result against the ideal C_kNOT map
//! ([`fidelity`]) and compares against analytic error estimates
//! ([`error_budget`]).

pub mod error;
pub mod error_budget;
pub mod fidelity;
pub mod geometry;
pub mod model;
pub mod scenario;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use fidelity::{gate_fidelity, FidelityReport, Mode, RunSettings};
pub use geometry::{Coefficients, InteractionSet, SphericalLayout};
pub use model::{build_system, DecayRates, GateSystem, JumpModel, PulseSchedule};
pub use scenario::{GateParameters, Overrides};
pub use solver::SolverOptions;

/// Library version recorded in run outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
