//! Simulation of a clock interferometer with atoms held in an optical
//! lattice at two heights.
//!
//! The pipeline is: a sequence description ([`dsl`]) resolves to an
//! [`ExperimentSpec`]; [`trajectory`] builds the classical arm paths;
//! [`phase`] turns them into the phases `(delta_phi, delta_d, delta_u)`;
//! [`observables`] maps those to detection probabilities and Ramsey scans.
//! [`lattice`] integrates the lattice motion directly as an independent
//! route to the clock phases.

pub mod cli;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod io;
pub mod lattice;
pub mod model;
pub mod numeric;
pub mod observables;
pub mod phase;
pub mod trajectory;

pub use model::{ExperimentSpec, PhysicalConstants, UnitMode};
pub use numeric::Dd;
