//! Band structure of a Schrödinger operator on a 2D periodic strip waveguide
//! whose cells are coupled by small windows.
//!
//! The engine discretizes the Floquet fiber `H_eps(tau) = -Δ + V` on one
//! periodicity cell with quasiperiodic window coupling, finds the eigenvalues
//! that split off just below the essential-spectrum threshold `pi^2`, solves
//! the decoupled-cell threshold problem for virtual levels, and evaluates the
//! closed-form band asymptotics so the two routes can be compared.

pub mod asymptotics;
pub mod banded;
pub mod bands;
pub mod config;
pub mod dense;
pub mod eigensolver;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod output;
pub mod potential;
pub mod sparse;
pub mod threshold;

pub use error::{CoreError, Result};
pub use geometry::{CellGeometry, Grid, NodeClass, NodeSet};
pub use operator::{BcKind, DiscreteOperator, ModeDecayRates};
pub use potential::PotentialSpec;
