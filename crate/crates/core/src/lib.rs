//! Dynamical entanglement percolation on disordered lattices.
//!
//! Every edge of a lattice carries a two-qubit state oscillating at its own
//! frequency; at time `t` the edge can be converted to a singlet with
//! probability `1 − |cos(ω_e t)|`. This crate generates the disordered
//! lattices and frequency assignments, samples edge activations, measures
//! the largest connected component, and provides the analytic curves used
//! to check the simulations: ensemble-averaged activation `p(t)`, the Rice
//! statistics of perturbed edge lengths, the two-colour bond-percolation
//! model and its mean-field solution.

pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod frequency;
pub mod lattice;
pub mod mean_field;
pub mod numeric;
pub mod percolation;
pub mod rng;
pub mod special;
pub mod stats;
pub mod two_colour;
pub mod union_find;

pub use error::{Error, Result};
pub use frequency::{FrequencyAssignment, FrequencyModel};
pub use lattice::{Boundary, LatticeSpec, Orientation, PerturbedLattice, Topology};
pub use percolation::{TrajectoryRecord, TrajectorySpec};
pub use disorder::CorrelationStats;
pub use mean_field::MeanFieldSolution;
pub use two_colour::{ColouredLattice, PhaseDiagram};
