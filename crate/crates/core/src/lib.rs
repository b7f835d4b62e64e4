//! Gate-level simulation of single-qubit Markovian open systems.
//!
//! A GKSL generator given by a Hamiltonian `H` and a GKS matrix `A` is split
//! into constituent semigroups, each a unitary conjugation of a channel from
//! the canonical family `T^(θ)`. The canonical channels are written as an
//! equal mixture of two quasi-extreme channels whose Stinespring unitaries are
//! synthesized into gates and combined with a quantum forking circuit. A
//! second-order symmetric product formula stitches the pieces together.
//!
//! The pipeline is:
//!
//! 1. [`decompose::decompose`]: spectral split of `A`, canonical angles, SO(3)
//!    rotations and their SU(2) lifts.
//! 2. [`trotter::plan`]: step count from the error budget and the factor
//!    schedule.
//! 3. [`circuit`]: gate synthesis and OpenQASM output.
//! 4. [`sim`]: density-matrix execution and the Runge-Kutta oracle.
//!
//! [`pipeline`] wires these into the commands exposed by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod circuit;
pub mod config;
pub mod decompose;
pub mod error;
pub mod exec;
pub mod extreme;
pub mod numerics;
pub mod pipeline;
pub mod sim;
pub mod trotter;

pub use error::{Error, Result};
pub use exec::Execution;
