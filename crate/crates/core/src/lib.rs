//! Solvers for evolutive Hamilton-Jacobi equations on a star junction with
//! Hamiltonians and flux limiter that are merely measurable in time.
//!
//! Two independent routes compute the same solution: a monotone Godunov
//! finite-difference scheme ([`scheme`]) and a semi-Lagrangian dynamic
//! programming solver for the value function of the underlying control
//! problem ([`dpp`]). The [`approximation`] module runs the comparison
//! argument for continuous approximants of the time-measurable data as a
//! numerical diagnostic.
//!
//! The crate is `no_std` with `alloc`; IO, file formats and the command
//! line live in the `hjj` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod approximation;
pub mod control;
pub mod dpp;
pub mod error;
pub mod field;
pub mod hamiltonian;
pub mod problem;
pub mod scheme;
pub mod time_signal;

pub use control::{ControlEdge, ControlExpr, ControlSet, ControlSystem, RestrictedEnvelopes};
pub use error::{Error, Result};
pub use field::{Grid, SolutionField};
pub use hamiltonian::{a0_floor, argmin_p, envelopes, Coefficient, EnvelopePair, Hamiltonian, LocalEnvelope};
pub use problem::{InitialDatum, JunctionProblem, Orientation, StarPoint, ValidationReport};
pub use time_signal::TimeSignal;
