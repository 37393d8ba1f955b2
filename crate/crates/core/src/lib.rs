//! Quantum projection filter simulation.
//!
//! A state is filtered by a sequence of ancilla measurements, each applying
//! `cos(t_i O + δ_i)` to the register when the ancilla reads 0. With `O = J²`
//! and halving times this projects onto a total-spin sector; with `O = H`
//! and optimized times and phases it isolates the ground state.

pub mod error;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod rng;

pub use error::{QpfError, Result};
