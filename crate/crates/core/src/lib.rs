//! Simulation core for noise-assisted escape from perfect mazes.
//!
//! Two engines and their shared tooling:
//!
//! * [`qsw`] evolves a density matrix under the quantum-stochastic-walk
//!   Lindblad generator with an absorbing sink and computes the transfer
//!   efficiency `E(p, t)`.
//! * [`photonic`] propagates coupled-mode amplitudes through a segmented
//!   waveguide array with random propagation-constant detunings, an explicit
//!   sink chain, and optional maze-only losses.
//! * [`maze`], [`layout`] and [`couplings`] generate perfect mazes, unfold
//!   them onto a line with perpendicular tails, and turn geometry into
//!   coupling matrices.
//! * [`oracles`] holds independent reference dynamics (classical rate walk,
//!   Schrodinger walk, linear-array benchmark) used for cross-validation.

// Validators write `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod couplings;
pub mod error;
pub mod expm;
pub mod herm;
pub mod layout;
pub mod maze;
pub mod oracles;
pub mod photonic;
pub mod qsw;
pub mod rng;

pub use error::{Result, SimError};
