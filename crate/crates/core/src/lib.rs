//! Numerical toolkit for the ohmic quantum Brownian motion model with a
//! continuous (Mensky) measurement of the bath oscillators.
//!
//! * [`kernels`]: the four memory kernels, their Markov weights and time scales.
//! * [`convolution`]: Volterra convolutions against sampled trajectories and
//!   their Markov approximations.
//! * [`influence`]: decoherence and phase exponents of the influence functional.
//! * [`relaxation`]: an oscillator with memory friction, for post-exponential tails.
//! * [`audit`]: the timescale-ordering and measurement-strength balance.

// Guards such as `!(x > 0.0)` are written that way on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod convolution;
pub mod error;
pub mod fastconv;
pub mod influence;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod relaxation;
pub mod units;

pub use error::{Error, Result};
pub use kernels::{KernelEval, KernelKind, MenskyDamping, Method, OhmicBath};
