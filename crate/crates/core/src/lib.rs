//! Flatness-based boundary steering of the one-dimensional heat equation.
//!
//! The crate builds flat outputs by Gevrey-2 Borel interpolation, assembles
//! boundary controls from them, and replays the controls through an
//! independent Crank–Nicolson solver.

pub mod analysis;
pub mod borel_interp;
pub mod cli;
pub mod error;
pub mod flatness;
pub mod gevrey_core;
pub mod heatsim;
pub mod jet;
pub mod quad;
pub mod real;
pub mod target;

pub use error::{Error, Result};
pub use real::{BigReal, Prec, Real};

/// e^{1/(2e)}, the radius threshold above which targets are steerable.
pub fn r0() -> f64 {
    (1.0 / (2.0 * std::f64::consts::E)).exp()
}
