//! Pseudospectral solver and very-weak-solution laboratory for the damped
//! fractional wave equation
//!
//! ```text
//! u_tt + D_g^s u + m(x) u + b(x) u_t = f(t, x),   D_g^s = (-Lap)^{s/2} g (-Lap)^{s/2}
//! ```
//!
//! on a periodic box, with singular inputs regularized by mollifier nets.

pub mod duhamel;
pub mod error;
pub mod evolve;
pub mod lab;
pub mod mollify;
pub mod spectral;

pub use error::{FracError, Result};
