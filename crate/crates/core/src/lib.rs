//! Moment equations, spectral transforms and exact event simulation for
//! SIR dynamics with nonlocal mobility on a periodic lattice.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ddouble;
pub mod error;
pub mod first_moments;
pub mod intermittency;
pub mod kernel;
pub mod lattice;
pub mod ode;
pub mod quadrature;
pub mod second_moments;
pub mod simulator;
pub mod summation;
pub mod torus;

pub use error::{Error, Result};
pub use kernel::{FourierSymbol, MobilityKernel};
pub use lattice::{Coord, LatticeSpec};
