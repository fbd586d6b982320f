//! Phase-space functions for spin-J systems: parity operators, spherical
//! convolution between s-parametrised functions, Stern-Gerlach tomography
//! and the Radon variant.

pub mod cli;
pub mod convolution;
pub mod error;
pub mod io;
pub mod linalg;
pub mod parity;
pub mod phasespace;
pub mod radon;
pub mod quadrature;
pub mod specialfn;
pub mod spinstates;
pub mod tomography;

pub use error::{Error, Module, Result};
pub use specialfn::{HalfInteger, RotationAngles};
