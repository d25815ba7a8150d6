//! Stable and diffusive limit laws for additive functionals of
//! one-dimensional positive-recurrent diffusions.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! * [`model`]: scale function, speed measure, `κ`, and the natural-scale
//!   coefficients `ψ`, `φ` of a diffusion `dX = b(X)dt + σ(X)dB`;
//! * [`asymptotics`]: regime classification and every constant of the limit law;
//! * [`pathsim`]: per-path Euler–Maruyama and time-change simulation kernels;
//! * [`stable`]: stable samplers and Brownian local-time constructions;
//! * [`validate`]: empirical characteristic functions, index estimation, KS tests.
#![no_std]
// `Float` supplies f64 math without std; it is redundant whenever a dependency
// pulls std into the build
#![allow(unused_imports)]

extern crate alloc;

pub mod asymptotics;
pub mod coeffs;
pub mod consts;
pub mod error;
pub mod model;
pub mod pathsim;
pub mod presets;
pub mod quad;
pub mod rng;
pub mod slowvar;
pub mod stable;
pub mod validate;

pub use coeffs::{Coefficients, FnCoefficients, ModelPreset, Observable, ObservablePreset};
pub use error::{Error, Result};
pub use model::DiffusionModel;
