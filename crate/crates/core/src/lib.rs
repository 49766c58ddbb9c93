//! Decay of an excited two-level atom coupled to the radiation continuum and to
//! ionizable detector atoms.
//!
//! Three independent routes compute the survival amplitude `A0(t)`:
//!
//! * [`dynamics`] integrates the amplitude equations of motion on a finite
//!   [`discretize::DiscreteModel`];
//! * [`resolvent`] evaluates the Laplace-domain resolvent of the same model and
//!   inverts it numerically along a Bromwich line;
//! * [`analytic`] gives the closed-form Weisskopf–Wigner rates and the detector
//!   reduction factor `U`.
//!
//! All quantities are dimensionless: `hbar = c = 1` and frequencies are measured
//! in units of the atomic transition frequency (see [`model::NaturalUnits`]).

pub mod analytic;
pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod model;
pub mod ode;
pub mod par;
pub mod quad;
pub mod resolvent;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use par::Exec;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
