//! Numerical laboratory for wavepackets whose dynamics includes a
//! self-attraction term proportional to the squared displacement from the
//! wavefunction's own mean position.
//!
//! The crate is organized around five building blocks:
//!
//! * [`hilbert`] — position-grid pure states, low-rank branch ensembles, and
//!   the trace-distance metric between them;
//! * [`meanfield`] — radial Newton–Poisson solver and extraction of the
//!   self-attraction frequency from a mass-density profile;
//! * [`dynamics`] — split-step spectral propagators (linear and
//!   self-attracting), branch-ensemble propagation in coupled or independent
//!   mode, and a closed-form Gaussian moment integrator used as an oracle;
//! * [`optomeasure`] — impulsive probe–light scattering, projective
//!   measurement of the light, and reassembly of the unconditional mixture;
//! * [`statistics`] — the mixing/operation commutation defect and the
//!   detected-vs-undetected divergence experiment.
//!
//! All quantities are expressed in natural units with `ħ = 1`.

// Validation guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod meanfield;
pub mod optomeasure;
pub mod spectral;
pub mod statistics;

pub use error::{Error, Result};
