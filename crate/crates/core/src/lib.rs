//! Numerical laboratory for a one-dimensional free boundary logistic
//! problem under a shifting climate.
//!
//! The crate solves the Stefan-type moving boundary problem
//! `u_t = d u_xx + A(x - ct) u - b u^2` on `0 < x < h(t)` with
//! `h'(t) = -mu(A(h - ct)) u_x(h, t)`, computes the semi-waves and the
//! critical quantities (`c0`, `L0`, the sharp threshold `sigma*`), and
//! classifies runs into spreading or vanishing with certified rules.
//!
//! Module map:
//! - [`model`]: parameters, climate profile, expansion rate, initial data.
//! - [`bvp`]: logistic two-point boundary value solver and truncation.
//! - [`semiwave`]: the semi-wave `q_c` and critical speed `c0`.
//! - [`forced`]: the forced semi-wave `v_L` and critical shift `L0`.
//! - [`stefan`]: front-fixed semi-implicit time stepping.
//! - [`classify`]: spreading / vanishing verdicts, thresholds, sweeps.
//! - [`verify`]: independent oracles and convergence studies.
//! - [`config`]: plain-text run configuration and hashing.

pub mod bvp;
pub mod classify;
pub mod config;
pub mod error;
pub mod forced;
pub mod model;
pub mod output;
pub mod semiwave;
pub mod stefan;
pub mod verify;

pub use error::{Error, Result};
