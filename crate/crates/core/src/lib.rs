//! Simulation and optimization toolkit for fluid reconfigurable intelligent
//! surfaces (FRIS).
//!
//! Three surface variants share one cascaded multipath power model:
//!
//! * traditional RIS: fixed element layout, isotropic (or fixed) element
//!   patterns, tunable reflection phases;
//! * position-reconfigurable FRIS: a dense grid of elements of which a subset
//!   is switched on, with (possibly quantized) reflection phases;
//! * pattern-reconfigurable FRIS: fixed layout and unit reflection, but each
//!   element radiates through a tunable, energy-limited angular pattern.
//!
//! The crate is organized bottom-up: [`channel`] generates path realizations,
//! [`surface`] models the controllable surface, [`metrics`] evaluates power
//! and rate, [`optimize`] holds the solvers and [`experiment`] wires them into
//! seeded, reproducible experiment runners used by the `fris` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod optimize;
pub mod rng;
pub mod surface;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Wraps an angle to the half-open interval (−π, π].
pub fn wrap_phase(angle: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut a = angle.rem_euclid(two_pi);
    if a > PI {
        a -= two_pi;
    }
    a
}
