//! Optimizers for the three surface variants, exhaustive oracles and the
//! phase-spread diagnostic.

mod align;
mod discrete;
mod pattern;
mod wmmse;

pub use align::{
    align_phases_closed_form, best_mask_continuous, coherent_bound, refine_positions_continuous,
};
pub use discrete::{
    brute_force_discrete, cross_entropy_search, Candidate, CeoParams, CeoResult, DiscreteProblem,
    TraceRow, ENUMERATION_LIMIT,
};
pub use pattern::{
    optimal_patterns_single_user, optimize_patterns, optimize_phases_multiuser, pattern_gradient,
    phase_gradient, PatternOptParams, PatternOptResult, PhaseOptResult,
};
pub use wmmse::{wmmse_precoders, wmmse_with_trace, WmmseResult};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::wrap_phase;

/// Circular spread `1 − |Σ e^{j∠x_i}|/n` of the nonzero phasors; 0 means
/// perfectly aligned.
pub fn phase_spread(phasors: &[Complex64]) -> Result<f64> {
    let units: Vec<Complex64> = phasors
        .iter()
        .filter(|p| p.norm() > 0.0)
        .map(|p| p / p.norm())
        .collect();
    if units.is_empty() {
        return Err(Error::UndefinedSpread);
    }
    let resultant: Complex64 = units.iter().sum();
    Ok((1.0 - resultant.norm() / units.len() as f64).clamp(0.0, 1.0))
}

/// Largest circular phase difference between any two phasors, radians.
pub fn max_pairwise_phase_difference(phasors: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in phasors.iter().enumerate() {
        for b in &phasors[i + 1..] {
            worst = worst.max(wrap_phase(a.arg() - b.arg()).abs());
        }
    }
    worst
}
