//! Path-aware modulation demo: one channel, three surface variants, per-path
//! phasors after modulation.

use serde::{Deserialize, Serialize};

use super::config::{layout_factors, ExperimentConfig};
use crate::channel::{sample_multipath, ChannelPair, ChannelRecord};
use crate::error::Result;
use crate::metrics::{
    achievable_rate, aggregates, path_phasors, received_power, Mode, MultiUserScenario, Scenario,
    SurfaceState,
};
use crate::optimize::{
    align_phases_closed_form, best_mask_continuous, max_pairwise_phase_difference,
    optimal_patterns_single_user, optimize_patterns, phase_spread, TraceRow,
};
use crate::surface::{
    grid_positions, ActivationMask, ElementPatterns, PatternCoeffs, ReflectionConfig, ShBasis,
};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoMode {
    pub mode: Mode,
    pub received_power: f64,
    pub rate: f64,
    pub phase_spread: f64,
    pub max_phase_difference_deg: f64,
    /// Per cascaded path, `[re, im]`, `l`-major.
    pub path_phasors: Vec<[f64; 2]>,
    /// Active positions on the dense grid.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub seed: u64,
    pub grid: usize,
    pub active: usize,
    pub basis_len: usize,
    pub noise_power: f64,
    pub channel: ChannelRecord,
    /// Per-path phasors of the traditional layout before modulation
    /// (unit reflection, isotropic elements).
    pub input_phasors: Vec<[f64; 2]>,
    pub modes: Vec<DemoMode>,
    #[serde(skip)]
    pub pattern_trace: Vec<TraceRow>,
}

impl DemoReport {
    pub fn mode(&self, mode: Mode) -> &DemoMode {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .expect("all modes present")
    }
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn summarize(
    mode: Mode,
    scenario: &Scenario,
    state: &SurfaceState,
    active: Vec<usize>,
) -> Result<DemoMode> {
    let phasors = path_phasors(scenario, state)?;
    let power = received_power(scenario, state)?;
    Ok(DemoMode {
        mode,
        received_power: power,
        rate: achievable_rate(power, scenario.noise_power)?,
        phase_spread: phase_spread(&phasors)?,
        max_phase_difference_deg: max_pairwise_phase_difference(&phasors).to_degrees(),
        path_phasors: pairs(&phasors),
        active,
    })
}

/// Runs the demo on the channel drawn from `seed`.
///
/// * traditional: uniform `M̂`-element layout on the dense grid, isotropic
///   elements, co-phased continuous reflection;
/// * position-FRIS: the `M̂` dense-grid positions with the largest aggregate
///   magnitude, co-phased;
/// * pattern-FRIS: the traditional layout with unit reflection and optimized
///   element patterns, started from constant patterns that reproduce the
///   traditional phases at full energy.
pub fn run_demo_path_aware(config: &ExperimentConfig, seed: u64) -> Result<DemoReport> {
    let n = config.surface.grids[0];
    let active = config.surface.active[0];
    let channel = sample_multipath(seed, &config.channel)?;
    let dense = grid_positions(n, n, config.spacing(n))?;
    let scenario = Scenario::new(
        dense.clone(),
        channel.clone(),
        config.noise_power,
        Mode::Traditional,
    )?;

    let (kr, kc) = layout_factors(active);
    let uniform = ActivationMask::uniform_layout(n, n, kr, kc)?;
    let mut traditional = SurfaceState::isotropic(dense.len());
    traditional.mask = uniform.clone();
    let input = path_phasors(&scenario, &traditional)?;
    traditional.reflection = align_phases_closed_form(&scenario, &traditional, None)?;
    let uniform_idx: Vec<usize> = uniform.active_indices().collect();

    let mut position = SurfaceState::isotropic(dense.len());
    position.mask =
        best_mask_continuous(&aggregates(&channel, &dense, &position.patterns), active)?;
    position.reflection = align_phases_closed_form(&scenario, &position, None)?;

    let (pattern_state, sub, trace) =
        pattern_fris(config, seed, &scenario, &channel, &uniform_idx)?;

    let modes = vec![
        summarize(
            Mode::Traditional,
            &scenario,
            &traditional,
            uniform_idx.clone(),
        )?,
        summarize(
            Mode::PositionFris,
            &scenario,
            &position,
            position.mask.active_indices().collect(),
        )?,
        summarize(Mode::PatternFris, &sub, &pattern_state, uniform_idx)?,
    ];
    Ok(DemoReport {
        seed,
        grid: n,
        active,
        basis_len: ShBasis::new(config.surface.basis_order).len(),
        noise_power: config.noise_power,
        channel: channel.to_record(),
        input_phasors: pairs(&input),
        modes,
        pattern_trace: trace,
    })
}

fn pattern_fris(
    config: &ExperimentConfig,
    seed: u64,
    scenario: &Scenario,
    channel: &ChannelPair,
    layout: &[usize],
) -> Result<(SurfaceState, Scenario, Vec<TraceRow>)> {
    let geometry = scenario.geometry.subset(layout)?;
    let sub = Scenario::new(
        geometry,
        channel.clone(),
        config.noise_power,
        Mode::PatternFris,
    )?;
    let basis = ShBasis::new(config.surface.basis_order);
    let budget = PatternCoeffs::budget_from_gain(config.surface.budget_gain);
    let init = optimal_patterns_single_user(&sub, basis, budget)?;
    let mu = MultiUserScenario::from_single(&sub, config.noise_power)?;
    let res = optimize_patterns(&mu, basis, budget, &config.pattern, seed, Some(&init), None)?;
    let state = SurfaceState {
        mask: ActivationMask::all(layout.len()),
        reflection: ReflectionConfig::zeros(layout.len()),
        patterns: ElementPatterns::Coefficients(res.patterns),
    };
    Ok((state, sub, res.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentKind;

    #[test]
    fn default_demo_orders_modes() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Demo);
        let r = run_demo_path_aware(&cfg, 1).unwrap();
        let (t, p, f) = (
            r.mode(Mode::Traditional),
            r.mode(Mode::PositionFris),
            r.mode(Mode::PatternFris),
        );
        assert!(f.received_power >= p.received_power && p.received_power >= t.received_power);
        assert!(f.phase_spread <= p.phase_spread && p.phase_spread <= t.phase_spread);
        assert_eq!(r, run_demo_path_aware(&cfg, 1).unwrap());
    }

    #[test]
    fn single_element_traditional_is_a_common_rotation() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Demo);
        cfg.surface.grids = vec![3];
        cfg.surface.active = vec![1];
        let r = run_demo_path_aware(&cfg, 4).unwrap();
        let out = &r.mode(Mode::Traditional).path_phasors;
        let rot: Vec<f64> = out
            .iter()
            .zip(&r.input_phasors)
            .map(|(o, i)| crate::wrap_phase(o[1].atan2(o[0]) - i[1].atan2(i[0])))
            .collect();
        for w in rot.windows(2) {
            assert!(crate::surface::phase_distance(w[0], w[1]) < 1e-9);
        }
    }
}
