use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{aggregates, Scenario, SurfaceState};
use crate::surface::{ActivationMask, ReflectionConfig, SurfaceGeometry};

/// Co-phasing reflection: `∠ϑ_m = −∠c_m` for every element, then quantized
/// element-wise when `bits` is given.
pub fn align_phases_closed_form(
    scenario: &Scenario,
    state: &SurfaceState,
    bits: Option<u32>,
) -> Result<ReflectionConfig> {
    state.check(&scenario.geometry)?;
    let c = aggregates(&scenario.channel, &scenario.geometry, &state.patterns);
    let phases: Vec<f64> = c
        .iter()
        .map(|c| if c.norm() > 0.0 { -c.arg() } else { 0.0 })
        .collect();
    match bits {
        None => Ok(ReflectionConfig::continuous(phases)),
        Some(b) => ReflectionConfig::quantized(&phases, b),
    }
}

/// `(1/(LZ))·(Σ_{m active}|c_m|)² + σ²`, the best any reflection can do.
pub fn coherent_bound(scenario: &Scenario, state: &SurfaceState) -> Result<f64> {
    state.check(&scenario.geometry)?;
    let c = aggregates(&scenario.channel, &scenario.geometry, &state.patterns);
    let amp: f64 = state.mask.active_indices().map(|m| c[m].norm()).sum();
    Ok(scenario.normalization() * amp * amp + scenario.noise_power)
}

/// Optimal activation for continuous phases: the `active` elements with the
/// largest `|c_m|` (ties to the lower index).
pub fn best_mask_continuous(aggregates: &[Complex64], active: usize) -> Result<ActivationMask> {
    if active == 0 || active > aggregates.len() {
        return Err(Error::InvalidProblem(format!(
            "cannot activate {active} of {} elements",
            aggregates.len()
        )));
    }
    let mut order: Vec<usize> = (0..aggregates.len()).collect();
    order.sort_by(|&a, &b| {
        aggregates[b]
            .norm()
            .total_cmp(&aggregates[a].norm())
            .then(a.cmp(&b))
    });
    ActivationMask::from_indices(aggregates.len(), &order[..active])
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Continuous element movement: each active element is moved within the
/// square cell `±half_width` around its grid position, coordinate by
/// coordinate with golden-section search, to maximize its `|c_m|`. Phases are
/// then re-aligned. A move is kept only if it does not decrease `|c_m|`, so
/// the coherent bound never decreases.
pub fn refine_positions_continuous(
    scenario: &Scenario,
    state: &SurfaceState,
    half_width: f64,
    sweeps: usize,
) -> Result<(SurfaceGeometry, ReflectionConfig)> {
    state.check(&scenario.geometry)?;
    if !(half_width > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "cell half width must be positive, got {half_width}"
        )));
    }
    let mut positions = scenario.geometry.positions().to_vec();
    let single = |positions: &[Vector3<f64>], p: Vector3<f64>, m: usize| -> f64 {
        let g = scenario.geometry.with_positions({
            let mut v = positions.to_vec();
            v[m] = p;
            v
        });
        match g {
            Ok(g) => crate::metrics::element_path_terms(&scenario.channel, &g, &state.patterns, m)
                .into_iter()
                .sum::<Complex64>()
                .norm(),
            Err(_) => 0.0,
        }
    };
    for m in state.mask.active_indices().collect::<Vec<_>>() {
        let home = *scenario.geometry.position(m);
        let mut best = positions[m];
        let mut best_val = single(&positions, best, m);
        for _ in 0..sweeps {
            for axis in 0..2 {
                let lo = home[axis] - half_width;
                let hi = home[axis] + half_width;
                let (x, v) = golden_max(
                    |t| {
                        let mut p = best;
                        p[axis] = t;
                        single(&positions, p, m)
                    },
                    lo,
                    hi,
                    40,
                );
                if v >= best_val {
                    best[axis] = x;
                    best_val = v;
                }
            }
        }
        positions[m] = best;
    }
    let geometry = scenario.geometry.with_positions(positions)?;
    let moved = Scenario {
        geometry: geometry.clone(),
        ..scenario.clone()
    };
    let reflection = align_phases_closed_form(&moved, state, None)?;
    Ok((geometry, reflection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_multipath, ChannelSpec};
    use crate::metrics::{received_power, Mode};
    use crate::surface::grid_positions;

    fn scenario(rows: usize, cols: usize, l: usize, z: usize, seed: u64, noise: f64) -> Scenario {
        let g = grid_positions(rows, cols, 0.004).unwrap();
        let ch = sample_multipath(seed, &ChannelSpec::new(l, z, 0.01)).unwrap();
        Scenario::new(g, ch, noise, Mode::Traditional).unwrap()
    }

    #[test]
    fn single_element_reaches_its_magnitude() {
        let sc = scenario(1, 1, 2, 2, 5, 0.3);
        let mut st = SurfaceState::isotropic(1);
        st.reflection = align_phases_closed_form(&sc, &st, None).unwrap();
        let c = aggregates(&sc.channel, &sc.geometry, &st.patterns)[0];
        let p = received_power(&sc, &st).unwrap();
        assert!((p - (sc.normalization() * c.norm_sqr() + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn alignment_hits_bound() {
        let sc = scenario(3, 3, 2, 3, 8, 0.1);
        let mut st = SurfaceState::isotropic(9);
        st.reflection = align_phases_closed_form(&sc, &st, None).unwrap();
        let p = received_power(&sc, &st).unwrap();
        let bound = coherent_bound(&sc, &st).unwrap();
        assert!((p - bound).abs() < 1e-9 * bound);
    }

    #[test]
    fn top_k_selection() {
        let c = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, -2.0),
        ];
        let m = best_mask_continuous(&c, 2).unwrap();
        assert_eq!(m.active_indices().collect::<Vec<_>>(), vec![1, 2]);
        assert!(best_mask_continuous(&c, 5).is_err());
    }

    #[test]
    fn continuous_refinement_never_hurts() {
        let sc = scenario(3, 3, 1, 3, 2, 0.0);
        let mut st = SurfaceState::isotropic(9);
        st.mask = ActivationMask::from_indices(9, &[0, 4, 8]).unwrap();
        st.reflection = align_phases_closed_form(&sc, &st, None).unwrap();
        let before = received_power(&sc, &st).unwrap();
        let (g, refl) = refine_positions_continuous(&sc, &st, 0.002, 2).unwrap();
        let moved = Scenario {
            geometry: g.clone(),
            ..sc.clone()
        };
        let after = received_power(
            &moved,
            &SurfaceState {
                reflection: refl,
                ..st.clone()
            },
        )
        .unwrap();
        assert!(after >= before * (1.0 - 1e-12));
        for m in 0..9 {
            let d = g.position(m) - sc.geometry.position(m);
            assert!(d.x.abs() <= 0.002 + 1e-12 && d.y.abs() <= 0.002 + 1e-12);
        }
    }
}
