//! Alternating WMMSE / projected-gradient design of element patterns
//! (pattern-reconfigurable surface) and of reflection phases (traditional
//! surface) for the multi-user downlink.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::discrete::TraceRow;
use super::wmmse::wmmse_with_trace;
use crate::channel::steering_phasor;
use crate::error::{Error, Result};
use crate::metrics::{weighted_sum_rate, MultiUserScenario, PrecoderSet, Scenario};
use crate::rng;
use crate::surface::{BaselinePattern, PatternCoeffs, ReflectionConfig, ShBasis, ISOTROPIC_ENERGY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternOptParams {
    /// Initial step, relative to the norm of the current point (patterns) or
    /// in radians (phases).
    pub step_size: f64,
    pub max_iterations: usize,
    /// Step shrink factor on a failed trial step.
    pub backtracking: f64,
    pub wmmse_iterations: usize,
    /// Stop after a few outer iterations with relative gain below this.
    pub tolerance: f64,
}

impl Default for PatternOptParams {
    fn default() -> Self {
        Self {
            step_size: 0.2,
            max_iterations: 300,
            backtracking: 0.5,
            wmmse_iterations: 20,
            tolerance: 1e-9,
        }
    }
}

impl PatternOptParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0)
            || self.max_iterations == 0
            || !(self.backtracking > 0.0 && self.backtracking < 1.0)
            || self.wmmse_iterations == 0
            || !(self.tolerance >= 0.0)
        {
            return Err(Error::InvalidProblem(format!(
                "invalid pattern optimizer parameters {self:?}"
            )));
        }
        Ok(())
    }
}

const MAX_HALVINGS: usize = 20;
const STALL_LIMIT: usize = 5;

/// Precomputed path terms for every (user, element, BS path, user path).
struct PathCache {
    users: usize,
    elements: usize,
    bs_paths: usize,
    user_paths: usize,
    /// `g_l g_{k,z} e^{jφ} / √(LZ)`, indexed `((k·M + m)·L + l)·Z + z`.
    coef: Vec<Complex64>,
    steering: Vec<DVector<Complex64>>,
    y_in: Vec<Vec<f64>>,
    /// indexed `k·Z + z`
    y_dep: Vec<Vec<f64>>,
    fixed_in: Vec<f64>,
    fixed_dep: Vec<f64>,
}

impl PathCache {
    fn new(
        scenario: &MultiUserScenario,
        basis: Option<&ShBasis>,
        fixed: Option<BaselinePattern>,
    ) -> Self {
        let ch = &scenario.channel;
        let (kk, mm, ll) = (ch.num_users(), scenario.geometry.len(), ch.bs_paths.len());
        let zz = ch.users[0].len();
        let norm = scenario.normalization().sqrt();
        let mut coef = Vec::with_capacity(kk * mm * ll * zz);
        for user in &ch.users {
            for m in 0..mm {
                let p = scenario.geometry.position(m);
                for bs in &ch.bs_paths {
                    for u in user {
                        coef.push(
                            bs.hop.gain
                                * u.gain
                                * steering_phasor(
                                    p,
                                    &u.direction,
                                    &bs.hop.direction,
                                    ch.wavelength,
                                )
                                * norm,
                        );
                    }
                }
            }
        }
        let steering = (0..ll).map(|l| DVector::from_vec(ch.steering(l))).collect();
        let (y_in, y_dep) = match basis {
            Some(b) => (
                ch.bs_paths
                    .iter()
                    .map(|bs| b.eval(&bs.hop.direction))
                    .collect(),
                ch.users
                    .iter()
                    .flat_map(|u| u.iter().map(|p| b.eval(&p.direction)))
                    .collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        let pat = fixed.unwrap_or(BaselinePattern::Isotropic);
        let fixed_in = ch
            .bs_paths
            .iter()
            .map(|bs| pat.amplitude(&bs.hop.direction))
            .collect();
        let fixed_dep = ch
            .users
            .iter()
            .flat_map(|u| u.iter().map(|p| pat.amplitude(&p.direction)))
            .collect();
        Self {
            users: kk,
            elements: mm,
            bs_paths: ll,
            user_paths: zz,
            coef,
            steering,
            y_in,
            y_dep,
            fixed_in,
            fixed_dep,
        }
    }

    fn idx(&self, k: usize, m: usize, l: usize, z: usize) -> usize {
        ((k * self.elements + m) * self.bs_paths + l) * self.user_paths + z
    }

    /// Element pattern values toward every BS path and every user path.
    fn pattern_values(
        &self,
        coeffs: &[Complex64],
        q: usize,
        m: usize,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let c = &coeffs[m * q..(m + 1) * q];
        let eval = |y: &Vec<f64>| c.iter().zip(y).map(|(c, y)| c * y).sum::<Complex64>();
        (
            self.y_in.iter().map(eval).collect(),
            self.y_dep.iter().map(eval).collect(),
        )
    }

    /// Per-(k, m, l) element terms `f_in Σ_z coef f_dep` (without ϑ).
    fn element_terms(
        &self,
        f_in: &[Complex64],
        f_dep: &[Complex64],
        k: usize,
        m: usize,
        l: usize,
    ) -> Complex64 {
        let base = self.idx(k, m, l, 0);
        let acc: Complex64 = (0..self.user_paths)
            .map(|z| self.coef[base + z] * f_dep[k * self.user_paths + z])
            .sum();
        f_in[l] * acc
    }

    fn channels_from_terms(
        &self,
        terms: impl Fn(usize, usize, usize) -> Complex64,
    ) -> Vec<DVector<Complex64>> {
        (0..self.users)
            .map(|k| {
                let mut h = DVector::zeros(self.steering[0].len());
                for l in 0..self.bs_paths {
                    let s: Complex64 = (0..self.elements).map(|m| terms(k, m, l)).sum();
                    h.axpy(s, &self.steering[l], Complex64::new(1.0, 0.0));
                }
                h
            })
            .collect()
    }

    fn channels_patterns(&self, coeffs: &[Complex64], q: usize) -> Vec<DVector<Complex64>> {
        let values: Vec<_> = (0..self.elements)
            .map(|m| self.pattern_values(coeffs, q, m))
            .collect();
        self.channels_from_terms(|k, m, l| self.element_terms(&values[m].0, &values[m].1, k, m, l))
    }

    fn channels_phases(&self, phases: &[f64]) -> Vec<DVector<Complex64>> {
        let fixed_in: Vec<Complex64> = self
            .fixed_in
            .iter()
            .map(|&a| Complex64::new(a, 0.0))
            .collect();
        let fixed_dep: Vec<Complex64> = self
            .fixed_dep
            .iter()
            .map(|&a| Complex64::new(a, 0.0))
            .collect();
        self.channels_from_terms(|k, m, l| {
            Complex64::from_polar(1.0, phases[m])
                * self.element_terms(&fixed_in, &fixed_dep, k, m, l)
        })
    }

    /// `ζ_{k,l} = a_lᴴ G_k`.
    fn zeta(&self, g: &[DVector<Complex64>]) -> Vec<Complex64> {
        (0..self.users)
            .flat_map(|k| (0..self.bs_paths).map(move |l| self.steering[l].dotc(&g[k])))
            .collect()
    }
}

/// `∂WSR/∂conj(h_k)` for fixed precoders.
fn wsr_channel_gradient(
    channels: &[DVector<Complex64>],
    w: &PrecoderSet,
    weights: &[f64],
    noise: f64,
) -> Vec<DVector<Complex64>> {
    channels
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let s: Vec<Complex64> = w.vectors.iter().map(|wj| h.dotc(wj)).collect();
            let total: f64 = s.iter().map(|x| x.norm_sqr()).sum::<f64>() + noise;
            let interference = total - s[k].norm_sqr();
            let mut g = DVector::zeros(h.len());
            for (j, wj) in w.vectors.iter().enumerate() {
                let mut coeff = s[j].conj() / total;
                if j != k {
                    coeff -= s[j].conj() / interference;
                }
                g.axpy(coeff, wj, Complex64::new(1.0, 0.0));
            }
            g * Complex64::new(weights[k] / LN_2, 0.0)
        })
        .collect()
}

/// Gradient of the weighted sum rate with respect to the pattern coefficients
/// (all elements active, unit reflection), precoders held fixed.
///
/// Entry `(m, q)` is `∂WSR/∂Re c_{m,q} + j·∂WSR/∂Im c_{m,q}`.
pub fn pattern_gradient(
    scenario: &MultiUserScenario,
    patterns: &PatternCoeffs,
    precoders: &PrecoderSet,
) -> Result<Vec<Complex64>> {
    check_pattern_inputs(scenario, patterns)?;
    let cache = PathCache::new(scenario, Some(patterns.basis()), None);
    let q = patterns.basis().len();
    let h = cache.channels_patterns(patterns.as_slice(), q);
    let g = wsr_channel_gradient(&h, precoders, &scenario.weights, scenario.noise_power);
    Ok(pattern_gradient_cached(&cache, patterns.as_slice(), q, &g))
}

fn pattern_gradient_cached(
    cache: &PathCache,
    coeffs: &[Complex64],
    q: usize,
    g: &[DVector<Complex64>],
) -> Vec<Complex64> {
    let zeta = cache.zeta(g);
    let zz = cache.user_paths;
    let mut grad = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    for m in 0..cache.elements {
        let (f_in, f_dep) = cache.pattern_values(coeffs, q, m);
        let out = &mut grad[m * q..(m + 1) * q];
        for k in 0..cache.users {
            for l in 0..cache.bs_paths {
                let zkl = zeta[k * cache.bs_paths + l];
                let base = cache.idx(k, m, l, 0);
                // weight on Y_in[l]
                let mut w_in = Complex64::new(0.0, 0.0);
                for z in 0..zz {
                    let t = cache.coef[base + z].conj() * zkl;
                    w_in += t * f_dep[k * zz + z].conj();
                    let w_dep = t * f_in[l].conj();
                    for (o, y) in out.iter_mut().zip(&cache.y_dep[k * zz + z]) {
                        *o += w_dep * y;
                    }
                }
                for (o, y) in out.iter_mut().zip(&cache.y_in[l]) {
                    *o += w_in * y;
                }
            }
        }
    }
    for v in &mut grad {
        *v *= 2.0;
    }
    grad
}

/// Gradient of the weighted sum rate with respect to the reflection phases of
/// a surface with fixed element pattern `pattern`, precoders held fixed.
pub fn phase_gradient(
    scenario: &MultiUserScenario,
    pattern: BaselinePattern,
    phases: &[f64],
    precoders: &PrecoderSet,
) -> Result<Vec<f64>> {
    let cache = PathCache::new(scenario, None, Some(pattern));
    if phases.len() != cache.elements {
        return Err(Error::InvalidState(format!(
            "{} phases for {} elements",
            phases.len(),
            cache.elements
        )));
    }
    let h = cache.channels_phases(phases);
    let g = wsr_channel_gradient(&h, precoders, &scenario.weights, scenario.noise_power);
    Ok(phase_gradient_cached(&cache, phases, &g))
}

fn phase_gradient_cached(cache: &PathCache, phases: &[f64], g: &[DVector<Complex64>]) -> Vec<f64> {
    let zeta = cache.zeta(g);
    let fixed_in: Vec<Complex64> = cache
        .fixed_in
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    let fixed_dep: Vec<Complex64> = cache
        .fixed_dep
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    (0..cache.elements)
        .map(|m| {
            let theta = Complex64::from_polar(1.0, phases[m]);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..cache.users {
                for l in 0..cache.bs_paths {
                    acc += zeta[k * cache.bs_paths + l].conj()
                        * theta
                        * cache.element_terms(&fixed_in, &fixed_dep, k, m, l);
                }
            }
            2.0 * (Complex64::new(0.0, 1.0) * acc).re
        })
        .collect()
}

fn check_pattern_inputs(scenario: &MultiUserScenario, patterns: &PatternCoeffs) -> Result<()> {
    if patterns.elements() != scenario.geometry.len() {
        return Err(Error::InvalidState(format!(
            "{} pattern elements for {} surface elements",
            patterns.elements(),
            scenario.geometry.len()
        )));
    }
    Ok(())
}

/// Shared alternating loop: WMMSE for the current point, then one
/// backtracking gradient step on the surface variables.
#[allow(clippy::too_many_arguments)]
fn alternate<P: Clone>(
    scenario: &MultiUserScenario,
    params: &PatternOptParams,
    mut point: P,
    channels: impl Fn(&P) -> Vec<DVector<Complex64>>,
    gradient: impl Fn(&P, &[DVector<Complex64>]) -> Vec<f64>,
    step: impl Fn(&P, &[f64], f64) -> P,
    max_step: f64,
    init_precoders: Option<&PrecoderSet>,
) -> Result<(P, PrecoderSet, Vec<TraceRow>)> {
    let (weights, noise, power) = (
        &scenario.weights,
        scenario.noise_power,
        scenario.power_budget,
    );
    let mut h = channels(&point);
    let res = wmmse_with_trace(
        &h,
        weights,
        power,
        noise,
        params.wmmse_iterations,
        init_precoders,
    )?;
    let mut w = res.precoders;
    let mut rate = weighted_sum_rate(&h, &w, weights, noise)?;
    let mut trace = vec![TraceRow {
        iteration: 0,
        best_objective: rate,
        mean_objective: rate,
        entropy: None,
    }];
    let mut s = params.step_size;
    let mut stalls = 0;

    for it in 1..=params.max_iterations {
        let g = wsr_channel_gradient(&h, &w, weights, noise);
        let grad = gradient(&point, &g);
        if grad.iter().all(|v| *v == 0.0) {
            break;
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = step(&point, &grad, s);
            let hc = channels(&cand);
            let rc = weighted_sum_rate(&hc, &w, weights, noise)?;
            if rc > rate {
                accepted = Some((cand, hc));
                break;
            }
            s *= params.backtracking;
        }
        let Some((cand, hc)) = accepted else { break };
        point = cand;
        h = hc;
        let res = wmmse_with_trace(&h, weights, power, noise, params.wmmse_iterations, Some(&w))?;
        w = res.precoders;
        let new_rate = weighted_sum_rate(&h, &w, weights, noise)?;
        let gain = new_rate - rate;
        rate = new_rate;
        trace.push(TraceRow {
            iteration: it,
            best_objective: rate,
            mean_objective: rate,
            entropy: None,
        });
        s = (s / params.backtracking).min(max_step);
        if gain <= params.tolerance * rate.abs().max(1e-300) {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Ok((point, w, trace))
}

#[derive(Debug, Clone)]
pub struct PatternOptResult {
    pub patterns: PatternCoeffs,
    pub precoders: PrecoderSet,
    /// Weighted sum rate per outer iteration (non-decreasing).
    pub trace: Vec<TraceRow>,
}

impl PatternOptResult {
    pub fn wsr(&self) -> f64 {
        self.trace.last().map(|r| r.best_objective).unwrap_or(0.0)
    }
}

/// Pattern-reconfigurable surface design: all elements on, unit reflection,
/// per-element coefficient vectors on `basis` with energy at most
/// `energy_budget`.
///
/// Without `init`, the start point is the better of a full-budget isotropic
/// pattern and a full-budget constant pattern with seeded random per-element
/// phases; the isotropic pattern is therefore dominated. `precoders`, when
/// given, warm-starts the first WMMSE solve. Every iterate is feasible and the
/// trace never decreases.
pub fn optimize_patterns(
    scenario: &MultiUserScenario,
    basis: ShBasis,
    energy_budget: f64,
    params: &PatternOptParams,
    seed: u64,
    init: Option<&PatternCoeffs>,
    precoders: Option<&PrecoderSet>,
) -> Result<PatternOptResult> {
    params.validate()?;
    if !(energy_budget > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "energy budget must be positive, got {energy_budget}"
        )));
    }
    let elements = scenario.geometry.len();
    let q = basis.len();
    let cache = PathCache::new(scenario, Some(&basis), None);
    let amp = (energy_budget / ISOTROPIC_ENERGY).sqrt();

    let start = match init {
        Some(p) => {
            if p.basis() != &basis || p.elements() != elements {
                return Err(Error::InvalidProblem(
                    "initial patterns do not match basis or element count".into(),
                ));
            }
            let mut p = PatternCoeffs::from_coeffs(basis, p.as_slice().to_vec(), energy_budget)?;
            p.project_in_place();
            p
        }
        None => {
            let iso = PatternCoeffs::uniform_constant(
                elements,
                basis,
                energy_budget,
                Complex64::new(amp, 0.0),
            )?;
            let mut r = rng::stream(seed, &[rng::STREAM_PATTERN]);
            let mut random = iso.clone();
            for m in 0..elements {
                let phase = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                random.element_mut(m)[0] =
                    Complex64::from_polar(amp * ISOTROPIC_ENERGY.sqrt(), phase);
            }
            let score = |p: &PatternCoeffs| -> Result<f64> {
                let h = cache.channels_patterns(p.as_slice(), q);
                let w = wmmse_with_trace(
                    &h,
                    &scenario.weights,
                    scenario.power_budget,
                    scenario.noise_power,
                    params.wmmse_iterations,
                    None,
                )?;
                weighted_sum_rate(&h, &w.precoders, &scenario.weights, scenario.noise_power)
            };
            if score(&random)? > score(&iso)? {
                random
            } else {
                iso
            }
        }
    };

    let flat = |v: &[Complex64]| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    let (best, precoders, trace) = alternate(
        scenario,
        params,
        start,
        |p| cache.channels_patterns(p.as_slice(), q),
        |p, g| flat(&pattern_gradient_cached(&cache, p.as_slice(), q, g)),
        |p, grad, s| {
            // On the energy sphere the radial part of the gradient is undone by
            // the projection; step along the tangential part instead.
            let mut dir = grad.to_vec();
            for (m, c) in p.as_slice().chunks(q).enumerate() {
                let d = &mut dir[2 * m * q..2 * (m + 1) * q];
                let norm2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
                let radial: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(i, z)| z.re * d[2 * i] + z.im * d[2 * i + 1])
                    .sum();
                if radial > 0.0 && norm2 >= energy_budget * (1.0 - 1e-9) {
                    for (i, z) in c.iter().enumerate() {
                        d[2 * i] -= radial / norm2 * z.re;
                        d[2 * i + 1] -= radial / norm2 * z.im;
                    }
                }
            }
            let gnorm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let pnorm = p
                .as_slice()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
                .max(1e-12);
            let scale = s * pnorm / gnorm;
            let mut next = p.clone();
            for (i, c) in next.as_mut_slice().iter_mut().enumerate() {
                *c += Complex64::new(dir[2 * i], dir[2 * i + 1]) * scale;
            }
            next.project_in_place();
            next
        },
        1.0,
        precoders,
    )?;
    Ok(PatternOptResult {
        patterns: best,
        precoders,
        trace,
    })
}

/// Globally optimal patterns for a single-antenna, single-user link with
/// unit reflection on every element.
///
/// Element `m` contributes `cᵀ S_m c` with `S_m` the symmetric part of
/// `Σ_{l,z} g e^{jφ} y(inc_l) y(dep_z)ᵀ`. Its largest modulus over the energy
/// ball is `E·σ_max(S_m)`, reached by the top eigenvector of the real form
/// `[[Re S, −Im S], [−Im S, −Re S]]`; that solution already makes the
/// contribution real and positive, so all elements add in phase.
pub fn optimal_patterns_single_user(
    scenario: &Scenario,
    basis: ShBasis,
    energy_budget: f64,
) -> Result<PatternCoeffs> {
    if !(energy_budget > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "energy budget must be positive, got {energy_budget}"
        )));
    }
    let ch = &scenario.channel;
    let q = basis.len();
    let y_in: Vec<Vec<f64>> = ch
        .bs_paths
        .iter()
        .map(|p| basis.eval(&p.direction))
        .collect();
    let y_dep: Vec<Vec<f64>> = ch
        .user_paths
        .iter()
        .map(|p| basis.eval(&p.direction))
        .collect();
    let mut coeffs = Vec::with_capacity(scenario.geometry.len() * q);
    for pos in scenario.geometry.positions() {
        let mut s = DMatrix::<Complex64>::zeros(q, q);
        for (l, bs) in ch.bs_paths.iter().enumerate() {
            for (z, u) in ch.user_paths.iter().enumerate() {
                let coef = bs.gain
                    * u.gain
                    * steering_phasor(pos, &u.direction, &bs.direction, ch.wavelength);
                for i in 0..q {
                    for j in 0..q {
                        s[(i, j)] +=
                            coef * 0.5 * (y_in[l][i] * y_dep[z][j] + y_dep[z][i] * y_in[l][j]);
                    }
                }
            }
        }
        let mut real = DMatrix::<f64>::zeros(2 * q, 2 * q);
        for i in 0..q {
            for j in 0..q {
                let v = s[(i, j)];
                real[(i, j)] = v.re;
                real[(i, j + q)] = -v.im;
                real[(i + q, j)] = -v.im;
                real[(i + q, j + q)] = -v.re;
            }
        }
        let eig = real.symmetric_eigen();
        let top =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold(0, |b, (i, v)| if *v > eig.eigenvalues[b] { i } else { b });
        let v = eig.eigenvectors.column(top);
        let scale = energy_budget.sqrt() / v.norm().max(f64::MIN_POSITIVE);
        coeffs.extend((0..q).map(|i| Complex64::new(v[i], v[i + q]) * scale));
    }
    PatternCoeffs::from_coeffs(basis, coeffs, energy_budget)
}

#[derive(Debug, Clone)]
pub struct PhaseOptResult {
    pub reflection: ReflectionConfig,
    pub precoders: PrecoderSet,
    pub trace: Vec<TraceRow>,
}

impl PhaseOptResult {
    pub fn wsr(&self) -> f64 {
        self.trace.last().map(|r| r.best_objective).unwrap_or(0.0)
    }
}

/// Traditional surface in the multi-user downlink: continuous reflection
/// phases on all elements with a fixed element pattern.
///
/// Without `init`, phases start co-phased for the sum of the users'
/// single-antenna channels.
pub fn optimize_phases_multiuser(
    scenario: &MultiUserScenario,
    pattern: BaselinePattern,
    params: &PatternOptParams,
    init: Option<&[f64]>,
) -> Result<PhaseOptResult> {
    params.validate()?;
    let cache = PathCache::new(scenario, None, Some(pattern));
    let start: Vec<f64> = match init {
        Some(p) if p.len() == cache.elements => p.to_vec(),
        Some(p) => {
            return Err(Error::InvalidState(format!(
                "{} phases for {} elements",
                p.len(),
                cache.elements
            )));
        }
        None => {
            let fixed_in: Vec<Complex64> = cache
                .fixed_in
                .iter()
                .map(|&a| Complex64::new(a, 0.0))
                .collect();
            let fixed_dep: Vec<Complex64> = cache
                .fixed_dep
                .iter()
                .map(|&a| Complex64::new(a, 0.0))
                .collect();
            (0..cache.elements)
                .map(|m| {
                    let c: Complex64 = (0..cache.users)
                        .flat_map(|k| (0..cache.bs_paths).map(move |l| (k, l)))
                        .map(|(k, l)| cache.element_terms(&fixed_in, &fixed_dep, k, m, l))
                        .sum();
                    if c.norm() > 0.0 {
                        -c.arg()
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    let (phases, precoders, trace) = alternate(
        scenario,
        params,
        start,
        |p| cache.channels_phases(p),
        |p, g| phase_gradient_cached(&cache, p, g),
        |p, grad, s| {
            let gmax = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            p.iter()
                .zip(grad)
                .map(|(x, g)| crate::wrap_phase(x + s * g / gmax))
                .collect()
        },
        std::f64::consts::PI,
        None,
    )?;
    Ok(PhaseOptResult {
        reflection: ReflectionConfig::continuous(phases),
        precoders,
        trace,
    })
}
