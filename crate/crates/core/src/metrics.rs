//! Received power, achievable rate and multi-user weighted sum rate.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_phasor, ChannelPair, MultiUserChannel};
use crate::error::{Error, Result};
use crate::surface::{
    ActivationMask, BaselinePattern, ElementPatterns, PatternCoeffs, ReflectionConfig, ShBasis,
    SurfaceGeometry,
};

/// Which quantities the optimizer may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Reflection phases only.
    Traditional,
    /// Reflection phases and which elements are on.
    PositionFris,
    /// Element patterns; reflection fixed to 1.
    PatternFris,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Traditional => "traditional",
            Mode::PositionFris => "position-fris",
            Mode::PatternFris => "pattern-fris",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Single-user experiment instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: SurfaceGeometry,
    pub channel: ChannelPair,
    pub noise_power: f64,
    pub mode: Mode,
}

impl Scenario {
    pub fn new(
        geometry: SurfaceGeometry,
        channel: ChannelPair,
        noise_power: f64,
        mode: Mode,
    ) -> Result<Self> {
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "noise power must be >= 0, got {noise_power}"
            )));
        }
        Ok(Self {
            geometry,
            channel,
            noise_power,
            mode,
        })
    }

    /// The `1/(LZ)` normalization.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.channel.num_bs_paths() * self.channel.num_user_paths()) as f64
    }
}

/// Everything the surface controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    pub mask: ActivationMask,
    pub reflection: ReflectionConfig,
    pub patterns: ElementPatterns,
}

impl SurfaceState {
    /// All elements on, zero phase, isotropic elements.
    pub fn isotropic(elements: usize) -> Self {
        Self {
            mask: ActivationMask::all(elements),
            reflection: ReflectionConfig::zeros(elements),
            patterns: ElementPatterns::Baseline(BaselinePattern::Isotropic),
        }
    }

    pub fn elements(&self) -> usize {
        self.mask.len()
    }

    pub fn check(&self, geometry: &SurfaceGeometry) -> Result<()> {
        let m = geometry.len();
        if self.mask.len() != m || self.reflection.len() != m {
            return Err(Error::InvalidState(format!(
                "geometry has {m} elements, mask {} and reflection {}",
                self.mask.len(),
                self.reflection.len()
            )));
        }
        if let Some(p) = self.patterns.elements() {
            if p != m {
                return Err(Error::InvalidState(format!(
                    "geometry has {m} elements, patterns {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_record(&self, geometry: &SurfaceGeometry) -> SurfaceRecord {
        let (patterns, energy_budget, basis_order, baseline) = match &self.patterns {
            ElementPatterns::Baseline(b) => (None, None, None, Some(b.name().to_string())),
            ElementPatterns::Coefficients(c) => (
                Some(
                    (0..c.elements())
                        .map(|m| c.element(m).iter().map(|z| [z.re, z.im]).collect())
                        .collect(),
                ),
                Some(c.energy_budget()),
                Some(c.basis().order()),
                None,
            ),
        };
        SurfaceRecord {
            geometry: GeometryRecord {
                rows: geometry.rows(),
                cols: geometry.cols(),
                spacing: geometry.spacing(),
            },
            mask: self.mask.to_bit_string(),
            phases: self.reflection.phases().to_vec(),
            bits: self.reflection.bits(),
            baseline_pattern: baseline,
            basis_order,
            patterns,
            energy_budget,
        }
    }

    pub fn from_record(rec: &SurfaceRecord) -> Result<(SurfaceGeometry, Self)> {
        let geometry = crate::surface::grid_positions(
            rec.geometry.rows,
            rec.geometry.cols,
            rec.geometry.spacing,
        )?;
        let mask = ActivationMask::from_bit_string(&rec.mask)?;
        let reflection = match rec.bits {
            Some(b) => ReflectionConfig::quantized(&rec.phases, b)?,
            None => ReflectionConfig::continuous(rec.phases.clone()),
        };
        let patterns = match (&rec.baseline_pattern, &rec.patterns) {
            (Some(name), None) => ElementPatterns::Baseline(BaselinePattern::from_name(name)?),
            (None, Some(per_element)) => {
                let order = rec
                    .basis_order
                    .ok_or_else(|| Error::InvalidState("missing basis_order".into()))?;
                let budget = rec
                    .energy_budget
                    .ok_or_else(|| Error::InvalidState("missing energy_budget".into()))?;
                let flat = per_element
                    .iter()
                    .flatten()
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect();
                ElementPatterns::Coefficients(PatternCoeffs::from_coeffs(
                    ShBasis::new(order),
                    flat,
                    budget,
                )?)
            }
            _ => {
                return Err(Error::InvalidState(
                    "exactly one of baseline_pattern and patterns must be present".into(),
                ))
            }
        };
        let state = Self {
            mask,
            reflection,
            patterns,
        };
        state.check(&geometry)?;
        Ok((geometry, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

/// JSON form of a surface state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub geometry: GeometryRecord,
    /// `0`/`1` per element.
    pub mask: String,
    pub phases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_order: Option<usize>,
    /// Per element, `[re, im]` per basis function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_budget: Option<f64>,
}

/// Per-path contributions of element `m`, i.e. `g·f_eff·e^{jφ}` for every
/// cascaded path in `l`-major order.
pub fn element_path_terms(
    channel: &ChannelPair,
    geometry: &SurfaceGeometry,
    patterns: &ElementPatterns,
    m: usize,
) -> Vec<Complex64> {
    let p = geometry.position(m);
    channel
        .cascade()
        .iter()
        .map(|path| {
            path.gain
                * patterns.effective_gain(m, &path.incidence, &path.departure)
                * steering_phasor(p, &path.departure, &path.incidence, channel.wavelength)
        })
        .collect()
}

/// `c_m = Σ_l Σ_z g_{l,z}·f_eff(m,l,z)·e^{jφ_{m,l,z}}`, so that the coherent
/// sum inside the received power is `Σ_m ϑ_m c_m`.
pub fn per_element_aggregate(
    scenario: &Scenario,
    state: &SurfaceState,
    m: usize,
) -> Result<Complex64> {
    if m >= scenario.geometry.len() {
        return Err(Error::OutOfRange {
            index: m,
            len: scenario.geometry.len(),
        });
    }
    state.check(&scenario.geometry)?;
    Ok(
        element_path_terms(&scenario.channel, &scenario.geometry, &state.patterns, m)
            .into_iter()
            .sum(),
    )
}

/// `c_m` for every element of the geometry.
pub fn aggregates(
    channel: &ChannelPair,
    geometry: &SurfaceGeometry,
    patterns: &ElementPatterns,
) -> Vec<Complex64> {
    (0..geometry.len())
        .map(|m| {
            element_path_terms(channel, geometry, patterns, m)
                .into_iter()
                .sum()
        })
        .collect()
}

/// Coherent sum `Σ_{m active} ϑ_m c_m` (before normalization).
pub fn coherent_sum(scenario: &Scenario, state: &SurfaceState) -> Result<Complex64> {
    state.check(&scenario.geometry)?;
    let mut total = Complex64::new(0.0, 0.0);
    for m in state.mask.active_indices() {
        let c: Complex64 =
            element_path_terms(&scenario.channel, &scenario.geometry, &state.patterns, m)
                .into_iter()
                .sum();
        total += state.reflection.coefficient(m) * c;
    }
    Ok(total)
}

/// Received power `(1/(LZ))·|Σ_m ϑ_m Σ_l Σ_z g f e^{jφ}|² + σ²`.
pub fn received_power(scenario: &Scenario, state: &SurfaceState) -> Result<f64> {
    Ok(scenario.normalization() * coherent_sum(scenario, state)?.norm_sqr() + scenario.noise_power)
}

/// Per-path phasors after modulation: `Σ_{m active} ϑ_m g f e^{jφ}` for each
/// cascaded path, `l`-major. Their sum is the coherent sum.
pub fn path_phasors(scenario: &Scenario, state: &SurfaceState) -> Result<Vec<Complex64>> {
    state.check(&scenario.geometry)?;
    let n = scenario.channel.num_bs_paths() * scenario.channel.num_user_paths();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for m in state.mask.active_indices() {
        let theta = state.reflection.coefficient(m);
        for (acc, t) in out.iter_mut().zip(element_path_terms(
            &scenario.channel,
            &scenario.geometry,
            &state.patterns,
            m,
        )) {
            *acc += theta * t;
        }
    }
    Ok(out)
}

/// Shannon rate of a received power that includes the noise term.
pub fn achievable_rate(power: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    Ok((1.0 + (power - noise).max(0.0) / noise).log2())
}

/// Multi-user downlink instance.
#[derive(Debug, Clone)]
pub struct MultiUserScenario {
    pub geometry: SurfaceGeometry,
    pub channel: MultiUserChannel,
    pub noise_power: f64,
    pub power_budget: f64,
    pub weights: Vec<f64>,
}

impl MultiUserScenario {
    pub fn new(
        geometry: SurfaceGeometry,
        channel: MultiUserChannel,
        noise_power: f64,
        power_budget: f64,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let k = channel.num_users();
        let weights = weights.unwrap_or_else(|| vec![1.0 / k as f64; k]);
        if weights.len() != k || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "need {k} positive weights, got {weights:?}"
            )));
        }
        if !(noise_power > 0.0) || !(power_budget > 0.0) {
            return Err(Error::InvalidSpec(
                "noise power and power budget must be positive".into(),
            ));
        }
        Ok(Self {
            geometry,
            channel,
            noise_power,
            power_budget,
            weights,
        })
    }

    /// Single-user, single-antenna version of a [`Scenario`] with unit transmit power.
    pub fn from_single(scenario: &Scenario, noise_power: f64) -> Result<Self> {
        Self::new(
            scenario.geometry.clone(),
            MultiUserChannel::from_pair(&scenario.channel),
            noise_power,
            1.0,
            Some(vec![1.0]),
        )
    }

    pub fn num_users(&self) -> usize {
        self.channel.num_users()
    }

    pub fn normalization(&self) -> f64 {
        1.0 / (self.channel.bs_paths.len() * self.channel.users[0].len()) as f64
    }
}

/// Effective `N_t`-vector channel of user `k`: the MISO generalization of the
/// single-user coherent sum, scaled by `1/√(LZ)`.
pub fn effective_user_channel(
    scenario: &MultiUserScenario,
    state: &SurfaceState,
    k: usize,
) -> Result<DVector<Complex64>> {
    let ch = &scenario.channel;
    if k >= ch.num_users() {
        return Err(Error::OutOfRange {
            index: k,
            len: ch.num_users(),
        });
    }
    state.check(&scenario.geometry)?;
    let per_path = user_path_sums(scenario, state, k);
    let mut h = DVector::<Complex64>::zeros(ch.tx_antennas);
    for (l, s) in per_path.iter().enumerate() {
        for (hn, a) in h.iter_mut().zip(ch.steering(l)) {
            *hn += a * s;
        }
    }
    Ok(h * Complex64::new(scenario.normalization().sqrt(), 0.0))
}

/// For each BS path `l`: `Σ_{m active} ϑ_m Σ_z g_l g_{k,z} f_eff e^{jφ}`.
fn user_path_sums(scenario: &MultiUserScenario, state: &SurfaceState, k: usize) -> Vec<Complex64> {
    let ch = &scenario.channel;
    let user = &ch.users[k];
    let mut out = vec![Complex64::new(0.0, 0.0); ch.bs_paths.len()];
    for m in state.mask.active_indices() {
        let p = scenario.geometry.position(m);
        let theta = state.reflection.coefficient(m);
        for (l, bs) in ch.bs_paths.iter().enumerate() {
            let f_in = state.patterns.gain(m, &bs.hop.direction);
            let mut acc = Complex64::new(0.0, 0.0);
            for u in user {
                acc += u.gain
                    * state.patterns.gain(m, &u.direction)
                    * steering_phasor(p, &u.direction, &bs.hop.direction, ch.wavelength);
            }
            out[l] += theta * bs.hop.gain * f_in * acc;
        }
    }
    out
}

/// Per-user transmit beamformers with a total power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub vectors: Vec<DVector<Complex64>>,
    pub power_budget: f64,
}

impl PrecoderSet {
    pub fn zeros(users: usize, tx_antennas: usize, power_budget: f64) -> Self {
        Self {
            vectors: vec![DVector::zeros(tx_antennas); users],
            power_budget,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.vectors.iter().map(|w| w.norm_squared()).sum()
    }
}

/// `Σ_k α_k log2(1 + |h_kᴴw_k|² / (Σ_{j≠k}|h_kᴴw_j|² + σ²))`.
pub fn weighted_sum_rate(
    channels: &[DVector<Complex64>],
    precoders: &PrecoderSet,
    weights: &[f64],
    noise: f64,
) -> Result<f64> {
    let k = channels.len();
    if precoders.vectors.len() != k || weights.len() != k {
        return Err(Error::InvalidSpec(format!(
            "{} channels, {} precoders, {} weights",
            k,
            precoders.vectors.len(),
            weights.len()
        )));
    }
    if let Some(h) = channels.first() {
        let n = h.len();
        if channels
            .iter()
            .chain(&precoders.vectors)
            .any(|v| v.len() != n)
        {
            return Err(Error::InvalidSpec("inconsistent antenna counts".into()));
        }
    }
    let mut total = 0.0;
    for (i, h) in channels.iter().enumerate() {
        let mut interference = noise;
        let mut signal = 0.0;
        for (j, w) in precoders.vectors.iter().enumerate() {
            let s = h.dotc(w).norm_sqr();
            if i == j {
                signal = s;
            } else {
                interference += s;
            }
        }
        total += weights[i] * (1.0 + signal / interference).log2();
    }
    Ok(total)
}
