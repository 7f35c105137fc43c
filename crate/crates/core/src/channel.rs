//! Cascaded multipath channel between base station, surface and users.
//!
//! A single-user channel is described hop by hop: `L` paths arrive at the
//! surface from the BS and `Z` paths leave it toward the receiver. The
//! cascaded gain of path `(l, z)` is the product of the two hop gains. Wave
//! directions are plane-wave (far-field) unit vectors, shared by all elements.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::wrap_phase;

/// Unit propagation direction.
///
/// Angles follow the usual antenna convention: `polar` is measured from the
/// +z axis in `[0, π]` and `azimuth` from +x in the xy-plane. Boresight of a
/// directional element is `(azimuth, polar) = (0, π/2)`, i.e. the +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidSpec(format!(
                "direction vector must be finite and nonzero, got {v:?}"
            )));
        }
        Ok(Self(v / n))
    }

    pub fn from_angles(azimuth: f64, polar: f64) -> Self {
        let (sp, cp) = polar.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Self(Vector3::new(sp * ca, sp * sa, cp))
    }

    pub fn boresight() -> Self {
        Self(Vector3::x())
    }

    /// `(azimuth, polar)` in radians, azimuth in (−π, π].
    pub fn angles(&self) -> (f64, f64) {
        let v = &self.0;
        (v.y.atan2(v.x), v.z.clamp(-1.0, 1.0).acos())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// One hop of the cascade: complex gain and the direction seen from the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopPath {
    pub gain: Complex64,
    pub direction: Direction,
}

/// One cascaded `(l, z)` path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub incidence: Direction,
    pub departure: Direction,
}

/// Single-user cascaded channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub bs_paths: Vec<HopPath>,
    pub user_paths: Vec<HopPath>,
    pub wavelength: f64,
}

impl ChannelPair {
    pub fn new(bs_paths: Vec<HopPath>, user_paths: Vec<HopPath>, wavelength: f64) -> Result<Self> {
        if bs_paths.is_empty() || user_paths.is_empty() {
            return Err(Error::InvalidSpec(
                "channel needs at least one BS-side and one user-side path".into(),
            ));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            bs_paths,
            user_paths,
            wavelength,
        })
    }

    pub fn num_bs_paths(&self) -> usize {
        self.bs_paths.len()
    }

    pub fn num_user_paths(&self) -> usize {
        self.user_paths.len()
    }

    /// All `L·Z` cascaded paths, `l`-major.
    pub fn cascade(&self) -> Vec<PathComponent> {
        self.bs_paths
            .iter()
            .flat_map(|bs| {
                self.user_paths.iter().map(move |user| PathComponent {
                    gain: bs.gain * user.gain,
                    incidence: bs.direction,
                    departure: user.direction,
                })
            })
            .collect()
    }

    /// Multiplies every hop gain on the BS side by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for p in &mut out.bs_paths {
            p.gain *= factor;
        }
        out
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            wavelength: self.wavelength,
            bs_paths: self.bs_paths.iter().map(PathRecord::from).collect(),
            user_paths: self.user_paths.iter().map(PathRecord::from).collect(),
        }
    }

    pub fn from_record(rec: &ChannelRecord) -> Result<Self> {
        Self::new(
            rec.bs_paths.iter().map(HopPath::from).collect(),
            rec.user_paths.iter().map(HopPath::from).collect(),
            rec.wavelength,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(&serde_json::from_str(s)?)
    }
}

/// Serialized form of one hop path; angles in radians, gain as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub gain: [f64; 2],
    pub azimuth: f64,
    pub polar: f64,
}

impl From<&HopPath> for PathRecord {
    fn from(p: &HopPath) -> Self {
        let (azimuth, polar) = p.direction.angles();
        Self {
            gain: [p.gain.re, p.gain.im],
            azimuth,
            polar,
        }
    }
}

impl From<&PathRecord> for HopPath {
    fn from(r: &PathRecord) -> Self {
        Self {
            gain: Complex64::new(r.gain[0], r.gain[1]),
            direction: Direction::from_angles(r.azimuth, r.polar),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub wavelength: f64,
    pub bs_paths: Vec<PathRecord>,
    pub user_paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GainDistribution {
    /// Circular complex Gaussian with unit mean power per hop.
    #[default]
    ComplexGaussian,
    /// Unit amplitude, uniform phase.
    UnitModulus,
}

/// Angular ranges (radians) for drawn path directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleDistribution {
    pub azimuth: [f64; 2],
    pub polar: [f64; 2],
}

impl Default for AngleDistribution {
    /// Front half-space of the surface (+x side), polar angle in [π/6, 5π/6].
    fn default() -> Self {
        Self {
            azimuth: [-PI / 2.0, PI / 2.0],
            polar: [PI / 6.0, 5.0 * PI / 6.0],
        }
    }
}

impl AngleDistribution {
    fn validate(&self) -> Result<()> {
        let ok = |r: &[f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ok(&self.azimuth) || !ok(&self.polar) || self.polar[0] < 0.0 || self.polar[1] > PI {
            return Err(Error::InvalidSpec(format!("invalid angle ranges {self:?}")));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Direction {
        let az = uniform(rng, self.azimuth);
        let pol = uniform(rng, self.polar);
        Direction::from_angles(az, pol)
    }
}

fn uniform<R: Rng>(rng: &mut R, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

fn sample_gain<R: Rng>(rng: &mut R, dist: GainDistribution) -> Complex64 {
    match dist {
        GainDistribution::ComplexGaussian => loop {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let g = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            if g.norm() > 0.0 {
                break g;
            }
        },
        GainDistribution::UnitModulus => Complex64::from_polar(1.0, uniform(rng, [-PI, PI])),
    }
}

/// Parameters for drawing a single-user channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Number of BS→surface paths (`L`).
    pub bs_paths: usize,
    /// Number of surface→user paths (`Z`).
    pub user_paths: usize,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    #[serde(default)]
    pub gain: GainDistribution,
    #[serde(default)]
    pub angles: AngleDistribution,
    /// Large-scale amplitude multiplier applied to every cascaded gain.
    #[serde(default = "one")]
    pub gain_scale: f64,
}

fn default_wavelength() -> f64 {
    0.01
}

fn one() -> f64 {
    1.0
}

impl ChannelSpec {
    pub fn new(bs_paths: usize, user_paths: usize, wavelength: f64) -> Self {
        Self {
            bs_paths,
            user_paths,
            wavelength,
            gain: GainDistribution::default(),
            angles: AngleDistribution::default(),
            gain_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_paths == 0 || self.user_paths == 0 {
            return Err(Error::InvalidSpec(format!(
                "path counts must be positive (L={}, Z={})",
                self.bs_paths, self.user_paths
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.gain_scale > 0.0 && self.gain_scale.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "gain_scale must be positive, got {}",
                self.gain_scale
            )));
        }
        self.angles.validate()
    }
}

/// Draws a single-user channel; deterministic in `seed`.
pub fn sample_multipath(seed: u64, spec: &ChannelSpec) -> Result<ChannelPair> {
    spec.validate()?;
    let mut rng = rng::stream(seed, &[rng::STREAM_CHANNEL]);
    let mut draw = |n: usize, scale: f64| -> Vec<HopPath> {
        (0..n)
            .map(|_| HopPath {
                gain: sample_gain(&mut rng, spec.gain) * scale,
                direction: spec.angles.sample(&mut rng),
            })
            .collect()
    };
    let bs = draw(spec.bs_paths, spec.gain_scale);
    let user = draw(spec.user_paths, 1.0);
    ChannelPair::new(bs, user, spec.wavelength)
}

/// `exp(j·2π/λ·(k_r − k_t)ᵀp)`.
pub fn steering_phasor(
    position: &Vector3<f64>,
    departure: &Direction,
    incidence: &Direction,
    wavelength: f64,
) -> Complex64 {
    let phase = 2.0 * PI / wavelength * (departure.0 - incidence.0).dot(position);
    Complex64::from_polar(1.0, phase)
}

/// Geometric phase of one element for one cascaded path, wrapped to (−π, π].
pub fn steering_phase(
    position: &Vector3<f64>,
    departure: &Direction,
    incidence: &Direction,
    wavelength: f64,
) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(wrap_phase(
        2.0 * PI / wavelength * (departure.0 - incidence.0).dot(position),
    ))
}

/// BS-side path: hop gain/incidence plus its angle of departure at the BS array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsPath {
    pub hop: HopPath,
    pub departure_angle: f64,
}

/// Downlink channel from an `N_t`-antenna uniform linear array to `K` users via
/// the surface. All users share the BS→surface paths.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserChannel {
    pub bs_paths: Vec<BsPath>,
    pub users: Vec<Vec<HopPath>>,
    pub wavelength: f64,
    pub tx_antennas: usize,
}

impl MultiUserChannel {
    /// Degenerate single-antenna, single-user channel.
    pub fn from_pair(pair: &ChannelPair) -> Self {
        Self {
            bs_paths: pair
                .bs_paths
                .iter()
                .map(|&hop| BsPath {
                    hop,
                    departure_angle: 0.0,
                })
                .collect(),
            users: vec![pair.user_paths.clone()],
            wavelength: pair.wavelength,
            tx_antennas: 1,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Half-wavelength ULA response toward BS path `l`.
    pub fn steering(&self, l: usize) -> Vec<Complex64> {
        let s = self.bs_paths[l].departure_angle.sin();
        (0..self.tx_antennas)
            .map(|n| Complex64::from_polar(1.0, PI * n as f64 * s))
            .collect()
    }

    pub fn with_tx_antennas(&self, tx_antennas: usize) -> Self {
        Self {
            tx_antennas,
            ..self.clone()
        }
    }

    pub fn user_pair(&self, k: usize) -> Result<ChannelPair> {
        let user = self.users.get(k).ok_or(Error::OutOfRange {
            index: k,
            len: self.users.len(),
        })?;
        ChannelPair::new(
            self.bs_paths.iter().map(|b| b.hop).collect(),
            user.clone(),
            self.wavelength,
        )
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for p in &mut out.bs_paths {
            p.hop.gain *= factor;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiUserSpec {
    pub users: usize,
    pub tx_antennas: usize,
    #[serde(flatten)]
    pub paths: ChannelSpec,
}

/// Draws a multi-user channel. Gains and angles do not depend on
/// `tx_antennas`, so the same seed with a different array size yields the
/// same propagation environment.
pub fn sample_multiuser(seed: u64, spec: &MultiUserSpec) -> Result<MultiUserChannel> {
    spec.paths.validate()?;
    if spec.users == 0 || spec.tx_antennas == 0 {
        return Err(Error::InvalidSpec(
            "users and tx_antennas must be positive".into(),
        ));
    }
    let p = &spec.paths;
    let mut rng = rng::stream(seed, &[rng::STREAM_CHANNEL, 1]);
    let bs_paths = (0..p.bs_paths)
        .map(|_| {
            let gain = sample_gain(&mut rng, p.gain) * p.gain_scale;
            let direction = p.angles.sample(&mut rng);
            let departure_angle = uniform(&mut rng, [-PI / 2.0, PI / 2.0]);
            BsPath {
                hop: HopPath { gain, direction },
                departure_angle,
            }
        })
        .collect();
    let users = (0..spec.users)
        .map(|_| {
            (0..p.user_paths)
                .map(|_| HopPath {
                    gain: sample_gain(&mut rng, p.gain),
                    direction: p.angles.sample(&mut rng),
                })
                .collect()
        })
        .collect();
    Ok(MultiUserChannel {
        bs_paths,
        users,
        wavelength: p.wavelength,
        tx_antennas: spec.tx_antennas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn demo_scale_has_four_paths() {
        let ch = sample_multipath(7, &ChannelSpec::new(1, 4, 0.01)).unwrap();
        assert_eq!(ch.cascade().len(), 4);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ChannelSpec::new(2, 3, 0.01);
        assert_eq!(
            sample_multipath(11, &spec).unwrap(),
            sample_multipath(11, &spec).unwrap()
        );
        assert_ne!(
            sample_multipath(11, &spec).unwrap(),
            sample_multipath(12, &spec).unwrap()
        );
    }

    #[test]
    fn cascade_gains_are_hop_products() {
        let ch = sample_multipath(1, &ChannelSpec::new(2, 3, 0.01)).unwrap();
        let cascade = ch.cascade();
        assert_eq!(cascade.len(), 6);
        for l in 0..2 {
            for z in 0..3 {
                let p = &cascade[l * 3 + z];
                let expected = ch.bs_paths[l].gain * ch.user_paths[z].gain;
                assert_eq!(p.gain, expected);
                assert_eq!(p.incidence, ch.bs_paths[l].direction);
                assert_eq!(p.departure, ch.user_paths[z].direction);
                assert!(p.gain.norm() > 0.0);
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(sample_multipath(0, &ChannelSpec::new(0, 1, 0.01)).is_err());
        assert!(sample_multipath(0, &ChannelSpec::new(1, 0, 0.01)).is_err());
        assert!(sample_multipath(0, &ChannelSpec::new(1, 1, 0.0)).is_err());
        assert!(sample_multipath(0, &ChannelSpec::new(1, 1, -1.0)).is_err());
    }

    #[test]
    fn sampled_directions_in_front_half_space() {
        let ch = sample_multipath(3, &ChannelSpec::new(3, 3, 0.01)).unwrap();
        for p in ch.bs_paths.iter().chain(&ch.user_paths) {
            let (az, pol) = p.direction.angles();
            assert!(az.abs() <= PI / 2.0 + 1e-12);
            assert!((PI / 6.0 - 1e-12..=5.0 * PI / 6.0 + 1e-12).contains(&pol));
            assert!((p.direction.vector().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_phase_hand_values() {
        let o = Vector3::zeros();
        let kr = Direction::new(Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let kt = Direction::new(Vector3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(steering_phase(&o, &kr, &kt, 1.0).unwrap(), 0.0);
        let p = Vector3::new(0.3, -0.2, 0.7);
        assert_eq!(steering_phase(&p, &kr, &kr, 1.0).unwrap(), 0.0);
        let half = steering_phase(&Vector3::new(0.5, 0.0, 0.0), &kr, &kt, 1.0).unwrap();
        assert!(half.abs() < 1e-12);
        let quarter = steering_phase(&Vector3::new(0.25, 0.0, 0.0), &kr, &kt, 1.0).unwrap();
        assert!((quarter - PI).abs() < 1e-12);
        assert!(steering_phase(&p, &kr, &kt, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ch = sample_multipath(5, &ChannelSpec::new(2, 2, 0.05)).unwrap();
        let back = ChannelPair::from_json(&ch.to_json().unwrap()).unwrap();
        assert_eq!(back.wavelength, ch.wavelength);
        for (a, b) in ch.cascade().iter().zip(back.cascade()) {
            assert!((a.gain - b.gain).norm() < 1e-15);
            assert!((a.incidence.vector() - b.incidence.vector()).norm() < 1e-12);
            assert!((a.departure.vector() - b.departure.vector()).norm() < 1e-12);
        }
        let v: serde_json::Value = serde_json::from_str(&ch.to_json().unwrap()).unwrap();
        assert!(v["bs_paths"][0]["gain"].is_array());
    }

    #[test]
    fn multiuser_shares_environment_across_array_sizes() {
        let spec = MultiUserSpec {
            users: 2,
            tx_antennas: 4,
            paths: ChannelSpec::new(2, 2, 0.01),
        };
        let a = sample_multiuser(3, &spec).unwrap();
        let b = sample_multiuser(
            3,
            &MultiUserSpec {
                tx_antennas: 8,
                ..spec.clone()
            },
        )
        .unwrap();
        assert_eq!(a.bs_paths, b.bs_paths);
        assert_eq!(a.users, b.users);
        assert_eq!(a.steering(0).len(), 4);
        assert_eq!(b.steering(0)[..4], a.steering(0)[..]);
        assert_eq!(a.user_pair(1).unwrap().user_paths, a.users[1]);
        assert!(a.user_pair(2).is_err());
    }

    proptest! {
        #[test]
        fn angles_round_trip(az in -3.1f64..3.1, pol in 0.05f64..3.09) {
            let d = Direction::from_angles(az, pol);
            prop_assert!((d.vector().norm() - 1.0).abs() < 1e-12);
            let (a2, p2) = d.angles();
            prop_assert!((a2 - az).abs() < 1e-9);
            prop_assert!((p2 - pol).abs() < 1e-9);
        }

        #[test]
        fn steering_phase_is_linear_in_position(
            x in -1.0f64..1.0, y in -1.0f64..1.0, alpha in -3.0f64..3.0,
            a1 in -3.0f64..3.0, p1 in 0.1f64..3.0, a2 in -3.0f64..3.0, p2 in 0.1f64..3.0,
        ) {
            let kr = Direction::from_angles(a1, p1);
            let kt = Direction::from_angles(a2, p2);
            let p = Vector3::new(x, y, 0.0);
            let base = 2.0 * PI * (kr.vector() - kt.vector()).dot(&p);
            let scaled = steering_phase(&(p * alpha), &kr, &kt, 1.0).unwrap();
            let diff = wrap_phase(scaled - wrap_phase(alpha * base));
            prop_assert!(diff.abs() < 1e-9);
        }
    }
}
