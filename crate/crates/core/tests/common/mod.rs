//! Independent reference implementations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the crate's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

use fris::channel::{ChannelPair, Direction, HopPath};
use fris::metrics::{Mode, Scenario, SurfaceState};
use fris::surface::{
    grid_positions, ActivationMask, BaselinePattern, ElementPatterns, PatternCoeffs,
    ReflectionConfig, ShBasis,
};
use fris::Complex64;
use nalgebra::Vector3;
use rand::Rng;

/// Real spherical harmonics up to degree 2 in Cartesian form, ordered
/// `l² + l + m`.
pub fn sh2(v: [f64; 3]) -> [f64; 9] {
    let [x, y, z] = v;
    let c0 = 0.5 * (1.0 / PI).sqrt();
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2 = 0.5 * (15.0 / PI).sqrt();
    let c20 = 0.25 * (5.0 / PI).sqrt();
    [
        c0,
        c1 * y,
        c1 * z,
        c1 * x,
        c2 * x * y,
        c2 * y * z,
        c20 * (3.0 * z * z - 1.0),
        c2 * x * z,
        0.5 * c2 * (x * x - y * y),
    ]
}

pub fn unit(azimuth: f64, polar: f64) -> [f64; 3] {
    [
        polar.sin() * azimuth.cos(),
        polar.sin() * azimuth.sin(),
        polar.cos(),
    ]
}

/// 3GPP TR 38.901 element amplitude, boresight +x.
pub fn tr38901_amplitude(azimuth: f64, polar: f64) -> f64 {
    let theta = polar.to_degrees();
    let phi = azimuth.to_degrees();
    let av = -(12.0 * ((theta - 90.0) / 65.0).powi(2)).min(30.0);
    let ah = -(12.0 * (phi / 65.0).powi(2)).min(30.0);
    let gain_db = 8.0 - (-(av + ah)).min(30.0);
    10f64.powf(gain_db / 20.0)
}

#[derive(Debug, Clone)]
pub enum RawPattern {
    Isotropic,
    Tr38901,
    /// Per element, nine degree-2 coefficients.
    Sh(Vec<[Complex64; 9]>),
}

/// A received-power instance held as plain numbers.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub positions: Vec<[f64; 3]>,
    /// `(gain, azimuth, polar)`
    pub bs: Vec<(Complex64, f64, f64)>,
    pub user: Vec<(Complex64, f64, f64)>,
    pub wavelength: f64,
    pub active: Vec<bool>,
    pub phases: Vec<f64>,
    pub pattern: RawPattern,
    pub noise: f64,
}

fn cgauss(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

impl RawInstance {
    pub fn random(rng: &mut impl Rng) -> Self {
        let m = rng.random_range(1..=8);
        let l = rng.random_range(1..=3);
        let z = rng.random_range(1..=3);
        let wavelength = rng.random_range(0.005..0.1);
        let positions = (0..m)
            .map(|_| {
                [
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    0.0,
                ]
            })
            .collect();
        fn hop(n: usize, rng: &mut impl Rng) -> Vec<(Complex64, f64, f64)> {
            (0..n)
                .map(|_| {
                    (
                        cgauss(rng),
                        rng.random_range(-PI..PI),
                        rng.random_range(0.0..PI),
                    )
                })
                .collect()
        }
        let bs = hop(l, rng);
        let user = hop(z, rng);
        let mut active: Vec<bool> = (0..m).map(|_| rng.random_bool(0.7)).collect();
        active[rng.random_range(0..m)] = true;
        let pattern = match rng.random_range(0..3) {
            0 => RawPattern::Isotropic,
            1 => RawPattern::Tr38901,
            _ => RawPattern::Sh(
                (0..m)
                    .map(|_| std::array::from_fn(|_| cgauss(rng)))
                    .collect(),
            ),
        };
        Self {
            positions,
            bs,
            user,
            wavelength,
            active,
            phases: (0..m).map(|_| rng.random_range(-PI..PI)).collect(),
            pattern,
            noise: rng.random_range(0.0..2.0),
        }
    }

    fn element_gain(&self, m: usize, azimuth: f64, polar: f64) -> Complex64 {
        match &self.pattern {
            RawPattern::Isotropic => Complex64::new(1.0, 0.0),
            RawPattern::Tr38901 => Complex64::new(tr38901_amplitude(azimuth, polar), 0.0),
            RawPattern::Sh(c) => {
                let y = sh2(unit(azimuth, polar));
                (0..9).map(|q| c[m][q] * y[q]).sum()
            }
        }
    }

    /// `(1/(LZ))·|Σ_m ϑ_m Σ_l Σ_z g_l g_z f f e^{j2π/λ (k_r − k_t)ᵀp_m}|² + σ²`,
    /// written as three literal loops.
    pub fn oracle_power(&self) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..self.positions.len() {
            if !self.active[m] {
                continue;
            }
            let p = self.positions[m];
            let theta = Complex64::new(self.phases[m].cos(), self.phases[m].sin());
            for &(gl, al, pl) in &self.bs {
                for &(gz, az, pz) in &self.user {
                    let kt = unit(al, pl);
                    let kr = unit(az, pz);
                    let mut dot = 0.0;
                    for i in 0..3 {
                        dot += (kr[i] - kt[i]) * p[i];
                    }
                    let phase = 2.0 * PI / self.wavelength * dot;
                    let f = self.element_gain(m, al, pl) * self.element_gain(m, az, pz);
                    total += theta * gl * gz * f * Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        total.norm_sqr() / (self.bs.len() * self.user.len()) as f64 + self.noise
    }

    /// The same instance expressed with the crate's types.
    pub fn to_crate(&self) -> (Scenario, SurfaceState) {
        let hop = |v: &[(Complex64, f64, f64)]| -> Vec<HopPath> {
            v.iter()
                .map(|&(gain, az, pol)| HopPath {
                    gain,
                    direction: Direction::from_angles(az, pol),
                })
                .collect()
        };
        let channel = ChannelPair::new(hop(&self.bs), hop(&self.user), self.wavelength).unwrap();
        let m = self.positions.len();
        let geometry = grid_positions(1, m, 1.0)
            .unwrap()
            .with_positions(
                self.positions
                    .iter()
                    .map(|p| Vector3::new(p[0], p[1], p[2]))
                    .collect(),
            )
            .unwrap();
        let patterns = match &self.pattern {
            RawPattern::Isotropic => ElementPatterns::Baseline(BaselinePattern::Isotropic),
            RawPattern::Tr38901 => ElementPatterns::Baseline(BaselinePattern::Tr38901),
            RawPattern::Sh(c) => {
                let flat: Vec<Complex64> = c.iter().flat_map(|e| e.iter().copied()).collect();
                let budget = flat.iter().map(|z| z.norm_sqr()).sum::<f64>() + 1.0;
                ElementPatterns::Coefficients(
                    PatternCoeffs::from_coeffs(ShBasis::new(2), flat, budget).unwrap(),
                )
            }
        };
        let state = SurfaceState {
            mask: ActivationMask::new(
                self.active.clone(),
                self.active.iter().filter(|a| **a).count(),
            )
            .unwrap(),
            reflection: ReflectionConfig::continuous(self.phases.clone()),
            patterns,
        };
        let scenario = Scenario::new(geometry, channel, self.noise, Mode::Traditional).unwrap();
        (scenario, state)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Gram matrix of the crate's basis under product quadrature that is exact
/// for polynomials of degree below `2·nodes`.
pub fn sh_gram(basis: &ShBasis, nodes: usize) -> Vec<Vec<f64>> {
    let q = basis.len();
    let mut gram = vec![vec![0.0; q]; q];
    let n_phi = 2 * nodes;
    for (x, w) in gauss_legendre(nodes) {
        let polar = x.acos();
        for j in 0..n_phi {
            let az = 2.0 * PI * j as f64 / n_phi as f64;
            let y = basis.eval(&Direction::from_angles(az, polar));
            let wt = w * 2.0 * PI / n_phi as f64;
            for a in 0..q {
                for b in 0..q {
                    gram[a][b] += wt * y[a] * y[b];
                }
            }
        }
    }
    gram
}

/// Exhaustive optimum of `log2(1 + norm·|Σ_{p∈S} e^{j2πk_p/2^b} c_p|²/σ²)`
/// over every `active`-subset `S` and every codeword assignment, plus the
/// number of configurations visited.
pub fn exhaustive_rate(
    aggregates: &[Complex64],
    active: usize,
    bits: u32,
    normalization: f64,
    noise: f64,
) -> (f64, usize) {
    let n = aggregates.len();
    let levels = 1usize << bits;
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for subset in 0u32..(1 << n) {
        if subset.count_ones() as usize != active {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| subset >> i & 1 == 1).collect();
        for code in 0..levels.pow(active as u32) {
            let mut s = Complex64::new(0.0, 0.0);
            let mut c = code;
            for &p in &members {
                let k = c % levels;
                c /= levels;
                let ph = 2.0 * PI * k as f64 / levels as f64;
                s += Complex64::new(ph.cos(), ph.sin()) * aggregates[p];
            }
            count += 1;
            let rate = (1.0 + normalization * s.norm_sqr() / noise).log2();
            best = best.max(rate);
        }
    }
    (best, count)
}

/// Central finite difference of `f` along every real coordinate.
pub fn central_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
