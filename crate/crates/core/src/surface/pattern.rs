use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::Direction;
use crate::error::{Error, Result};

/// Energy `Σ|c_q|²` of the isotropic unit-gain pattern.
pub const ISOTROPIC_ENERGY: f64 = 4.0 * PI;

/// Default energy budget in isotropic units: the 8 dBi peak power gain of the
/// 38.901 element.
pub const DEFAULT_BUDGET_GAIN: f64 = 6.309_573_444_801_933;

/// Orthonormal real spherical harmonics up to degree `order`.
///
/// Functions are ordered `q = l² + l + m` for `m ∈ [-l, l]`, so
/// `len() = (order + 1)²`. Index 0 is the constant `1/√(4π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShBasis {
    order: usize,
}

impl ShBasis {
    pub fn new(order: usize) -> Self {
        Self { order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        (self.order + 1) * (self.order + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, dir: &Direction) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(dir, &mut out);
        out
    }

    pub fn eval_into(&self, dir: &Direction, out: &mut [f64]) {
        let v = dir.vector();
        let x = v.z.clamp(-1.0, 1.0);
        let s = (v.x * v.x + v.y * v.y).sqrt();
        let phi = v.y.atan2(v.x);
        let n = self.order;

        // Associated Legendre P_l^m(x) without the Condon–Shortley phase.
        let mut plm = vec![vec![0.0; n + 1]; n + 1];
        let mut pmm = 1.0;
        for m in 0..=n {
            if m > 0 {
                pmm *= (2 * m - 1) as f64 * s;
            }
            plm[m][m] = pmm;
            if m < n {
                plm[m + 1][m] = x * (2 * m + 1) as f64 * pmm;
            }
            for l in (m + 2)..=n {
                plm[l][m] = ((2 * l - 1) as f64 * x * plm[l - 1][m]
                    - (l + m - 1) as f64 * plm[l - 2][m])
                    / (l - m) as f64;
            }
        }

        for l in 0..=n {
            let base = l * l + l;
            let k0 = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            out[base] = k0 * plm[l][0];
            // ratio = (l-m)!/(l+m)!, updated incrementally
            let mut ratio = 1.0;
            for m in 1..=l {
                ratio /= ((l + m) * (l - m + 1)) as f64;
                let k = std::f64::consts::SQRT_2 * k0 * ratio.sqrt() * plm[l][m];
                let (sm, cm) = (m as f64 * phi).sin_cos();
                out[base + m] = k * cm;
                out[base - m] = k * sm;
            }
        }
    }
}

/// `Σ_q c_q·Y_q(direction)`.
pub fn pattern_gain(basis: &ShBasis, coeffs: &[Complex64], direction: &Direction) -> Complex64 {
    let y = basis.eval(direction);
    coeffs.iter().zip(&y).map(|(c, y)| c * y).sum()
}

/// Element response for one cascaded path: the pattern evaluated toward the
/// incoming wave times the pattern toward the outgoing wave.
pub fn effective_path_gain(
    basis: &ShBasis,
    coeffs: &[Complex64],
    incidence: &Direction,
    departure: &Direction,
) -> Complex64 {
    pattern_gain(basis, coeffs, incidence) * pattern_gain(basis, coeffs, departure)
}

/// Per-element pattern coefficients over a shared basis, with an energy cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCoeffs {
    basis: ShBasis,
    coeffs: Vec<Complex64>,
    energy_budget: f64,
}

impl PatternCoeffs {
    /// Every element isotropic with unit gain.
    pub fn isotropic(elements: usize, basis: ShBasis, energy_budget: f64) -> Result<Self> {
        Self::uniform_constant(elements, basis, energy_budget, Complex64::new(1.0, 0.0))
    }

    /// Every element radiates the constant `value` in all directions.
    pub fn uniform_constant(
        elements: usize,
        basis: ShBasis,
        energy_budget: f64,
        value: Complex64,
    ) -> Result<Self> {
        check_budget(energy_budget)?;
        let q = basis.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); elements * q];
        for m in 0..elements {
            coeffs[m * q] = value * ISOTROPIC_ENERGY.sqrt();
        }
        Ok(Self {
            basis,
            coeffs,
            energy_budget,
        })
    }

    pub fn from_coeffs(basis: ShBasis, coeffs: Vec<Complex64>, energy_budget: f64) -> Result<Self> {
        check_budget(energy_budget)?;
        if coeffs.is_empty() || !coeffs.len().is_multiple_of(basis.len()) {
            return Err(Error::InvalidSpec(format!(
                "{} coefficients do not split into elements of {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self {
            basis,
            coeffs,
            energy_budget,
        })
    }

    /// Budget `gain × ISOTROPIC_ENERGY`.
    pub fn budget_from_gain(gain: f64) -> f64 {
        gain * ISOTROPIC_ENERGY
    }

    pub fn basis(&self) -> &ShBasis {
        &self.basis
    }

    pub fn energy_budget(&self) -> f64 {
        self.energy_budget
    }

    pub fn elements(&self) -> usize {
        self.coeffs.len() / self.basis.len()
    }

    pub fn element(&self, m: usize) -> &[Complex64] {
        let q = self.basis.len();
        &self.coeffs[m * q..(m + 1) * q]
    }

    pub fn element_mut(&mut self, m: usize) -> &mut [Complex64] {
        let q = self.basis.len();
        &mut self.coeffs[m * q..(m + 1) * q]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn energy(&self, m: usize) -> f64 {
        self.element(m).iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        (0..self.elements()).all(|m| self.energy(m) <= self.energy_budget + tol)
    }

    pub fn gain(&self, m: usize, direction: &Direction) -> Complex64 {
        pattern_gain(&self.basis, self.element(m), direction)
    }

    /// Radial projection of every element onto its energy ball.
    pub fn project_in_place(&mut self) {
        let budget = self.energy_budget;
        for m in 0..self.elements() {
            let e = self.energy(m);
            if e > budget {
                let scale = (budget / e).sqrt();
                for c in self.element_mut(m) {
                    *c *= scale;
                }
            }
        }
    }
}

fn check_budget(energy_budget: f64) -> Result<()> {
    if !(energy_budget > 0.0 && energy_budget.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "energy budget must be positive, got {energy_budget}"
        )));
    }
    Ok(())
}

pub fn project_pattern_energy(coeffs: &PatternCoeffs) -> PatternCoeffs {
    let mut out = coeffs.clone();
    out.project_in_place();
    out
}

/// Fixed element patterns used by the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselinePattern {
    Isotropic,
    /// Single-element pattern of 3GPP TR 38.901 (65° beamwidths, 30 dB floor,
    /// 8 dBi peak), boresight along +x.
    Tr38901,
}

impl BaselinePattern {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "isotropic" => Ok(Self::Isotropic),
            "tr38901" => Ok(Self::Tr38901),
            other => Err(Error::InvalidSpec(format!(
                "unknown baseline pattern {other:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Isotropic => "isotropic",
            Self::Tr38901 => "tr38901",
        }
    }

    pub fn gain_db(&self, direction: &Direction) -> f64 {
        match self {
            Self::Isotropic => 0.0,
            Self::Tr38901 => {
                let (az, polar) = direction.angles();
                let theta = polar.to_degrees();
                let phi = az.to_degrees();
                let vertical = -(12.0 * ((theta - 90.0) / 65.0).powi(2)).min(30.0);
                let horizontal = -(12.0 * (phi / 65.0).powi(2)).min(30.0);
                -(-(vertical + horizontal)).min(30.0) + 8.0
            }
        }
    }

    pub fn amplitude(&self, direction: &Direction) -> f64 {
        match self {
            Self::Isotropic => 1.0,
            Self::Tr38901 => 10f64.powf(self.gain_db(direction) / 20.0),
        }
    }
}

/// Element patterns of a whole surface.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementPatterns {
    /// Same fixed pattern on every element.
    Baseline(BaselinePattern),
    Coefficients(PatternCoeffs),
}

impl ElementPatterns {
    pub fn gain(&self, m: usize, direction: &Direction) -> Complex64 {
        match self {
            Self::Baseline(b) => Complex64::new(b.amplitude(direction), 0.0),
            Self::Coefficients(c) => c.gain(m, direction),
        }
    }

    pub fn effective_gain(
        &self,
        m: usize,
        incidence: &Direction,
        departure: &Direction,
    ) -> Complex64 {
        self.gain(m, incidence) * self.gain(m, departure)
    }

    /// Element count when patterns are per element.
    pub fn elements(&self) -> Option<usize> {
        match self {
            Self::Baseline(_) => None,
            Self::Coefficients(c) => Some(c.elements()),
        }
    }
}
