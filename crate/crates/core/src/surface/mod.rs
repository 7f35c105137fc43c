//! Reconfigurable surface: element layout, ON/OFF activation, reflection
//! phases and element radiation patterns.

mod pattern;

pub use pattern::{
    effective_path_gain, pattern_gain, project_pattern_energy, BaselinePattern, ElementPatterns,
    PatternCoeffs, ShBasis, DEFAULT_BUDGET_GAIN, ISOTROPIC_ENERGY,
};

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::wrap_phase;

/// Planar rectangular layout in the z = 0 plane.
///
/// Element `m = r·cols + c` sits at `(r·spacing, c·spacing, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGeometry {
    rows: usize,
    cols: usize,
    spacing: f64,
    positions: Vec<Vector3<f64>>,
}

impl SurfaceGeometry {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn position(&self, m: usize) -> &Vector3<f64> {
        &self.positions[m]
    }

    /// Same layout with explicitly moved element positions.
    pub fn with_positions(&self, positions: Vec<Vector3<f64>>) -> Result<Self> {
        if positions.len() != self.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} positions, got {}",
                self.len(),
                positions.len()
            )));
        }
        Ok(Self {
            positions,
            ..self.clone()
        })
    }

    /// The elements at `indices`, in that order, as a single-row layout.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSpec("empty element subset".into()));
        }
        let positions = indices
            .iter()
            .map(|&m| {
                self.positions.get(m).copied().ok_or(Error::OutOfRange {
                    index: m,
                    len: self.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: 1,
            cols: positions.len(),
            spacing: self.spacing,
            positions,
        })
    }
}

pub fn grid_positions(rows: usize, cols: usize, spacing: f64) -> Result<SurfaceGeometry> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidSpec(format!(
            "grid must be at least 1x1, got {rows}x{cols}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let positions = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| Vector3::new(r as f64 * spacing, c as f64 * spacing, 0.0))
        })
        .collect();
    Ok(SurfaceGeometry {
        rows,
        cols,
        spacing,
        positions,
    })
}

/// Grid whose outermost elements span a square aperture of side `aperture`.
///
/// A denser grid over the same aperture models the densely packed
/// position-reconfigurable surface.
pub fn grid_in_aperture(rows: usize, cols: usize, aperture: f64) -> Result<SurfaceGeometry> {
    let intervals = rows.max(cols).saturating_sub(1);
    let spacing = if intervals == 0 {
        aperture.max(f64::MIN_POSITIVE)
    } else {
        aperture / intervals as f64
    };
    grid_positions(rows, cols, spacing)
}

/// ON/OFF state of every element. Exactly `active_count` entries are on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationMask {
    active: Vec<bool>,
    active_count: usize,
}

impl ActivationMask {
    pub fn new(active: Vec<bool>, active_count: usize) -> Result<Self> {
        let on = active.iter().filter(|&&a| a).count();
        if active_count == 0 || active_count > active.len() {
            return Err(Error::InvalidMask(format!(
                "active count {active_count} outside 1..={}",
                active.len()
            )));
        }
        if on != active_count {
            return Err(Error::InvalidMask(format!(
                "{on} elements on, expected {active_count}"
            )));
        }
        Ok(Self {
            active,
            active_count,
        })
    }

    pub fn all(len: usize) -> Self {
        Self {
            active: vec![true; len],
            active_count: len,
        }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut active = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(Error::InvalidMask(format!(
                    "index {i} outside mask of length {len}"
                )));
            }
            active[i] = true;
        }
        Self::new(active, indices.len())
    }

    /// `k_rows × k_cols` elements spread uniformly over a `rows × cols` grid,
    /// including its corners when `k > 1`.
    pub fn uniform_layout(rows: usize, cols: usize, k_rows: usize, k_cols: usize) -> Result<Self> {
        if k_rows == 0 || k_cols == 0 || k_rows > rows || k_cols > cols {
            return Err(Error::InvalidMask(format!(
                "cannot spread {k_rows}x{k_cols} elements over a {rows}x{cols} grid"
            )));
        }
        let pick = |k: usize, n: usize| -> Vec<usize> {
            if k == 1 {
                vec![(n - 1) / 2]
            } else {
                (0..k)
                    .map(|i| ((i * (n - 1)) as f64 / (k - 1) as f64).round() as usize)
                    .collect()
            }
        };
        let rs = pick(k_rows, rows);
        let cs = pick(k_cols, cols);
        let indices: Vec<usize> = rs
            .iter()
            .flat_map(|&r| cs.iter().map(move |&c| r * cols + c))
            .collect();
        Self::from_indices(rows * cols, &indices)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn is_active(&self, m: usize) -> bool {
        self.active[m]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.active
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i)
    }

    /// Mask as a `0`/`1` string, element order.
    pub fn to_bit_string(&self) -> String {
        self.active
            .iter()
            .map(|&a| if a { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let active = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidMask(format!(
                    "unexpected mask character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let count = active.iter().filter(|&&a| a).count();
        Self::new(active, count)
    }
}

/// Positions of the active elements, paired with their element index.
pub fn activation_apply(
    mask: &ActivationMask,
    geometry: &SurfaceGeometry,
) -> Result<Vec<(usize, Vector3<f64>)>> {
    if mask.len() != geometry.len() {
        return Err(Error::InvalidMask(format!(
            "mask has {} entries, geometry has {} elements",
            mask.len(),
            geometry.len()
        )));
    }
    let out: Vec<_> = mask
        .active_indices()
        .map(|m| (m, geometry.positions[m]))
        .collect();
    if out.len() != mask.active_count() {
        return Err(Error::InvalidMask(format!(
            "{} elements on, expected {}",
            out.len(),
            mask.active_count()
        )));
    }
    Ok(out)
}

/// Unit-modulus reflection coefficients `exp(j·phase)`, optionally restricted
/// to a `bits`-bit uniform codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    phases: Vec<f64>,
    bits: Option<u32>,
}

impl ReflectionConfig {
    pub fn continuous(phases: Vec<f64>) -> Self {
        Self { phases, bits: None }
    }

    pub fn zeros(len: usize) -> Self {
        Self::continuous(vec![0.0; len])
    }

    /// Quantizes every phase onto the `bits`-bit codebook.
    pub fn quantized(phases: &[f64], bits: u32) -> Result<Self> {
        let phases = phases
            .iter()
            .map(|&p| quantize_phase(p, bits))
            .collect::<Result<_>>()?;
        Ok(Self {
            phases,
            bits: Some(bits),
        })
    }

    /// Builds a discrete configuration from codeword indices.
    pub fn from_codewords(codewords: &[usize], bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let n = 1usize << bits;
        let phases = codewords
            .iter()
            .map(|&k| {
                if k >= n {
                    Err(Error::InvalidSpec(format!(
                        "codeword {k} outside a {bits}-bit codebook"
                    )))
                } else {
                    Ok(codeword_phase(k, bits))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            phases,
            bits: Some(bits),
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn bits(&self) -> Option<u32> {
        self.bits
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn coefficient(&self, m: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phases[m])
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > 16 {
        return Err(Error::InvalidSpec(format!(
            "phase resolution must be 1..=16 bits, got {bits}"
        )));
    }
    Ok(())
}

pub fn codeword_phase(index: usize, bits: u32) -> f64 {
    2.0 * PI * index as f64 / (1u64 << bits) as f64
}

/// Index of the nearest codeword; ties go to the lower index.
pub fn quantize_index(phase: f64, bits: u32) -> Result<usize> {
    check_bits(bits)?;
    let n = 1usize << bits;
    let x = phase.rem_euclid(2.0 * PI) / (2.0 * PI / n as f64);
    let lo = (x.floor() as usize) % n;
    let hi = (lo + 1) % n;
    let frac = x - x.floor();
    Ok(if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    })
}

pub fn quantize_phase(phase: f64, bits: u32) -> Result<f64> {
    Ok(codeword_phase(quantize_index(phase, bits)?, bits))
}

/// Circular distance between two phases, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}
