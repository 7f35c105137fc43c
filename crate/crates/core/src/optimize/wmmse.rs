//! Weighted MMSE precoding for the MU-MISO downlink.
//!
//! Alternates the MMSE receive scalar, the MSE weight and the transmit
//! precoders. The precoder step solves
//! `w_k = α_k ω_k u_k (A + μI)⁻¹ h_k`, `A = Σ_j α_j ω_j |u_j|² h_j h_jᴴ`,
//! with `μ ≥ 0` found by bisection on the total power. Each sweep cannot
//! decrease the weighted sum rate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{weighted_sum_rate, PrecoderSet};

#[derive(Debug, Clone)]
pub struct WmmseResult {
    pub precoders: PrecoderSet,
    /// Weighted sum rate before the first sweep and after every sweep.
    pub trace: Vec<f64>,
}

/// Maximum-ratio start with equal power split.
fn mrt(channels: &[DVector<Complex64>], power: f64) -> PrecoderSet {
    let k = channels.len();
    let share = (power / k as f64).sqrt();
    PrecoderSet {
        vectors: channels
            .iter()
            .map(|h| {
                let n = h.norm();
                if n > 0.0 {
                    h * Complex64::new(share / n, 0.0)
                } else {
                    DVector::zeros(h.len())
                }
            })
            .collect(),
        power_budget: power,
    }
}

fn check_inputs(
    channels: &[DVector<Complex64>],
    weights: &[f64],
    power: f64,
    noise: f64,
) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidProblem("need at least one user".into()));
    }
    if weights.len() != channels.len() || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidProblem(format!(
            "need {} positive weights",
            channels.len()
        )));
    }
    if !(power > 0.0) || !(noise > 0.0) {
        return Err(Error::InvalidProblem(
            "power budget and noise must be positive".into(),
        ));
    }
    let n = channels[0].len();
    if channels
        .iter()
        .any(|h| h.len() != n || h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(Error::InvalidProblem(
            "channel entries must be finite with equal length".into(),
        ));
    }
    Ok(())
}

/// One WMMSE sweep from `w`.
fn sweep(
    channels: &[DVector<Complex64>],
    weights: &[f64],
    power: f64,
    noise: f64,
    w: &PrecoderSet,
) -> PrecoderSet {
    let nt = channels[0].len();
    let mut a = DMatrix::<Complex64>::zeros(nt, nt);
    let mut b = Vec::with_capacity(channels.len());
    for (k, h) in channels.iter().enumerate() {
        let total: f64 = w
            .vectors
            .iter()
            .map(|wj| h.dotc(wj).norm_sqr())
            .sum::<f64>()
            + noise;
        let signal = h.dotc(&w.vectors[k]);
        let u = signal / total;
        let mse = (1.0 - signal.norm_sqr() / total).max(f64::MIN_POSITIVE);
        let omega = 1.0 / mse;
        a += (h * h.adjoint()) * Complex64::new(weights[k] * omega * u.norm_sqr(), 0.0);
        b.push(h * (u * weights[k] * omega));
    }

    let eig = a.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * lambda_max.max(f64::MIN_POSITIVE);
    let vh = eig.eigenvectors.adjoint();
    let proj: Vec<DVector<Complex64>> = b.iter().map(|bk| &vh * bk).collect();
    // numerator of the power function per eigen-direction
    let mut num = vec![0.0; nt];
    for p in &proj {
        for (i, z) in p.iter().enumerate() {
            num[i] += z.norm_sqr();
        }
    }
    let total_num: f64 = num.iter().sum();
    if total_num == 0.0 {
        return PrecoderSet::zeros(channels.len(), nt, power);
    }
    // Components in the numerical null space of A carry roundoff only.
    for (n, &l) in num.iter_mut().zip(eig.eigenvalues.iter()) {
        if l <= tol && *n <= 1e-20 * total_num {
            *n = 0.0;
        }
    }
    let power_at = |mu: f64| -> f64 {
        num.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(&n, &l)| {
                if l <= tol && mu == 0.0 {
                    if n > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    n / (l.max(0.0) + mu).powi(2)
                }
            })
            .sum()
    };
    let mu = if power_at(0.0) <= power {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = (total_num / power).sqrt();
        while power_at(hi) > power {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if power_at(mid) > power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let vectors = proj
        .iter()
        .map(|p| {
            let scaled = DVector::from_iterator(
                nt,
                p.iter().zip(eig.eigenvalues.iter()).map(|(z, &l)| {
                    let d = l.max(0.0) + mu;
                    if d <= tol {
                        Complex64::new(0.0, 0.0)
                    } else {
                        z / d
                    }
                }),
            );
            &eig.eigenvectors * scaled
        })
        .collect();
    let mut out = PrecoderSet {
        vectors,
        power_budget: power,
    };
    let total = out.total_power();
    if total > power {
        let s = Complex64::new((power / total).sqrt(), 0.0);
        for v in &mut out.vectors {
            *v *= s;
        }
    }
    out
}

/// WMMSE precoders with their WSR trace, optionally warm-started.
///
/// The returned precoders are the best iterate seen, so the WSR never falls
/// below that of `init`.
pub fn wmmse_with_trace(
    channels: &[DVector<Complex64>],
    weights: &[f64],
    power: f64,
    noise: f64,
    iterations: usize,
    init: Option<&PrecoderSet>,
) -> Result<WmmseResult> {
    check_inputs(channels, weights, power, noise)?;
    let nt = channels[0].len();
    if channels.iter().all(|h| h.norm() == 0.0) {
        return Ok(WmmseResult {
            precoders: PrecoderSet::zeros(channels.len(), nt, power),
            trace: vec![0.0],
        });
    }
    let mut w = match init {
        Some(w) if w.vectors.len() == channels.len() && w.vectors.iter().all(|v| v.len() == nt) => {
            PrecoderSet {
                power_budget: power,
                ..w.clone()
            }
        }
        _ => mrt(channels, power),
    };
    let mut rate = weighted_sum_rate(channels, &w, weights, noise)?;
    let mut trace = vec![rate];
    for _ in 0..iterations {
        let next = sweep(channels, weights, power, noise, &w);
        let next_rate = weighted_sum_rate(channels, &next, weights, noise)?;
        if next_rate < rate {
            // bisection roundoff; keep the better iterate
            trace.push(rate);
            break;
        }
        let gain = next_rate - rate;
        w = next;
        rate = next_rate;
        trace.push(rate);
        if gain <= 1e-12 * rate.abs().max(1.0) {
            break;
        }
    }
    Ok(WmmseResult {
        precoders: w,
        trace,
    })
}

pub fn wmmse_precoders(
    channels: &[DVector<Complex64>],
    weights: &[f64],
    power: f64,
    noise: f64,
    iterations: usize,
) -> Result<PrecoderSet> {
    Ok(wmmse_with_trace(channels, weights, power, noise, iterations, None)?.precoders)
}
