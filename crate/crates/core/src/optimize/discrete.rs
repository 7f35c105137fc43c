//! Joint activation / discrete-phase design: cross-entropy search and the
//! exhaustive oracle.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aggregates, Scenario, SurfaceState};
use crate::rng;
use crate::surface::{codeword_phase, ActivationMask, ElementPatterns, ReflectionConfig};

/// Refuse exhaustive enumeration above this many configurations.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Choose `active` of `M` candidate positions and a `bits`-bit codeword for
/// each chosen one, maximizing the achievable rate.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    aggregates: Vec<Complex64>,
    active: usize,
    bits: u32,
    normalization: f64,
    noise: f64,
    fixed_mask: Option<Vec<usize>>,
    initial: Option<Candidate>,
}

impl DiscreteProblem {
    /// Builds the problem from a scenario; element patterns are taken from
    /// `patterns` (isotropic for traditional and position-reconfigurable surfaces).
    pub fn new(
        scenario: &Scenario,
        patterns: &ElementPatterns,
        active: usize,
        bits: u32,
    ) -> Result<Self> {
        let c = aggregates(&scenario.channel, &scenario.geometry, patterns);
        Self::from_aggregates(
            c,
            active,
            bits,
            scenario.normalization(),
            scenario.noise_power,
        )
    }

    pub fn from_aggregates(
        aggregates: Vec<Complex64>,
        active: usize,
        bits: u32,
        normalization: f64,
        noise: f64,
    ) -> Result<Self> {
        if active == 0 || active > aggregates.len() {
            return Err(Error::InvalidProblem(format!(
                "cannot activate {active} of {} positions",
                aggregates.len()
            )));
        }
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidProblem(format!(
                "phase resolution must be 1..=16 bits, got {bits}"
            )));
        }
        if !(noise > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "noise power must be positive, got {noise}"
            )));
        }
        Ok(Self {
            aggregates,
            active,
            bits,
            normalization,
            noise,
            fixed_mask: None,
            initial: None,
        })
    }

    /// Restricts the search to phases on a fixed set of active elements
    /// (traditional RIS).
    pub fn with_fixed_mask(mut self, mask: &ActivationMask) -> Result<Self> {
        if mask.len() != self.aggregates.len() || mask.active_count() != self.active {
            return Err(Error::InvalidProblem(format!(
                "fixed mask must have {} entries with {} on",
                self.aggregates.len(),
                self.active
            )));
        }
        self.fixed_mask = Some(mask.active_indices().collect());
        Ok(self)
    }

    /// Candidate injected into the first population.
    pub fn with_initial(mut self, candidate: Candidate) -> Result<Self> {
        self.check_candidate(&candidate)?;
        self.initial = Some(candidate);
        Ok(self)
    }

    pub fn positions(&self) -> usize {
        self.aggregates.len()
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn codebook(&self) -> usize {
        1 << self.bits
    }

    /// `C(M, M̂)·(2^b)^{M̂}`, or `(2^b)^{M̂}` with a fixed mask.
    pub fn search_space_size(&self) -> f64 {
        let phases = (self.codebook() as f64).powi(self.active as i32);
        if self.fixed_mask.is_some() {
            phases
        } else {
            binomial(self.positions(), self.active) * phases
        }
    }

    fn check_candidate(&self, c: &Candidate) -> Result<()> {
        let ok = c.positions.len() == self.active
            && c.codewords.len() == self.active
            && c.positions.windows(2).all(|w| w[0] < w[1])
            && c.positions.iter().all(|&p| p < self.positions())
            && c.codewords.iter().all(|&k| k < self.codebook())
            && self.fixed_mask.as_ref().is_none_or(|f| *f == c.positions);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "candidate {c:?} is not feasible"
            )))
        }
    }

    fn phasor_table(&self) -> Vec<Complex64> {
        (0..self.codebook())
            .map(|k| Complex64::from_polar(1.0, codeword_phase(k, self.bits)))
            .collect()
    }

    fn rate_with(&self, table: &[Complex64], positions: &[usize], codewords: &[usize]) -> f64 {
        let s: Complex64 = positions
            .iter()
            .zip(codewords)
            .map(|(&p, &k)| table[k] * self.aggregates[p])
            .sum();
        (1.0 + self.normalization * s.norm_sqr() / self.noise).log2()
    }

    /// Achievable rate of a candidate.
    pub fn objective(&self, c: &Candidate) -> f64 {
        self.rate_with(&self.phasor_table(), &c.positions, &c.codewords)
    }

    /// Closed-form co-phasing followed by quantization, on the given positions.
    pub fn quantized_alignment(&self, positions: &[usize]) -> Result<Candidate> {
        let codewords = positions
            .iter()
            .map(|&p| {
                let c = self.aggregates[p];
                crate::surface::quantize_index(
                    if c.norm() > 0.0 { -c.arg() } else { 0.0 },
                    self.bits,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut positions = positions.to_vec();
        let mut pairs: Vec<(usize, usize)> = positions.iter().copied().zip(codewords).collect();
        pairs.sort();
        positions = pairs.iter().map(|p| p.0).collect();
        let cand = Candidate {
            positions,
            codewords: pairs.iter().map(|p| p.1).collect(),
        };
        self.check_candidate(&cand)?;
        Ok(cand)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sorted active positions and their codeword indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub positions: Vec<usize>,
    pub codewords: Vec<usize>,
}

impl Candidate {
    pub fn to_state(
        &self,
        elements: usize,
        bits: u32,
        patterns: ElementPatterns,
    ) -> Result<SurfaceState> {
        let mask = ActivationMask::from_indices(elements, &self.positions)?;
        let mut cw = vec![0usize; elements];
        for (&p, &k) in self.positions.iter().zip(&self.codewords) {
            cw[p] = k;
        }
        Ok(SurfaceState {
            mask,
            reflection: ReflectionConfig::from_codewords(&cw, bits)?,
            patterns,
        })
    }

    /// Rotates all codewords so that the first active element uses codeword 0;
    /// a common phase rotation leaves the objective unchanged.
    fn canonicalize(&mut self, codebook: usize) {
        if let Some(&first) = self.codewords.first() {
            for k in &mut self.codewords {
                *k = (*k + codebook - first) % codebook;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeoParams {
    pub population: usize,
    pub elite_fraction: f64,
    pub smoothing: f64,
    pub max_iterations: usize,
    /// Stop once every categorical has a mode at least this likely.
    pub mode_threshold: f64,
}

impl Default for CeoParams {
    fn default() -> Self {
        Self {
            population: 200,
            elite_fraction: 0.1,
            smoothing: 0.7,
            max_iterations: 100,
            mode_threshold: 0.99,
        }
    }
}

impl CeoParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 10 {
            return Err(Error::InvalidProblem(format!(
                "population must be >= 10, got {}",
                self.population
            )));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "elite fraction must be in (0,1), got {}",
                self.elite_fraction
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "smoothing must be in (0,1], got {}",
                self.smoothing
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidProblem(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.mode_threshold > 0.5 && self.mode_threshold <= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "mode threshold must be in (0.5,1], got {}",
                self.mode_threshold
            )));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population as f64).ceil() as usize).max(1)
    }
}

/// One optimizer trace row. `entropy` is empty for optimizers without a
/// sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_objective: f64,
    pub mean_objective: f64,
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CeoResult {
    pub best: Candidate,
    pub best_objective: f64,
    pub trace: Vec<TraceRow>,
}

fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}

fn categorical_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

struct Distribution {
    inclusion: Vec<f64>,
    phases: Vec<Vec<f64>>,
}

impl Distribution {
    fn sample<R: Rng>(&self, problem: &DiscreteProblem, rng: &mut R) -> Candidate {
        let mut positions = match &problem.fixed_mask {
            Some(f) => f.clone(),
            None => {
                let mut weights = self.inclusion.clone();
                let mut chosen = Vec::with_capacity(problem.active);
                for _ in 0..problem.active {
                    let total: f64 = weights.iter().sum();
                    let pick = if total > 0.0 {
                        let r = rng.random::<f64>() * total;
                        let mut acc = 0.0;
                        let mut idx = None;
                        for (i, &w) in weights.iter().enumerate() {
                            acc += w;
                            if w > 0.0 && r < acc {
                                idx = Some(i);
                                break;
                            }
                        }
                        idx.unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap())
                    } else {
                        // All mass used up: fall back to a uniform unused position.
                        let free: Vec<usize> =
                            (0..weights.len()).filter(|i| !chosen.contains(i)).collect();
                        free[rng.random_range(0..free.len())]
                    };
                    weights[pick] = 0.0;
                    chosen.push(pick);
                }
                chosen
            }
        };
        positions.sort_unstable();
        let codewords = positions
            .iter()
            .map(|&p| {
                let table = &self.phases[p];
                let r = rng.random::<f64>();
                let mut acc = 0.0;
                for (k, &w) in table.iter().enumerate() {
                    acc += w;
                    if r < acc {
                        return k;
                    }
                }
                table.len() - 1
            })
            .collect();
        let mut c = Candidate {
            positions,
            codewords,
        };
        c.canonicalize(problem.codebook());
        c
    }

    fn entropy(&self, problem: &DiscreteProblem) -> f64 {
        match &problem.fixed_mask {
            Some(f) => f
                .iter()
                .map(|&p| categorical_entropy(&self.phases[p]))
                .sum(),
            None => self
                .inclusion
                .iter()
                .enumerate()
                .map(|(p, &q)| {
                    binary_entropy(q)
                        + if q >= 0.5 {
                            categorical_entropy(&self.phases[p])
                        } else {
                            0.0
                        }
                })
                .sum(),
        }
    }

    fn converged(&self, problem: &DiscreteProblem, threshold: f64) -> bool {
        let mode = |t: &[f64]| t.iter().cloned().fold(0.0, f64::max);
        match &problem.fixed_mask {
            Some(f) => f.iter().all(|&p| mode(&self.phases[p]) >= threshold),
            None => self.inclusion.iter().enumerate().all(|(p, &q)| {
                let decided = q >= threshold || q <= 1.0 - threshold;
                decided && (q < 0.5 || mode(&self.phases[p]) >= threshold)
            }),
        }
    }
}

/// Cross-entropy search over activation masks and discrete phases.
///
/// Positions are drawn sequentially without replacement from the inclusion
/// table, then each chosen position draws a codeword from its own table.
/// Candidate `i` of iteration `t` uses the random stream
/// `(seed, CEO, t, i)`, so the result does not depend on the thread count.
pub fn cross_entropy_search(
    problem: &DiscreteProblem,
    params: &CeoParams,
    seed: u64,
) -> Result<CeoResult> {
    params.validate()?;
    let m = problem.positions();
    let n = problem.codebook();
    let table = problem.phasor_table();
    let mut dist = Distribution {
        inclusion: vec![problem.active as f64 / m as f64; m],
        phases: vec![vec![1.0 / n as f64; n]; m],
    };
    let elites = params.elite_count();
    let alpha = params.smoothing;
    let mut best: Option<(Candidate, f64)> = None;
    let mut trace = Vec::new();

    for iter in 0..params.max_iterations {
        let mut population: Vec<(Candidate, f64)> = (0..params.population)
            .into_par_iter()
            .map(|i| {
                let cand = match (&problem.initial, iter, i) {
                    (Some(init), 0, 0) => {
                        let mut c = init.clone();
                        c.canonicalize(n);
                        c
                    }
                    _ => {
                        let mut r = rng::stream(seed, &[rng::STREAM_CEO, iter as u64, i as u64]);
                        dist.sample(problem, &mut r)
                    }
                };
                let obj = problem.rate_with(&table, &cand.positions, &cand.codewords);
                (cand, obj)
            })
            .collect();
        let mean = population.iter().map(|p| p.1).sum::<f64>() / population.len() as f64;
        // Stable sort keeps candidate order among ties.
        population.sort_by(|a, b| b.1.total_cmp(&a.1));
        if best.as_ref().is_none_or(|b| population[0].1 > b.1) {
            best = Some(population[0].clone());
        }

        let elite = &population[..elites];
        if problem.fixed_mask.is_none() {
            let mut counts = vec![0usize; m];
            for (c, _) in elite {
                for &p in &c.positions {
                    counts[p] += 1;
                }
            }
            for (q, &cnt) in dist.inclusion.iter_mut().zip(&counts) {
                *q = (1.0 - alpha) * *q + alpha * cnt as f64 / elites as f64;
            }
        }
        let mut phase_counts = vec![vec![0usize; n]; m];
        for (c, _) in elite {
            for (&p, &k) in c.positions.iter().zip(&c.codewords) {
                phase_counts[p][k] += 1;
            }
        }
        for (table, counts) in dist.phases.iter_mut().zip(&phase_counts) {
            let total: usize = counts.iter().sum();
            if total > 0 {
                for (t, &cnt) in table.iter_mut().zip(counts) {
                    *t = (1.0 - alpha) * *t + alpha * cnt as f64 / total as f64;
                }
            }
        }

        let best_objective = best.as_ref().map(|b| b.1).unwrap_or(f64::NEG_INFINITY);
        trace.push(TraceRow {
            iteration: iter,
            best_objective,
            mean_objective: mean,
            entropy: Some(dist.entropy(problem)),
        });
        if dist.converged(problem, params.mode_threshold) {
            break;
        }
    }

    let (best, best_objective) = best.expect("at least one iteration");
    Ok(CeoResult {
        best,
        best_objective,
        trace,
    })
}

/// Exact optimum by enumeration. Masks are visited in lexicographic order of
/// their sorted positions and codewords in lexicographic order; the first
/// configuration reaching the maximum wins.
pub fn brute_force_discrete(problem: &DiscreteProblem) -> Result<(Candidate, f64)> {
    let size = problem.search_space_size();
    if size > ENUMERATION_LIMIT {
        return Err(Error::SpaceTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let table = problem.phasor_table();
    let n = problem.codebook();
    let k = problem.active;
    let m = problem.positions();
    let mut best: Option<(Candidate, f64)> = None;

    let mut visit_mask = |positions: &[usize]| {
        let mut codewords = vec![0usize; k];
        loop {
            let obj = problem.rate_with(&table, positions, &codewords);
            if best.as_ref().is_none_or(|b| obj > b.1) {
                best = Some((
                    Candidate {
                        positions: positions.to_vec(),
                        codewords: codewords.clone(),
                    },
                    obj,
                ));
            }
            // odometer, last digit fastest
            let mut i = k;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                codewords[i] += 1;
                if codewords[i] < n {
                    break;
                }
                codewords[i] = 0;
            }
        }
    };

    match &problem.fixed_mask {
        Some(f) => visit_mask(f),
        None => {
            let mut comb: Vec<usize> = (0..k).collect();
            loop {
                visit_mask(&comb);
                let mut i = k;
                loop {
                    if i == 0 {
                        return Ok(best.expect("non-empty space"));
                    }
                    i -= 1;
                    if comb[i] < m - k + i {
                        break;
                    }
                }
                comb[i] += 1;
                for j in i + 1..k {
                    comb[j] = comb[j - 1] + 1;
                }
            }
        }
    }
    Ok(best.expect("non-empty space"))
}
