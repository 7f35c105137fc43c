//! Pattern-reconfigurable surface in the multi-user downlink: weighted sum
//! rate versus the number of elements.

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{median, ExperimentOutput, NamedTrace, ResultRecord};
use crate::channel::{sample_multiuser, MultiUserSpec};
use crate::error::Result;
use crate::metrics::{Mode, MultiUserScenario, PrecoderSet};
use crate::optimize::{optimize_patterns, optimize_phases_multiuser, PatternOptResult, TraceRow};
use crate::rng;
use crate::surface::{grid_positions, BaselinePattern, PatternCoeffs, ShBasis};
use crate::Complex64;

/// One optimized configuration of a cell.
#[derive(Debug, Clone)]
pub struct Case2Entry {
    pub mode: Mode,
    pub pattern: Option<BaselinePattern>,
    pub tx_antennas: usize,
    pub wsr: f64,
    pub trace: Vec<TraceRow>,
    pub runtime_ms: f64,
}

impl Case2Entry {
    pub fn pattern_name(&self) -> &'static str {
        self.pattern.map_or("optimized", |p| p.name())
    }
}

#[derive(Debug, Clone)]
pub struct Case2Cell {
    pub grid: usize,
    pub seed: u64,
    /// Baselines at the baseline array size first, then one
    /// pattern-reconfigurable entry per configured array size.
    pub entries: Vec<Case2Entry>,
}

impl Case2Cell {
    pub fn fris(&self, tx_antennas: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.mode == Mode::PatternFris && e.tx_antennas == tx_antennas)
            .map(|e| e.wsr)
    }

    pub fn baseline(&self, pattern: BaselinePattern) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.mode == Mode::Traditional && e.pattern == Some(pattern))
            .map(|e| e.wsr)
    }

    pub fn best_baseline(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.mode == Mode::Traditional)
            .map(|e| e.wsr)
            .fold(0.0, f64::max)
    }
}

/// Constant pattern on every element reproducing the reflection phases
/// `phases` with isotropic amplitude, scaled up to the full energy budget.
fn pattern_from_phases(phases: &[f64], basis: ShBasis, budget: f64) -> Result<PatternCoeffs> {
    let q = basis.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); phases.len() * q];
    for (m, &p) in phases.iter().enumerate() {
        // f_eff of a constant pattern c₀ is c₀²/(4π)
        coeffs[m * q] = Complex64::from_polar(budget.sqrt(), p / 2.0);
    }
    PatternCoeffs::from_coeffs(basis, coeffs, budget)
}

/// Precoders for a larger array that use only the first antennas.
fn pad_precoders(w: &PrecoderSet, tx_antennas: usize) -> PrecoderSet {
    let mut out = PrecoderSet::zeros(w.vectors.len(), tx_antennas, w.power_budget);
    for (o, v) in out.vectors.iter_mut().zip(&w.vectors) {
        o.rows_mut(0, v.len()).copy_from(v);
    }
    out
}

/// One (M, seed) cell.
///
/// Traditional baselines: fixed element pattern, all elements on, reflection
/// phases and WMMSE precoders optimized alternately, at the baseline array
/// size. Pattern-reconfigurable surface: unit reflection, optimized element
/// patterns and WMMSE precoders for each configured array size. Each size
/// keeps the best of three starts: the isotropic-traditional solution at the
/// same size (so it never falls below that solution), the optimizer's default
/// start, and the optimum of the next smaller size with zero-padded precoders
/// (so the rate never drops as antennas are added).
pub fn run_case2_cell(config: &ExperimentConfig, grid: usize, seed: u64) -> Result<Case2Cell> {
    let mu = &config.multiuser;
    let max_nt = mu
        .tx_antennas
        .iter()
        .copied()
        .chain([mu.baseline_tx_antennas])
        .max()
        .expect("non-empty");
    let spec = MultiUserSpec {
        users: mu.users,
        tx_antennas: max_nt,
        paths: config.channel.clone(),
    };
    let full = sample_multiuser(seed, &spec)?;
    let geometry = grid_positions(grid, grid, config.spacing(grid))?;
    let scenario = |nt: usize| {
        MultiUserScenario::new(
            geometry.clone(),
            full.with_tx_antennas(nt),
            config.noise_power,
            mu.power_budget,
            config.weights(),
        )
    };
    let basis = ShBasis::new(config.surface.basis_order);
    let budget = PatternCoeffs::budget_from_gain(config.surface.budget_gain);

    let mut entries = Vec::new();
    let base = scenario(mu.baseline_tx_antennas)?;
    for &pattern in &mu.baselines {
        let t = Instant::now();
        let res = optimize_phases_multiuser(&base, pattern, &config.pattern, None)?;
        entries.push(Case2Entry {
            mode: Mode::Traditional,
            pattern: Some(pattern),
            tx_antennas: mu.baseline_tx_antennas,
            wsr: res.wsr(),
            trace: res.trace,
            runtime_ms: t.elapsed().as_secs_f64() * 1e3,
        });
    }
    // Ascending array sizes so each size can start from the previous optimum.
    let mut sizes = mu.tx_antennas.clone();
    sizes.sort_unstable();
    let mut previous: Option<PatternOptResult> = None;
    let mut fris = Vec::new();
    for &nt in &sizes {
        let t = Instant::now();
        let sc = scenario(nt)?;
        let pattern_seed =
            rng::stream(seed, &[rng::STREAM_EXPERIMENT, grid as u64, nt as u64]).next_u64();
        let run = |init: Option<&PatternCoeffs>, w: Option<&PrecoderSet>| {
            optimize_patterns(&sc, basis, budget, &config.pattern, pattern_seed, init, w)
        };
        let trad =
            optimize_phases_multiuser(&sc, BaselinePattern::Isotropic, &config.pattern, None)?;
        let init = pattern_from_phases(trad.reflection.phases(), basis, budget)?;
        let mut best = run(Some(&init), Some(&trad.precoders))?;
        let mut candidates = vec![run(None, None)?];
        if let Some(prev) = &previous {
            candidates.push(run(
                Some(&prev.patterns),
                Some(&pad_precoders(&prev.precoders, nt)),
            )?);
        }
        for c in candidates {
            if c.wsr() > best.wsr() {
                best = c;
            }
        }
        fris.push(Case2Entry {
            mode: Mode::PatternFris,
            pattern: None,
            tx_antennas: nt,
            wsr: best.wsr(),
            trace: best.trace.clone(),
            runtime_ms: t.elapsed().as_secs_f64() * 1e3,
        });
        previous = Some(best);
    }
    for &nt in &mu.tx_antennas {
        let pos = fris
            .iter()
            .position(|e| e.tx_antennas == nt)
            .expect("size was run");
        entries.push(fris[pos].clone());
    }
    Ok(Case2Cell {
        grid,
        seed,
        entries,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    grid: String,
    mode: String,
    pattern: String,
    tx_antennas: usize,
    seeds: usize,
    median_wsr: f64,
}

/// Runs every (M, seed) cell in parallel and reports them in configuration
/// order (grids, then seeds).
pub fn run_case2(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cells: Vec<(usize, u64)> = config
        .surface
        .grids
        .iter()
        .flat_map(|&g| config.seeds.iter().map(move |&s| (g, s)))
        .collect();
    let results: Vec<Case2Cell> = cells
        .par_iter()
        .map(|&(g, s)| run_case2_cell(config, g, s))
        .collect::<Result<_>>()?;
    let basis_len = ShBasis::new(config.surface.basis_order).len();

    let mut records = Vec::new();
    let mut traces = Vec::new();
    for c in &results {
        for e in &c.entries {
            let fris = e.mode == Mode::PatternFris;
            records.push(ResultRecord {
                experiment: "case2".into(),
                seed: c.seed,
                mode: e.mode.to_string(),
                pattern: e.pattern_name().into(),
                grid: format!("{0}x{0}", c.grid),
                elements: c.grid * c.grid,
                active: c.grid * c.grid,
                bits: None,
                basis_len: fris.then_some(basis_len),
                tx_antennas: Some(e.tx_antennas),
                objective: e.wsr,
                runtime_ms: e.runtime_ms,
            });
            traces.push(NamedTrace {
                name: format!(
                    "case2_g{}_s{}_{}_{}_nt{}",
                    c.grid,
                    c.seed,
                    e.mode,
                    e.pattern_name(),
                    e.tx_antennas
                ),
                rows: e.trace.clone(),
            });
        }
    }

    let mut summaries = Vec::new();
    if let Some(first) = results.first() {
        for &grid in &config.surface.grids {
            for (i, e) in first.entries.iter().enumerate() {
                let wsr: Vec<f64> = results
                    .iter()
                    .filter(|c| c.grid == grid)
                    .map(|c| c.entries[i].wsr)
                    .collect();
                summaries.push(Summary {
                    grid: format!("{grid}x{grid}"),
                    mode: e.mode.to_string(),
                    pattern: e.pattern_name().into(),
                    tx_antennas: e.tx_antennas,
                    seeds: wsr.len(),
                    median_wsr: median(&wsr),
                });
            }
        }
    }
    let report = serde_json::json!({ "experiment": "case2", "summary": summaries });
    Ok(ExperimentOutput {
        records,
        traces,
        report,
    })
}
