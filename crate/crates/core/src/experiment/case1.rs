//! Position-reconfigurable surface with limited phase resolution: rate versus
//! the number of candidate positions.

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{layout_factors, ExperimentConfig};
use super::output::{median, ExperimentOutput, NamedTrace, ResultRecord};
use crate::channel::sample_multipath;
use crate::error::Result;
use crate::metrics::{Mode, Scenario};
use crate::optimize::{cross_entropy_search, Candidate, DiscreteProblem, TraceRow};
use crate::rng;
use crate::surface::{grid_positions, ActivationMask, BaselinePattern, ElementPatterns};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    grid: usize,
    active: usize,
    bits: u32,
    seed: u64,
}

impl Cell {
    fn name(&self, mode: Mode) -> String {
        format!(
            "case1_g{}_a{}_b{}_s{}_{}",
            self.grid, self.active, self.bits, self.seed, mode
        )
    }

    fn ceo_seed(&self, mode: Mode) -> u64 {
        let tag = match mode {
            Mode::Traditional => 0,
            _ => 1,
        };
        rng::stream(
            self.seed,
            &[
                rng::STREAM_EXPERIMENT,
                self.grid as u64,
                self.active as u64,
                self.bits as u64,
                tag,
            ],
        )
        .next_u64()
    }
}

pub struct Case1Cell {
    pub grid: usize,
    pub active: usize,
    pub bits: u32,
    pub seed: u64,
    pub traditional: f64,
    pub fris: f64,
    pub fris_best: Candidate,
    pub traditional_trace: Vec<TraceRow>,
    pub fris_trace: Vec<TraceRow>,
    pub traditional_ms: f64,
    pub fris_ms: f64,
}

/// One (grid, M̂, b, seed) cell.
///
/// Traditional: the uniform `M̂`-element layout with the better of closed-form
/// quantized co-phasing and a phase-only cross-entropy search started from it.
/// FRIS: joint activation/phase cross-entropy search over the whole grid with
/// the traditional solution injected into the first population, so the FRIS
/// rate is never below the traditional one.
pub fn run_case1_cell(
    config: &ExperimentConfig,
    grid: usize,
    active: usize,
    bits: u32,
    seed: u64,
) -> Result<Case1Cell> {
    let cell = Cell {
        grid,
        active,
        bits,
        seed,
    };
    let channel = sample_multipath(seed, &config.channel)?;
    let geometry = grid_positions(grid, grid, config.spacing(grid))?;
    let scenario = Scenario::new(geometry, channel, config.noise_power, Mode::PositionFris)?;
    let problem = DiscreteProblem::new(
        &scenario,
        &ElementPatterns::Baseline(BaselinePattern::Isotropic),
        active,
        bits,
    )?;

    let t0 = Instant::now();
    let (kr, kc) = layout_factors(active);
    let uniform = ActivationMask::uniform_layout(grid, grid, kr, kc)?;
    let start = problem.quantized_alignment(&uniform.active_indices().collect::<Vec<_>>())?;
    let phase_only = problem
        .clone()
        .with_fixed_mask(&uniform)?
        .with_initial(start)?;
    let trad = cross_entropy_search(&phase_only, &config.ceo, cell.ceo_seed(Mode::Traditional))?;
    let traditional_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let joint = problem.with_initial(trad.best.clone())?;
    let fris = cross_entropy_search(&joint, &config.ceo, cell.ceo_seed(Mode::PositionFris))?;
    let fris_ms = t1.elapsed().as_secs_f64() * 1e3;

    Ok(Case1Cell {
        grid,
        active,
        bits,
        seed,
        traditional: trad.best_objective,
        fris: fris.best_objective,
        fris_best: fris.best,
        traditional_trace: trad.trace,
        fris_trace: fris.trace,
        traditional_ms,
        fris_ms,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    grid: String,
    active: usize,
    bits: u32,
    seeds: usize,
    median_traditional: f64,
    median_fris: f64,
    /// Median over seeds of `(fris − traditional)/traditional`.
    median_relative_gain: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ActivationMap {
    grid: String,
    active: usize,
    bits: u32,
    seed: u64,
    rate: f64,
    /// One string per grid row, `1` for an active element.
    rows: Vec<String>,
}

/// Runs every (grid, M̂, b, seed) cell. Cells are evaluated in parallel on the
/// current thread pool and reported in configuration order (grids, then M̂,
/// then b, then seeds), traditional before FRIS.
///
/// The report carries per-(grid, M̂, b) medians and the activation map of the
/// first seed on the largest grid with the first M̂ and b.
pub fn run_case1(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let s = &config.surface;
    let cells: Vec<Cell> = s
        .grids
        .iter()
        .flat_map(|&grid| {
            s.active.iter().flat_map(move |&active| {
                s.bits.iter().flat_map(move |&bits| {
                    config.seeds.iter().map(move |&seed| Cell {
                        grid,
                        active,
                        bits,
                        seed,
                    })
                })
            })
        })
        .collect();
    let results: Vec<Case1Cell> = cells
        .par_iter()
        .map(|c| run_case1_cell(config, c.grid, c.active, c.bits, c.seed))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(2 * results.len());
    let mut traces = Vec::with_capacity(2 * results.len());
    for r in &results {
        let cell = Cell {
            grid: r.grid,
            active: r.active,
            bits: r.bits,
            seed: r.seed,
        };
        for (mode, objective, ms, trace) in [
            (
                Mode::Traditional,
                r.traditional,
                r.traditional_ms,
                &r.traditional_trace,
            ),
            (Mode::PositionFris, r.fris, r.fris_ms, &r.fris_trace),
        ] {
            records.push(ResultRecord {
                experiment: "case1".into(),
                seed: r.seed,
                mode: mode.to_string(),
                pattern: "isotropic".into(),
                grid: format!("{0}x{0}", r.grid),
                elements: r.grid * r.grid,
                active: r.active,
                bits: Some(r.bits),
                basis_len: None,
                tx_antennas: None,
                objective,
                runtime_ms: ms,
            });
            traces.push(NamedTrace {
                name: cell.name(mode),
                rows: trace.clone(),
            });
        }
    }

    let mut summaries = Vec::new();
    for &grid in &s.grids {
        for &active in &s.active {
            for &bits in &s.bits {
                let group: Vec<&Case1Cell> = results
                    .iter()
                    .filter(|r| r.grid == grid && r.active == active && r.bits == bits)
                    .collect();
                let trad: Vec<f64> = group.iter().map(|r| r.traditional).collect();
                let fris: Vec<f64> = group.iter().map(|r| r.fris).collect();
                let gain: Vec<f64> = group
                    .iter()
                    .map(|r| relative_gain(r.fris, r.traditional))
                    .collect();
                summaries.push(Summary {
                    grid: format!("{grid}x{grid}"),
                    active,
                    bits,
                    seeds: group.len(),
                    median_traditional: median(&trad),
                    median_fris: median(&fris),
                    median_relative_gain: median(&gain),
                });
            }
        }
    }

    let largest = *s.grids.iter().max().expect("validated non-empty");
    let map_cell = results
        .iter()
        .find(|r| {
            r.grid == largest
                && r.active == s.active[0]
                && r.bits == s.bits[0]
                && r.seed == config.seeds[0]
        })
        .expect("cell was run");
    let mask = ActivationMask::from_indices(largest * largest, &map_cell.fris_best.positions)?;
    let bits_str = mask.to_bit_string();
    let map = ActivationMap {
        grid: format!("{largest}x{largest}"),
        active: map_cell.active,
        bits: map_cell.bits,
        seed: map_cell.seed,
        rate: map_cell.fris,
        rows: (0..largest)
            .map(|r| bits_str[r * largest..(r + 1) * largest].to_string())
            .collect(),
    };

    let report = serde_json::json!({
        "experiment": "case1",
        "summary": summaries,
        "activation_map": map,
    });
    Ok(ExperimentOutput {
        records,
        traces,
        report,
    })
}

/// `(fris − traditional)/traditional`, 0 when both are 0.
pub fn relative_gain(fris: f64, traditional: f64) -> f64 {
    if traditional > 0.0 {
        (fris - traditional) / traditional
    } else if fris > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
