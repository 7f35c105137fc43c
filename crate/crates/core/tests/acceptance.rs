//! Acceptance run: one PASS/FAIL line per criterion with its tolerances and
//! runtime limit. Runs as part of `cargo test`; the process exits non-zero on
//! a failing criterion only when `FRIS_ACCEPTANCE_STRICT` is set, so the
//! report is always printed in full.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use fris::channel::{sample_multipath, sample_multiuser, ChannelSpec, MultiUserSpec};
use fris::experiment::{
    run_case1, run_case2, run_demo_path_aware, ExperimentConfig, ExperimentKind, ExperimentOutput,
};
use fris::metrics::{
    aggregates, effective_user_channel, received_power, weighted_sum_rate, Mode, MultiUserScenario,
    PrecoderSet, Scenario, SurfaceState,
};
use fris::optimize::{
    align_phases_closed_form, cross_entropy_search, pattern_gradient, CeoParams, DiscreteProblem,
    TraceRow,
};
use fris::surface::{
    grid_positions, ActivationMask, ElementPatterns, PatternCoeffs, ReflectionConfig, ShBasis,
};
use fris::Complex64;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POWER_RTOL: f64 = 1e-12;
const BOUND_RTOL: f64 = 1e-9;
const ORDER_SLACK: f64 = 1e-9;
const WSR_MONOTONE_TOL: f64 = 1e-9;
const GRADIENT_RTOL: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Traces gathered by criteria 3 to 6 for criterion 7.
#[derive(Default)]
struct Traces {
    /// CEO running-best traces (must be non-decreasing exactly).
    ceo: Vec<(String, Vec<TraceRow>)>,
    /// WSR / rate traces of the alternating optimizers.
    wsr: Vec<(String, Vec<TraceRow>)>,
}

fn report(id: usize, title: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = run();
    let elapsed = t.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "criterion {id} [{}] {title}: {} (runtime {:.2} s, limit {} s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over limit" }
    );
    pass
}

fn c1_power_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let raw = RawInstance::random(&mut rng);
        let (sc, st) = raw.to_crate();
        let got = received_power(&sc, &st).unwrap();
        let want = raw.oracle_power();
        worst = worst.max((got - want).abs() / want.abs().max(1e-300));
    }
    Outcome {
        pass: worst <= POWER_RTOL,
        detail: format!("1000 instances, worst relative error {worst:.2e} (tol {POWER_RTOL:.0e})"),
    }
}

fn c2_coherent_combining() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    // Smallest quantized/continuous pre-noise power ratio per resolution.
    let mut worst_ratio = [f64::INFINITY; 3];
    for seed in 0..300 {
        let m = rng.random_range(1..=16);
        let channel = sample_multipath(seed, &ChannelSpec::new(1, 1, 0.01)).unwrap();
        let geometry = grid_positions(1, m, rng.random_range(0.001..0.02)).unwrap();
        let sc = Scenario::new(
            geometry,
            channel,
            rng.random_range(0.01..2.0),
            Mode::Traditional,
        )
        .unwrap();
        let mut st = SurfaceState::isotropic(m);
        let c = aggregates(&sc.channel, &sc.geometry, &st.patterns);
        let amp: f64 = c.iter().map(|z| z.norm()).sum();
        let pre_noise = amp * amp;
        let bound = pre_noise + sc.noise_power;
        st.reflection = align_phases_closed_form(&sc, &st, None).unwrap();
        let p = received_power(&sc, &st).unwrap();
        worst = worst.max((p - bound).abs() / bound);
        for (i, bits) in [1u32, 2, 3].into_iter().enumerate() {
            st.reflection = align_phases_closed_form(&sc, &st, Some(bits)).unwrap();
            let q = received_power(&sc, &st).unwrap() - sc.noise_power;
            worst_ratio[i] = worst_ratio[i].min(q / pre_noise);
        }
    }
    let floor = |b: u32| (PI / (1u32 << b) as f64).cos().powi(2);
    let quant_ok = (1..=3).all(|b| worst_ratio[b as usize - 1] >= floor(b) * (1.0 - 1e-12));
    Outcome {
        pass: worst <= BOUND_RTOL && quant_ok,
        detail: format!(
            "300 instances, continuous gap {worst:.2e} (tol {BOUND_RTOL:.0e}); worst quantized/continuous power \
             b=1 {:.4} (floor {:.4}), b=2 {:.4} (floor {:.4}), b=3 {:.4} (floor {:.4})",
            worst_ratio[0],
            floor(1),
            worst_ratio[1],
            floor(2),
            worst_ratio[2],
            floor(3)
        ),
    }
}

fn c3_ceo_exhaustive(traces: &mut Traces) -> Outcome {
    let mut hits = 0;
    let mut space = 0;
    for seed in 0..100u64 {
        let channel = sample_multipath(seed, &ChannelSpec::new(2, 2, 0.01)).unwrap();
        let sc = Scenario::new(
            grid_positions(3, 3, 0.004).unwrap(),
            channel,
            0.5,
            Mode::PositionFris,
        )
        .unwrap();
        let patterns = SurfaceState::isotropic(9).patterns;
        let c = aggregates(&sc.channel, &sc.geometry, &patterns);
        let (best, visited) = exhaustive_rate(&c, 3, 1, sc.normalization(), sc.noise_power);
        space = visited;
        let problem = DiscreteProblem::new(&sc, &patterns, 3, 1).unwrap();
        let res = cross_entropy_search(&problem, &CeoParams::default(), seed).unwrap();
        if (res.best_objective - best).abs() <= 1e-12 * best.max(1.0) {
            hits += 1;
        }
        traces.ceo.push((format!("c3 seed {seed}"), res.trace));
    }
    Outcome {
        pass: space == 672 && hits >= 95,
        detail: format!(
            "{space} configurations, exhaustive optimum found in {hits}/100 runs (need ≥ 95)"
        ),
    }
}

fn c4_demo(traces: &mut Traces) -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentKind::Demo);
    let q = ShBasis::new(cfg.surface.basis_order).len();
    let (mut power, mut spread, mut spread_pos, mut spread_pat, mut aligned) = (0, 0, 0, 0, 0);
    for seed in 1..=100 {
        let r = run_demo_path_aware(&cfg, seed).unwrap();
        let (t, p, f) = (
            r.mode(Mode::Traditional),
            r.mode(Mode::PositionFris),
            r.mode(Mode::PatternFris),
        );
        if f.received_power >= p.received_power - ORDER_SLACK
            && p.received_power >= t.received_power - ORDER_SLACK
        {
            power += 1;
        }
        let pos_le_trad = p.phase_spread <= t.phase_spread + ORDER_SLACK;
        let pat_le_pos = f.phase_spread <= p.phase_spread + ORDER_SLACK;
        spread_pos += pos_le_trad as usize;
        spread_pat += pat_le_pos as usize;
        spread += (pos_le_trad && pat_le_pos) as usize;
        aligned += (f.max_phase_difference_deg <= 5.0) as usize;
        traces
            .wsr
            .push((format!("c4 seed {seed}"), r.pattern_trace));
    }
    Outcome {
        pass: q == 16 && power == 100 && spread == 100 && aligned >= 90,
        detail: format!(
            "100 instances, Q={q}: power ordered {power}/100 (need 100, slack {ORDER_SLACK:.0e}); \
             spread ordered {spread}/100 (need 100; position ≤ traditional {spread_pos}, pattern ≤ position {spread_pat}); \
             pattern max residual ≤ 5° in {aligned}/100 (need ≥ 90)"
        ),
    }
}

fn medians_by<F: Fn(&fris::experiment::ResultRecord) -> bool>(out: &ExperimentOutput, f: F) -> f64 {
    let v: Vec<f64> = out
        .records
        .iter()
        .filter(|r| f(r))
        .map(|r| r.objective)
        .collect();
    fris::experiment::median(&v)
}

fn c5_case1(traces: &mut Traces) -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentKind::Case1);
    let out = run_case1(&cfg).unwrap();
    for t in &out.traces {
        traces.ceo.push((t.name.clone(), t.rows.clone()));
    }
    let sel = |r: &fris::experiment::ResultRecord, g: usize| {
        r.active == 16 && r.bits == Some(1) && r.elements == g * g
    };
    let rows: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.active == 16 && r.bits == Some(1))
        .collect();
    let mut fris_med = Vec::new();
    let mut gains = Vec::new();
    let mut dominated = 0;
    let mut total = 0;
    for g in [6usize, 10, 16] {
        fris_med.push(medians_by(&out, |r| sel(r, g) && r.mode == "position-fris"));
        let mut gain = Vec::new();
        for s in &cfg.seeds {
            let find = |mode: &str| {
                rows.iter()
                    .find(|r| r.elements == g * g && r.seed == *s && r.mode == mode)
                    .unwrap()
                    .objective
            };
            let (t, f) = (find("traditional"), find("position-fris"));
            gain.push(fris::experiment::relative_gain(f, t));
        }
        gains.push(fris::experiment::median(&gain));
    }
    for pair in out.records.chunks(2) {
        total += 1;
        dominated += (pair[1].objective >= pair[0].objective) as usize;
    }
    let a = fris_med.windows(2).all(|w| w[1] >= w[0]);
    let c = gains[2] > gains[0];
    Outcome {
        pass: cfg.seeds.len() >= 20 && a && dominated == total && c,
        detail: format!(
            "{} seeds; (a) median FRIS rate 6x6 {:.3}, 10x10 {:.3}, 16x16 {:.3} non-decreasing: {a}; \
             (b) FRIS ≥ traditional in {dominated}/{total} rows; (c) median gain 6x6 {:.1}% < 16x16 {:.1}%: {c}",
            cfg.seeds.len(),
            fris_med[0],
            fris_med[1],
            fris_med[2],
            100.0 * gains[0],
            100.0 * gains[2]
        ),
    }
}

fn c6_case2(traces: &mut Traces) -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentKind::Case2);
    let out = run_case2(&cfg).unwrap();
    for t in &out.traces {
        traces.wsr.push((t.name.clone(), t.rows.clone()));
    }
    let get = |g: usize, s: u64, mode: &str, pattern: &str, nt: usize| {
        out.records
            .iter()
            .find(|r| {
                r.elements == g * g
                    && r.seed == s
                    && r.mode == mode
                    && r.pattern == pattern
                    && r.tx_antennas == Some(nt)
            })
            .map(|r| r.objective)
            .unwrap()
    };
    let base = |g: usize, s: u64| {
        get(g, s, "traditional", "tr38901", 10).max(get(g, s, "traditional", "isotropic", 10))
    };
    let (mut beats5, mut beats10, mut small_vs_big, mut all) = (0, 0, 0, 0);
    for &s in &cfg.seeds {
        let b5 = [5usize, 10]
            .iter()
            .all(|&g| get(g, s, "pattern-fris", "optimized", 5) > base(g, s));
        let b10 = [5usize, 10]
            .iter()
            .all(|&g| get(g, s, "pattern-fris", "optimized", 10) > base(g, s));
        let sb = [5usize, 10]
            .iter()
            .all(|&nt| get(5, s, "pattern-fris", "optimized", nt) >= base(10, s));
        beats5 += b5 as usize;
        beats10 += b10 as usize;
        small_vs_big += sb as usize;
        all += (b5 && b10 && sb) as usize;
    }
    let n = cfg.seeds.len();
    let need = (9 * n).div_ceil(10);
    Outcome {
        pass: n == 20 && all >= need,
        detail: format!(
            "{n} seeds, M ∈ {{25, 100}}: FRIS(N_t=5) > both baselines(N_t=10) in {beats5}; \
             FRIS(N_t=10) > both baselines in {beats10}; FRIS(M=25) ≥ traditional(M=100) in {small_vs_big}; \
             all together in {all} (need ≥ {need})"
        ),
    }
}

fn c7_monotone(traces: &Traces) -> Outcome {
    let ceo_bad = traces
        .ceo
        .iter()
        .filter(|(_, t)| {
            t.windows(2)
                .any(|w| w[1].best_objective < w[0].best_objective)
        })
        .count();
    let wsr_bad = traces
        .wsr
        .iter()
        .filter(|(_, t)| {
            t.windows(2)
                .any(|w| w[1].best_objective < w[0].best_objective - WSR_MONOTONE_TOL)
        })
        .count();
    Outcome {
        pass: ceo_bad == 0 && wsr_bad == 0 && !traces.ceo.is_empty() && !traces.wsr.is_empty(),
        detail: format!(
            "{} CEO traces with {ceo_bad} decreasing (exact); {} WSR/rate traces with {wsr_bad} decreasing (tol {WSR_MONOTONE_TOL:.0e})",
            traces.ceo.len(),
            traces.wsr.len()
        ),
    }
}

fn c8_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst = 0.0f64;
    for point in 0..50u64 {
        let users = rng.random_range(1..=3);
        let nt = rng.random_range(1..=4);
        let spec = MultiUserSpec {
            users,
            tx_antennas: nt,
            paths: ChannelSpec::new(rng.random_range(1..=3), rng.random_range(1..=3), 0.01),
        };
        let ch = sample_multiuser(500 + point, &spec).unwrap();
        let m = rng.random_range(1..=6);
        let sc = MultiUserScenario::new(grid_positions(1, m, 0.005).unwrap(), ch, 0.2, 1.0, None)
            .unwrap();
        let basis = ShBasis::new(rng.random_range(0..=3));
        let coeffs: Vec<Complex64> = (0..m * basis.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let pc = PatternCoeffs::from_coeffs(basis, coeffs, 1e6).unwrap();
        let mut w = PrecoderSet::zeros(users, nt, 1.0);
        for v in &mut w.vectors {
            *v = DVector::from_fn(nt, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
        }
        let scale = Complex64::new((1.0 / w.total_power()).sqrt(), 0.0);
        w.vectors.iter_mut().for_each(|v| *v *= scale);

        let grad: Vec<f64> = pattern_gradient(&sc, &pc, &w)
            .unwrap()
            .iter()
            .flat_map(|g| [g.re, g.im])
            .collect();
        let x: Vec<f64> = pc.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
        let f = |y: &[f64]| {
            let c: Vec<Complex64> = y.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let state = SurfaceState {
                mask: ActivationMask::all(m),
                reflection: ReflectionConfig::zeros(m),
                patterns: ElementPatterns::Coefficients(
                    PatternCoeffs::from_coeffs(basis, c, 1e6).unwrap(),
                ),
            };
            let h: Vec<_> = (0..users)
                .map(|k| effective_user_channel(&sc, &state, k).unwrap())
                .collect();
            weighted_sum_rate(&h, &w, &sc.weights, sc.noise_power).unwrap()
        };
        let fd = central_difference(&x, 1e-6, f);
        let err = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(err / norm);
    }
    Outcome {
        pass: worst <= GRADIENT_RTOL,
        detail: format!("50 points, worst relative error {worst:.2e} (tol {GRADIENT_RTOL:.0e})"),
    }
}

fn c9_determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/case1.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (run, threads) in [(0, 1), (1, 8), (2, 1), (3, 8)] {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fris"))
            .args(["case1", "--config"])
            .arg(&config)
            .args(["--seed", "1", "--threads", &threads.to_string(), "--out"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return Outcome {
                pass: false,
                detail: format!("run {run} exited with {status}"),
            };
        }
        files.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let same = files.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass: same,
        detail: format!(
            "`fris case1` x4 (threads 1, 8, 1, 8), results.csv {} bytes, byte-identical: {same}",
            files[0].len()
        ),
    }
}

fn main() {
    let s = Duration::from_secs;
    let mut traces = Traces::default();
    let results = [
        report(
            1,
            "received power vs triple-loop oracle",
            s(10),
            c1_power_oracle,
        ),
        report(
            2,
            "coherent-combining optimality",
            s(5),
            c2_coherent_combining,
        ),
        report(3, "CEO vs exhaustive search", s(60), || {
            c3_ceo_exhaustive(&mut traces)
        }),
        report(4, "path-aware modulation demo", s(300), || {
            c4_demo(&mut traces)
        }),
        report(5, "position-FRIS rate trend", s(600), || {
            c5_case1(&mut traces)
        }),
        report(6, "pattern-FRIS weighted-sum-rate trend", s(900), || {
            c6_case2(&mut traces)
        }),
        report(7, "WMMSE and CEO monotonicity", s(60), || {
            c7_monotone(&traces)
        }),
        report(
            8,
            "pattern gradient vs central differences",
            s(30),
            c8_gradient,
        ),
        report(
            9,
            "CLI determinism across thread counts",
            s(600),
            c9_determinism,
        ),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed < results.len() && std::env::var_os("FRIS_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
