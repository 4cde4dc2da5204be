//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use linmdtw::eval::{
    discrepancy, memreport, Algorithm, DiscrepancyReport, DEFAULT_THRESHOLDS_SECONDS,
};
use linmdtw::linmem::cell_bound;
use linmdtw::{
    dtw_brute_enumerate, dtw_full, fastdtw, linmdtw, linmdtw_traced, mrmsdtw, synth_pair,
    validate_path, AlignmentResult, CellBudget, CostFunction, FeatureSeries, LinMdtwConfig,
    OracleOptions, Precision, SynthConfig, SynthKind, TieRule, WarpingPath,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const C: CostFunction = CostFunction::Euclidean;

const SWEEP_MAX_SIDE: usize = 12;
const SWEEP_REPS: usize = 9;
const SWEEP_MIN_INSTANCES: usize = 2000;
const SCALE_INSTANCES: usize = 200;
const SCALE_SIDES: std::ops::RangeInclusive<usize> = 100..=600;
const SCALE_MIN_DIMS: [usize; 3] = [2, 16, 500];
const SINGLE_REL_TOL: f64 = 1e-4;
const RATIO_SIDE: usize = 2000;
const RATIO_RANGE: (f64, f64) = (1.8, 2.0 + 0.01);
/// Cutoff for the ratio check: 2000 / 2^4, the same recursion depth that a
/// 500-frame cutoff gives on the ~8000-frame pieces of the memory table.
const RATIO_MIN_DIM: usize = 125;
const MEMORY_FACTOR: usize = 6;
const TABLE_REL_TOL: f64 = 0.02;
const TABLE_FPS: f64 = 43.0664;
const TABLE_RADIUS: usize = 30;
const TABLE_BUDGETS: [u64; 2] = [100_000, 10_000_000];
const BASELINE_INSTANCES: usize = 100;
const TIE_INSTANCES: usize = 50;

/// Peak-memory bookkeeping shared by every linmdtw run in this suite.
static PEAK_RUNS: AtomicUsize = AtomicUsize::new(0);
static PEAK_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);
/// Largest `peak_retained / min(M, N)` seen, times 1000.
static PEAK_WORST_MILLI: AtomicU64 = AtomicU64::new(0);
/// `(M, N, min_dim, cells_processed)` of the oracle-equivalence runs.
static SCALE_CELLS: Mutex<Vec<(usize, usize, usize, u64)>> = Mutex::new(Vec::new());

fn record_peak(r: &AlignmentResult, m: usize, n: usize) {
    let short = m.min(n);
    PEAK_RUNS.fetch_add(1, Ordering::Relaxed);
    if r.peak_retained > MEMORY_FACTOR * short {
        PEAK_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
    let milli = (r.peak_retained as u64 * 1000) / short as u64;
    PEAK_WORST_MILLI.fetch_max(milli, Ordering::Relaxed);
}

fn random_series(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> FeatureSeries {
    FeatureSeries::new((0..len * dim).map(|_| rng.gen::<f32>()).collect(), dim).unwrap()
}

/// Small-integer features so equal-cost predecessors are common.
fn quantized_series(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> FeatureSeries {
    FeatureSeries::new((0..len * dim).map(|_| rng.gen_range(0..3) as f32).collect(), dim).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn exhaustive_sweep() -> Outcome {
    let mut cases = Vec::new();
    for m in 2..=SWEEP_MAX_SIDE {
        for n in 2..=SWEEP_MAX_SIDE {
            for dim in [1, 4] {
                for rep in 0..SWEEP_REPS {
                    cases.push((m, n, dim, rep));
                }
            }
        }
    }
    let cfg = LinMdtwConfig::default().with_min_dim(2);
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(k, &(m, n, dim, _))| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 + k as u64);
            let (x, y) = (random_series(&mut rng, m, dim), random_series(&mut rng, n, dim));
            let brute = dtw_brute_enumerate(&x, &y, C).unwrap();
            let (r, pivots) = linmdtw_traced(&x, &y, C, cfg).unwrap();
            record_peak(&r, m, n);
            if r.cost != brute.cost {
                return Some(format!("{m}x{n} d={dim}: cost {} vs {}", r.cost, brute.cost));
            }
            if let Some(p) = pivots.iter().find(|p| !brute.any_path_contains((p.i, p.j))) {
                return Some(format!("{m}x{n} d={dim}: pivot ({}, {}) off every optimal path", p.i, p.j));
            }
            None
        })
        .collect();
    outcome(
        cases.len() >= SWEEP_MIN_INSTANCES && failures.is_empty(),
        format!(
            "{} instances (2..={SWEEP_MAX_SIDE} per side, d in {{1,4}}), {} mismatches{}",
            cases.len(),
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let results: Vec<Result<f64, String>> = (0..SCALE_INSTANCES)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(20_000 + k as u64);
            let (m, n) = (rng.gen_range(SCALE_SIDES), rng.gen_range(SCALE_SIDES));
            let dim = rng.gen_range(1..=12);
            let min_dim = SCALE_MIN_DIMS[k % SCALE_MIN_DIMS.len()];
            let (x, y) = (random_series(&mut rng, m, dim), random_series(&mut rng, n, dim));
            let exact = dtw_full(&x, &y, C, OracleOptions::default()).unwrap();
            let cfg = LinMdtwConfig::default().with_min_dim(min_dim);
            let r64 = linmdtw(&x, &y, C, cfg).unwrap();
            let r32 = linmdtw(&x, &y, C, cfg.with_precision(Precision::Single)).unwrap();
            for r in [&r64, &r32] {
                record_peak(r, m, n);
                validate_path(&r.path, m, n).map_err(|v| format!("invalid path: {v:?}"))?;
                SCALE_CELLS.lock().unwrap().push((m, n, min_dim, r.cells_processed));
            }
            if r64.cost != exact.cost {
                return Err(format!("{m}x{n} min_dim {min_dim}: {} vs {}", r64.cost, exact.cost));
            }
            let rel = ((r32.cost - exact.cost) / exact.cost).abs();
            if rel >= SINGLE_REL_TOL {
                return Err(format!("{m}x{n} min_dim {min_dim}: 32-bit relative error {rel:e}"));
            }
            Ok(rel)
        })
        .collect();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let worst = results.iter().filter_map(|r| r.as_ref().ok()).fold(0.0f64, |a, &b| a.max(b));
    outcome(
        errors.is_empty(),
        format!(
            "{SCALE_INSTANCES} instances, M,N in [100,600], min_dim {SCALE_MIN_DIMS:?}: {} failures; 64-bit exact, worst 32-bit rel err {worst:.2e} (tol {SINGLE_REL_TOL:e}){}",
            errors.len(),
            errors.first().map(|e| format!("; first: {e}")).unwrap_or_default()
        ),
    )
}

fn cell_count_bound() -> Outcome {
    let cells = SCALE_CELLS.lock().unwrap().clone();
    let mut over_by_min_dim = Vec::new();
    for md in SCALE_MIN_DIMS {
        let runs: Vec<_> = cells.iter().filter(|r| r.2 == md).collect();
        let over = runs.iter().filter(|r| r.3 as f64 > cell_bound(r.0, r.1)).count();
        // Excess over 2MN relative to the (M+N)log2(M+N) allowance.
        let worst = runs
            .iter()
            .map(|r| (r.3 as f64 - 2.0 * (r.0 * r.1) as f64) / (cell_bound(r.0, r.1) - 2.0 * (r.0 * r.1) as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        over_by_min_dim.push((md, over, runs.len(), worst));
    }
    let over: usize = over_by_min_dim.iter().map(|o| o.1).sum();

    let ratio = |min_dim: usize| {
        let mut out = Vec::new();
        let mut exact = true;
        for seed in 0..3 {
            let cfg = SynthConfig { dim: 12, ..SynthConfig::new(SynthKind::WarpedSine, RATIO_SIDE, seed, 0.3) };
            let (x, y) = synth_pair(&cfg).unwrap();
            let r = linmdtw(&x, &y, C, LinMdtwConfig::default().with_min_dim(min_dim)).unwrap();
            record_peak(&r, RATIO_SIDE, RATIO_SIDE);
            exact &= r.cost == dtw_full(&x, &y, C, OracleOptions::default()).unwrap().cost;
            out.push(r.cells_ratio(RATIO_SIDE, RATIO_SIDE));
        }
        (out, exact)
    };
    let fmt = |v: &[f64]| v.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(", ");
    let (ratios, exact_ok) = ratio(RATIO_MIN_DIM);
    let (default_ratios, _) = ratio(linmdtw::linmem::DEFAULT_MIN_DIM);
    let in_range = ratios.iter().all(|&q| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&q));
    outcome(
        !cells.is_empty() && over == 0 && in_range && exact_ok,
        format!(
            "{} runs vs 2MN+(M+N)log2(M+N), over per min_dim (min_dim, over, runs, worst excess/allowance): {}; \
             {RATIO_SIDE}x{RATIO_SIDE} warped-sine ratios at min_dim {RATIO_MIN_DIM} [{}] (want [{}, {}]), exact={exact_ok}; \
             at min_dim {} (not gated): [{}]",
            cells.len(),
            over_by_min_dim
                .iter()
                .map(|(md, o, n, w)| format!("({md}, {o}, {n}, {w:.2})"))
                .collect::<Vec<_>>()
                .join(" "),
            fmt(&ratios),
            RATIO_RANGE.0,
            RATIO_RANGE.1,
            linmdtw::linmem::DEFAULT_MIN_DIM,
            fmt(&default_ratios),
        ),
    )
}

fn memory_instrumentation() -> Outcome {
    // Extra shapes beyond the runs already recorded: thin, skewed, parallel.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (m, n) in [(2, 900), (900, 3), (50, 1200), (1500, 1499), (777, 64)] {
        let (x, y) = (random_series(&mut rng, m, 3), random_series(&mut rng, n, 3));
        for min_dim in [2, 16, 500] {
            let mut cfg = LinMdtwConfig::default().with_min_dim(min_dim);
            record_peak(&linmdtw(&x, &y, C, cfg).unwrap(), m, n);
            cfg.parallel_halves = true;
            cfg.parallel_diagonals = true;
            record_peak(&linmdtw(&x, &y, C, cfg).unwrap(), m, n);
        }
    }
    let runs = PEAK_RUNS.load(Ordering::Relaxed);
    let bad = PEAK_VIOLATIONS.load(Ordering::Relaxed);
    let worst = PEAK_WORST_MILLI.load(Ordering::Relaxed) as f64 / 1000.0;
    outcome(
        runs > 0 && bad == 0,
        format!("{runs} linmdtw runs, {bad} over {MEMORY_FACTOR}*min(M,N); worst peak = {worst:.3}*min(M,N)"),
    )
}

/// A published memory-table figure such as "3.86 MB".
fn within_either_prefix(bytes: u64, printed: &str) -> (bool, f64) {
    let (value, unit) = printed.split_once(' ').unwrap();
    let value: f64 = value.parse().unwrap();
    let power = match unit.to_ascii_uppercase().as_str() {
        "KB" => 1,
        "MB" => 2,
        "GB" => 3,
        u => panic!("unexpected unit {u}"),
    };
    let rel = |base: f64| (bytes as f64 - value * base.powi(power)) / (value * base.powi(power));
    let best = [rel(1024.0), rel(1000.0)]
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    (best.abs() <= TABLE_REL_TOL, best)
}

fn memory_table() -> Outcome {
    // (piece, seconds 1, seconds 2, textbook, fastdtw, linmdtw)
    let rows = [
        ("Vivaldi", 188.0, 209.0, "277 MB", "3.86 MB", "194 KB"),
        ("Candide", 268.0, 279.0, "527 MB", "5.5 MB", "270 KB"),
        ("Beethoven 5", 445.0, 514.0, "1.58 GB", "9.12 MB", "448 KB"),
        ("Schumann 3", 2124.0, 2199.0, "23.2 GB", "36.9 MB", "1.77 MB"),
        ("Rite of Spring", 2053.0, 2082.0, "29.4 GB", "42.1 MB", "2.02 MB"),
        ("Tchaikovsky 4", 2645.0, 2530.0, "46.1 GB", "51.9 MB", "2.48 MB"),
        ("Shostakovich 11", 3647.0, 3765.0, "94.6 GB", "74.8 MB", "3.6 MB"),
        ("Verdi Requiem", 4983.0, 5042.0, "173 GB", "102 MB", "4.9 MB"),
        ("Das Rheingold", 8799.0, 8759.0, "542 GB", "180 MB", "8.6 MB"),
    ];
    let mut misses = Vec::new();
    let mut checked = 0;
    let mut caption = None;
    for (piece, a, b, textbook, fast, ours) in rows {
        let rep = memreport(a, b, TABLE_FPS, TABLE_RADIUS, &TABLE_BUDGETS).unwrap();
        for (algo, printed) in
            [(Algorithm::Textbook, textbook), (Algorithm::FastDtw, fast), (Algorithm::LinMdtw, ours)]
        {
            checked += 1;
            let (ok, rel) = within_either_prefix(rep.get(algo).unwrap().bytes, printed);
            if !ok {
                misses.push(format!("{piece} {algo} {printed} off by {:+.1}%", 100.0 * rel));
            }
        }
        caption.get_or_insert(rep);
    }
    let rep = caption.unwrap();
    let budgets: Vec<u64> = rep
        .rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::MrMsDtw)
        .map(|r| r.bytes)
        .collect();
    for (bytes, printed) in budgets.into_iter().zip(["391 KB", "38 MB"]) {
        checked += 1;
        let (ok, rel) = within_either_prefix(bytes, printed);
        if !ok {
            misses.push(format!("caption mrmsdtw {printed} off by {:+.1}%", 100.0 * rel));
        }
    }
    outcome(
        misses.is_empty(),
        format!(
            "{checked} figures at fps {TABLE_FPS}, radius {TABLE_RADIUS}, tol {:.0}% (binary or decimal prefix); {} outside{}",
            100.0 * TABLE_REL_TOL,
            misses.len(),
            if misses.is_empty() { String::new() } else { format!(": {}", misses.join("; ")) }
        ),
    )
}

fn baseline_sanity() -> Outcome {
    let failures: Vec<String> = (0..BASELINE_INSTANCES)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(30_000 + k as u64);
            let (m, n) = (rng.gen_range(2..=160), rng.gen_range(2..=160));
            let dim = rng.gen_range(1..=6);
            let (x, y) = (random_series(&mut rng, m, dim), random_series(&mut rng, n, dim));
            let exact = dtw_full(&x, &y, C, OracleOptions::default()).unwrap().cost;
            let lin = linmdtw(&x, &y, C, LinMdtwConfig::default().with_min_dim(8)).unwrap();
            record_peak(&lin, m, n);
            if lin.cost != exact {
                return Some(format!("{m}x{n}: linmdtw {} vs {exact}", lin.cost));
            }
            let sat = fastdtw(&x, &y, C, m.min(n)).unwrap().cost;
            if sat != exact {
                return Some(format!("{m}x{n}: saturated fastdtw {sat} vs {exact}"));
            }
            for radius in [0, 1, 5, 30] {
                let r = fastdtw(&x, &y, C, radius).unwrap();
                if r.cost < exact || validate_path(&r.path, m, n).is_err() {
                    return Some(format!("{m}x{n}: fastdtw radius {radius} cost {} < {exact}", r.cost));
                }
            }
            for budget in [100, 1_000, (m * n / 4).max(100) as u64] {
                let r = mrmsdtw(&x, &y, C, CellBudget::new(budget).unwrap()).unwrap();
                if r.cost < exact || validate_path(&r.path, m, n).is_err() || r.peak_retained as u64 > budget {
                    return Some(format!("{m}x{n}: mrmsdtw budget {budget} cost {} < {exact}", r.cost));
                }
            }
            let full = mrmsdtw(&x, &y, C, CellBudget::new((m * n).max(100) as u64).unwrap()).unwrap();
            if full.cost != exact {
                return Some(format!("{m}x{n}: mrmsdtw with budget >= MN gave {} vs {exact}", full.cost));
            }
            None
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!(
            "{BASELINE_INSTANCES} instances: saturated fastdtw exact, approximations >= exact, full-budget mrmsdtw exact; {} failures{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn metric_suite() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(40_000);
    for _ in 0..20 {
        let (m, n) = (rng.gen_range(2..200), rng.gen_range(2..200));
        let (x, y) = (random_series(&mut rng, m, 2), random_series(&mut rng, n, 2));
        let w = dtw_full(&x, &y, C, OracleOptions::default()).unwrap().path;
        if discrepancy(&w, &w, TABLE_FPS).unwrap().errors.iter().any(|&e| e != 0) {
            problems.push("self-discrepancy not zero".to_string());
        }
    }

    // Diagonal vs the same staircase running two columns ahead.
    let (len, shift) = (400usize, 2usize);
    let mut cells: Vec<(usize, usize)> = (0..=shift).map(|j| (0, j)).collect();
    cells.extend((1..len - shift).map(|i| (i, i + shift)));
    cells.extend((len - shift..len).map(|i| (i, len - 1)));
    let shifted = WarpingPath::new(cells);
    validate_path(&shifted, len, len).unwrap();
    let rep = discrepancy(&WarpingPath::diagonal(len), &shifted, TABLE_FPS).unwrap();
    let props = rep.proportion_below(&DEFAULT_THRESHOLDS_SECONDS);
    if !(props[0] < 1.0 && props[2] == 1.0) {
        problems.push(format!("2-frame shift proportions {props:?}"));
    }

    let mut monotone = 0;
    for seed in 0..10 {
        let cfg = SynthConfig { dim: 4, ..SynthConfig::new(SynthKind::RandomWalk, 500, seed, 0.5) };
        let (x, y) = synth_pair(&cfg).unwrap();
        let exact = dtw_full(&x, &y, C, OracleOptions::default()).unwrap().path;
        let approx = fastdtw(&x, &y, C, 1).unwrap().path;
        let props = discrepancy(&exact, &approx, TABLE_FPS)
            .unwrap()
            .proportion_below(&DEFAULT_THRESHOLDS_SECONDS);
        if props.windows(2).all(|w| w[0] <= w[1]) && props.iter().all(|p| (0.0..=1.0).contains(p)) {
            monotone += 1;
        } else {
            problems.push(format!("non-monotone proportions {props:?}"));
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "self-discrepancy zero on 20 paths; 2-frame shift proportions {:?}; {monotone}/10 exact-vs-fastdtw reports monotone{}",
            props.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>(),
            problems.first().map(|p| format!("; first problem: {p}")).unwrap_or_default()
        ),
    )
}

fn tie_breaking() -> Outcome {
    let mut problems = Vec::new();
    let mut merged: Option<DiscrepancyReport> = None;
    let mut differing = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(50_000);
    for k in 0..TIE_INSTANCES {
        let (m, n) = (rng.gen_range(50..=300), rng.gen_range(50..=300));
        let (x, y) = if k % 2 == 0 {
            (quantized_series(&mut rng, m, 2), quantized_series(&mut rng, n, 2))
        } else {
            (random_series(&mut rng, m, 2), random_series(&mut rng, n, 2))
        };
        let diag = dtw_full(&x, &y, C, OracleOptions { tie_rule: TieRule::DiagFirst, ..Default::default() }).unwrap();
        let left = dtw_full(&x, &y, C, OracleOptions { tie_rule: TieRule::LeftFirst, ..Default::default() }).unwrap();
        if diag.cost != left.cost {
            problems.push(format!("{m}x{n}: {} vs {}", diag.cost, left.cost));
        }
        if validate_path(&diag.path, m, n).is_err() || validate_path(&left.path, m, n).is_err() {
            problems.push(format!("{m}x{n}: invalid path"));
        }
        differing += usize::from(diag.path != left.path);
        let rep = discrepancy(&diag.path, &left.path, TABLE_FPS).unwrap();
        merged = Some(match merged {
            None => rep,
            Some(acc) => acc.merge(rep).unwrap(),
        });
    }
    let merged = merged.unwrap();
    let props = merged.proportion_below(&DEFAULT_THRESHOLDS_SECONDS);
    outcome(
        problems.is_empty(),
        format!(
            "{TIE_INSTANCES} instances, diag-first vs left-first: costs equal, paths valid; {differing} path pairs differ, max error {} frames, proportions at {DEFAULT_THRESHOLDS_SECONDS:?} s = {:?}{}",
            merged.max_error(),
            props.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>(),
            problems.first().map(|p| format!("; first problem: {p}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exactness sweep", exhaustive_sweep),
        ("oracle equivalence at scale", oracle_equivalence),
        ("cell-count bound", cell_count_bound),
        ("baseline sanity", baseline_sanity),
        ("metric suite", metric_suite),
        ("tie-breaking experiment", tie_breaking),
        ("memory table reproduction", memory_table),
        // Last: aggregates the peaks recorded by every run above.
        ("memory instrumentation", memory_instrumentation),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
        failed += usize::from(!result.pass);
        println!(
            "acceptance [{}] {name} ({:.1}s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", 8 - failed, 8);
    if failed > 0 {
        std::process::exit(1);
    }
}
