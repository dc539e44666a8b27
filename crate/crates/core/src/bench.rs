//! Exhaustive search versus single-pass algorithms, measured in exact work
//! units alongside wall time.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::series::{gen_random_walk, PriceSeries};
use crate::strategy::{brute_force_best_counted, evaluate_counted, optimal_strategy_counted, TechnicalStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub task: String,
    /// `t` for strategy search, `n` for scans.
    pub parameter: u64,
    /// Strategies evaluated or periods scanned; zero on error rows.
    pub work_units: u64,
    /// Fastest of the repeats, in seconds.
    pub wall_time: f64,
    #[serde(default)]
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(task: &str, parameter: u64, err: impl ToString) -> Self {
        Self {
            task: task.into(),
            parameter,
            work_units: 0,
            wall_time: 0.0,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Length of the series searched by brute force.
    pub search_len: usize,
    /// Length `n` of the scan benchmark; also run at `2n`.
    pub scan_len: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            search_len: 256,
            scan_len: 10_000,
            repeats: 5,
            seed: 0,
        }
    }
}

/// Runs `f` `repeats` times and keeps the fastest run.
fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, Duration)> {
    let mut best: Option<(T, Duration)> = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let out = f()?;
        let elapsed = start.elapsed();
        if best.as_ref().is_none_or(|b| elapsed < b.1) {
            best = Some((out, elapsed));
        }
    }
    Ok(best.expect("at least one repeat"))
}

fn record<T>(task: &str, parameter: u64, result: Result<(T, Duration)>, units: impl Fn(&T) -> u64) -> BenchRecord {
    match result {
        Ok((out, d)) => BenchRecord {
            task: task.into(),
            parameter,
            work_units: units(&out),
            wall_time: d.as_secs_f64(),
            error: None,
        },
        Err(e) => BenchRecord::failed(task, parameter, e),
    }
}

fn walk(n: usize, seed: u64) -> Result<PriceSeries> {
    gen_random_walk(n, 0.5, seed)
}

/// Brute-force search for each `t`, then the single-pass optimum at `n` and
/// `2n`. Guard violations become error rows.
pub fn bench_strategies(t_values: &[usize], opts: &BenchOptions) -> Result<Vec<BenchRecord>> {
    let search = walk(opts.search_len, opts.seed)?;
    let mut rows: Vec<BenchRecord> = t_values
        .iter()
        .map(|&t| {
            let r = timed(opts.repeats, || brute_force_best_counted(&search, t));
            record("brute_force", t as u64, r, |o| o.evaluated)
        })
        .collect();
    let t = t_values.iter().copied().filter(|&t| t <= 4).max().unwrap_or(3);
    for n in [opts.scan_len, 2 * opts.scan_len] {
        let series = walk(n, opts.seed)?;
        let r = timed(opts.repeats, || optimal_strategy_counted(&series, t));
        rows.push(record("optimal", n as u64, r, |o| o.periods_scanned as u64));
    }
    Ok(rows)
}

/// Verifying one fixed strategy at `n` and `2n`.
pub fn bench_verify_scaling(t: usize, opts: &BenchOptions) -> Result<Vec<BenchRecord>> {
    let strategy = TechnicalStrategy::from_long_mask(t, 0b1010_0110_1001_0110 & ((1u64 << (1 << t)) - 1))?;
    [opts.scan_len, 2 * opts.scan_len]
        .into_iter()
        .map(|n| {
            let series = walk(n, opts.seed)?;
            let r = timed(opts.repeats, || evaluate_counted(&strategy, &series));
            Ok(record("verify", n as u64, r, |e| e.periods_scanned as u64))
        })
        .collect()
}
