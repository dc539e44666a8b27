//! Browser bindings. Every export takes plain values and returns a JSON
//! string; the `*_json` functions behind them are ordinary Rust.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use emhnp_core::knapsack::{decide_q4, knapsack_to_scenario, solve_dp, KnapsackInstance};
use emhnp_core::sat::{
    apply_ticks, assignment_to_ticks, encode_market, market_decides_sat, parse_dimacs, Assignment, MarketConfig,
    MarketState,
};
use emhnp_core::series::{gen_planted, Context};
use emhnp_core::strategy::{bucket_contexts, brute_force_best_counted, optimal_strategy_counted, MAX_ENUM_LOOKBACK};

const SAT_SEARCH_BUDGET: u64 = 1_000_000;

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// A planted series and the best strategy found by one pass and, for small
/// lookbacks, by trying every strategy.
pub fn explore_strategy_json(n: usize, lookback: usize, pattern: u64, edge: f64, seed: u64) -> Result<String, String> {
    let err = |e: emhnp_core::Error| e.to_string();
    let series = gen_planted(n, Context::new(lookback, pattern).map_err(err)?, edge, seed).map_err(err)?;
    let optimal = optimal_strategy_counted(&series, lookback).map_err(err)?;
    let buckets = bucket_contexts(&series, lookback).map_err(err)?;
    let sums: Vec<(u64, usize, f64)> = buckets
        .buckets
        .iter()
        .map(|(code, rets)| (*code, rets.len(), rets.iter().sum()))
        .collect();
    let brute = if lookback <= MAX_ENUM_LOOKBACK {
        let b = brute_force_best_counted(&series, lookback).map_err(err)?;
        Some(json!({ "profit": b.profit, "evaluated": b.evaluated }))
    } else {
        None
    };
    to_json(&json!({
        "prices": series.prices(),
        "optimal": optimal,
        "buckets": sums,
        "brute_force": brute,
    }))
}

/// Solves an instance and replays it as a market scenario.
pub fn solve_knapsack_json(instance: &str) -> Result<String, String> {
    let inst: KnapsackInstance = serde_json::from_str(instance).map_err(|e| e.to_string())?;
    let err = |e: emhnp_core::Error| e.to_string();
    let solution = solve_dp(&inst).map_err(err)?;
    let scenario = knapsack_to_scenario(&inst).map_err(err)?;
    let q4 = decide_q4(&scenario).map_err(err)?;
    let assets: Vec<&[f64]> = scenario.assets().iter().map(|a| a.prices()).collect();
    to_json(&json!({
        "solution": solution,
        "decision": solution.total_value >= inst.target(),
        "scenario": { "sidecar": scenario.sidecar(), "prices": assets },
        "market": { "decision": q4.decision, "witness": q4.witness, "outcome": q4.outcome },
    }))
}

/// Searches the market for a satisfying tick path, or executes the path
/// given by `witness` (a JSON object of variable to bool) when non-empty.
pub fn simulate_sat_json(dimacs: &str, witness: &str) -> Result<String, String> {
    let f = parse_dimacs(dimacs).map_err(|e| e.to_string())?;
    let cfg = MarketConfig::default();
    let state = MarketState::with_defaults(f.num_vars());
    let groups = encode_market(&f, &state, &cfg).map_err(|e| e.to_string())?;
    let search = market_decides_sat(&f, SAT_SEARCH_BUDGET);
    let path: Option<Assignment> = if witness.trim().is_empty() {
        search.witness.clone()
    } else {
        Some(serde_json::from_str(witness).map_err(|e| e.to_string())?)
    };
    let execution = match path {
        Some(w) => {
            let ticks = assignment_to_ticks(&w, f.num_vars()).map_err(|e| e.to_string())?;
            Some(apply_ticks(&state, &groups, &ticks, &cfg).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    to_json(&json!({
        "groups": groups,
        "search": search,
        "execution": execution,
        "full_profit": f.clauses().len() as f64 * cfg.margin(),
    }))
}

#[wasm_bindgen]
pub fn explore_strategy(n: usize, lookback: usize, pattern: u64, edge: f64, seed: u64) -> Result<String, JsError> {
    explore_strategy_json(n, lookback, pattern, edge, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve_knapsack(instance: &str) -> Result<String, JsError> {
    solve_knapsack_json(instance).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_sat(dimacs: &str, witness: &str) -> Result<String, JsError> {
    simulate_sat_json(dimacs, witness).map_err(|e| JsError::new(&e))
}
