//! Budget-constrained multi-asset strategy search as Knapsack, and back.
//!
//! An item is a context code shared by every asset. Its size is the sum of
//! the price levels at which the context occurs (the cost of going long on
//! each occurrence) and its value is the sum of the returns that follow.
//! A long-or-out strategy must treat a context identically on every asset,
//! so occurrences are pooled per code rather than per `(asset, code)`.
//! All quantities are integers in units of the scenario tick.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{solve_dp, Item, KnapsackInstance};
use crate::error::{Error, Result};
use crate::series::{month_end_label, Context, Observation, PanelData, PriceSeries};
use crate::strategy::{evaluate, TechnicalStrategy, MAX_TABLE_LOOKBACK};

const QUANTIZE_TOLERANCE: f64 = 1e-9;

/// Assets of equal length with a lookback, a budget `B` and a target `K`,
/// both counted in ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAssetScenario {
    assets: Vec<PriceSeries>,
    lookback: usize,
    budget: u64,
    target: u64,
    tick: f64,
}

/// The JSON sidecar stored next to a scenario's panel CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSidecar {
    pub lookback: usize,
    pub budget: u64,
    pub target: u64,
    pub tick: f64,
}

fn quantize(x: f64, tick: f64) -> Result<i64> {
    let q = x / tick;
    let r = q.round();
    if !q.is_finite() || (q - r).abs() > QUANTIZE_TOLERANCE * r.abs().max(1.0) {
        return Err(Error::Quantization { value: x, tick });
    }
    Ok(r as i64)
}

impl MultiAssetScenario {
    pub fn new(
        assets: Vec<PriceSeries>,
        lookback: usize,
        budget: u64,
        target: u64,
        tick: f64,
    ) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one asset".into()));
        }
        if lookback == 0 || lookback > MAX_TABLE_LOOKBACK {
            return Err(Error::InvalidParameter(format!(
                "lookback must be in 1..={MAX_TABLE_LOOKBACK}, got {lookback}"
            )));
        }
        if budget == 0 || target == 0 {
            return Err(Error::InvalidParameter("budget and target must be positive".into()));
        }
        if !(tick.is_finite() && tick > 0.0) {
            return Err(Error::InvalidParameter(format!("tick {tick} must be positive")));
        }
        let len = assets[0].len();
        if len < lookback + 1 {
            return Err(Error::InvalidWindow { lookback, len });
        }
        for (i, a) in assets.iter().enumerate() {
            if a.len() != len {
                return Err(Error::InvalidParameter(format!(
                    "asset {i} has {} periods, asset 0 has {len}",
                    a.len()
                )));
            }
            for &x in a.returns().iter().chain(a.prices()) {
                quantize(x, tick)?;
            }
        }
        Ok(Self {
            assets,
            lookback,
            budget,
            target,
            tick,
        })
    }

    pub fn assets(&self) -> &[PriceSeries] {
        &self.assets
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn with_target(&self, target: u64) -> Result<Self> {
        Self::new(self.assets.clone(), self.lookback, self.budget, target, self.tick)
    }

    pub fn sidecar(&self) -> ScenarioSidecar {
        ScenarioSidecar {
            lookback: self.lookback,
            budget: self.budget,
            target: self.target,
            tick: self.tick,
        }
    }

    /// Panel form with assets `U0000, U0001, ...` and synthetic month-end
    /// dates starting January 2000.
    pub fn to_panel(&self) -> Result<PanelData> {
        let len = self.assets[0].len();
        let months: Vec<String> = (0..len).map(|i| month_end_label(2000, i)).collect();
        let names: Vec<String> = (0..self.assets.len()).map(|i| format!("U{i:04}")).collect();
        let mut panel = PanelData::new(names.clone(), months.clone())?;
        for (name, series) in names.iter().zip(&self.assets) {
            for (m, (&ret, &price)) in series.returns().iter().zip(series.prices()).enumerate() {
                panel.insert(
                    name,
                    &months[m],
                    Observation {
                        ret,
                        price: Some(price),
                    },
                )?;
            }
        }
        Ok(panel)
    }

    /// Rebuilds a scenario from a complete panel and its sidecar.
    pub fn from_panel(panel: &PanelData, sidecar: &ScenarioSidecar) -> Result<Self> {
        let assets = panel
            .assets()
            .iter()
            .map(|a| panel.asset_series(a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            assets,
            sidecar.lookback,
            sidecar.budget,
            sidecar.target,
            sidecar.tick,
        )
    }

    /// Visits every tradable context occurrence as
    /// `(code, price ticks at the occurrence, next return in ticks)`.
    fn occurrences(&self) -> Result<Vec<(u64, i64, i64)>> {
        let mut out = Vec::new();
        for a in &self.assets {
            for (end, ctx) in a.directions().sliding_contexts(self.lookback)? {
                if let Some(&next) = a.returns().get(end + 1) {
                    out.push((
                        ctx.code,
                        quantize(a.prices()[end], self.tick)?,
                        quantize(next, self.tick)?,
                    ));
                }
            }
        }
        Ok(out)
    }
}

/// A Knapsack instance together with the context code behind each item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub lookback: usize,
    pub instance: KnapsackInstance,
    /// `contexts[i]` is the code of item `i`, ascending.
    pub contexts: Vec<u64>,
}

impl Reduction {
    pub fn item_for(&self, code: u64) -> Option<usize> {
        self.contexts.binary_search(&code).ok()
    }
}

/// Pools each context's occurrence prices and subsequent returns into one
/// item. Contexts whose pooled return is not positive are left out: they can
/// never help reach the target and only use budget.
pub fn scenario_to_knapsack(sc: &MultiAssetScenario) -> Result<Reduction> {
    let mut pooled: BTreeMap<u64, (i64, i64)> = BTreeMap::new();
    for (code, price, ret) in sc.occurrences()? {
        let e = pooled.entry(code).or_default();
        e.0 += price;
        e.1 += ret;
    }
    let mut items = Vec::new();
    let mut contexts = Vec::new();
    for (code, (size, value)) in pooled {
        if value > 0 {
            items.push(Item {
                size: size as u64,
                value: value as u64,
            });
            contexts.push(code);
        }
    }
    Ok(Reduction {
        lookback: sc.lookback,
        instance: KnapsackInstance::new(items, sc.budget, sc.target)?,
        contexts,
    })
}

/// One synthetic asset per item. With `t = max(1, ceil(log2 |items|))`, the
/// first `t` moves of asset `u` spell the binary index `u` (UP = +1 tick,
/// DOWN = -1 tick), the level after those moves is `size(u)` ticks, and the
/// final move is `value(u)` ticks. The level is held at `size(u)` across the
/// encoding moves so every level stays positive; only the direction bits of
/// those moves matter to the reduction.
pub fn knapsack_to_scenario(inst: &KnapsackInstance) -> Result<MultiAssetScenario> {
    let n = inst.items().len();
    if n == 0 {
        return Err(Error::InvalidParameter("instance has no items".into()));
    }
    let t = (usize::BITS - (n - 1).leading_zeros()).max(1) as usize;
    let mut assets = Vec::with_capacity(n);
    for (u, item) in inst.items().iter().enumerate() {
        let ctx = Context::new(t, u as u64)?;
        let mut returns: Vec<f64> = ctx.bits().iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        returns.push(item.value as f64);
        let mut prices = vec![item.size as f64; t];
        prices.push((item.size + item.value) as f64);
        assets.push(PriceSeries::new(returns, prices)?);
    }
    MultiAssetScenario::new(assets, t, inst.budget(), inst.target(), 1.0)
}

/// Profit and simultaneous entry cost of a strategy on a scenario, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub profit_ticks: i64,
    pub cost_ticks: i64,
}

/// Evaluates `strategy` on every asset directly, without the reduction.
pub fn scenario_outcome(sc: &MultiAssetScenario, strategy: &TechnicalStrategy) -> Result<ScenarioOutcome> {
    if strategy.lookback() != sc.lookback {
        return Err(Error::InvalidParameter(format!(
            "strategy lookback {} differs from scenario lookback {}",
            strategy.lookback(),
            sc.lookback
        )));
    }
    let mut profit = 0.0;
    for a in &sc.assets {
        profit += evaluate(strategy, a)?;
    }
    let mut cost = 0i64;
    for (code, price, _) in sc.occurrences()? {
        if strategy.position(code) == 1 {
            cost += price;
        }
    }
    Ok(ScenarioOutcome {
        profit_ticks: quantize(profit, sc.tick)?,
        cost_ticks: cost,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q4Decision {
    pub decision: bool,
    pub witness: Option<TechnicalStrategy>,
    pub outcome: Option<ScenarioOutcome>,
    pub reduction: Reduction,
}

/// Whether a long-or-out strategy earns at least `K` ticks while its entry
/// prices sum to at most `B` ticks. A positive answer carries a witness
/// that has been re-checked against the scenario.
pub fn decide_q4(sc: &MultiAssetScenario) -> Result<Q4Decision> {
    let reduction = scenario_to_knapsack(sc)?;
    let sol = solve_dp(&reduction.instance)?;
    if sol.total_value < sc.target {
        return Ok(Q4Decision {
            decision: false,
            witness: None,
            outcome: None,
            reduction,
        });
    }
    let witness = TechnicalStrategy::from_long_contexts(
        sc.lookback,
        sol.chosen.iter().map(|&i| reduction.contexts[i]),
    )?;
    let outcome = scenario_outcome(sc, &witness)?;
    if outcome.profit_ticks < sc.target as i64 || outcome.cost_ticks > sc.budget as i64 {
        return Err(Error::Internal(format!(
            "witness earns {} ticks at cost {}, needed >= {} within {}",
            outcome.profit_ticks, outcome.cost_ticks, sc.target, sc.budget
        )));
    }
    Ok(Q4Decision {
        decision: true,
        witness: Some(witness),
        outcome: Some(outcome),
        reduction,
    })
}
