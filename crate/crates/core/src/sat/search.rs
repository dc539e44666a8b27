use serde::{Deserialize, Serialize};

use super::market::{apply_ticks, encode_market, ticks_to_assignment, MarketConfig, MarketState, OcoGroup, Tick, TickAssignment};
use super::{Assignment, CnfFormula};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SatStatus {
    Sat,
    Unsat,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatResult {
    pub status: SatStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Assignment>,
    /// Search nodes visited.
    pub nodes: u64,
}

enum Outcome {
    Found(Vec<Option<Tick>>),
    Exhausted,
    OutOfBudget,
}

struct Search<'a> {
    groups: &'a [OcoGroup],
    budget: u64,
    nodes: u64,
}

impl Search<'_> {
    /// Forces ticks implied by groups with a single way left to fill.
    /// Returns false when some group can no longer fill.
    fn propagate(&self, ticks: &mut [Option<Tick>]) -> bool {
        loop {
            let mut changed = false;
            for g in self.groups {
                let mut filled = false;
                let mut needed: Option<(u32, Tick)> = None;
                let mut ways = 0;
                for o in &g.orders {
                    let want = if o.fills_on(Tick::Down) { Tick::Down } else { Tick::Up };
                    match ticks[o.security as usize] {
                        Some(t) if t == want => {
                            filled = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            if needed != Some((o.security, want)) {
                                ways += 1;
                                needed = Some((o.security, want));
                            }
                        }
                    }
                }
                if filled {
                    continue;
                }
                match (ways, needed) {
                    (0, _) => return false,
                    (1, Some((sec, want))) => {
                        ticks[sec as usize] = Some(want);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn next_security(&self, ticks: &[Option<Tick>]) -> Option<u32> {
        self.groups
            .iter()
            .filter(|g| {
                !g.orders
                    .iter()
                    .any(|o| ticks[o.security as usize].is_some_and(|t| o.fills_on(t)))
            })
            .flat_map(|g| &g.orders)
            .map(|o| o.security)
            .find(|&s| ticks[s as usize].is_none())
    }

    fn run(&mut self, mut ticks: Vec<Option<Tick>>) -> Outcome {
        if self.nodes >= self.budget {
            return Outcome::OutOfBudget;
        }
        self.nodes += 1;
        if !self.propagate(&mut ticks) {
            return Outcome::Exhausted;
        }
        let Some(sec) = self.next_security(&ticks) else {
            return Outcome::Found(ticks);
        };
        for tick in [Tick::Down, Tick::Up] {
            let mut branch = ticks.clone();
            branch[sec as usize] = Some(tick);
            match self.run(branch) {
                Outcome::Exhausted => continue,
                done => return done,
            }
        }
        Outcome::Exhausted
    }
}

/// Decides satisfiability by searching for a tick path on which every OCO
/// group fills. The search branches on securities in group order, trying a
/// DOWN tick first, and forces the tick of any group left with one fillable
/// order. At most `search_budget` nodes are visited.
pub fn market_decides_sat(f: &CnfFormula, search_budget: u64) -> SatResult {
    let cfg = MarketConfig::default();
    let state = MarketState::with_defaults(f.num_vars());
    let groups = encode_market(f, &state, &cfg).expect("default market covers every variable");
    let mut search = Search {
        groups: &groups,
        budget: search_budget,
        nodes: 0,
    };
    let outcome = search.run(vec![None; f.num_vars() as usize + 1]);
    let nodes = search.nodes;
    match outcome {
        Outcome::Found(ticks) => {
            let full = TickAssignment(
                (1..=f.num_vars())
                    .map(|v| (v, ticks[v as usize].unwrap_or(Tick::Up)))
                    .collect(),
            );
            let report = apply_ticks(&state, &groups, &full, &cfg).expect("ticks are total");
            debug_assert_eq!(report.groups_filled, groups.len());
            SatResult {
                status: SatStatus::Sat,
                witness: Some(ticks_to_assignment(&full)),
                nodes,
            }
        }
        Outcome::Exhausted => SatResult {
            status: SatStatus::Unsat,
            witness: None,
            nodes,
        },
        Outcome::OutOfBudget => SatResult {
            status: SatStatus::BudgetExhausted,
            witness: None,
            nodes,
        },
    }
}

/// Most groups any single tick path fills, by trying all `2^n` paths.
pub fn max_groups_filled(f: &CnfFormula, cfg: &MarketConfig) -> Result<usize> {
    if f.num_vars() > 20 {
        return Err(Error::Capacity {
            what: "exhaustive tick paths (variables)",
            requested: f.num_vars() as u64,
            limit: 20,
        });
    }
    let state = MarketState::with_defaults(f.num_vars());
    let groups = encode_market(f, &state, cfg)?;
    let mut best = 0;
    for w in Assignment::all(f.num_vars()) {
        let ticks = super::assignment_to_ticks(&w, f.num_vars())?;
        best = best.max(apply_ticks(&state, &groups, &ticks, cfg)?.groups_filled);
    }
    Ok(best)
}
