//! 3-SAT on a simulated market.
//!
//! Each variable is a security and each clause an OCO-3 order group: a
//! positive literal rests a BUY at the mid, a negated literal a SELL. One
//! synchronized tick per security then decides which orders fill. A resting
//! BUY fills when its security ticks DOWN and a SELL when it ticks UP, so a
//! TRUE variable corresponds to a DOWN tick. Every group fills exactly when
//! the corresponding truth assignment satisfies the formula.

mod dimacs;
mod dpll;
mod market;
mod search;

pub use dimacs::{parse_dimacs, to_dimacs};
pub use dpll::reference_dpll;
pub use market::{
    apply_ticks, assignment_to_ticks, encode_market, ticks_to_assignment, Book, ExecutionReport,
    Fill, MarketConfig, MarketState, OcoGroup, Order, Side, Tick, TickAssignment,
};
pub use search::{market_decides_sat, max_groups_filled, SatResult, SatStatus};

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: u32) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        Self { var, negated: true }
    }

    pub fn from_dimacs(x: i64) -> Self {
        Self {
            var: x.unsigned_abs() as u32,
            negated: x < 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn is_true_under(self, value: bool) -> bool {
        value != self.negated
    }
}

pub type Clause = [Literal; 3];

/// A conjunction of three-literal clauses over variables `1..=num_vars`.
/// Repeated literals within a clause are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Format("formula needs at least one variable".into()));
        }
        for (i, c) in clauses.iter().enumerate() {
            if let Some(l) = c.iter().find(|l| l.var == 0 || l.var > num_vars) {
                return Err(Error::Format(format!(
                    "clause {} uses variable {} outside 1..={num_vars}",
                    i + 1,
                    l.var
                )));
            }
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Variables that occur in at least one clause.
    pub fn occurring_vars(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.clauses.iter().flatten().map(|l| l.var).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Truth values keyed by variable index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub BTreeMap<u32, bool>);

impl Assignment {
    pub fn get(&self, var: u32) -> Option<bool> {
        self.0.get(&var).copied()
    }

    /// All `2^n` assignments of variables `1..=n` in counting order.
    pub fn all(n: u32) -> impl Iterator<Item = Assignment> {
        (0u64..1 << n).map(move |bits| Assignment((1..=n).map(|v| (v, (bits >> (v - 1)) & 1 == 1)).collect()))
    }
}

impl FromIterator<(u32, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (u32, bool)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// True iff every clause has a true literal. Every occurring variable must
/// be assigned.
pub fn verify_assignment(f: &CnfFormula, w: &Assignment) -> Result<bool> {
    let mut all = true;
    for clause in &f.clauses {
        let mut sat = false;
        for lit in clause {
            let v = w.get(lit.var).ok_or(Error::Incomplete(lit.var))?;
            sat |= lit.is_true_under(v);
        }
        all &= sat;
    }
    Ok(all)
}

/// Uniform random 3-CNF. Clause variables are distinct whenever
/// `num_vars >= 3`.
pub fn random_3cnf<R: Rng + ?Sized>(num_vars: u32, num_clauses: usize, rng: &mut R) -> CnfFormula {
    let clauses = (0..num_clauses)
        .map(|_| {
            let vars: Vec<u32> = if num_vars >= 3 {
                sample(rng, num_vars as usize, 3).iter().map(|v| v as u32 + 1).collect()
            } else {
                (0..3).map(|_| rng.gen_range(1..=num_vars)).collect()
            };
            [0, 1, 2].map(|i| Literal {
                var: vars[i],
                negated: rng.gen_bool(0.5),
            })
        })
        .collect();
    CnfFormula {
        num_vars,
        clauses,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// (a OR b OR !c) AND (a OR !b OR d)
    pub fn example_formula() -> CnfFormula {
        parse_dimacs("p cnf 4 2\n1 2 -3 0\n1 -2 4 0\n").unwrap()
    }

    /// (a OR a OR a) AND (!a OR !a OR !a)
    pub fn contradiction() -> CnfFormula {
        CnfFormula::new(1, vec![[Literal::pos(1); 3], [Literal::neg(1); 3]]).unwrap()
    }
}
