//! Exact 0/1 Knapsack, decision and optimization forms.
//!
//! Both solvers return the same optimal subset: among all subsets of maximal
//! value that fit the budget, the lexicographically smallest sorted index
//! list. The dynamic program is pseudo-polynomial in the budget; the
//! exhaustive solver is the reference it is checked against.

mod bridge;

pub use bridge::{
    decide_q4, knapsack_to_scenario, scenario_outcome, scenario_to_knapsack, MultiAssetScenario,
    Q4Decision, Reduction, ScenarioOutcome, ScenarioSidecar,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest item count [`solve_bruteforce`] accepts.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 25;

/// Default limit on `(items + 1) * (budget + 1)` table cells in [`solve_dp`].
pub const DEFAULT_DP_MAX_CELLS: u64 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub size: u64,
    pub value: u64,
}

/// A decision instance: items, budget `B` and target value `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr")]
pub struct KnapsackInstance {
    items: Vec<Item>,
    budget: u64,
    target: u64,
}

#[derive(Deserialize)]
struct InstanceRepr {
    items: Vec<Item>,
    budget: u64,
    target: u64,
}

impl TryFrom<InstanceRepr> for KnapsackInstance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        Self::new(r.items, r.budget, r.target)
    }
}

impl KnapsackInstance {
    pub fn new(items: Vec<Item>, budget: u64, target: u64) -> Result<Self> {
        if let Some((i, item)) = items
            .iter()
            .enumerate()
            .find(|(_, it)| it.size == 0 || it.value == 0)
        {
            return Err(Error::InvalidParameter(format!(
                "item {i} has size {} and value {}; both must be positive",
                item.size, item.value
            )));
        }
        if budget == 0 || target == 0 {
            return Err(Error::InvalidParameter(
                "budget and target must be positive".into(),
            ));
        }
        Ok(Self {
            items,
            budget,
            target,
        })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn with_budget(&self, budget: u64) -> Result<Self> {
        Self::new(self.items.clone(), budget, self.target)
    }

    pub fn with_target(&self, target: u64) -> Result<Self> {
        Self::new(self.items.clone(), self.budget, target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackSolution {
    pub chosen: Vec<usize>,
    pub total_size: u64,
    pub total_value: u64,
}

impl KnapsackSolution {
    fn from_indices(items: &[Item], chosen: Vec<usize>) -> Self {
        let total_size = chosen.iter().map(|&i| items[i].size).sum();
        let total_value = chosen.iter().map(|&i| items[i].value).sum();
        Self {
            chosen,
            total_size,
            total_value,
        }
    }
}

/// True when the sorted index list of `a` precedes that of `b`.
fn lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let d = (a ^ b).trailing_zeros();
    let has_above = |m: u64| d < 63 && (m >> (d + 1)) != 0;
    if (a >> d) & 1 == 1 {
        has_above(b)
    } else {
        !has_above(a)
    }
}

/// Tries all `2^n` subsets.
pub fn solve_bruteforce(inst: &KnapsackInstance) -> Result<KnapsackSolution> {
    let n = inst.items.len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::Capacity {
            what: "brute-force knapsack items",
            requested: n as u64,
            limit: BRUTE_FORCE_MAX_ITEMS as u64,
        });
    }
    let mut best_mask = 0u64;
    let mut best_value = 0u64;
    for mask in 1u64..(1u64 << n) {
        let (mut size, mut value) = (0u64, 0u64);
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            size += inst.items[i].size;
            value += inst.items[i].value;
            rest &= rest - 1;
        }
        if size > inst.budget {
            continue;
        }
        if value > best_value || (value == best_value && lex_less(mask, best_mask)) {
            best_mask = mask;
            best_value = value;
        }
    }
    let chosen = (0..n).filter(|i| (best_mask >> i) & 1 == 1).collect();
    Ok(KnapsackSolution::from_indices(&inst.items, chosen))
}

pub fn solve_dp(inst: &KnapsackInstance) -> Result<KnapsackSolution> {
    solve_dp_with_cap(inst, DEFAULT_DP_MAX_CELLS)
}

/// Suffix table `best[i][b]`: the best value from items `i..` within budget
/// `b`. Walking forward and taking item `i` whenever an optimum through it
/// exists yields the lexicographically smallest optimal subset.
pub fn solve_dp_with_cap(inst: &KnapsackInstance, max_cells: u64) -> Result<KnapsackSolution> {
    let n = inst.items.len();
    let cells = (inst.budget as u128 + 1) * (n as u128 + 1);
    if cells > max_cells as u128 {
        return Err(Error::Capacity {
            what: "knapsack DP table cells",
            requested: cells.min(u64::MAX as u128) as u64,
            limit: max_cells,
        });
    }
    let cols = inst.budget as usize + 1;
    let mut best = vec![0u64; (n + 1) * cols];
    for i in (0..n).rev() {
        let Item { size, value } = inst.items[i];
        let (row, next) = best.split_at_mut((i + 1) * cols);
        let row = &mut row[i * cols..];
        for b in 0..cols {
            let skip = next[b];
            row[b] = if (size as usize) <= b {
                skip.max(value + next[b - size as usize])
            } else {
                skip
            };
        }
    }

    let mut chosen = Vec::new();
    let mut b = inst.budget as usize;
    for i in 0..n {
        let Item { size, value } = inst.items[i];
        let here = best[i * cols + b];
        if (size as usize) <= b && value + best[(i + 1) * cols + b - size as usize] == here {
            chosen.push(i);
            b -= size as usize;
        }
    }
    Ok(KnapsackSolution::from_indices(&inst.items, chosen))
}

/// Whether some subset fits the budget and reaches the target (`>=`).
pub fn decide_knapsack(inst: &KnapsackInstance) -> Result<bool> {
    Ok(solve_dp(inst)?.total_value >= inst.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn items(pairs: &[(u64, u64)]) -> Vec<Item> {
        pairs.iter().map(|&(size, value)| Item { size, value }).collect()
    }

    fn sample() -> KnapsackInstance {
        KnapsackInstance::new(items(&[(3, 4), (4, 5), (5, 6)]), 7, 9).unwrap()
    }

    #[test]
    fn empty_instance() {
        let inst = KnapsackInstance::new(vec![], 5, 1).unwrap();
        let sol = solve_bruteforce(&inst).unwrap();
        assert!(sol.chosen.is_empty());
        assert_eq!(sol.total_value, 0);
        assert_eq!(solve_dp(&inst).unwrap(), sol);
        assert!(!decide_knapsack(&inst).unwrap());
    }

    #[test]
    fn three_item_example() {
        // subsets within size 7: {}, {0}, {1}, {2}, {0,1}; {0,1} has value 9
        let sol = solve_bruteforce(&sample()).unwrap();
        assert_eq!(sol.chosen, [0, 1]);
        assert_eq!((sol.total_size, sol.total_value), (7, 9));
        assert_eq!(solve_dp(&sample()).unwrap(), sol);
        assert!(decide_knapsack(&sample()).unwrap());
        assert!(!decide_knapsack(&sample().with_target(10).unwrap()).unwrap());
    }

    #[test]
    fn oversized_items_leave_empty_subset() {
        let inst = KnapsackInstance::new(items(&[(9, 3)]), 4, 1).unwrap();
        assert!(solve_bruteforce(&inst).unwrap().chosen.is_empty());
        let inst = KnapsackInstance::new(items(&[(9, 3), (5, 1)]), 4, 1).unwrap();
        assert_eq!(solve_dp(&inst).unwrap().total_value, 0);
    }

    #[test]
    fn single_unit_item_meets_target() {
        let inst = KnapsackInstance::new(items(&[(1, 1)]), 1, 1).unwrap();
        assert!(decide_knapsack(&inst).unwrap());
    }

    #[test]
    fn ties_break_to_smallest_index_list() {
        // {0} and {1} both worth 5; {0} wins
        let inst = KnapsackInstance::new(items(&[(2, 5), (2, 5)]), 3, 1).unwrap();
        assert_eq!(solve_bruteforce(&inst).unwrap().chosen, [0]);
        assert_eq!(solve_dp(&inst).unwrap().chosen, [0]);
        // {0, 2} beats {1} at equal value
        let inst = KnapsackInstance::new(items(&[(1, 2), (2, 5), (1, 3)]), 2, 1).unwrap();
        assert_eq!(solve_bruteforce(&inst).unwrap().chosen, [0, 2]);
        assert_eq!(solve_dp(&inst).unwrap().chosen, [0, 2]);
    }

    #[test]
    fn capacity_guards() {
        let many = KnapsackInstance::new(items(&[(1, 1); 26]), 3, 1).unwrap();
        assert!(matches!(solve_bruteforce(&many), Err(Error::Capacity { .. })));
        let huge = KnapsackInstance::new(items(&[(1, 1)]), u64::MAX, 1).unwrap();
        assert!(matches!(solve_dp(&huge), Err(Error::Capacity { .. })));
        assert!(matches!(
            solve_dp_with_cap(&sample(), 10),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn invalid_instances_rejected() {
        assert!(KnapsackInstance::new(items(&[(0, 1)]), 1, 1).is_err());
        assert!(KnapsackInstance::new(items(&[(1, 0)]), 1, 1).is_err());
        assert!(KnapsackInstance::new(vec![], 0, 1).is_err());
        assert!(KnapsackInstance::new(vec![], 1, 0).is_err());
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_value(sample()).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "items": [{"size": 3, "value": 4}, {"size": 4, "value": 5}, {"size": 5, "value": 6}],
                "budget": 7,
                "target": 9
            })
        );
        let bad = serde_json::json!({"items": [], "budget": 0, "target": 1});
        assert!(serde_json::from_value::<KnapsackInstance>(bad).is_err());
    }

    #[test]
    fn dp_equals_bruteforce_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..300 {
            let n = rng.gen_range(0..=18);
            let its: Vec<Item> = (0..n)
                .map(|_| Item {
                    size: rng.gen_range(1..=50),
                    value: rng.gen_range(1..=50),
                })
                .collect();
            let inst = KnapsackInstance::new(its, rng.gen_range(1..=200), 1).unwrap();
            assert_eq!(solve_dp(&inst).unwrap(), solve_bruteforce(&inst).unwrap());
        }
    }

    proptest! {
        #[test]
        fn lex_order_matches_sorted_vectors(a in 0u64..1024, b in 0u64..1024) {
            let as_vec = |m: u64| (0..10).filter(|i| (m >> i) & 1 == 1).collect::<Vec<u64>>();
            prop_assert_eq!(lex_less(a, b), as_vec(a) < as_vec(b));
        }

        #[test]
        fn budget_is_monotone(
            pairs in prop::collection::vec((1u64..30, 1u64..30), 0..12),
            b1 in 1u64..120, b2 in 1u64..120, k in 1u64..100,
        ) {
            let (lo, hi) = (b1.min(b2), b1.max(b2));
            let inst = KnapsackInstance::new(items(&pairs), lo, k).unwrap();
            let at_lo = decide_knapsack(&inst).unwrap();
            let at_hi = decide_knapsack(&inst.with_budget(hi).unwrap()).unwrap();
            prop_assert!(!at_lo || at_hi);
        }

        #[test]
        fn solutions_are_consistent(pairs in prop::collection::vec((1u64..30, 1u64..30), 0..12), b in 1u64..120) {
            let inst = KnapsackInstance::new(items(&pairs), b, 1).unwrap();
            let sol = solve_dp(&inst).unwrap();
            prop_assert!(sol.total_size <= b);
            prop_assert_eq!(sol.total_size, sol.chosen.iter().map(|&i| pairs[i].0).sum::<u64>());
            prop_assert_eq!(sol.total_value, sol.chosen.iter().map(|&i| pairs[i].1).sum::<u64>());
        }
    }
}
