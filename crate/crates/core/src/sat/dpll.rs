use std::collections::BTreeMap;

use super::search::{SatResult, SatStatus};
use super::{Assignment, CnfFormula};

type Clauses = Vec<Vec<i64>>;

/// Removes satisfied clauses and falsified literals after setting `lit`.
fn assign(clauses: &Clauses, lit: i64) -> Clauses {
    clauses
        .iter()
        .filter(|c| !c.contains(&lit))
        .map(|c| c.iter().copied().filter(|&l| l != -lit).collect())
        .collect()
}

fn dpll(mut clauses: Clauses, model: &mut BTreeMap<u32, bool>, nodes: &mut u64) -> bool {
    *nodes += 1;
    loop {
        if clauses.iter().any(Vec::is_empty) {
            return false;
        }
        if let Some(&unit) = clauses.iter().find(|c| c.len() == 1).map(|c| &c[0]) {
            model.insert(unit.unsigned_abs() as u32, unit > 0);
            clauses = assign(&clauses, unit);
            continue;
        }
        let mut polarity: BTreeMap<u64, (bool, bool)> = BTreeMap::new();
        for &l in clauses.iter().flatten() {
            let e = polarity.entry(l.unsigned_abs()).or_default();
            if l > 0 {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
        let pure = polarity.iter().find_map(|(&v, &(p, n))| match (p, n) {
            (true, false) => Some(v as i64),
            (false, true) => Some(-(v as i64)),
            _ => None,
        });
        match pure {
            Some(l) => {
                model.insert(l.unsigned_abs() as u32, l > 0);
                clauses = assign(&clauses, l);
            }
            None => break,
        }
    }
    let Some(&branch) = clauses.first().and_then(|c| c.first()) else {
        return true;
    };
    for lit in [branch, -branch] {
        let mut trial = model.clone();
        trial.insert(lit.unsigned_abs() as u32, lit > 0);
        if dpll(assign(&clauses, lit), &mut trial, nodes) {
            *model = trial;
            return true;
        }
    }
    false
}

/// Plain DPLL with unit propagation and pure-literal elimination. Variables
/// left free by the search are set FALSE in the witness.
pub fn reference_dpll(f: &CnfFormula) -> SatResult {
    let clauses: Clauses = f
        .clauses()
        .iter()
        .map(|c| {
            let mut lits: Vec<i64> = c.iter().map(|l| l.to_dimacs()).collect();
            lits.sort_unstable();
            lits.dedup();
            lits
        })
        .collect();
    let mut model = BTreeMap::new();
    let mut nodes = 0;
    if dpll(clauses, &mut model, &mut nodes) {
        let witness: Assignment = (1..=f.num_vars())
            .map(|v| (v, model.get(&v).copied().unwrap_or(false)))
            .collect();
        SatResult {
            status: SatStatus::Sat,
            witness: Some(witness),
            nodes,
        }
    } else {
        SatResult {
            status: SatStatus::Unsat,
            witness: None,
            nodes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::fixtures::{contradiction, example_formula};
    use crate::sat::{parse_dimacs, verify_assignment};

    #[test]
    fn empty_formula_is_sat() {
        let r = reference_dpll(&parse_dimacs("p cnf 3 0\n").unwrap());
        assert_eq!(r.status, SatStatus::Sat);
    }

    #[test]
    fn example_formula_is_sat() {
        let f = example_formula();
        let r = reference_dpll(&f);
        assert_eq!(r.status, SatStatus::Sat);
        assert!(verify_assignment(&f, r.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn three_variable_unsat_fixture() {
        // every sign pattern over a, b, c: each assignment falsifies one clause
        let mut text = String::from("p cnf 3 8\n");
        for mask in 0..8 {
            let lits: Vec<String> = (0..3)
                .map(|i| {
                    let v = i + 1;
                    if (mask >> i) & 1 == 1 { format!("-{v}") } else { v.to_string() }
                })
                .collect();
            text.push_str(&format!("{} 0\n", lits.join(" ")));
        }
        let f = parse_dimacs(&text).unwrap();
        for w in Assignment::all(3) {
            assert!(!verify_assignment(&f, &w).unwrap());
        }
        assert_eq!(reference_dpll(&f).status, SatStatus::Unsat);
        assert_eq!(reference_dpll(&contradiction()).status, SatStatus::Unsat);
    }
}
