use crate::error::{Error, Result};

use super::{CnfFormula, Literal};

/// Parses DIMACS `cnf` text. Every clause must have exactly three literals;
/// clauses may span lines and a `%` line ends the input.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Format(format!("second header on line {}", lineno + 1)));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", v, c] => v.parse::<u32>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            header = Some(parsed.ok_or_else(|| {
                Error::Format(format!("malformed header on line {}: {line}", lineno + 1))
            })?);
            continue;
        }
        if header.is_none() {
            return Err(Error::Format(format!(
                "clause data before the `p cnf` header on line {}",
                lineno + 1
            )));
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| {
                Error::Format(format!("bad literal {tok:?} on line {}", lineno + 1))
            })?;
            if x != 0 {
                current.push(Literal::from_dimacs(x));
                continue;
            }
            let clause_no = clauses.len() + 1;
            let lits = std::mem::take(&mut current);
            let clause: [Literal; 3] = lits.as_slice().try_into().map_err(|_| Error::Arity {
                clause: clause_no,
                found: lits.len(),
            })?;
            clauses.push(clause);
        }
    }

    let (num_vars, num_clauses) =
        header.ok_or_else(|| Error::Format("missing `p cnf` header".into()))?;
    if !current.is_empty() {
        return Err(Error::Format("last clause is not terminated by 0".into()));
    }
    if clauses.len() != num_clauses {
        return Err(Error::Format(format!(
            "header declares {num_clauses} clauses, found {}",
            clauses.len()
        )));
    }
    CnfFormula::new(num_vars, clauses)
}

pub fn to_dimacs(f: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars(), f.clauses().len());
    for c in f.clauses() {
        for l in c {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::random_3cnf;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn example_formula_parses() {
        let f = parse_dimacs("c example\np cnf 4 2\n1 2 -3 0\n1 -2 4 0\n").unwrap();
        assert_eq!(f.num_vars(), 4);
        assert_eq!(
            f.clauses(),
            [
                [Literal::pos(1), Literal::pos(2), Literal::neg(3)],
                [Literal::pos(1), Literal::neg(2), Literal::pos(4)],
            ]
        );
    }

    #[test]
    fn two_literal_clause_is_arity_error() {
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 2 0\n"),
            Err(Error::Arity { clause: 1, found: 2 })
        );
        assert_eq!(
            parse_dimacs("p cnf 4 2\n1 2 3 0\n1 2 3 4 0\n"),
            Err(Error::Arity { clause: 2, found: 4 })
        );
    }

    #[test]
    fn empty_formula() {
        let f = parse_dimacs("p cnf 1 0\n").unwrap();
        assert!(f.clauses().is_empty());
    }

    #[test]
    fn header_problems() {
        assert!(matches!(parse_dimacs("1 2 3 0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_dimacs("p cnf 3 2\n1 2 3 0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 2 3 0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_dimacs("p dnf 3 1\n1 2 3 0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_dimacs("p cnf 3 1\n1 2 3\n"), Err(Error::Format(_))));
    }

    #[test]
    fn multi_line_clauses_and_trailer() {
        let f = parse_dimacs("p cnf 3 2\n1 -2\n3 0 -1 2 -3 0\n%\n0\n").unwrap();
        assert_eq!(f.clauses().len(), 2);
    }

    proptest! {
        #[test]
        fn writer_round_trips(n in 1u32..20, m in 0usize..30, seed: u64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = random_3cnf(n, m, &mut rng);
            prop_assert_eq!(parse_dimacs(&to_dimacs(&f)).unwrap(), f);
        }
    }
}
