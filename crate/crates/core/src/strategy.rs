//! Fixed-lookback technical strategies and the search for the best one.
//!
//! A strategy with lookback `t` is a lookup table from the `2^t` possible
//! contexts to a position in `{-1, 0, +1}`. The position chosen after the
//! context ending at period `i` earns the return of period `i + 1`; profit is
//! additive and uncompounded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{check_lookback, Context, PriceSeries};

/// Largest lookback accepted by [`enumerate_long_or_out`] and
/// [`brute_force_best`]: `2^(2^5)` tables is out of reach.
pub const MAX_ENUM_LOOKBACK: usize = 4;

/// Largest length accepted by [`enumerate_position_sequences`].
pub const MAX_ENUM_PERIODS: usize = 12;

/// Largest lookback for which a full `2^t` table is materialized.
pub const MAX_TABLE_LOOKBACK: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StrategyRepr")]
pub struct TechnicalStrategy {
    lookback: usize,
    table: Vec<i8>,
    long_or_out: bool,
}

#[derive(Deserialize)]
struct StrategyRepr {
    lookback: usize,
    table: Vec<i8>,
    long_or_out: bool,
}

impl TryFrom<StrategyRepr> for TechnicalStrategy {
    type Error = Error;

    fn try_from(r: StrategyRepr) -> Result<Self> {
        Self::new(r.lookback, r.table, r.long_or_out)
    }
}

impl TechnicalStrategy {
    pub fn new(lookback: usize, table: Vec<i8>, long_or_out: bool) -> Result<Self> {
        check_table_lookback(lookback)?;
        if table.len() != 1usize << lookback {
            return Err(Error::InvalidParameter(format!(
                "table has {} entries, lookback {lookback} needs {}",
                table.len(),
                1usize << lookback
            )));
        }
        if let Some(p) = table.iter().find(|p| !(-1..=1).contains(*p)) {
            return Err(Error::InvalidParameter(format!("position {p} not in {{-1, 0, 1}}")));
        }
        if long_or_out && table.contains(&-1) {
            return Err(Error::InvalidParameter(
                "long-or-out strategy cannot hold a short position".into(),
            ));
        }
        Ok(Self {
            lookback,
            table,
            long_or_out,
        })
    }

    pub fn all_out(lookback: usize) -> Result<Self> {
        check_table_lookback(lookback)?;
        Ok(Self {
            lookback,
            table: vec![0; 1 << lookback],
            long_or_out: true,
        })
    }

    /// Long-or-out strategy whose context `c` is long iff bit `c` of `mask`
    /// is set.
    pub fn from_long_mask(lookback: usize, mask: u64) -> Result<Self> {
        if lookback == 0 || lookback > 6 {
            return Err(Error::InvalidParameter(format!(
                "bitmask tables need lookback in 1..=6, got {lookback}"
            )));
        }
        let table = (0..1u64 << lookback).map(|c| ((mask >> c) & 1) as i8).collect();
        Ok(Self {
            lookback,
            table,
            long_or_out: true,
        })
    }

    /// Long-or-out strategy that is long exactly on `codes`.
    pub fn from_long_contexts<I: IntoIterator<Item = u64>>(lookback: usize, codes: I) -> Result<Self> {
        let mut s = Self::all_out(lookback)?;
        for c in codes {
            let slot = s.table.get_mut(c as usize).ok_or_else(|| {
                Error::InvalidParameter(format!("context {c} out of range for lookback {lookback}"))
            })?;
            *slot = 1;
        }
        Ok(s)
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn long_or_out(&self) -> bool {
        self.long_or_out
    }

    pub fn position(&self, code: u64) -> i8 {
        self.table[code as usize]
    }

    pub fn long_contexts(&self) -> impl Iterator<Item = u64> + '_ {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == 1)
            .map(|(c, _)| c as u64)
    }
}

fn check_table_lookback(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameter("lookback must be positive".into()));
    }
    if t > MAX_TABLE_LOOKBACK {
        return Err(Error::Capacity {
            what: "strategy table lookback",
            requested: t as u64,
            limit: MAX_TABLE_LOOKBACK as u64,
        });
    }
    Ok(())
}

/// One position per period, not tied to any context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionSequence {
    pub positions: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub profit: f64,
    pub periods_scanned: usize,
}

/// Realized profit of `strategy` on `series`.
pub fn evaluate(strategy: &TechnicalStrategy, series: &PriceSeries) -> Result<f64> {
    evaluate_counted(strategy, series).map(|e| e.profit)
}

/// [`evaluate`] with a count of the periods read. The scan is a single pass,
/// so the count always equals the series length.
pub fn evaluate_counted(strategy: &TechnicalStrategy, series: &PriceSeries) -> Result<Evaluation> {
    let t = strategy.lookback;
    check_lookback(t, series.len())?;
    let mask = Context::mask(t);
    let mut code = 0u64;
    let mut held: Option<i8> = None;
    let mut profit = 0.0;
    let mut scanned = 0usize;
    for (i, &r) in series.returns().iter().enumerate() {
        scanned += 1;
        if let Some(pos) = held {
            profit += f64::from(pos) * r;
        }
        code = ((code << 1) | (r > 0.0) as u64) & mask;
        if i + 1 >= t {
            held = Some(strategy.table[code as usize]);
        }
    }
    Ok(Evaluation {
        profit,
        periods_scanned: scanned,
    })
}

/// The hindsight-perfect sequence: long on UP periods, short on DOWN ones.
pub fn best_position_sequence(series: &PriceSeries) -> (PositionSequence, f64) {
    let positions = series
        .returns()
        .iter()
        .map(|r| if *r > 0.0 { 1 } else if *r < 0.0 { -1 } else { 0 })
        .collect();
    let profit = series.returns().iter().map(|r| r.abs()).sum();
    (PositionSequence { positions }, profit)
}

/// Every long-or-out table for lookback `t`, in ascending bitmask order.
pub fn enumerate_long_or_out(t: usize) -> Result<LongOrOutStrategies> {
    if t == 0 {
        return Err(Error::InvalidParameter("lookback must be positive".into()));
    }
    if t > MAX_ENUM_LOOKBACK {
        return Err(Error::Capacity {
            what: "long-or-out enumeration lookback",
            requested: t as u64,
            limit: MAX_ENUM_LOOKBACK as u64,
        });
    }
    Ok(LongOrOutStrategies {
        lookback: t,
        next: 0,
        end: 1u64 << (1u32 << t),
    })
}

#[derive(Debug, Clone)]
pub struct LongOrOutStrategies {
    lookback: usize,
    next: u64,
    end: u64,
}

impl LongOrOutStrategies {
    /// Total number of strategies the stream yields.
    pub fn total(&self) -> u64 {
        self.end
    }
}

impl Iterator for LongOrOutStrategies {
    type Item = TechnicalStrategy;

    fn next(&mut self) -> Option<TechnicalStrategy> {
        if self.next >= self.end {
            return None;
        }
        let mask = self.next;
        self.next += 1;
        TechnicalStrategy::from_long_mask(self.lookback, mask).ok()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for LongOrOutStrategies {}

/// Every `{-1, 0, +1}` sequence of length `n`.
pub fn enumerate_position_sequences(n: usize) -> Result<PositionSequences> {
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be positive".into()));
    }
    if n > MAX_ENUM_PERIODS {
        return Err(Error::Capacity {
            what: "position sequence length",
            requested: n as u64,
            limit: MAX_ENUM_PERIODS as u64,
        });
    }
    Ok(PositionSequences {
        len: n,
        next: 0,
        end: 3u64.pow(n as u32),
    })
}

#[derive(Debug, Clone)]
pub struct PositionSequences {
    len: usize,
    next: u64,
    end: u64,
}

impl Iterator for PositionSequences {
    type Item = PositionSequence;

    fn next(&mut self) -> Option<PositionSequence> {
        if self.next >= self.end {
            return None;
        }
        let mut k = self.next;
        self.next += 1;
        let positions = (0..self.len)
            .map(|_| {
                let digit = (k % 3) as i8;
                k /= 3;
                digit - 1
            })
            .collect();
        Some(PositionSequence { positions })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PositionSequences {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceOutcome {
    pub strategy: TechnicalStrategy,
    pub profit: f64,
    pub evaluated: u64,
}

/// Best long-or-out strategy by evaluating all of them. Ties keep the lowest
/// bitmask.
pub fn brute_force_best(series: &PriceSeries, t: usize) -> Result<(TechnicalStrategy, f64)> {
    brute_force_best_counted(series, t).map(|o| (o.strategy, o.profit))
}

pub fn brute_force_best_counted(series: &PriceSeries, t: usize) -> Result<BruteForceOutcome> {
    let strategies = enumerate_long_or_out(t)?;
    check_lookback(t, series.len())?;
    let mut best: Option<(TechnicalStrategy, f64)> = None;
    let mut evaluated = 0u64;
    for s in strategies {
        let p = evaluate(&s, series)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
            best = Some((s, p));
        }
    }
    let (strategy, profit) = best.expect("enumeration is never empty");
    Ok(BruteForceOutcome {
        strategy,
        profit,
        evaluated,
    })
}

/// Returns that followed each context, keyed by context code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextBuckets {
    pub lookback: usize,
    pub buckets: BTreeMap<u64, Vec<f64>>,
}

impl ContextBuckets {
    pub fn sum(&self, code: u64) -> f64 {
        self.buckets.get(&code).map_or(0.0, |b| b.iter().sum())
    }

    /// Number of bucketed returns; `n - t` for a series of length `n`.
    pub fn total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }
}

pub fn bucket_contexts(series: &PriceSeries, t: usize) -> Result<ContextBuckets> {
    check_tradable(t, series.len())?;
    let returns = series.returns();
    let mut buckets: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (end, ctx) in series.directions().sliding_contexts(t)? {
        if let Some(&next) = returns.get(end + 1) {
            buckets.entry(ctx.code).or_default().push(next);
        }
    }
    Ok(ContextBuckets { lookback: t, buckets })
}

fn check_tradable(t: usize, len: usize) -> Result<()> {
    if t >= len {
        return Err(Error::InvalidWindow { lookback: t, len });
    }
    check_lookback(t, len)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalOutcome {
    pub strategy: TechnicalStrategy,
    pub profit: f64,
    pub periods_scanned: usize,
}

/// Best long-or-out strategy in one pass: long exactly on the contexts whose
/// following returns sum to a positive number.
pub fn optimal_strategy(series: &PriceSeries, t: usize) -> Result<(TechnicalStrategy, f64)> {
    optimal_strategy_counted(series, t).map(|o| (o.strategy, o.profit))
}

pub fn optimal_strategy_counted(series: &PriceSeries, t: usize) -> Result<OptimalOutcome> {
    check_tradable(t, series.len())?;
    check_table_lookback(t)?;
    let mask = Context::mask(t);
    let mut sums = vec![0.0f64; 1 << t];
    let mut code = 0u64;
    let mut last: Option<u64> = None;
    let mut scanned = 0usize;
    for (i, &r) in series.returns().iter().enumerate() {
        scanned += 1;
        if let Some(c) = last {
            sums[c as usize] += r;
        }
        code = ((code << 1) | (r > 0.0) as u64) & mask;
        if i + 1 >= t {
            last = Some(code);
        }
    }
    let table: Vec<i8> = sums.iter().map(|s| (*s > 0.0) as i8).collect();
    let profit = sums.iter().filter(|s| **s > 0.0).sum();
    Ok(OptimalOutcome {
        strategy: TechnicalStrategy {
            lookback: t,
            table,
            long_or_out: true,
        },
        profit,
        periods_scanned: scanned,
    })
}

/// Profit threshold separating significant strategies from the rest.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CriticalValue(f64);

impl CriticalValue {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("critical value {k} is not finite")));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Whether some long-or-out strategy with lookback `t` earns strictly more
/// than `k`.
pub fn decide_q3(series: &PriceSeries, t: usize, k: CriticalValue) -> Result<bool> {
    let (_, profit) = optimal_strategy(series, t)?;
    Ok(profit > k.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{gen_planted, gen_random_walk};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn series(r: &[f64]) -> PriceSeries {
        PriceSeries::from_changes(r.to_vec()).unwrap()
    }

    #[test]
    fn all_out_earns_nothing() {
        let s = gen_random_walk(50, 0.5, 3).unwrap();
        let out = TechnicalStrategy::all_out(2).unwrap();
        assert_eq!(evaluate(&out, &s).unwrap(), 0.0);
    }

    #[test]
    fn hand_traced_t1_profit() {
        // UP -> long, DOWN -> out; tradable periods earn +1, -1, 0
        let strat = TechnicalStrategy::new(1, vec![0, 1], true).unwrap();
        let s = series(&[1.0, 1.0, -1.0, 1.0]);
        assert_eq!(evaluate(&strat, &s).unwrap(), 0.0);
        let shorted = TechnicalStrategy::new(1, vec![-1, 1], false).unwrap();
        assert_eq!(evaluate(&shorted, &s).unwrap(), -1.0);
    }

    #[test]
    fn flipping_an_unseen_context_changes_nothing() {
        let s = series(&[1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]);
        let seen: HashSet<u64> = s
            .directions()
            .sliding_contexts(2)
            .unwrap()
            .into_iter()
            .filter(|(end, _)| end + 1 < s.len())
            .map(|(_, c)| c.code)
            .collect();
        // 0b00 (two DOWN days) never occurs
        assert!(!seen.contains(&0));
        let base = TechnicalStrategy::from_long_mask(2, 0b1010).unwrap();
        let flipped = TechnicalStrategy::from_long_mask(2, 0b1011).unwrap();
        assert_eq!(evaluate(&base, &s).unwrap(), evaluate(&flipped, &s).unwrap());
    }

    #[test]
    fn evaluate_rejects_long_lookback() {
        let s = series(&[1.0]);
        let strat = TechnicalStrategy::all_out(2).unwrap();
        assert!(matches!(evaluate(&strat, &s), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn evaluate_scans_every_period() {
        for n in [1usize, 10, 1000] {
            let s = gen_random_walk(n, 0.5, n as u64).unwrap();
            let strat = TechnicalStrategy::from_long_mask(1, 0b10).unwrap();
            assert_eq!(evaluate_counted(&strat, &s).unwrap().periods_scanned, n);
        }
    }

    #[test]
    fn best_sequence_examples() {
        let s = gen_random_walk(37, 0.5, 1).unwrap();
        assert_eq!(best_position_sequence(&s).1, 37.0);
        let (seq, p) = best_position_sequence(&series(&[0.0, 0.0]));
        assert_eq!((seq.positions, p), (vec![0, 0], 0.0));
        let (seq, p) = best_position_sequence(&series(&[2.0, -3.0]));
        assert_eq!((seq.positions, p), (vec![1, -1], 5.0));
    }

    #[test]
    fn long_or_out_counts() {
        assert_eq!(enumerate_long_or_out(1).unwrap().count(), 4);
        assert_eq!(enumerate_long_or_out(2).unwrap().count(), 16);
        let all: Vec<_> = enumerate_long_or_out(3).unwrap().collect();
        assert_eq!(all.len(), 256);
        let distinct: HashSet<Vec<i8>> = all.iter().map(|s| s.table().to_vec()).collect();
        assert_eq!(distinct.len(), 256);
        assert!(all.iter().all(|s| s.long_or_out() && s.table().len() == 8));
        assert!(matches!(enumerate_long_or_out(5), Err(Error::Capacity { .. })));
    }

    #[test]
    fn position_sequence_counts() {
        assert_eq!(enumerate_position_sequences(1).unwrap().count(), 3);
        let two: HashSet<Vec<i8>> = enumerate_position_sequences(2)
            .unwrap()
            .map(|s| s.positions)
            .collect();
        assert_eq!(two.len(), 9);
        assert_eq!(enumerate_position_sequences(12).unwrap().count(), 531_441);
        assert!(matches!(enumerate_position_sequences(13), Err(Error::Capacity { .. })));
    }

    #[test]
    fn best_sequence_is_max_over_all_sequences() {
        let s = series(&[1.0, -2.0, 0.5, 0.0, -1.0]);
        let best = enumerate_position_sequences(5)
            .unwrap()
            .map(|seq| {
                seq.positions
                    .iter()
                    .zip(s.returns())
                    .map(|(p, r)| f64::from(*p) * r)
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, best_position_sequence(&s).1);
    }

    #[test]
    fn brute_force_picks_all_out_on_falling_series() {
        let s = series(&[-1.0; 12]);
        let (strat, p) = brute_force_best(&s, 2).unwrap();
        assert_eq!(p, 0.0);
        assert!(strat.table().iter().all(|x| *x == 0));
    }

    #[test]
    fn brute_force_no_tradable_period() {
        let s = series(&[1.0, -1.0, 1.0]);
        let (strat, p) = brute_force_best(&s, 3).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(strat, TechnicalStrategy::from_long_mask(3, 0).unwrap());
        for st in enumerate_long_or_out(3).unwrap() {
            assert_eq!(evaluate(&st, &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn bucket_137_example() {
        // context 10001001 followed by 1, 0, 1
        let code_bits = [1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        let mut r = Vec::new();
        for next in [1.0, 0.0, 1.0] {
            r.extend_from_slice(&code_bits);
            r.push(next);
        }
        let b = bucket_contexts(&series(&r), 8).unwrap();
        assert_eq!(b.buckets[&137], vec![1.0, 0.0, 1.0]);
        assert_eq!(b.sum(137), 2.0);
        assert_eq!(b.total(), r.len() - 8);

        let (strat, _) = optimal_strategy(&series(&r), 8).unwrap();
        assert_eq!(strat.position(137), 1);
    }

    #[test]
    fn bucket_rejects_untradable_window() {
        let s = series(&[1.0, 1.0, 1.0]);
        assert!(matches!(bucket_contexts(&s, 3), Err(Error::InvalidWindow { .. })));
        assert!(matches!(optimal_strategy(&s, 3), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn joint_buckets_differ_from_separate_only_at_the_seam() {
        let a = [1.0, -1.0, 1.0, 1.0, -2.0, 3.0];
        let b = [-1.0, -1.0, 2.0, 1.0, 1.0, -1.0, 4.0];
        let t = 2;
        let flatten = |bk: &ContextBuckets| -> Vec<(u64, i64)> {
            let mut v: Vec<(u64, i64)> = bk
                .buckets
                .iter()
                .flat_map(|(c, rs)| rs.iter().map(move |r| (*c, *r as i64)))
                .collect();
            v.sort();
            v
        };
        let joint_series: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        let mut joint = flatten(&bucket_contexts(&series(&joint_series), t).unwrap());
        let mut separate = flatten(&bucket_contexts(&series(&a), t).unwrap());
        separate.extend(flatten(&bucket_contexts(&series(&b), t).unwrap()));

        // contexts ending at indices 5 and 6 of the joint series straddle the seam
        // end 5: bits of a[4], a[5] = 0,1 -> code 1, next b[0] = -1
        // end 6: bits of a[5], b[0] = 1,0 -> code 2, next b[1] = -1
        let seam = vec![(1u64, -1i64), (2u64, -1i64)];
        for entry in &separate {
            let pos = joint.iter().position(|e| e == entry).expect("separate entry in joint");
            joint.remove(pos);
        }
        joint.sort();
        assert_eq!(joint, seam);
    }

    #[test]
    fn optimal_all_out_when_no_positive_bucket() {
        let s = series(&[-1.0, -1.0, -1.0, -1.0]);
        let (strat, p) = optimal_strategy(&s, 1).unwrap();
        assert_eq!(p, 0.0);
        assert!(strat.table().iter().all(|x| *x == 0));
    }

    #[test]
    fn zero_bucket_sum_stays_out() {
        // context UP is followed by +1 and -1
        let s = series(&[1.0, 1.0, -1.0, 1.0, -1.0]);
        let (strat, _) = optimal_strategy(&s, 1).unwrap();
        assert_eq!(strat.position(1), 0);
    }

    #[test]
    fn decide_q3_thresholds() {
        let s = gen_random_walk(100, 0.5, 9).unwrap();
        let unreachable = CriticalValue::new(101.0).unwrap();
        assert!(!decide_q3(&s, 2, unreachable).unwrap());
        assert!(decide_q3(&s, 2, CriticalValue::new(-1.0).unwrap()).unwrap());
        assert!(CriticalValue::new(f64::INFINITY).is_err());

        let pattern = Context::new(3, 0b111).unwrap();
        let planted = gen_planted(20_000, pattern, 0.3, 11).unwrap();
        assert!(bucket_contexts(&planted, 3).unwrap().sum(0b111) > 0.0);
        assert!(decide_q3(&planted, 3, CriticalValue::new(0.0).unwrap()).unwrap());
    }

    #[test]
    fn strategy_json_shape() {
        let s = TechnicalStrategy::from_long_mask(1, 0b10).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json, serde_json::json!({"lookback": 1, "table": [0, 1], "long_or_out": true}));
        let back: TechnicalStrategy = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"lookback": 1, "table": [-1, 1], "long_or_out": true});
        assert!(serde_json::from_value::<TechnicalStrategy>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn optimal_matches_brute_force_and_dominates(n in 4usize..64, t in 1usize..=3, seed: u64) {
            let s = gen_random_walk(n, 0.5, seed).unwrap();
            let (_, opt) = optimal_strategy(&s, t).unwrap();
            let (_, brute) = brute_force_best(&s, t).unwrap();
            prop_assert_eq!(opt, brute);
            for st in enumerate_long_or_out(t).unwrap() {
                prop_assert!(opt >= evaluate(&st, &s).unwrap());
            }
        }

        #[test]
        fn optimal_profit_is_its_own_evaluation(returns in prop::collection::vec(-20i32..=20, 5..80), t in 1usize..=4) {
            let r: Vec<f64> = returns.iter().map(|x| *x as f64).collect();
            let s = series(&r);
            let (strat, p) = optimal_strategy(&s, t).unwrap();
            prop_assert_eq!(evaluate(&strat, &s).unwrap(), p);
            let b = bucket_contexts(&s, t).unwrap();
            prop_assert_eq!(b.total(), r.len() - t);
            for c in b.buckets.keys() {
                prop_assert_eq!(strat.position(*c) == 1, b.sum(*c) > 0.0);
            }
        }

        #[test]
        fn decide_q3_is_antitone(seed: u64, k1 in -10i32..60, k2 in -10i32..60) {
            let s = gen_random_walk(60, 0.55, seed).unwrap();
            let (lo, hi) = (k1.min(k2) as f64, k1.max(k2) as f64);
            let at_lo = decide_q3(&s, 2, CriticalValue::new(lo).unwrap()).unwrap();
            let at_hi = decide_q3(&s, 2, CriticalValue::new(hi).unwrap()).unwrap();
            prop_assert!(at_lo || !at_hi);
        }

        #[test]
        fn best_sequence_profit_is_abs_sum(returns in prop::collection::vec(-100i32..=100, 0..50)) {
            let r: Vec<f64> = returns.iter().map(|x| *x as f64).collect();
            let (seq, p) = best_position_sequence(&series(&r));
            prop_assert_eq!(p, r.iter().map(|x| x.abs()).sum::<f64>());
            prop_assert_eq!(seq.positions.len(), r.len());
        }
    }
}
