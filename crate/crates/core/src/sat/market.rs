use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Assignment, CnfFormula};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tick {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Book {
    pub bid: f64,
    pub ask: f64,
}

impl Book {
    pub fn new(bid: f64, ask: f64) -> Result<Self> {
        if !(bid.is_finite() && ask.is_finite() && bid < ask) {
            return Err(Error::InvalidParameter(format!("crossed or invalid book {bid}/{ask}")));
        }
        Ok(Self { bid, ask })
    }

    pub fn mid(&self) -> f64 {
        (self.bid + self.ask) / 2.0
    }
}

/// Top of book for securities `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    books: Vec<Book>,
}

impl MarketState {
    pub const DEFAULT_BID: f64 = 99.0;
    pub const DEFAULT_ASK: f64 = 101.0;

    pub fn new(books: Vec<Book>) -> Self {
        Self { books }
    }

    pub fn uniform(n: u32, bid: f64, ask: f64) -> Result<Self> {
        Ok(Self {
            books: vec![Book::new(bid, ask)?; n as usize],
        })
    }

    /// `n` securities quoted 99 / 101.
    pub fn with_defaults(n: u32) -> Self {
        Self {
            books: vec![
                Book {
                    bid: Self::DEFAULT_BID,
                    ask: Self::DEFAULT_ASK,
                };
                n as usize
            ],
        }
    }

    pub fn securities(&self) -> u32 {
        self.books.len() as u32
    }

    pub fn book(&self, security: u32) -> Option<&Book> {
        security
            .checked_sub(1)
            .and_then(|i| self.books.get(i as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub min_lot: u32,
    pub premium: f64,
    pub cost_per_fill: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            min_lot: 100,
            premium: 1.0,
            cost_per_fill: 0.1,
        }
    }
}

impl MarketConfig {
    /// Net profit of one filled group.
    pub fn margin(&self) -> f64 {
        self.premium - self.cost_per_fill
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub security: u32,
    pub side: Side,
    pub limit: f64,
    pub quantity: u32,
    pub group: usize,
}

impl Order {
    pub fn fills_on(&self, tick: Tick) -> bool {
        matches!(
            (self.side, tick),
            (Side::Buy, Tick::Down) | (Side::Sell, Tick::Up)
        )
    }
}

/// Orders that cancel one another as soon as one of them fills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcoGroup {
    pub index: usize,
    pub orders: Vec<Order>,
}

/// One OCO group per clause, in clause order. Positive literals become BUY
/// orders and negated literals SELL orders, each for one minimum lot at the
/// security's mid.
pub fn encode_market(f: &CnfFormula, state: &MarketState, cfg: &MarketConfig) -> Result<Vec<OcoGroup>> {
    if state.securities() < f.num_vars() {
        return Err(Error::InvalidParameter(format!(
            "market quotes {} securities, formula needs {}",
            state.securities(),
            f.num_vars()
        )));
    }
    Ok(f.clauses()
        .iter()
        .enumerate()
        .map(|(index, clause)| OcoGroup {
            index,
            orders: clause
                .iter()
                .map(|lit| Order {
                    security: lit.var,
                    side: if lit.negated { Side::Sell } else { Side::Buy },
                    limit: state.books[lit.var as usize - 1].mid(),
                    quantity: cfg.min_lot,
                    group: index,
                })
                .collect(),
        })
        .collect())
}

/// One tick per security.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TickAssignment(pub BTreeMap<u32, Tick>);

impl TickAssignment {
    pub fn get(&self, security: u32) -> Option<Tick> {
        self.0.get(&security).copied()
    }
}

/// TRUE becomes DOWN (resting BUYs fill), FALSE becomes UP (resting SELLs
/// fill). Every variable in `1..=num_vars` must be assigned.
pub fn assignment_to_ticks(w: &Assignment, num_vars: u32) -> Result<TickAssignment> {
    (1..=num_vars)
        .map(|v| {
            let value = w.get(v).ok_or(Error::Incomplete(v))?;
            Ok((v, if value { Tick::Down } else { Tick::Up }))
        })
        .collect::<Result<BTreeMap<_, _>>>()
        .map(TickAssignment)
}

pub fn ticks_to_assignment(ticks: &TickAssignment) -> Assignment {
    ticks.0.iter().map(|(&v, &t)| (v, t == Tick::Down)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub group: usize,
    pub order: Order,
    pub price: f64,
}

/// What happened to the orders over one tick window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub fills: Vec<Fill>,
    /// Unfilled members of groups that did fill.
    pub cancellations: Vec<Order>,
    /// Orders of groups that never filled, cancelled when the window closes.
    pub expired: Vec<Order>,
    pub groups_filled: usize,
    /// Shares held per security before liquidation.
    pub positions: BTreeMap<u32, i64>,
    pub net_profit: f64,
}

/// Runs one synchronized tick window. Within a group the lowest-index
/// fillable order fills and cancels the rest.
pub fn apply_ticks(
    state: &MarketState,
    groups: &[OcoGroup],
    ticks: &TickAssignment,
    cfg: &MarketConfig,
) -> Result<ExecutionReport> {
    for order in groups.iter().flat_map(|g| &g.orders) {
        if ticks.get(order.security).is_none() {
            return Err(Error::Incomplete(order.security));
        }
        if state.book(order.security).is_none() {
            return Err(Error::InvalidParameter(format!(
                "no book for security {}",
                order.security
            )));
        }
    }

    let mut report = ExecutionReport {
        fills: Vec::new(),
        cancellations: Vec::new(),
        expired: Vec::new(),
        groups_filled: 0,
        positions: BTreeMap::new(),
        net_profit: 0.0,
    };
    for g in groups {
        let hit = g
            .orders
            .iter()
            .position(|o| o.fills_on(ticks.get(o.security).expect("checked above")));
        let Some(hit) = hit else {
            report.expired.extend(g.orders.iter().copied());
            continue;
        };
        let order = g.orders[hit];
        report.fills.push(Fill {
            group: g.index,
            order,
            price: order.limit,
        });
        let signed = match order.side {
            Side::Buy => order.quantity as i64,
            Side::Sell => -(order.quantity as i64),
        };
        *report.positions.entry(order.security).or_default() += signed;
        report.cancellations.extend(
            g.orders
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != hit)
                .map(|(_, o)| *o),
        );
        report.groups_filled += 1;
    }
    report.net_profit = report.groups_filled as f64 * cfg.margin();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::fixtures::example_formula;
    use crate::sat::{random_3cnf, verify_assignment, Literal};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn setup(f: &CnfFormula) -> (MarketState, Vec<OcoGroup>, MarketConfig) {
        let state = MarketState::with_defaults(f.num_vars());
        let cfg = MarketConfig::default();
        let groups = encode_market(f, &state, &cfg).unwrap();
        (state, groups, cfg)
    }

    fn sides(g: &OcoGroup) -> Vec<(u32, Side)> {
        g.orders.iter().map(|o| (o.security, o.side)).collect()
    }

    #[test]
    fn example_clauses_become_oco_groups() {
        let (_, groups, _) = setup(&example_formula());
        assert_eq!(groups.len(), 2);
        assert_eq!(sides(&groups[0]), [(1, Side::Buy), (2, Side::Buy), (3, Side::Sell)]);
        assert_eq!(sides(&groups[1]), [(1, Side::Buy), (2, Side::Sell), (4, Side::Buy)]);
        for o in groups.iter().flat_map(|g| &g.orders) {
            assert_eq!(o.limit, 100.0);
            assert_eq!(o.quantity, 100);
        }
    }

    #[test]
    fn order_count_is_three_per_clause() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for m in [0, 1, 7, 40] {
            let f = random_3cnf(6, m, &mut rng);
            let (_, groups, _) = setup(&f);
            assert_eq!(groups.len(), m);
            assert_eq!(groups.iter().map(|g| g.orders.len()).sum::<usize>(), 3 * m);
        }
    }

    #[test]
    fn ticks_from_assignments() {
        let all_true: Assignment = (1..=3).map(|v| (v, true)).collect();
        let t = assignment_to_ticks(&all_true, 3).unwrap();
        assert!(t.0.values().all(|x| *x == Tick::Down));

        let w: Assignment = [(1, true), (2, false)].into_iter().collect();
        let t = assignment_to_ticks(&w, 2).unwrap();
        assert_eq!(t.get(1), Some(Tick::Down));
        assert_eq!(t.get(2), Some(Tick::Up));
        assert_eq!(assignment_to_ticks(&w, 3), Err(Error::Incomplete(3)));
    }

    #[test]
    fn tick_round_trip_over_all_maps() {
        for w in Assignment::all(4) {
            let ticks = assignment_to_ticks(&w, 4).unwrap();
            assert_eq!(ticks_to_assignment(&ticks), w);
            assert_eq!(assignment_to_ticks(&ticks_to_assignment(&ticks), 4).unwrap(), ticks);
        }
    }

    #[test]
    fn all_up_fills_both_example_groups() {
        let f = example_formula();
        let (state, groups, cfg) = setup(&f);
        let ticks = TickAssignment((1..=4).map(|v| (v, Tick::Up)).collect());
        let rep = apply_ticks(&state, &groups, &ticks, &cfg).unwrap();
        assert_eq!(rep.groups_filled, 2);
        assert_eq!(rep.fills[0].order.security, 3);
        assert_eq!(rep.fills[0].order.side, Side::Sell);
        assert_eq!(rep.fills[1].order.security, 2);
        assert_eq!(rep.cancellations.len(), 4);
        assert!((rep.net_profit - 1.8).abs() < 1e-12);
        let all_false: Assignment = (1..=4).map(|v| (v, false)).collect();
        assert!(verify_assignment(&f, &all_false).unwrap());
    }

    #[test]
    fn lowest_index_fillable_order_wins() {
        let f = CnfFormula::new(3, vec![[Literal::pos(1), Literal::pos(2), Literal::neg(3)]]).unwrap();
        let (state, groups, cfg) = setup(&f);
        let ticks = TickAssignment([(1, Tick::Down), (2, Tick::Up), (3, Tick::Up)].into_iter().collect());
        let rep = apply_ticks(&state, &groups, &ticks, &cfg).unwrap();
        assert_eq!(rep.fills.len(), 1);
        assert_eq!((rep.fills[0].order.security, rep.fills[0].order.side), (1, Side::Buy));
        assert_eq!(rep.cancellations.len(), 2);
        assert!(rep.cancellations.iter().any(|o| o.security == 3 && o.side == Side::Sell));
        assert_eq!(rep.positions[&1], 100);
    }

    #[test]
    fn unfillable_group_expires_without_cancellations() {
        let f = CnfFormula::new(3, vec![[Literal::pos(1), Literal::pos(2), Literal::neg(3)]]).unwrap();
        let (state, groups, cfg) = setup(&f);
        let ticks = TickAssignment([(1, Tick::Up), (2, Tick::Up), (3, Tick::Down)].into_iter().collect());
        let rep = apply_ticks(&state, &groups, &ticks, &cfg).unwrap();
        assert_eq!(rep.groups_filled, 0);
        assert!(rep.fills.is_empty() && rep.cancellations.is_empty());
        assert_eq!(rep.expired.len(), 3);
        assert_eq!(rep.net_profit, 0.0);
    }

    #[test]
    fn missing_tick_is_incomplete() {
        let (state, groups, cfg) = setup(&example_formula());
        let ticks = TickAssignment((1..=3).map(|v| (v, Tick::Up)).collect());
        assert_eq!(apply_ticks(&state, &groups, &ticks, &cfg), Err(Error::Incomplete(4)));
    }

    #[test]
    fn encode_needs_enough_books() {
        let f = example_formula();
        let cfg = MarketConfig::default();
        assert!(encode_market(&f, &MarketState::with_defaults(3), &cfg).is_err());
        assert!(Book::new(101.0, 99.0).is_err());
    }

    proptest! {
        #[test]
        fn at_most_one_fill_per_group(n in 1u32..10, m in 0usize..30, seed: u64, tick_bits: u32) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = random_3cnf(n, m, &mut rng);
            let (state, groups, cfg) = setup(&f);
            let ticks = TickAssignment((1..=n).map(|v| (v, if (tick_bits >> v) & 1 == 1 { Tick::Up } else { Tick::Down })).collect());
            let rep = apply_ticks(&state, &groups, &ticks, &cfg).unwrap();
            let mut per_group = vec![0usize; m];
            for fill in &rep.fills {
                per_group[fill.group] += 1;
            }
            prop_assert!(per_group.iter().all(|c| *c <= 1));
            prop_assert_eq!(rep.groups_filled, rep.fills.len());
            prop_assert_eq!(rep.cancellations.len(), 2 * rep.groups_filled);
            prop_assert_eq!(rep.expired.len(), 3 * (m - rep.groups_filled));
        }
    }
}
