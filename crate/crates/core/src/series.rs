//! Price series, return panels and the binary direction model.
//!
//! Every period is reduced to one bit: UP (1) when the return is strictly
//! positive, DOWN (0) otherwise. A zero return therefore counts as DOWN.
//! A run of `t` bits is packed into a [`Context`] with the oldest
//! observation in the most significant position.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lookback a packed [`Context`] can hold.
pub const MAX_CONTEXT_BITS: usize = 63;

/// Starting level used when price levels are synthesized from returns.
pub const SYNTHETIC_START_LEVEL: f64 = 100.0;

/// Per-period returns together with the price level after each period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    returns: Vec<f64>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(returns: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if returns.len() != prices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} returns but {} prices",
                returns.len(),
                prices.len()
            )));
        }
        if let Some(r) = returns.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite return {r}")));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidParameter(format!("price level {p} is not positive")));
        }
        Ok(Self { returns, prices })
    }

    /// Treats `changes` as absolute price changes added to `start`.
    pub fn from_changes_at(start: f64, changes: Vec<f64>) -> Result<Self> {
        let prices = changes
            .iter()
            .scan(start, |level, c| {
                *level += c;
                Some(*level)
            })
            .collect();
        Self::new(changes, prices)
    }

    /// Absolute price changes on a start level high enough that the path
    /// stays positive whatever the signs.
    pub fn from_changes(changes: Vec<f64>) -> Result<Self> {
        let start = SYNTHETIC_START_LEVEL + changes.iter().map(|c| c.abs()).sum::<f64>();
        Self::from_changes_at(start, changes)
    }

    /// Treats `returns` as simple returns compounded from
    /// [`SYNTHETIC_START_LEVEL`].
    pub fn from_returns(returns: Vec<f64>) -> Result<Self> {
        let prices = returns
            .iter()
            .scan(SYNTHETIC_START_LEVEL, |level, r| {
                *level *= 1.0 + r;
                Some(*level)
            })
            .collect();
        Self::new(returns, prices)
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn directions(&self) -> DirectionVector {
        directions(self)
    }
}

/// UP/DOWN bits, one per period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionVector {
    pub bits: Vec<bool>,
}

impl DirectionVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_up(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Every window of `t` consecutive bits, keyed by the index of its last
    /// bit.
    pub fn sliding_contexts(&self, t: usize) -> Result<Vec<(usize, Context)>> {
        check_lookback(t, self.len())?;
        let mask = Context::mask(t);
        let mut code = 0u64;
        let mut out = Vec::with_capacity(self.len() + 1 - t);
        for (i, &bit) in self.bits.iter().enumerate() {
            code = ((code << 1) | bit as u64) & mask;
            if i + 1 >= t {
                out.push((i, Context { lookback: t, code }));
            }
        }
        Ok(out)
    }
}

/// A packed window of `lookback` direction bits, oldest bit most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub lookback: usize,
    pub code: u64,
}

impl Context {
    pub fn new(lookback: usize, code: u64) -> Result<Self> {
        if lookback == 0 || lookback > MAX_CONTEXT_BITS {
            return Err(Error::InvalidParameter(format!(
                "context lookback must be in 1..={MAX_CONTEXT_BITS}, got {lookback}"
            )));
        }
        if code > Self::mask(lookback) {
            return Err(Error::InvalidParameter(format!(
                "context code {code} does not fit in {lookback} bits"
            )));
        }
        Ok(Self { lookback, code })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let code = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::new(bits.len(), code)
    }

    /// Bits from oldest to newest.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.lookback)
            .rev()
            .map(|shift| (self.code >> shift) & 1 == 1)
            .collect()
    }

    pub(crate) fn mask(lookback: usize) -> u64 {
        if lookback >= 64 {
            u64::MAX
        } else {
            (1u64 << lookback) - 1
        }
    }
}

pub(crate) fn check_lookback(t: usize, len: usize) -> Result<()> {
    if t == 0 || t > MAX_CONTEXT_BITS || t > len {
        return Err(Error::InvalidWindow { lookback: t, len });
    }
    Ok(())
}

/// Bit `i` is 1 iff `returns[i] > 0`; zero returns are DOWN.
pub fn directions(series: &PriceSeries) -> DirectionVector {
    DirectionVector {
        bits: series.returns.iter().map(|r| *r > 0.0).collect(),
    }
}

pub fn sliding_contexts(series: &PriceSeries, t: usize) -> Result<Vec<(usize, Context)>> {
    directions(series).sliding_contexts(t)
}

/// One `(asset, month)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "return")]
    pub ret: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
}

/// A sparse asset-by-month panel of returns.
///
/// Months are ISO date labels kept in strictly increasing lexicographic
/// order; assets are kept sorted by identifier.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelData {
    assets: Vec<String>,
    months: Vec<String>,
    cells: BTreeMap<(usize, usize), Observation>,
}

impl PanelData {
    pub fn new(assets: Vec<String>, months: Vec<String>) -> Result<Self> {
        if let Some(w) = months.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "months not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let mut sorted = assets.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != assets.len() {
            return Err(Error::InvalidParameter("asset identifiers are not unique".into()));
        }
        Ok(Self {
            assets: sorted,
            months,
            cells: BTreeMap::new(),
        })
    }

    /// Builds a panel from `(date, asset, observation)` rows in any order.
    pub fn from_rows<I, S, T>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T, Observation)>,
        S: Into<String>,
        T: Into<String>,
    {
        let rows: Vec<(String, String, Observation)> = rows
            .into_iter()
            .map(|(d, a, o)| (d.into(), a.into(), o))
            .collect();
        let mut months: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
        months.sort();
        months.dedup();
        let mut assets: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
        assets.sort();
        assets.dedup();
        let mut panel = Self::new(assets, months)?;
        for (date, asset, obs) in rows {
            panel.insert(&asset, &date, obs)?;
        }
        Ok(panel)
    }

    pub fn insert(&mut self, asset: &str, month: &str, obs: Observation) -> Result<()> {
        let a = self
            .asset_index(asset)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown asset {asset}")))?;
        let m = self
            .month_index(month)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown month {month}")))?;
        if self.cells.contains_key(&(a, m)) {
            return Err(Error::Duplicate {
                asset: asset.to_string(),
                date: month.to_string(),
            });
        }
        self.cells.insert((a, m), obs);
        Ok(())
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn months(&self) -> &[String] {
        &self.months
    }

    pub fn asset_index(&self, asset: &str) -> Option<usize> {
        self.assets.binary_search_by(|a| a.as_str().cmp(asset)).ok()
    }

    pub fn month_index(&self, month: &str) -> Option<usize> {
        self.months.binary_search_by(|m| m.as_str().cmp(month)).ok()
    }

    pub fn get(&self, asset: usize, month: usize) -> Option<&Observation> {
        self.cells.get(&(asset, month))
    }

    pub fn ret(&self, asset: usize, month: usize) -> Option<f64> {
        self.get(asset, month).map(|o| o.ret)
    }

    /// Present observations in `(asset, month)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Observation)> + '_ {
        self.cells.iter().map(|(&(a, m), o)| (a, m, o))
    }

    /// Number of present observations.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Number of missing `(asset, month)` cells.
    pub fn holes(&self) -> usize {
        self.assets.len() * self.months.len() - self.cells.len()
    }

    /// The full series of one asset. Every month must be present. Missing
    /// price levels are compounded from [`SYNTHETIC_START_LEVEL`].
    pub fn asset_series(&self, asset: &str) -> Result<PriceSeries> {
        let a = self
            .asset_index(asset)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown asset {asset}")))?;
        let mut returns = Vec::with_capacity(self.months.len());
        let mut prices = Vec::with_capacity(self.months.len());
        let mut all_priced = true;
        for m in 0..self.months.len() {
            let obs = self.get(a, m).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "asset {asset} has no observation for {}",
                    self.months[m]
                ))
            })?;
            returns.push(obs.ret);
            match obs.price {
                Some(p) => prices.push(p),
                None => all_priced = false,
            }
        }
        if all_priced {
            PriceSeries::new(returns, prices)
        } else {
            PriceSeries::from_returns(returns)
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    date: String,
    asset: String,
    #[serde(rename = "return")]
    ret: String,
    #[serde(default)]
    price: Option<String>,
}

/// Reads a panel from CSV with header `date,asset,return[,price]`.
pub fn load_panel_csv<R: Read>(reader: R) -> Result<PanelData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["date", "asset", "return"] && names != ["date", "asset", "return", "price"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header date,asset,return[,price], got {}", names.join(",")),
        });
    }

    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let row: CsvRow = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let ret: f64 = row.ret.parse().map_err(|_| Error::Parse {
            line,
            message: format!("return {:?} is not a number", row.ret),
        })?;
        let price = match row.price.as_deref() {
            None | Some("") => None,
            Some(p) => {
                let v: f64 = p.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("price {p:?} is not a number"),
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Parse {
                        line,
                        message: format!("price {p} is not positive"),
                    });
                }
                Some(v)
            }
        };
        if !ret.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("return {ret} is not finite"),
            });
        }
        if !seen.insert((row.asset.clone(), row.date.clone())) {
            return Err(Error::Duplicate {
                asset: row.asset,
                date: row.date,
            });
        }
        rows.push((row.date, row.asset, Observation { ret, price }));
    }
    PanelData::from_rows(rows)
}

/// Writes a panel in the format read by [`load_panel_csv`], rows ordered by
/// month then asset. The price column is emitted when any cell has one.
pub fn write_panel_csv<W: Write>(panel: &PanelData, writer: W) -> Result<()> {
    let with_price = panel.entries().any(|(_, _, o)| o.price.is_some());
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Format(e.to_string());
    if with_price {
        wtr.write_record(["date", "asset", "return", "price"]).map_err(io)?;
    } else {
        wtr.write_record(["date", "asset", "return"]).map_err(io)?;
    }
    let mut by_month: Vec<_> = panel.entries().collect();
    by_month.sort_by_key(|(a, m, _)| (*m, *a));
    for (a, m, o) in by_month {
        let mut rec = vec![
            panel.months[m].clone(),
            panel.assets[a].clone(),
            o.ret.to_string(),
        ];
        if with_price {
            rec.push(o.price.map(|p| p.to_string()).unwrap_or_default());
        }
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Format(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// `n` unit moves, UP with probability `p_up`, on additive price levels.
pub fn gen_random_walk(n: usize, p_up: f64, seed: u64) -> Result<PriceSeries> {
    check_probability(p_up, "p_up")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = (0..n)
        .map(|_| if rng.gen_bool(p_up) { 1.0 } else { -1.0 })
        .collect();
    PriceSeries::from_changes_at(n as f64 + SYNTHETIC_START_LEVEL, returns)
}

/// A fair unit walk, except that right after the trailing directions match
/// `pattern` the next move is UP with probability `0.5 + edge`.
pub fn gen_planted(n: usize, pattern: Context, edge: f64, seed: u64) -> Result<PriceSeries> {
    if !(0.0..=0.5).contains(&edge) {
        return Err(Error::InvalidParameter(format!("edge {edge} outside [0, 0.5]")));
    }
    let t = pattern.lookback;
    if t > n {
        return Err(Error::InvalidWindow { lookback: t, len: n });
    }
    let mask = Context::mask(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut code = 0u64;
    let mut returns = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i >= t && code == pattern.code { 0.5 + edge } else { 0.5 };
        let up = rng.gen_bool(p);
        code = ((code << 1) | up as u64) & mask;
        returns.push(if up { 1.0 } else { -1.0 });
    }
    PriceSeries::from_changes_at(n as f64 + SYNTHETIC_START_LEVEL, returns)
}

/// ISO date of the last day of the `offset`-th month after January of
/// `start_year`.
pub fn month_end_label(start_year: usize, offset: usize) -> String {
    let year = start_year + offset / 12;
    let month = offset % 12 + 1;
    let leap = (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400);
    let day = match month {
        2 if leap => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    };
    format!("{year:04}-{month:02}-{day:02}")
}

fn check_probability(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("{name} {p} outside [0, 1]")));
    }
    Ok(())
}
