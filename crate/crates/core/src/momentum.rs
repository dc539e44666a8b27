//! Cross-sectional momentum: rank on past returns, buy the top decile, sell
//! the bottom decile, hold for a few months.
//!
//! Each month a new zero-cost sub-portfolio is formed from the assets with a
//! complete formation window. A month's strategy return is the equal-weight
//! average over the sub-portfolios formed during the previous `K` months
//! (overlapping holdings). Returns aggregate additively.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{month_end_label, Observation, PanelData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentumConfig {
    pub formation_months: usize,
    pub holding_months: usize,
    pub decile_count: usize,
    /// Present observations, up to and including the formation month, an
    /// asset needs before it is ranked.
    pub min_history: usize,
    /// Leave one month between the formation window and the holding period.
    pub skip_month: bool,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self {
            formation_months: 6,
            holding_months: 6,
            decile_count: 10,
            min_history: 6,
            skip_month: false,
        }
    }
}

impl MomentumConfig {
    pub fn new(formation_months: usize, holding_months: usize, decile_count: usize) -> Result<Self> {
        let cfg = Self {
            formation_months,
            holding_months,
            decile_count,
            min_history: formation_months,
            skip_month: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.formation_months == 0 || self.holding_months == 0 {
            return Err(Error::InvalidParameter(
                "formation and holding periods must be at least one month".into(),
            ));
        }
        if self.decile_count < 2 {
            return Err(Error::InvalidParameter("decile_count must be at least 2".into()));
        }
        Ok(())
    }

    fn months_needed(&self) -> usize {
        self.formation_months + self.holding_months + 1 + self.skip_month as usize
    }
}

/// Winners and losers chosen at the end of one formation month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPortfolio {
    pub formed: usize,
    pub winners: Vec<usize>,
    pub losers: Vec<usize>,
}

impl SubPortfolio {
    /// Equal weights: `+1/|winners|` long, `-1/|losers|` short.
    pub fn weights(&self) -> Vec<(usize, f64)> {
        let long = 1.0 / self.winners.len() as f64;
        let short = -1.0 / self.losers.len() as f64;
        self.winners
            .iter()
            .map(|&a| (a, long))
            .chain(self.losers.iter().map(|&a| (a, short)))
            .collect()
    }
}

/// Dense `asset x month` view of a panel.
struct Grid {
    months: usize,
    cells: Vec<Option<f64>>,
}

impl Grid {
    fn new(panel: &PanelData) -> Self {
        let months = panel.months().len();
        let mut cells = vec![None; panel.assets().len() * months];
        for (a, m, o) in panel.entries() {
            cells[a * months + m] = Some(o.ret);
        }
        Self { months, cells }
    }

    fn get(&self, asset: usize, month: usize) -> Option<f64> {
        self.cells[asset * self.months + month]
    }

    fn assets(&self) -> usize {
        self.cells.len() / self.months.max(1)
    }
}

fn form(grid: &Grid, cfg: &MomentumConfig, f: usize) -> Option<SubPortfolio> {
    let end = f + 1 - cfg.skip_month as usize;
    let start = end.checked_sub(cfg.formation_months)?;
    let mut ranked: Vec<(f64, usize)> = (0..grid.assets())
        .filter_map(|a| {
            let history = (0..=f).filter(|&m| grid.get(a, m).is_some()).count();
            if history < cfg.min_history {
                return None;
            }
            (start..end)
                .map(|m| grid.get(a, m))
                .sum::<Option<f64>>()
                .map(|s| (s, a))
        })
        .collect();
    if ranked.len() < cfg.decile_count {
        return None;
    }
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let size = ranked.len() / cfg.decile_count;
    Some(SubPortfolio {
        formed: f,
        losers: ranked[..size].iter().map(|r| r.1).collect(),
        winners: ranked[ranked.len() - size..].iter().map(|r| r.1).collect(),
    })
}

/// The sub-portfolio formed at the end of month index `f`, if enough assets
/// qualify.
pub fn form_portfolio(panel: &PanelData, cfg: &MomentumConfig, f: usize) -> Result<Option<SubPortfolio>> {
    cfg.validate()?;
    if f >= panel.months().len() {
        return Err(Error::InvalidParameter(format!("month index {f} outside panel")));
    }
    Ok(form(&Grid::new(panel), cfg, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyReturn {
    pub month: String,
    /// Winners-minus-losers return.
    #[serde(rename = "return")]
    pub ret: f64,
    /// Sub-portfolios contributing this month.
    pub live: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub monthly_returns: Vec<MonthlyReturn>,
    pub cumulative: f64,
    /// `None` when the monthly returns have zero variance.
    pub t_stat: Option<f64>,
    pub months_used: usize,
    /// Formation months with fewer rankable assets than deciles.
    pub skipped_months: usize,
}

pub fn run_backtest(panel: &PanelData, cfg: &MomentumConfig) -> Result<BacktestResult> {
    cfg.validate()?;
    let n_months = panel.months().len();
    if n_months < cfg.months_needed() {
        return Err(Error::InsufficientData {
            needed: cfg.months_needed(),
            available: n_months,
        });
    }
    let grid = Grid::new(panel);
    let first_formation = cfg.formation_months - 1 + cfg.skip_month as usize;
    let mut subs: Vec<SubPortfolio> = Vec::new();
    let mut skipped = 0;
    for f in first_formation..n_months - 1 {
        match form(&grid, cfg, f) {
            Some(p) => subs.push(p),
            None => skipped += 1,
        }
    }

    let leg = |assets: &[usize], m: usize| -> Option<f64> {
        let rets: Vec<f64> = assets.iter().filter_map(|&a| grid.get(a, m)).collect();
        (!rets.is_empty()).then(|| rets.iter().sum::<f64>() / rets.len() as f64)
    };
    let mut monthly = Vec::new();
    for m in first_formation + 1..n_months {
        let spreads: Vec<f64> = subs
            .iter()
            .filter(|p| p.formed < m && p.formed + cfg.holding_months >= m)
            .filter_map(|p| Some(leg(&p.winners, m)? - leg(&p.losers, m)?))
            .collect();
        if spreads.is_empty() {
            continue;
        }
        monthly.push(MonthlyReturn {
            month: panel.months()[m].clone(),
            ret: spreads.iter().sum::<f64>() / spreads.len() as f64,
            live: spreads.len(),
        });
    }

    let rets: Vec<f64> = monthly.iter().map(|r| r.ret).collect();
    Ok(BacktestResult {
        cumulative: rets.iter().sum(),
        t_stat: t_statistic(&rets).ok(),
        months_used: monthly.len(),
        monthly_returns: monthly,
        skipped_months: skipped,
    })
}

/// `mean / (sd / sqrt(n))` with the sample standard deviation.
pub fn t_statistic(returns: &[f64]) -> Result<f64> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::DegenerateSample("fewer than two observations"));
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::DegenerateSample("zero variance"));
    }
    Ok(mean / (var.sqrt() / (n as f64).sqrt()))
}

/// `label` truncated to the length of `through` compares at or below it, so
/// `1965-12` covers every date in December 1965 and `1965` the whole year.
fn on_or_before(label: &str, through: &str) -> bool {
    let cut = label.get(..through.len()).unwrap_or(label);
    cut <= through
}

/// Present `(asset, month)` observations dated on or before `through`.
pub fn count_data_points(panel: &PanelData, through: &str) -> usize {
    let months = panel.months();
    let cutoff = months.partition_point(|m| on_or_before(m, through));
    panel.entries().filter(|(_, m, _)| *m < cutoff).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub period: String,
    pub performance: f64,
    pub data_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartitionReport {
    pub rows: Vec<PartitionRow>,
}

impl PartitionReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Splits the panel's months at `breakpoints` (each inclusive as the end of
/// its period; a final period runs to the last month) and reports the
/// cumulative strategy return of each period with the number of data points
/// available through its end.
pub fn partition_report(panel: &PanelData, breakpoints: &[String], cfg: &MomentumConfig) -> Result<PartitionReport> {
    if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "breakpoints not increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    let bt = run_backtest(panel, cfg)?;
    let months = panel.months();
    let mut rows = Vec::new();
    let mut start = 0;
    let ends = breakpoints
        .iter()
        .map(|b| (months.partition_point(|m| on_or_before(m, b)), b.clone()))
        .chain(std::iter::once((months.len(), months.last().cloned().unwrap_or_default())));
    for (stop, end_label) in ends {
        if stop <= start {
            continue;
        }
        let (first, last) = (&months[start], &months[stop - 1]);
        let performance = bt
            .monthly_returns
            .iter()
            .filter(|r| r.month >= *first && r.month <= *last)
            .map(|r| r.ret)
            .sum();
        rows.push(PartitionRow {
            period: format!("{first}..{end_label}"),
            performance,
            data_count: count_data_points(panel, &end_label),
        });
        start = stop;
    }
    Ok(PartitionReport { rows })
}

/// A published period row kept as a reference for the report layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub period: &'static str,
    pub performance_pct: f64,
    pub data_count: usize,
}

/// Six-month/six-month momentum returns and CRSP (stock, month-end) counts
/// reported for three historical periods. The underlying data is
/// proprietary; these rows document the target layout, not a reproducible
/// result.
pub const REFERENCE_PERIODS: [ReferenceRow; 3] = [
    ReferenceRow {
        period: "1927-1940",
        performance_pct: -6.56,
        data_count: 125_000,
    },
    ReferenceRow {
        period: "1941-1965",
        performance_pct: 3.65,
        data_count: 459_000,
    },
    ReferenceRow {
        period: "1965-1989",
        performance_pct: 5.10,
        data_count: 1_753_000,
    },
];

/// Volatility of the innovations to each asset's expected return.
pub const EXPECTED_RETURN_VOL: f64 = 0.05;

/// Volatility of the idiosyncratic noise around the expected return.
pub const NOISE_VOL: f64 = 0.025;

/// A synthetic panel and the expected-return component behind it.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: PanelData,
    /// `expected[asset][month]`.
    pub expected: Vec<Vec<f64>>,
}

/// Each asset's expected return follows
/// `mu[m] = persistence * mu[m-1] + eta[m]` started from its stationary
/// distribution, and the realized return is `mu[m] + eps[m]`. With
/// `persistence = 0` the panel is i.i.d. Months are month-ends from
/// January 1927.
pub fn gen_momentum_panel(n_assets: usize, n_months: usize, persistence: f64, seed: u64) -> Result<PanelData> {
    gen_momentum_panel_with_latent(n_assets, n_months, persistence, seed).map(|s| s.panel)
}

pub fn gen_momentum_panel_with_latent(
    n_assets: usize,
    n_months: usize,
    persistence: f64,
    seed: u64,
) -> Result<SyntheticPanel> {
    if !(0.0..1.0).contains(&persistence) {
        return Err(Error::InvalidParameter(format!(
            "persistence {persistence} outside [0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = Normal::new(0.0, EXPECTED_RETURN_VOL).expect("valid sd");
    let eps = Normal::new(0.0, NOISE_VOL).expect("valid sd");
    let stationary_sd = EXPECTED_RETURN_VOL / (1.0 - persistence * persistence).sqrt();
    let start = Normal::new(0.0, stationary_sd).expect("valid sd");

    let assets: Vec<String> = (0..n_assets).map(|i| format!("S{i:04}")).collect();
    let months: Vec<String> = (0..n_months).map(|m| month_end_label(1927, m)).collect();
    let mut panel = PanelData::new(assets.clone(), months.clone())?;
    let mut expected = Vec::with_capacity(n_assets);
    for name in &assets {
        let mut mu = start.sample(&mut rng);
        let mut path = Vec::with_capacity(n_months);
        for (m, month) in months.iter().enumerate() {
            if m > 0 {
                mu = persistence * mu + eta.sample(&mut rng);
            }
            path.push(mu);
            let ret = mu + eps.sample(&mut rng);
            panel.insert(name, month, Observation { ret, price: None })?;
        }
        expected.push(path);
    }
    Ok(SyntheticPanel { panel, expected })
}
