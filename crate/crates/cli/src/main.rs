use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emhnp_core::bench::{bench_strategies, bench_verify_scaling, BenchOptions, BenchRecord};
use emhnp_core::knapsack::{
    decide_q4, knapsack_to_scenario, solve_bruteforce, solve_dp, KnapsackInstance, MultiAssetScenario, ScenarioSidecar,
};
use emhnp_core::momentum::{gen_momentum_panel, partition_report, run_backtest, MomentumConfig};
use emhnp_core::sat::{
    apply_ticks, assignment_to_ticks, encode_market, market_decides_sat, parse_dimacs, reference_dpll,
    verify_assignment, Assignment, CnfFormula, MarketConfig, MarketState,
};
use emhnp_core::series::{load_panel_csv, write_panel_csv, PanelData, PriceSeries};
use emhnp_core::strategy::{brute_force_best_counted, decide_q3, optimal_strategy_counted, CriticalValue};

#[derive(Parser)]
#[command(name = "emhnp", version, about = "Trading-strategy search, Knapsack and 3-SAT markets, momentum backtests")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Technical strategies over a single-asset series
    #[command(subcommand)]
    Strategy(StrategyCmd),
    /// Knapsack solvers and the budgeted multi-asset correspondence
    #[command(subcommand)]
    Knapsack(KnapsackCmd),
    /// 3-CNF formulas as one-cancels-other order groups
    #[command(subcommand)]
    Sat(SatCmd),
    /// Cross-sectional momentum backtests
    #[command(subcommand)]
    Momentum(MomentumCmd),
    /// Exhaustive search versus single-pass scaling
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct SeriesArgs {
    /// Panel CSV (`date,asset,return[,price]`), `-` for stdin
    input: PathBuf,
    #[arg(long)]
    lookback: usize,
    /// Asset to use when the panel holds several
    #[arg(long)]
    asset: Option<String>,
}

#[derive(Subcommand)]
enum StrategyCmd {
    /// Best long-or-out strategy in one pass
    Optimal(SeriesArgs),
    /// Best long-or-out strategy by trying all of them
    Brute(SeriesArgs),
    /// Does some strategy earn more than the target?
    Decide {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, allow_negative_numbers = true)]
        target: f64,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON `{items, budget, target}`, `-` for stdin
    input: PathBuf,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    target: Option<u64>,
}

#[derive(Subcommand)]
enum KnapsackCmd {
    /// Best feasible subset
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Enumerate subsets instead of the dynamic program
        #[arg(long)]
        brute: bool,
    },
    /// Can the items reach the target within the budget?
    Decide {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Require value strictly above the target
        #[arg(long)]
        strict: bool,
    },
    /// Reduce a multi-asset scenario to Knapsack and decide it
    Reduce {
        /// Scenario panel CSV, `-` for stdin
        input: PathBuf,
        /// Sidecar JSON `{lookback, budget, target, tick}`; defaults to the panel path with a `.json` extension
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long)]
        lookback: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        target: Option<u64>,
        #[arg(long)]
        tick: Option<f64>,
        /// Require profit strictly above the target
        #[arg(long)]
        strict: bool,
    },
    /// Encode an instance as a market scenario
    ToMarket {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Write the panel CSV here and the sidecar next to it
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum SatCmd {
    /// Print the order groups for a DIMACS formula
    Encode {
        input: PathBuf,
    },
    /// Decide satisfiability by searching tick paths
    Solve {
        input: PathBuf,
        /// Search node budget
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        /// Use the reference DPLL solver instead
        #[arg(long)]
        reference: bool,
    },
    /// Check a witness assignment `{"1": true, ...}`
    Verify {
        input: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
    /// Execute the order groups under the ticks a witness implies
    Simulate {
        input: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
}

#[derive(Args)]
struct MomentumArgs {
    #[arg(long, default_value_t = 6)]
    formation: usize,
    #[arg(long, default_value_t = 6)]
    holding: usize,
    #[arg(long, default_value_t = 10)]
    deciles: usize,
    /// Months of history needed before ranking; defaults to the formation length
    #[arg(long)]
    min_history: Option<usize>,
    #[arg(long)]
    skip_month: bool,
}

impl MomentumArgs {
    fn config(&self) -> Result<MomentumConfig> {
        let mut cfg = MomentumConfig::new(self.formation, self.holding, self.deciles)?;
        cfg.skip_month = self.skip_month;
        if let Some(h) = self.min_history {
            cfg.min_history = h;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum MomentumCmd {
    /// Winners-minus-losers returns for a panel
    Backtest {
        input: PathBuf,
        #[command(flatten)]
        cfg: MomentumArgs,
    },
    /// Performance and data counts per period
    Partition {
        input: PathBuf,
        /// Period ends, e.g. `1940-12,1965-12`
        #[arg(long, value_delimiter = ',')]
        breakpoints: Vec<String>,
        #[command(flatten)]
        cfg: MomentumArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Synthetic panel CSV with persistent expected returns
    Gen {
        #[arg(long, default_value_t = 100)]
        assets: usize,
        #[arg(long, default_value_t = 240)]
        months: usize,
        #[arg(long, default_value_t = 0.0)]
        persistence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Scan length `n`; the scan also runs at `2n`
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Series length for brute-force search
    #[arg(long, default_value_t = 256)]
    search_len: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

impl BenchArgs {
    fn options(&self) -> BenchOptions {
        BenchOptions {
            search_len: self.search_len,
            scan_len: self.n,
            repeats: self.repeats,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Brute force per lookback, then the single pass at n and 2n
    Strategies {
        #[arg(long = "t", value_delimiter = ',', default_value = "2,3,4")]
        t: Vec<usize>,
        #[command(flatten)]
        args: BenchArgs,
    },
    /// Verifying one strategy at n and 2n
    VerifyScaling {
        #[arg(long, default_value_t = 3)]
        lookback: usize,
        #[command(flatten)]
        args: BenchArgs,
    },
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_panel(path: &Path) -> Result<PanelData> {
    Ok(load_panel_csv(read_input(path)?.as_bytes())?)
}

fn read_formula(path: &Path) -> Result<CnfFormula> {
    Ok(parse_dimacs(&read_input(path)?)?)
}

fn read_witness(path: &Path) -> Result<Assignment> {
    serde_json::from_str(&read_input(path)?).context("witness must be a JSON object of variable to bool")
}

fn emit<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn emit_csv<T: Serialize>(rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(io::stdout().lock());
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn pick_series(args: &SeriesArgs) -> Result<PriceSeries> {
    let panel = read_panel(&args.input)?;
    let asset = match (&args.asset, panel.assets()) {
        (Some(a), _) => a.clone(),
        (None, [only]) => only.clone(),
        (None, assets) => bail!("panel has {} assets; choose one with --asset", assets.len()),
    };
    Ok(panel.asset_series(&asset)?)
}

fn load_instance(args: &InstanceArgs) -> Result<KnapsackInstance> {
    let mut inst: KnapsackInstance = serde_json::from_str(&read_input(&args.input)?).context("parsing instance")?;
    if let Some(b) = args.budget {
        inst = inst.with_budget(b)?;
    }
    if let Some(k) = args.target {
        inst = inst.with_target(k)?;
    }
    Ok(inst)
}

fn sidecar_for(input: &Path, explicit: Option<&PathBuf>) -> Result<Option<ScenarioSidecar>> {
    let path = match explicit {
        Some(p) => p.clone(),
        None if input.as_os_str() == "-" => return Ok(None),
        None => input.with_extension("json"),
    };
    if explicit.is_none() && !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&read_input(&path)?).context("parsing sidecar")?))
}

fn run_strategy(cmd: StrategyCmd) -> Result<()> {
    match cmd {
        StrategyCmd::Optimal(args) => emit(&optimal_strategy_counted(&pick_series(&args)?, args.lookback)?),
        StrategyCmd::Brute(args) => emit(&brute_force_best_counted(&pick_series(&args)?, args.lookback)?),
        StrategyCmd::Decide { series, target } => {
            let s = pick_series(&series)?;
            let decision = decide_q3(&s, series.lookback, CriticalValue::new(target)?)?;
            emit(&serde_json::json!({ "decision": decision }))
        }
    }
}

fn run_knapsack(cmd: KnapsackCmd) -> Result<()> {
    match cmd {
        KnapsackCmd::Solve { instance, brute } => {
            let inst = load_instance(&instance)?;
            emit(&if brute { solve_bruteforce(&inst)? } else { solve_dp(&inst)? })
        }
        KnapsackCmd::Decide { instance, strict } => {
            let mut inst = load_instance(&instance)?;
            if strict {
                inst = inst.with_target(inst.target() + 1)?;
            }
            let sol = solve_dp(&inst)?;
            let decision = sol.total_value >= inst.target();
            emit(&serde_json::json!({
                "decision": decision,
                "witness": decision.then_some(sol),
            }))
        }
        KnapsackCmd::Reduce {
            input,
            sidecar,
            lookback,
            budget,
            target,
            tick,
            strict,
        } => {
            let base = sidecar_for(&input, sidecar.as_ref())?;
            let merged = ScenarioSidecar {
                lookback: lookback.or(base.map(|s| s.lookback)).context("--lookback or a sidecar is required")?,
                budget: budget.or(base.map(|s| s.budget)).context("--budget or a sidecar is required")?,
                target: target.or(base.map(|s| s.target)).context("--target or a sidecar is required")?,
                tick: tick.or(base.map(|s| s.tick)).unwrap_or(1.0),
            };
            let mut sc = MultiAssetScenario::from_panel(&read_panel(&input)?, &merged)?;
            if strict {
                sc = sc.with_target(sc.target() + 1)?;
            }
            emit(&decide_q4(&sc)?)
        }
        KnapsackCmd::ToMarket { instance, out, format } => {
            let sc = knapsack_to_scenario(&load_instance(&instance)?)?;
            let panel = sc.to_panel()?;
            if let Some(path) = out {
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_panel_csv(&panel, file)?;
                let side = path.with_extension("json");
                fs::write(&side, serde_json::to_string_pretty(&sc.sidecar())?)
                    .with_context(|| format!("writing {}", side.display()))?;
                eprintln!("wrote {} and {}", path.display(), side.display());
                return emit(&sc.sidecar());
            }
            match format {
                Format::Csv => Ok(write_panel_csv(&panel, io::stdout().lock())?),
                Format::Json => {
                    let mut csv = Vec::new();
                    write_panel_csv(&panel, &mut csv)?;
                    emit(&serde_json::json!({
                        "sidecar": sc.sidecar(),
                        "panel_csv": String::from_utf8(csv)?,
                    }))
                }
            }
        }
    }
}

fn run_sat(cmd: SatCmd) -> Result<()> {
    let cfg = MarketConfig::default();
    match cmd {
        SatCmd::Encode { input } => {
            let f = read_formula(&input)?;
            emit(&encode_market(&f, &MarketState::with_defaults(f.num_vars()), &cfg)?)
        }
        SatCmd::Solve { input, budget, reference } => {
            let f = read_formula(&input)?;
            emit(&if reference { reference_dpll(&f) } else { market_decides_sat(&f, budget) })
        }
        SatCmd::Verify { input, witness } => {
            let f = read_formula(&input)?;
            let ok = verify_assignment(&f, &read_witness(&witness)?)?;
            emit(&serde_json::json!({ "satisfied": ok }))
        }
        SatCmd::Simulate { input, witness } => {
            let f = read_formula(&input)?;
            let state = MarketState::with_defaults(f.num_vars());
            let groups = encode_market(&f, &state, &cfg)?;
            let ticks = assignment_to_ticks(&read_witness(&witness)?, f.num_vars())?;
            emit(&apply_ticks(&state, &groups, &ticks, &cfg)?)
        }
    }
}

fn run_momentum(cmd: MomentumCmd) -> Result<()> {
    match cmd {
        MomentumCmd::Backtest { input, cfg } => emit(&run_backtest(&read_panel(&input)?, &cfg.config()?)?),
        MomentumCmd::Partition {
            input,
            breakpoints,
            cfg,
            format,
        } => {
            let report = partition_report(&read_panel(&input)?, &breakpoints, &cfg.config()?)?;
            match format {
                Format::Json => emit(&report),
                Format::Csv => Ok(report.write_csv(io::stdout().lock())?),
            }
        }
        MomentumCmd::Gen {
            assets,
            months,
            persistence,
            seed,
        } => Ok(write_panel_csv(
            &gen_momentum_panel(assets, months, persistence, seed)?,
            io::stdout().lock(),
        )?),
    }
}

fn emit_bench(rows: &[BenchRecord], format: Format) -> Result<()> {
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} {}: {}", row.task, row.parameter, row.error.as_deref().unwrap_or_default());
    }
    match format {
        Format::Json => emit(rows),
        Format::Csv => emit_csv(rows),
    }
}

fn run_bench(cmd: BenchCmd) -> Result<()> {
    match cmd {
        BenchCmd::Strategies { t, args } => emit_bench(&bench_strategies(&t, &args.options())?, args.format),
        BenchCmd::VerifyScaling { lookback, args } => {
            emit_bench(&bench_verify_scaling(lookback, &args.options())?, args.format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Strategy(c) => run_strategy(c),
        Command::Knapsack(c) => run_knapsack(c),
        Command::Sat(c) => run_sat(c),
        Command::Momentum(c) => run_momentum(c),
        Command::Bench(c) => run_bench(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn lookback_list_splits_on_commas() {
        let cli = Cli::try_parse_from(["emhnp", "bench", "strategies", "--t", "2,3,4"]).unwrap();
        match cli.command {
            Command::Bench(BenchCmd::Strategies { t, .. }) => assert_eq!(t, [2, 3, 4]),
            _ => panic!("wrong subcommand"),
        }
    }
}
