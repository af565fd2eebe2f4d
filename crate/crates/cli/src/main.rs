use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use splitvote::amount::{format_amount, parse_amount, parse_signed};
use splitvote::closedform::{closed_form_power, lambert_w0, relaxed_for};
use splitvote::costs::CostScheme;
use splitvote::ingest::{load_snapshots, GasProfile, ProposalSnapshot};
use splitvote::optimizer::{cost_adjusted_lower_bound, optimal_split, plutocracy_bound};
use splitvote::report::{
    analyze_protocol, emit, log_grid, per_dollar_curve, transition_grid, AnalysisParams, AnalysisReport, Emit, Format,
};
use splitvote::rules::VotingRule;

mod config;

use config::AnalyzeConfig;

/// Sybil-split analysis of wallet-based DAO voting rules.
#[derive(Debug, Parser)]
#[command(name = "splitvote", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay governance proposals and price the cheapest Sybil attack on each.
    Analyze(AnalyzeArgs),
    /// Votes per dollar for an honest holder and for the optimal splitter.
    Curve(CurveArgs),
    /// Optimal split of a single budget.
    Optimal(OptimalArgs),
    /// Inspect numerical building blocks.
    #[command(subcommand)]
    Debug(DebugCommand),
}

fn amount(text: &str) -> Result<f64, String> {
    parse_amount(text).map_err(|e| e.to_string())
}

fn signed(text: &str) -> Result<f64, String> {
    parse_signed(text).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Voting rule: linear, quadratic, log or power:<beta>. Repeatable.
    #[arg(long = "rule")]
    rules: Vec<VotingRule>,
    /// Snapshot JSON file. Repeatable; proposals are grouped by protocol.
    #[arg(long = "snapshots")]
    snapshots: Vec<PathBuf>,
    /// JSON config supplying any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<Format>,
    /// Minimum balance m a wallet needs to vote, in tokens.
    #[arg(long, value_parser = amount)]
    min_balance: Option<f64>,
    /// One-off setup cost p, in tokens.
    #[arg(long, value_parser = amount)]
    setup_cost: Option<f64>,
    /// Gas used to fund one extra wallet, replacing the per-chain default.
    #[arg(long, requires = "vote_gas")]
    split_gas: Option<u64>,
    /// Gas used to cast one vote, replacing the per-chain default.
    #[arg(long, requires = "split_gas")]
    vote_gas: Option<u64>,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Minimum balance m.
    #[arg(long = "m", visible_alias = "min-balance", value_parser = amount, default_value = "0")]
    min_balance: f64,
    /// Per-wallet voting cost v.
    #[arg(long = "v", value_parser = amount, conflicts_with = "per_wallet")]
    vote_cost: Option<f64>,
    /// Per-wallet split cost s.
    #[arg(long = "s", value_parser = amount, conflicts_with = "per_wallet")]
    split_cost: Option<f64>,
    /// Combined per-wallet cost c = v + s.
    #[arg(long = "c", value_parser = amount)]
    per_wallet: Option<f64>,
    /// One-off setup cost p.
    #[arg(long = "p", visible_alias = "setup-cost", value_parser = amount, default_value = "0")]
    setup_cost: f64,
}

impl CostArgs {
    fn scheme(&self) -> Result<CostScheme> {
        let (v, s) = match self.per_wallet {
            Some(c) => (c, 0.0),
            None => (self.vote_cost.unwrap_or(0.0), self.split_cost.unwrap_or(0.0)),
        };
        Ok(CostScheme::new(self.min_balance, v, self.setup_cost, s)?)
    }
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long)]
    rule: VotingRule,
    #[command(flatten)]
    costs: CostArgs,
    /// Token price in USD.
    #[arg(long, value_parser = amount, default_value = "1")]
    token_usd: f64,
    /// Smallest budget, in USD.
    #[arg(long, value_parser = amount, default_value = "1")]
    from: f64,
    /// Largest budget, in USD.
    #[arg(long, value_parser = amount, default_value = "1000000")]
    to: f64,
    /// Evenly log-spaced points instead of the adaptive grid.
    #[arg(long)]
    points: Option<usize>,
    /// Double the per-wallet cost before computing the curve.
    #[arg(long)]
    double_c: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct OptimalArgs {
    #[arg(long)]
    rule: VotingRule,
    #[command(flatten)]
    costs: CostArgs,
    /// Attacker budget in tokens.
    #[arg(long, value_parser = amount)]
    budget: f64,
}

#[derive(Debug, Subcommand)]
enum DebugCommand {
    /// Principal branch of the Lambert W function.
    Lambert {
        #[arg(value_parser = signed, allow_hyphen_values = true)]
        z: f64,
    },
    /// Optimum and every bound for one instance.
    Bounds(OptimalArgs),
}

/// Four significant figures, without exponent for ordinary magnitudes.
fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&magnitude) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - magnitude).max(0) as usize;
    let scale = 10f64.powi(3 - magnitude);
    format!("{:.*}", decimals, (x * scale).round() / scale)
}

fn write_output<T: Emit + ?Sized>(item: &T, format: Format, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => emit(item, format, path)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            item.write_to(format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn group_by_protocol(snapshots: Vec<ProposalSnapshot>) -> Vec<Vec<ProposalSnapshot>> {
    let mut groups: Vec<Vec<ProposalSnapshot>> = Vec::new();
    for snap in snapshots {
        match groups.iter_mut().find(|g| g[0].protocol == snap.protocol) {
            Some(group) => group.push(snap),
            None => groups.push(vec![snap]),
        }
    }
    groups
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let config = match &args.config {
        Some(path) => AnalyzeConfig::load(path)?,
        None => AnalyzeConfig::default(),
    };

    let rules = if args.rules.is_empty() {
        config
            .rules
            .iter()
            .map(|r| r.parse::<VotingRule>().with_context(|| format!("config rule `{r}`")))
            .collect::<Result<Vec<_>>>()?
    } else {
        args.rules
    };
    let files = if args.snapshots.is_empty() {
        config.snapshots
    } else {
        args.snapshots
    };
    if rules.is_empty() {
        bail!("no voting rule given (use --rule or a config file)");
    }
    if files.is_empty() {
        bail!("no snapshot file given (use --snapshots or a config file)");
    }
    let format = match (args.format, &config.format) {
        (Some(f), _) => f,
        (None, Some(text)) => text.parse().map_err(anyhow::Error::msg)?,
        (None, None) => Format::Csv,
    };
    let from_config = |text: &Option<String>, name: &str| -> Result<f64> {
        match text {
            Some(t) => parse_amount(t).with_context(|| format!("config {name}")),
            None => Ok(0.0),
        }
    };
    let min_balance = match args.min_balance {
        Some(m) => m,
        None => from_config(&config.min_balance, "min_balance")?,
    };
    let setup_cost = match args.setup_cost {
        Some(p) => p,
        None => from_config(&config.setup_cost, "setup_cost")?,
    };
    let gas_override = match (args.split_gas, args.vote_gas) {
        (Some(split), Some(vote)) => Some(GasProfile::new(split, vote)?),
        _ => config.gas,
    };
    let params = AnalysisParams {
        gas_override,
        min_balance,
        setup_cost,
    };

    let mut snapshots = Vec::new();
    for file in &files {
        snapshots.extend(load_snapshots(file)?);
    }
    let groups = group_by_protocol(snapshots);

    let mut reports: Vec<AnalysisReport> = Vec::new();
    let mut failed = 0usize;
    for rule in &rules {
        for group in &groups {
            let protocol = &group[0].protocol;
            match analyze_protocol(group, rule, &params) {
                Ok(report) => {
                    for failure in &report.failures {
                        eprintln!("failed: {protocol} {rule} {}: {}", failure.proposal_id, failure.reason);
                    }
                    failed += report.failures.len();
                    reports.push(report);
                }
                Err(err) => {
                    eprintln!("failed: {protocol} {rule}: {err}");
                    failed += group.len();
                }
            }
        }
    }

    write_output(reports.as_slice(), format, args.out.as_ref())?;
    for report in &reports {
        eprintln!(
            "{} {}: honest ${} vs attacker ${} (x{})",
            report.protocol,
            report.rule,
            sig4(report.mean_honest_usd),
            sig4(report.mean_attacker_usd),
            sig4(report.amplification_of_means()),
        );
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn curve(args: CurveArgs) -> Result<ExitCode> {
    let mut costs = args.costs.scheme()?;
    if args.double_c {
        costs = costs.scale_per_wallet(2.0)?;
    }
    let (from, to) = (args.from / args.token_usd, args.to / args.token_usd);
    let grid = match args.points {
        Some(points) => log_grid(from, to, points)?,
        None => transition_grid(&args.rule, &costs, from, to)?,
    };
    let points = per_dollar_curve(&args.rule, &costs, args.token_usd, &grid)?;
    write_output(points.as_slice(), args.format, args.out.as_ref())?;
    if let Some(first) = points.first() {
        eprintln!("kappa = {} votes per USD", sig4(first.kappa));
    }
    Ok(ExitCode::SUCCESS)
}

fn optimal(args: OptimalArgs) -> Result<ExitCode> {
    let costs = args.costs.scheme()?;
    let plan = optimal_split(&args.rule, &costs, args.budget)?;
    let relaxed = relaxed_for(&args.rule, &costs)?;
    println!("wallets: {}", plan.wallets);
    println!("per-wallet balance: {}", sig4(plan.per_wallet));
    println!("total power: {}", sig4(plan.total_power));
    println!("kappa: {}", sig4(relaxed.kappa));
    match closed_form_power(&args.rule, &costs, args.budget) {
        Ok(v) => println!("closed form: {}", sig4(v)),
        Err(err) => println!("closed form: n/a ({err})"),
    }
    println!("min balance binding: {}", if plan.binding_min { "yes" } else { "no" });
    Ok(ExitCode::SUCCESS)
}

fn debug(command: DebugCommand) -> Result<ExitCode> {
    match command {
        DebugCommand::Lambert { z } => {
            let w = lambert_w0(z)?;
            println!("W0({}) = {}", format_amount(z), format_amount(w));
            println!("residual = {:e}", w * w.exp() - z);
        }
        DebugCommand::Bounds(args) => {
            let costs = args.costs.scheme()?;
            let plan = optimal_split(&args.rule, &costs, args.budget)?;
            let relaxed = relaxed_for(&args.rule, &costs)?;
            println!(
                "optimum: {} with {} wallets",
                format_amount(plan.total_power),
                plan.wallets
            );
            println!(
                "upper bound kappa (a - p): {}",
                format_amount(relaxed.kappa * costs.usable_budget(args.budget))
            );
            match cost_adjusted_lower_bound(&args.rule, &costs, args.budget) {
                Ok(v) => println!("chunk lower bound: {}", format_amount(v)),
                Err(err) => println!("chunk lower bound: n/a ({err})"),
            }
            match plutocracy_bound(&args.rule, &costs) {
                Ok(bound) => {
                    println!(
                        "linear certificate: alpha = {}, from a >= {}",
                        format_amount(bound.alpha),
                        format_amount(bound.a0)
                    );
                    if let Some(v) = bound.certify(args.budget) {
                        println!("alpha a: {}", format_amount(v));
                    }
                }
                Err(err) => println!("linear certificate: n/a ({err})"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Curve(args) => curve(args),
        Command::Optimal(args) => optimal(args),
        Command::Debug(command) => debug(command),
    }
}
