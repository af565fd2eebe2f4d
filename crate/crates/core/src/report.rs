//! Per-protocol attack-cost tables and votes-per-dollar curves.
//!
//! [`analyze_protocol`] replays every proposal of a protocol: it prices gas
//! in tokens, totals the honest voting power, and finds the cheapest budget
//! with which an optimally splitting attacker matches it. The amplification
//! factor compares that budget with the cost of buying the honest tokens
//! outright, which is what the attack costs under linear voting.
//!
//! [`per_dollar_curve`] tabulates honest and attacker votes per dollar over
//! a budget grid. The attacker curve is integer-optimal, so it rises and
//! falls between wallet openings while staying under the `kappa` plateau.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closedform::{relaxed_for, relaxed_optimum, ClosedFormError};
use crate::costs::{CostError, CostScheme};
use crate::ingest::{default_gas_profile, gas_to_cost_scheme, honest_power, GasProfile, IngestError, ProposalSnapshot};
use crate::optimizer::{min_budget_for_power, optimal_split, OptimizerError};
use crate::rules::VotingRule;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no proposals to analyze")]
    NoProposals,
    #[error("snapshots mix protocols `{0}` and `{1}`")]
    MixedProtocols(String, String),
    #[error("every proposal failed: {0}")]
    AllFailed(String),
    #[error("budgets must be positive, finite and ascending (at index {0})")]
    BadBudgets(usize),
    #[error("token price must be positive, got {0}")]
    BadPrice(f64),
    #[error("grid needs 0 < from < to and at least two points")]
    BadGrid,
    #[error("minimum balance does not bind (relaxed optimum {w_star} >= m = {min_balance}); use the closed form")]
    NotBinding { w_star: f64, min_balance: f64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// One CSV row of an analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRow {
    pub protocol: String,
    pub rule: VotingRule,
    pub proposal_id: String,
    pub honest_power: f64,
    /// Cost of the honest voters' tokens bought outright: the linear-voting
    /// attack cost.
    pub honest_usd: f64,
    pub attacker_budget_tokens: f64,
    pub attacker_usd: f64,
    pub amplification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalFailure {
    pub proposal_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub protocol: String,
    pub rule: VotingRule,
    pub per_proposal: Vec<ProposalRow>,
    pub failures: Vec<ProposalFailure>,
    pub mean_honest_usd: f64,
    pub mean_attacker_usd: f64,
    /// Arithmetic mean of the per-proposal amplification factors.
    pub mean_amplification: f64,
}

impl AnalysisReport {
    /// Ratio of mean linear cost to mean attacker cost, the way a summary
    /// table quotes a protocol's multiplier.
    pub fn amplification_of_means(&self) -> f64 {
        self.mean_honest_usd / self.mean_attacker_usd
    }
}

/// Knobs shared by every proposal of an analysis run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisParams {
    /// Replaces the per-chain default gas profile when set.
    pub gas_override: Option<GasProfile>,
    pub min_balance: f64,
    pub setup_cost: f64,
}

fn analyze_proposal(
    snapshot: &ProposalSnapshot,
    rule: &VotingRule,
    params: &AnalysisParams,
) -> Result<ProposalRow, ReportError> {
    let profile = params
        .gas_override
        .unwrap_or_else(|| default_gas_profile(snapshot.chain));
    let costs = gas_to_cost_scheme(snapshot, &profile, params.min_balance, params.setup_cost)?;
    let honest = honest_power(rule, snapshot);
    let total_weight = snapshot.total_weight();

    // splitting never pays under linear voting, so the attacker simply buys
    // the honest total outright
    let budget = match rule {
        VotingRule::Linear => total_weight,
        _ => min_budget_for_power(rule, &costs, honest)?,
    };

    let honest_usd = total_weight * snapshot.token_usd;
    let attacker_usd = budget * snapshot.token_usd;
    Ok(ProposalRow {
        protocol: snapshot.protocol.clone(),
        rule: *rule,
        proposal_id: snapshot.proposal_id.clone(),
        honest_power: honest,
        honest_usd,
        attacker_budget_tokens: budget,
        attacker_usd,
        amplification: honest_usd / attacker_usd,
    })
}

/// Attack cost of every proposal of one protocol under `rule`.
///
/// Proposals that cannot be analyzed are listed in
/// [`AnalysisReport::failures`]; the call only fails outright when the input
/// is empty or inconsistent, or when no proposal succeeds.
pub fn analyze_protocol(
    snapshots: &[ProposalSnapshot],
    rule: &VotingRule,
    params: &AnalysisParams,
) -> Result<AnalysisReport, ReportError> {
    let protocol = snapshots.first().ok_or(ReportError::NoProposals)?.protocol.clone();
    if let Some(other) = snapshots.iter().find(|s| s.protocol != protocol) {
        return Err(ReportError::MixedProtocols(protocol, other.protocol.clone()));
    }

    let mut per_proposal = Vec::with_capacity(snapshots.len());
    let mut failures = Vec::new();
    for snapshot in snapshots {
        match analyze_proposal(snapshot, rule, params) {
            Ok(row) => per_proposal.push(row),
            Err(err) => failures.push(ProposalFailure {
                proposal_id: snapshot.proposal_id.clone(),
                reason: err.to_string(),
            }),
        }
    }
    if per_proposal.is_empty() {
        let ids: Vec<_> = failures
            .iter()
            .map(|f| format!("{} ({})", f.proposal_id, f.reason))
            .collect();
        return Err(ReportError::AllFailed(ids.join("; ")));
    }

    let mean = |field: fn(&ProposalRow) -> f64| per_proposal.iter().map(field).sum::<f64>() / per_proposal.len() as f64;
    Ok(AnalysisReport {
        protocol,
        rule: *rule,
        mean_honest_usd: mean(|r| r.honest_usd),
        mean_attacker_usd: mean(|r| r.attacker_usd),
        mean_amplification: mean(|r| r.amplification),
        per_proposal,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget_usd: f64,
    pub honest_per_dollar: f64,
    /// `None` when the budget cannot fund a single wallet.
    pub attacker_per_dollar: Option<f64>,
    pub kappa: f64,
}

/// Votes per USD for an honest single wallet and for the Sybil-optimal
/// attacker at each budget (in tokens).
pub fn per_dollar_curve(
    rule: &VotingRule,
    costs: &CostScheme,
    token_usd: f64,
    budgets: &[f64],
) -> Result<Vec<CurvePoint>, ReportError> {
    if !(token_usd.is_finite() && token_usd > 0.0) {
        return Err(ReportError::BadPrice(token_usd));
    }
    for (i, a) in budgets.iter().enumerate() {
        if !(a.is_finite() && *a > 0.0) || (i > 0 && budgets[i - 1] > *a) {
            return Err(ReportError::BadBudgets(i));
        }
    }
    let kappa = relaxed_for(rule, costs)?.kappa / token_usd;
    Ok(budgets
        .iter()
        .map(|&a| {
            let usd = a * token_usd;
            CurvePoint {
                budget_usd: usd,
                honest_per_dollar: rule.value(a) / usd,
                attacker_per_dollar: optimal_split(rule, costs, a).ok().map(|plan| plan.total_power / usd),
                kappa,
            }
        })
        .collect())
}

/// `points` log-spaced budgets from `from` to `to` inclusive.
pub fn log_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, ReportError> {
    if !(from > 0.0 && to > from && to.is_finite()) || points < 2 {
        return Err(ReportError::BadGrid);
    }
    let (lo, hi) = (from.ln(), to.ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| (lo + step * i as f64).exp()).collect();
    grid[0] = from;
    grid[points - 1] = to;
    Ok(grid)
}

/// Log grid that is dense (400 points per decade) while the optimal wallet
/// count is small enough for individual splits to show, and sparse (50 per
/// decade) elsewhere.
pub fn transition_grid(rule: &VotingRule, costs: &CostScheme, from: f64, to: f64) -> Result<Vec<f64>, ReportError> {
    const DENSE: f64 = 400.0;
    const SPARSE: f64 = 50.0;
    const VISIBLE_SPLITS: f64 = 1000.0;

    if !(from > 0.0 && to > from && to.is_finite()) {
        return Err(ReportError::BadGrid);
    }
    let relaxed = relaxed_for(rule, costs)?;
    let unit = if relaxed.w_star.is_finite() {
        relaxed.w_star + costs.per_wallet_cost()
    } else {
        0.0
    };
    let (dense_lo, dense_hi) = (costs.setup_cost() + unit, costs.setup_cost() + VISIBLE_SPLITS * unit);

    let mut grid = vec![from];
    let mut a = from;
    while a < to {
        let per_decade = if unit > 0.0 && a >= dense_lo * 0.5 && a <= dense_hi {
            DENSE
        } else {
            SPARSE
        };
        a *= 10f64.powf(1.0 / per_decade);
        grid.push(a.min(to));
    }
    Ok(grid)
}

/// Budgets at which `V*(a) / a` has a local maximum. With `n` wallets the
/// ratio is `f(w) / (w + c + p/n)`, so each wallet holds the relaxed optimum
/// for the effective cost `c + p/n` and `a = n (w_n + c) + p`. Such a point
/// is a local maximum of the curve only when `n` is the optimal wallet count
/// there; switches between counts are convex kinks of `V*` and never peaks.
/// At most `max_points` wallet counts are examined, log-thinned.
pub fn wave_peaks(
    rule: &VotingRule,
    costs: &CostScheme,
    from: f64,
    to: f64,
    max_points: usize,
) -> Result<Vec<f64>, ReportError> {
    let relaxed = relaxed_for(rule, costs)?;
    if !relaxed.w_star.is_finite() || max_points == 0 {
        return Ok(Vec::new());
    }
    let c = costs.per_wallet_cost();
    let p = costs.setup_cost();
    let m = costs.min_balance();
    let peak = |n: f64| -> Result<f64, ReportError> {
        let w = relaxed_optimum(rule, c + p / n, m)?.w_star;
        Ok(n * (w + c) + p)
    };
    // w_n shrinks towards w* as n grows, so n (w* + c) + p <= a_n <= n (w_1 + c) + p
    let widest = peak(1.0)? - p;
    let first = ((from - p) / widest).ceil().max(1.0);
    let last = ((to - p) / (relaxed.w_star + c)).floor();
    if last < first {
        return Ok(Vec::new());
    }
    let ratio = if last - first + 1.0 <= max_points as f64 {
        1.0
    } else {
        (last / first).powf(1.0 / max_points as f64)
    };
    let mut peaks = Vec::new();
    let mut n = first;
    while n <= last {
        let a = peak(n)?;
        if a > to {
            break;
        }
        if a >= from && optimal_split(rule, costs, a)?.wallets as f64 == n {
            peaks.push(a);
        }
        n = (n * ratio).floor().max(n + 1.0);
    }
    Ok(peaks)
}

/// Linear approximation `(a - p) f(m) / (m + v + s)` of the attacker's power
/// when the minimum balance binds.
pub fn binding_approximation(rule: &VotingRule, costs: &CostScheme, budget: f64) -> Result<f64, ReportError> {
    let relaxed = relaxed_for(rule, costs)?;
    let m = costs.min_balance();
    if relaxed.unconstrained_w_star >= m {
        return Err(ReportError::NotBinding {
            w_star: relaxed.unconstrained_w_star,
            min_balance: m,
        });
    }
    Ok(costs.usable_budget(budget) / (m + costs.per_wallet_cost()) * rule.value(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "protocol",
    "rule",
    "proposal_id",
    "honest_power",
    "honest_usd",
    "attacker_budget_tokens",
    "attacker_usd",
    "amplification",
];

pub const CURVE_COLUMNS: [&str; 4] = ["budget_usd", "honest_per_dollar", "attacker_per_dollar", "kappa"];

/// Something that can be written as CSV rows or a JSON document.
pub trait Emit {
    fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError>;
    fn write_json<W: Write>(&self, out: W) -> Result<(), ReportError>;

    fn write_to<W: Write>(&self, format: Format, out: W) -> Result<(), ReportError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }
}

impl Emit for [AnalysisReport] {
    fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        writer.write_record(REPORT_COLUMNS)?;
        for row in self.iter().flat_map(|r| &r.per_proposal) {
            writer.serialize(row)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    fn write_json<W: Write>(&self, mut out: W) -> Result<(), ReportError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n").map_err(csv::Error::from)?;
        Ok(())
    }
}

impl Emit for AnalysisReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        std::slice::from_ref(self).write_csv(out)
    }

    fn write_json<W: Write>(&self, out: W) -> Result<(), ReportError> {
        std::slice::from_ref(self).write_json(out)
    }
}

impl Emit for [CurvePoint] {
    fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        writer.write_record(CURVE_COLUMNS)?;
        for point in self {
            writer.serialize(point)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    fn write_json<W: Write>(&self, mut out: W) -> Result<(), ReportError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n").map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Writes `item` to `path`, replacing any existing file.
pub fn emit<T: Emit + ?Sized>(item: &T, format: Format, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let io_err = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    item.write_to(format, &mut out)?;
    out.flush().map_err(io_err)
}
