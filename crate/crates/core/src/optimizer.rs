//! Integer-optimal Sybil splits.
//!
//! For a fixed wallet count `n` the attacker's best move is an even split
//! that spends the whole budget, so each wallet holds
//! `w(n) = (a - p)/n - v - s` and the total power is `h(n) = n f(w(n))`.
//! What remains is a one-dimensional search over the integer `n`, bounded
//! by the minimum balance. This module also carries the linear lower bounds
//! on the achievable power, a brute-force oracle over uneven allocations,
//! and the inverse problem of finding the cheapest budget that reaches a
//! target power.

use thiserror::Error;

use crate::closedform::{relaxed_for, ClosedFormError};
use crate::costs::CostScheme;
use crate::rules::VotingRule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("budget {budget} cannot fund a single wallet (needs at least {needed})")]
    Infeasible { budget: f64, needed: f64 },
    #[error("{wallets} wallets violate the minimum balance; at most {max} are feasible")]
    TooManyWallets { wallets: u64, max: u64 },
    #[error("wallet count must be at least 1")]
    NoWallets,
    #[error("allocation violates {0}")]
    InvalidAllocation(&'static str),
    #[error("instance too large for the brute-force oracle ({wallets} wallets, grid {grid})")]
    OracleTooLarge { wallets: u64, grid: usize },
    #[error("chunk size must be positive and yield positive votes (chunk {chunk})")]
    TrivialChunk { chunk: f64 },
    #[error("budget {budget} is below the chunk size {chunk}")]
    BudgetBelowChunk { budget: f64, chunk: f64 },
    #[error("target power must be finite and positive, got {0}")]
    InvalidTarget(f64),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

pub type Result<T> = std::result::Result<T, OptimizerError>;

const REL_TOL: f64 = 1e-9;
const ABS_TOL: f64 = 1e-12;

/// Largest instance accepted by [`brute_force_oracle`].
pub const ORACLE_MAX_WALLETS: u64 = 12;
pub const ORACLE_MAX_GRID: usize = 50;

/// Above this many feasible wallet counts an exhaustive scan is skipped.
const FULL_SCAN_LIMIT: u64 = 1_000_000;

fn strictly_better(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + REL_TOL * incumbent.abs() + ABS_TOL
}

/// An attacker's chosen split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackPlan {
    pub wallets: u64,
    /// Net balance of every wallet, `(a - p)/n - v - s`.
    pub per_wallet: f64,
    pub total_power: f64,
    pub budget: f64,
    /// The unconstrained relaxed optimum lies below the minimum balance, so
    /// wallets are pushed up to roughly `m`.
    pub binding_min: bool,
}

/// Certified linear lower bound `V*(a) >= alpha * a` for all `a >= a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlutocracyBound {
    /// Vote-yield per token.
    pub alpha: f64,
    pub a0: f64,
    /// Net balance of each chunk wallet used by the certificate.
    pub chunk: f64,
}

impl PlutocracyBound {
    /// `alpha * a` when the bound applies at `budget`.
    pub fn certify(&self, budget: f64) -> Option<f64> {
        (budget >= self.a0).then_some(self.alpha * budget)
    }
}

/// Power of an even split over `wallets` wallets.
pub fn power_at(rule: &VotingRule, costs: &CostScheme, budget: f64, wallets: u64) -> Result<f64> {
    if wallets == 0 {
        return Err(OptimizerError::NoWallets);
    }
    if !costs.is_feasible(budget, wallets) {
        let max = costs.max_feasible_wallets(budget);
        if max == 0 {
            return Err(infeasible(costs, budget));
        }
        return Err(OptimizerError::TooManyWallets { wallets, max });
    }
    Ok(even_split_power(rule, costs, budget, wallets))
}

fn even_split_power(rule: &VotingRule, costs: &CostScheme, budget: f64, wallets: u64) -> f64 {
    wallets as f64 * rule.value(costs.per_wallet_balance(budget, wallets))
}

fn infeasible(costs: &CostScheme, budget: f64) -> OptimizerError {
    OptimizerError::Infeasible {
        budget,
        needed: costs.setup_cost() + costs.min_balance() + costs.per_wallet_cost(),
    }
}

/// Total power of an arbitrary allocation of net balances, one per wallet.
pub fn allocation_power(rule: &VotingRule, costs: &CostScheme, budget: f64, allocation: &[f64]) -> Result<f64> {
    if allocation.is_empty() {
        return Err(OptimizerError::NoWallets);
    }
    if allocation.iter().any(|w| !w.is_finite() || *w < costs.min_balance()) {
        return Err(OptimizerError::InvalidAllocation("the minimum balance"));
    }
    let spent = costs.setup_cost() + allocation.len() as f64 * costs.per_wallet_cost() + allocation.iter().sum::<f64>();
    if spent > budget * (1.0 + 1e-12) + ABS_TOL {
        return Err(OptimizerError::InvalidAllocation("the budget"));
    }
    Ok(allocation.iter().map(|&w| rule.value(w)).sum())
}

/// Integer-optimal split of `budget`. Ties go to the smaller wallet count.
///
/// `h(n)` is unimodal in `n` for every supported rule, so the optimum sits
/// next to the relaxed wallet count `A / (w* + c)`. The candidates around it
/// are checked against their neighbours before being accepted.
pub fn optimal_split(rule: &VotingRule, costs: &CostScheme, budget: f64) -> Result<AttackPlan> {
    let max_wallets = costs.max_feasible_wallets(budget);
    if max_wallets == 0 {
        return Err(infeasible(costs, budget));
    }
    let relaxed = relaxed_for(rule, costs)?;
    let target = relaxed.wallet_count(costs.usable_budget(budget), costs.per_wallet_cost());

    let clip = |n: f64| -> u64 {
        if n.is_nan() || n < 1.0 {
            1
        } else if n >= max_wallets as f64 {
            max_wallets
        } else {
            n as u64
        }
    };
    let mut candidates = vec![1, clip(target.floor()), clip(target.ceil()), max_wallets];
    candidates.sort_unstable();
    candidates.dedup();

    let power = |n: u64| even_split_power(rule, costs, budget, n);
    let mut best = pick_best(candidates.into_iter(), power);

    let neighbour_improves = |(n, value): (u64, f64)| {
        [
            n.checked_sub(1).filter(|&k| k >= 1),
            Some(n + 1).filter(|&k| k <= max_wallets),
        ]
        .into_iter()
        .flatten()
        .any(|k| strictly_better(power(k), value))
    };
    if neighbour_improves(best) {
        best = if max_wallets <= FULL_SCAN_LIMIT {
            pick_best(1..=max_wallets, power)
        } else {
            hill_climb(best, max_wallets, power)
        };
    }

    let (wallets, total_power) = best;
    Ok(AttackPlan {
        wallets,
        per_wallet: costs.per_wallet_balance(budget, wallets),
        total_power,
        budget,
        binding_min: relaxed.unconstrained_w_star < costs.min_balance(),
    })
}

fn pick_best(ns: impl Iterator<Item = u64>, power: impl Fn(u64) -> f64) -> (u64, f64) {
    let mut best: Option<(u64, f64)> = None;
    for n in ns {
        let value = power(n);
        match best {
            Some((_, incumbent)) if !strictly_better(value, incumbent) => {}
            _ => best = Some((n, value)),
        }
    }
    best.expect("at least one candidate")
}

fn hill_climb(start: (u64, f64), max_wallets: u64, power: impl Fn(u64) -> f64) -> (u64, f64) {
    let (mut n, mut value) = start;
    loop {
        if n > 1 && strictly_better(power(n - 1), value) {
            n -= 1;
        } else if n < max_wallets && strictly_better(power(n + 1), value) {
            n += 1;
        } else {
            return (n, value);
        }
        value = power(n);
    }
}

/// Exhaustive maximum of `sum f(w_i)` over every allocation whose balances
/// lie on the grid `m + j (a - m)/grid`, for every feasible wallet count.
///
/// Independent of the even-split reasoning used by [`optimal_split`]; meant
/// for validating it on small instances.
pub fn brute_force_oracle(rule: &VotingRule, costs: &CostScheme, budget: f64, grid: usize) -> Result<f64> {
    let max_wallets = costs.max_feasible_wallets(budget);
    if max_wallets > ORACLE_MAX_WALLETS || grid > ORACLE_MAX_GRID || grid == 0 {
        return Err(OptimizerError::OracleTooLarge {
            wallets: max_wallets,
            grid,
        });
    }
    if max_wallets == 0 {
        return Err(infeasible(costs, budget));
    }
    let m = costs.min_balance();
    let step = (budget - m) / grid as f64;
    let votes: Vec<f64> = (0..=grid).map(|j| rule.value(m + j as f64 * step)).collect();

    // best[u] = best total over k wallets using at most u grid steps above m
    let mut best = vec![0.0f64; grid + 1];
    let mut overall = f64::NEG_INFINITY;
    for wallets in 1..=max_wallets {
        let mut next = vec![f64::NEG_INFINITY; grid + 1];
        for (units, slot) in next.iter_mut().enumerate() {
            for (j, v) in votes.iter().enumerate().take(units + 1) {
                let total = v + best[units - j];
                if total > *slot {
                    *slot = total;
                }
            }
        }
        best = next;

        let spare = costs.usable_budget(budget) - wallets as f64 * (m + costs.per_wallet_cost());
        if spare < 0.0 {
            continue;
        }
        let units = ((spare / step + 1e-9).floor() as usize).min(grid);
        overall = overall.max(best[units]);
    }
    Ok(overall)
}

/// Power of `floor(a / chunk)` wallets holding `chunk` tokens each, a lower
/// bound on the attainable power when splitting is free.
pub fn sybil_lower_bound(rule: &VotingRule, chunk: f64, budget: f64) -> Result<f64> {
    let votes = rule.value(chunk.max(0.0));
    if !(chunk > 0.0) || !(votes > 0.0) {
        return Err(OptimizerError::TrivialChunk { chunk });
    }
    if budget < chunk {
        return Err(OptimizerError::BudgetBelowChunk { budget, chunk });
    }
    Ok((budget / chunk).floor() * votes)
}

/// Net balance per wallet used by the lower-bound certificates: the minimum
/// balance when there is one, otherwise the relaxed optimum (or `c` for the
/// linear rule, whose relaxed optimum is unbounded).
pub fn certificate_chunk(rule: &VotingRule, costs: &CostScheme) -> Result<f64> {
    if costs.min_balance() > 0.0 {
        return Ok(costs.min_balance());
    }
    let relaxed = relaxed_for(rule, costs)?;
    let chunk = if relaxed.w_star.is_finite() {
        relaxed.w_star
    } else {
        costs.per_wallet_cost()
    };
    if chunk > 0.0 {
        Ok(chunk)
    } else {
        Err(OptimizerError::TrivialChunk { chunk })
    }
}

/// Lower bound under a cost scheme: chunks of gross size `chunk + v + s`
/// carved out of `a - p`, each voting with `f(chunk)`.
pub fn cost_adjusted_lower_bound(rule: &VotingRule, costs: &CostScheme, budget: f64) -> Result<f64> {
    let chunk = certificate_chunk(rule, costs)?;
    let gross = chunk + costs.per_wallet_cost();
    let usable = costs.usable_budget(budget);
    if usable < gross {
        return Err(OptimizerError::BudgetBelowChunk {
            budget: usable,
            chunk: gross,
        });
    }
    Ok((usable / gross).floor() * rule.value(chunk))
}

/// Linear lower bound `V*(a) >= alpha a` from chunked splitting.
///
/// With gross chunk `m' = chunk + v + s`, `alpha = f(chunk) / (2 m')` and
/// the bound holds for every `a >= 2 (m' + p)`.
pub fn plutocracy_bound(rule: &VotingRule, costs: &CostScheme) -> Result<PlutocracyBound> {
    let chunk = certificate_chunk(rule, costs)?;
    let votes = rule.value(chunk);
    if !(votes > 0.0) {
        return Err(OptimizerError::TrivialChunk { chunk });
    }
    let gross = chunk + costs.per_wallet_cost();
    Ok(PlutocracyBound {
        alpha: votes / (2.0 * gross),
        a0: 2.0 * (gross + costs.setup_cost()),
        chunk,
    })
}

/// Smallest budget whose integer-optimal power reaches `target`, to within
/// `1e-9` relative. The returned budget always reaches the target.
pub fn min_budget_for_power(rule: &VotingRule, costs: &CostScheme, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(OptimizerError::InvalidTarget(target));
    }
    let reaches = |budget: f64| {
        optimal_split(rule, costs, budget)
            .map(|plan| plan.total_power >= target)
            .unwrap_or(false)
    };

    let mut lo = costs.setup_cost() + costs.min_balance() + costs.per_wallet_cost();
    if reaches(lo) {
        return Ok(lo);
    }
    let kappa = relaxed_for(rule, costs)?.kappa;
    let mut hi = lo + target / kappa;
    while !reaches(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
