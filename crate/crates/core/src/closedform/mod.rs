//! Relaxed optimization, where the wallet count may take any positive real
//! value.
//!
//! Writing the per-wallet balance as `x = A/n - c` turns the attacker's
//! power `n f(A/n - c)` into `A * g(x)` with the votes-per-token curve
//! `g(x) = f(x) / (x + c)`. The relaxed optimum is therefore `A * kappa`
//! where `kappa = sup_{x >= m} g(x)`, and for the concave rules the
//! maximizer solves `f'(x)(x + c) = f(x)` in closed form.

mod lambert;

use std::f64::consts::E;

use thiserror::Error;

pub use lambert::{lambert_w0, LambertError};

use crate::costs::CostScheme;
use crate::rules::VotingRule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("per-dollar curve undefined at x + c = 0")]
    ZeroDenominator,
    #[error("x and c must be finite and nonnegative (x = {x}, c = {c})")]
    Domain { x: f64, c: f64 },
    #[error("{0} has no finite maximizer without a per-wallet cost or minimum balance")]
    Unbounded(VotingRule),
    #[error("minimum balance {min_balance} binds above the unconstrained optimum {w_star}; use the integer optimizer")]
    Constrained { w_star: f64, min_balance: f64 },
    #[error("budget {budget} does not cover the setup cost {setup_cost}")]
    InsufficientBudget { budget: f64, setup_cost: f64 },
    #[error(transparent)]
    Lambert(#[from] LambertError),
}

/// Below this distance from `c = 1` the logarithmic closed form is replaced
/// by its limit (`w* = e - 1`, `kappa = 1/e`).
const LOG_SINGULARITY_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedOptimum {
    /// Maximizer of `g` on `[m, inf)`; `+inf` for the linear rule.
    pub w_star: f64,
    /// Maximizer of `g` on `[0, inf)`, before the minimum balance is applied.
    pub unconstrained_w_star: f64,
    /// `sup_{x >= m} g(x)`.
    pub kappa: f64,
    /// Relaxed `V* / A`; equal to `kappa`.
    pub v_star_per_a: f64,
    /// The supremum sits at `x = m`.
    pub constrained: bool,
}

impl RelaxedOptimum {
    /// Relaxed wallet count `A / (w* + c)`, or `0` when `w*` is infinite.
    pub fn wallet_count(&self, usable_budget: f64, per_wallet_cost: f64) -> f64 {
        if self.w_star.is_finite() {
            usable_budget / (self.w_star + per_wallet_cost)
        } else {
            0.0
        }
    }
}

/// Votes per token spent, `g(x) = f(x) / (x + c)`, for a wallet holding `x`
/// tokens after paying `c`.
pub fn per_dollar(rule: &VotingRule, c: f64, x: f64) -> Result<f64, ClosedFormError> {
    if !(x.is_finite() && c.is_finite() && x >= 0.0 && c >= 0.0) {
        return Err(ClosedFormError::Domain { x, c });
    }
    if x + c == 0.0 {
        return Err(ClosedFormError::ZeroDenominator);
    }
    Ok(rule.value(x) / (x + c))
}

/// Unconstrained maximizer of `g` from the first-order condition.
fn unconstrained_w_star(rule: &VotingRule, c: f64) -> Result<f64, ClosedFormError> {
    Ok(match rule {
        VotingRule::Linear => f64::INFINITY,
        VotingRule::Quadratic => c,
        VotingRule::Power(beta) => {
            let beta = beta.get();
            beta * c / (1.0 - beta)
        }
        VotingRule::Logarithmic => {
            if (c - 1.0).abs() < LOG_SINGULARITY_BAND {
                E - 1.0
            } else {
                let y = lambert_w0((c - 1.0) / E)?;
                (c - 1.0) / y - 1.0
            }
        }
    })
}

/// Maximizer and value of `g` over `x >= m`.
pub fn relaxed_optimum(rule: &VotingRule, c: f64, m: f64) -> Result<RelaxedOptimum, ClosedFormError> {
    if !(c.is_finite() && m.is_finite() && c >= 0.0 && m >= 0.0) {
        return Err(ClosedFormError::Domain { x: m, c });
    }
    let free = unconstrained_w_star(rule, c)?;

    if let VotingRule::Linear = rule {
        return Ok(RelaxedOptimum {
            w_star: f64::INFINITY,
            unconstrained_w_star: f64::INFINITY,
            kappa: 1.0,
            v_star_per_a: 1.0,
            constrained: false,
        });
    }

    let (w_star, constrained) = if free < m { (m, true) } else { (free, false) };
    if w_star + c == 0.0 {
        return Err(ClosedFormError::Unbounded(*rule));
    }
    let kappa = per_dollar(rule, c, w_star)?;
    Ok(RelaxedOptimum {
        w_star,
        unconstrained_w_star: free,
        kappa,
        v_star_per_a: kappa,
        constrained,
    })
}

/// Relaxed optimum for a full cost scheme.
pub fn relaxed_for(rule: &VotingRule, costs: &CostScheme) -> Result<RelaxedOptimum, ClosedFormError> {
    relaxed_optimum(rule, costs.per_wallet_cost(), costs.min_balance())
}

/// Worst-case Sybil power from the closed-form table rows:
///
/// | rule       | `V*`                                  |
/// |------------|---------------------------------------|
/// | linear     | `A`                                   |
/// | quadratic  | `A / (2 sqrt(c))`                     |
/// | power      | `A beta^beta (1-beta)^(1-beta) / c^(1-beta)` |
/// | log        | `A W0((c-1)/e) / (c-1)`               |
///
/// with `A = a - p` and `c = v + s`. Only valid while the minimum balance
/// is slack.
pub fn closed_form_power(rule: &VotingRule, costs: &CostScheme, budget: f64) -> Result<f64, ClosedFormError> {
    let usable = costs.usable_budget(budget);
    if usable < 0.0 {
        return Err(ClosedFormError::InsufficientBudget {
            budget,
            setup_cost: costs.setup_cost(),
        });
    }
    let c = costs.per_wallet_cost();
    let optimum = relaxed_for(rule, costs)?;
    if optimum.constrained {
        return Err(ClosedFormError::Constrained {
            w_star: optimum.unconstrained_w_star,
            min_balance: costs.min_balance(),
        });
    }
    Ok(match rule {
        VotingRule::Linear => usable,
        VotingRule::Quadratic => usable / (2.0 * c.sqrt()),
        VotingRule::Power(beta) => {
            let beta = beta.get();
            usable * beta.powf(beta) * (1.0 - beta).powf(1.0 - beta) / c.powf(1.0 - beta)
        }
        VotingRule::Logarithmic => {
            if (c - 1.0).abs() < LOG_SINGULARITY_BAND {
                usable / E
            } else {
                usable * lambert_w0((c - 1.0) / E)? / (c - 1.0)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(beta: f64) -> VotingRule {
        VotingRule::power(beta).unwrap()
    }

    /// Grid maximization of `g` over `(0, 100]`.
    fn grid_sup(rule: &VotingRule, c: f64) -> (f64, f64) {
        let mut best = (0.0, f64::MIN);
        let mut i = 1u64;
        while (i as f64) * 1e-4 <= 100.0 {
            let x = i as f64 * 1e-4;
            let g = rule.value(x) / (x + c);
            if g > best.1 {
                best = (x, g);
            }
            i += 1;
        }
        best
    }

    #[test]
    fn per_dollar_examples() {
        assert_eq!(per_dollar(&VotingRule::Quadratic, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(per_dollar(&VotingRule::Quadratic, 1.0, 4.0).unwrap(), 0.4);
        assert_eq!(per_dollar(&VotingRule::Linear, 0.0, 7.0).unwrap(), 1.0);
        assert_eq!(
            per_dollar(&VotingRule::Linear, 0.0, 0.0),
            Err(ClosedFormError::ZeroDenominator)
        );
    }

    #[test]
    fn relaxed_examples_match_grid_search() {
        let q = relaxed_optimum(&VotingRule::Quadratic, 1.0, 0.0).unwrap();
        assert!((q.w_star - 1.0).abs() < 1e-15 && (q.kappa - 0.5).abs() < 1e-15);
        let (gx, gk) = grid_sup(&VotingRule::Quadratic, 1.0);
        assert!((gx - 1.0).abs() < 1e-3 && (gk - q.kappa).abs() < 1e-6);

        let p = relaxed_optimum(&power(0.25), 1.0, 0.0).unwrap();
        assert!((p.w_star - 1.0 / 3.0).abs() < 1e-15);
        // 0.25^0.25 * 0.75^0.75
        assert!((p.kappa - 0.569_876_764_238_694_5).abs() < 1e-12);
        let (_, gk) = grid_sup(&power(0.25), 1.0);
        assert!((gk - p.kappa).abs() < 1e-6);

        let l = relaxed_optimum(&VotingRule::Logarithmic, 1.0, 0.0).unwrap();
        assert!((l.w_star - (E - 1.0)).abs() < 1e-15);
        assert!((l.kappa - 1.0 / E).abs() < 1e-15);
        let (_, gk) = grid_sup(&VotingRule::Logarithmic, 1.0);
        assert!((gk - l.kappa).abs() < 1e-6);
    }

    #[test]
    fn minimum_balance_binds() {
        let o = relaxed_optimum(&VotingRule::Quadratic, 1.0, 2.0).unwrap();
        assert!(o.constrained);
        assert_eq!(o.w_star, 2.0);
        assert!((o.kappa - 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert_eq!(o.unconstrained_w_star, 1.0);
    }

    #[test]
    fn linear_reports_infinite_maximizer() {
        let o = relaxed_optimum(&VotingRule::Linear, 1.0, 0.0).unwrap();
        assert!(o.w_star.is_infinite());
        assert_eq!(o.kappa, 1.0);
        assert!(!o.constrained);
    }

    #[test]
    fn zero_cost_needs_minimum_balance() {
        assert_eq!(
            relaxed_optimum(&VotingRule::Quadratic, 0.0, 0.0),
            Err(ClosedFormError::Unbounded(VotingRule::Quadratic))
        );
        let o = relaxed_optimum(&VotingRule::Quadratic, 0.0, 4.0).unwrap();
        assert!(o.constrained);
        assert_eq!(o.kappa, 0.5);
        let log = relaxed_optimum(&VotingRule::Logarithmic, 0.0, 1.0).unwrap();
        assert!((log.kappa - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kappa_equals_g_at_w_star() {
        for rule in [VotingRule::Quadratic, power(0.25), power(0.75), VotingRule::Logarithmic] {
            for c in [0.01, 0.25, 0.999_999_99, 1.0, 1.5, 4.0, 1e3] {
                let o = relaxed_optimum(&rule, c, 0.0).unwrap();
                let g = rule.value(o.w_star) / (o.w_star + c);
                assert!((o.kappa - g).abs() <= 1e-12 * g, "{rule} c={c}");
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let v1 = CostScheme::per_wallet(1.0).unwrap();
        assert_eq!(closed_form_power(&VotingRule::Quadratic, &v1, 100.0).unwrap(), 50.0);
        let p = closed_form_power(&power(0.25), &v1, 100.0).unwrap();
        assert!((p - 56.987_676_423_869_45).abs() < 1e-9);
        let v2 = CostScheme::per_wallet(2.0).unwrap();
        let l = closed_form_power(&VotingRule::Logarithmic, &v2, 100.0).unwrap();
        // 100 * W0(1/e), W0(1/e) by bisection
        assert!((l - 27.846_454_276_107_38).abs() < 1e-9);
    }

    #[test]
    fn closed_form_rejects_binding_minimum() {
        let c = CostScheme::new(10.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            closed_form_power(&VotingRule::Quadratic, &c, 100.0),
            Err(ClosedFormError::Constrained { .. })
        ));
    }

    #[test]
    fn closed_form_agrees_with_relaxed_kappa() {
        for rule in [VotingRule::Quadratic, power(0.3), VotingRule::Logarithmic] {
            for c in [0.1, 0.7, 1.0, 2.5, 40.0] {
                let scheme = CostScheme::new(0.0, c, 3.0, 0.0).unwrap();
                let cf = closed_form_power(&rule, &scheme, 1003.0).unwrap();
                let relaxed = relaxed_for(&rule, &scheme).unwrap().kappa * 1000.0;
                assert!((cf - relaxed).abs() <= 1e-11 * relaxed, "{rule} c={c}");
            }
        }
    }
}
