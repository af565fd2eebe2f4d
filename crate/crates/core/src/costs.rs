//! Linear cost schemes imposed on top of a voting rule.
//!
//! All four frictions are token-denominated: a minimum voting balance `m`,
//! a per-wallet voting cost `v`, a one-off setup cost `p` paid whenever the
//! attacker runs the split flow, and a per-wallet splitting cost `s`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::amount::{format_amount, parse_amount, AmountError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("{field} must be finite and nonnegative, got {value}")]
    InvalidField { field: &'static str, value: f64 },
    #[error("at least one of min_balance, vote_cost, split_cost must be positive")]
    Frictionless,
    #[error("{field}: {source}")]
    Parse { field: &'static str, source: AmountError },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostScheme {
    min_balance: f64,
    vote_cost: f64,
    setup_cost: f64,
    split_cost: f64,
}

impl CostScheme {
    pub fn new(min_balance: f64, vote_cost: f64, setup_cost: f64, split_cost: f64) -> Result<Self, CostError> {
        for (field, value) in [
            ("min_balance", min_balance),
            ("vote_cost", vote_cost),
            ("setup_cost", setup_cost),
            ("split_cost", split_cost),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(CostError::InvalidField { field, value });
            }
        }
        if min_balance == 0.0 && vote_cost == 0.0 && split_cost == 0.0 {
            return Err(CostError::Frictionless);
        }
        Ok(CostScheme {
            min_balance,
            vote_cost,
            setup_cost,
            split_cost,
        })
    }

    /// Scheme with only a per-wallet cost `c`, booked as voting cost.
    pub fn per_wallet(c: f64) -> Result<Self, CostError> {
        CostScheme::new(0.0, c, 0.0, 0.0)
    }

    pub fn min_balance(&self) -> f64 {
        self.min_balance
    }

    pub fn vote_cost(&self) -> f64 {
        self.vote_cost
    }

    pub fn setup_cost(&self) -> f64 {
        self.setup_cost
    }

    pub fn split_cost(&self) -> f64 {
        self.split_cost
    }

    /// `c = v + s`, the cost every wallet pays on top of its balance.
    pub fn per_wallet_cost(&self) -> f64 {
        self.vote_cost + self.split_cost
    }

    /// Budget left for wallets after the setup cost.
    pub fn usable_budget(&self, budget: f64) -> f64 {
        budget - self.setup_cost
    }

    /// Net balance of each wallet when `budget` is split evenly over
    /// `wallets` wallets.
    pub fn per_wallet_balance(&self, budget: f64, wallets: u64) -> f64 {
        self.usable_budget(budget) / wallets as f64 - self.per_wallet_cost()
    }

    pub fn is_feasible(&self, budget: f64, wallets: u64) -> bool {
        wallets >= 1 && self.per_wallet_balance(budget, wallets) >= self.min_balance
    }

    /// Largest wallet count whose even split keeps every wallet at or above
    /// the minimum balance; `0` when not even one wallet is affordable.
    pub fn max_feasible_wallets(&self, budget: f64) -> u64 {
        let usable = self.usable_budget(budget);
        let unit = self.min_balance + self.per_wallet_cost();
        if !(usable > 0.0) || usable < unit {
            return 0;
        }
        let approx = (usable / unit).floor();
        if approx >= u64::MAX as f64 / 2.0 {
            return u64::MAX / 2;
        }
        // the float quotient can be off by one ulp either way
        let mut n = approx as u64;
        while n > 0 && !self.is_feasible(budget, n) {
            n -= 1;
        }
        while self.is_feasible(budget, n + 1) {
            n += 1;
        }
        n
    }

    pub fn with_min_balance(&self, min_balance: f64) -> Result<Self, CostError> {
        CostScheme::new(min_balance, self.vote_cost, self.setup_cost, self.split_cost)
    }

    /// Same scheme with both per-wallet costs multiplied by `factor`.
    pub fn scale_per_wallet(&self, factor: f64) -> Result<Self, CostError> {
        CostScheme::new(
            self.min_balance,
            self.vote_cost * factor,
            self.setup_cost,
            self.split_cost * factor,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct CostSchemeRepr {
    min_balance: String,
    vote_cost: String,
    setup_cost: String,
    split_cost: String,
}

impl TryFrom<CostSchemeRepr> for CostScheme {
    type Error = CostError;

    fn try_from(repr: CostSchemeRepr) -> Result<Self, Self::Error> {
        let field =
            |field: &'static str, text: &str| parse_amount(text).map_err(|source| CostError::Parse { field, source });
        CostScheme::new(
            field("min_balance", &repr.min_balance)?,
            field("vote_cost", &repr.vote_cost)?,
            field("setup_cost", &repr.setup_cost)?,
            field("split_cost", &repr.split_cost)?,
        )
    }
}

impl Serialize for CostScheme {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CostSchemeRepr {
            min_balance: format_amount(self.min_balance),
            vote_cost: format_amount(self.vote_cost),
            setup_cost: format_amount(self.setup_cost),
            split_cost: format_amount(self.split_cost),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CostScheme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = CostSchemeRepr::deserialize(deserializer)?;
        CostScheme::try_from(repr).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scheme(m: f64, v: f64, p: f64, s: f64) -> CostScheme {
        CostScheme::new(m, v, p, s).unwrap()
    }

    fn scan_max_wallets(c: &CostScheme, a: f64) -> u64 {
        (1..=10_000u64)
            .filter(|&n| (a - c.setup_cost()) / n as f64 - c.vote_cost() - c.split_cost() >= c.min_balance())
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn per_wallet_cost_excludes_setup() {
        assert_eq!(scheme(0.0, 1.0, 0.0, 0.0).per_wallet_cost(), 1.0);
        assert_eq!(scheme(0.0, 0.3, 5.0, 0.7).per_wallet_cost(), 1.0);
        assert_eq!(scheme(2.0, 0.0, 0.0, 0.0).per_wallet_cost(), 0.0);
    }

    #[test]
    fn max_feasible_examples() {
        assert_eq!(scheme(10.0, 1.0, 0.0, 0.0).max_feasible_wallets(100.0), 9);
        assert_eq!(scheme(0.0, 1.0, 0.0, 0.0).max_feasible_wallets(100.0), 100);
        assert_eq!(scheme(1.0, 1.0, 100.0, 0.0).max_feasible_wallets(50.0), 0);
    }

    #[test]
    fn invariants_rejected() {
        assert_eq!(CostScheme::new(0.0, 0.0, 5.0, 0.0), Err(CostError::Frictionless));
        assert!(matches!(
            CostScheme::new(-1.0, 1.0, 0.0, 0.0),
            Err(CostError::InvalidField {
                field: "min_balance",
                ..
            })
        ));
        assert!(CostScheme::new(0.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn json_keys_are_decimal_strings() {
        let c: CostScheme =
            serde_json::from_str(r#"{"min_balance":"2","vote_cost":"1.4","setup_cost":"0","split_cost":"0.52"}"#)
                .unwrap();
        assert_eq!(c, scheme(2.0, 1.4, 0.0, 0.52));
        let back: CostScheme = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let bad = serde_json::from_str::<CostScheme>(
            r#"{"min_balance":"x","vote_cost":"1","setup_cost":"0","split_cost":"0"}"#,
        );
        assert!(bad.unwrap_err().to_string().contains("min_balance"));
    }

    proptest! {
        #[test]
        fn max_feasible_matches_scan(
            m in 0.0f64..20.0, v in 0.01f64..5.0, p in 0.0f64..30.0, s in 0.0f64..5.0, a in 0.0f64..500.0
        ) {
            let c = scheme(m, v, p, s);
            let n = c.max_feasible_wallets(a);
            prop_assert_eq!(n, scan_max_wallets(&c, a));
            if n >= 1 {
                prop_assert!(c.per_wallet_balance(a, n) >= m);
                prop_assert!(c.per_wallet_balance(a, n + 1) < m);
            }
        }

        #[test]
        fn max_feasible_monotone(
            m in 0.0f64..20.0, v in 0.01f64..5.0, p in 0.0f64..30.0, s in 0.0f64..5.0,
            a in 0.0f64..500.0, bump in 0.0f64..3.0
        ) {
            let base = scheme(m, v, p, s).max_feasible_wallets(a);
            prop_assert!(scheme(m + bump, v, p, s).max_feasible_wallets(a) <= base);
            prop_assert!(scheme(m, v + bump, p, s).max_feasible_wallets(a) <= base);
            prop_assert!(scheme(m, v, p + bump, s).max_feasible_wallets(a) <= base);
            prop_assert!(scheme(m, v, p, s + bump).max_feasible_wallets(a) <= base);
            prop_assert!(scheme(m, v, p, s).max_feasible_wallets(a + bump) >= base);
        }
    }
}
