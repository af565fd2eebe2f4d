//! Wallet-level voting rules: the map from a wallet's token balance to the
//! number of votes it casts.
//!
//! Four rules are supported: one-token-one-vote ([`VotingRule::Linear`]),
//! square-root voting ([`VotingRule::Quadratic`]), fractional powers
//! ([`VotingRule::Power`]) and `ln(w + 1)` ([`VotingRule::Logarithmic`]).
//! Every rule is defined on `w >= 0` with value `0` at `w = 0`.
//!
//! Rules are parsed from and displayed as the selection strings `linear`,
//! `quadratic`, `power:<beta>` and `log`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("power exponent must lie strictly between 0 and 1, got {0}")]
    InvalidBeta(f64),
    #[error("token amount must be finite and nonnegative, got {0}")]
    Domain(f64),
    #[error("unknown voting rule `{0}` (expected linear, quadratic, power:<beta> or log)")]
    UnknownRule(String),
}

/// Exponent of a power rule, guaranteed to lie in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub fn new(beta: f64) -> Result<Self, RuleError> {
        if beta.is_finite() && beta > 0.0 && beta < 1.0 {
            Ok(Beta(beta))
        } else {
            Err(RuleError::InvalidBeta(beta))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VotingRule {
    /// `f(w) = w`
    Linear,
    /// `f(w) = sqrt(w)`
    Quadratic,
    /// `f(w) = w^beta`
    Power(Beta),
    /// `f(w) = ln(w + 1)`
    Logarithmic,
}

impl VotingRule {
    /// Convenience constructor for a power rule.
    pub fn power(beta: f64) -> Result<Self, RuleError> {
        Beta::new(beta).map(VotingRule::Power)
    }

    /// Votes cast by a wallet holding `w` tokens.
    pub fn eval(&self, w: f64) -> Result<f64, RuleError> {
        if !w.is_finite() || w < 0.0 {
            return Err(RuleError::Domain(w));
        }
        Ok(self.value(w))
    }

    /// Unchecked evaluation for hot loops. `w` must be finite and `>= 0`.
    #[inline]
    pub fn value(&self, w: f64) -> f64 {
        match self {
            VotingRule::Linear => w,
            VotingRule::Quadratic => w.sqrt(),
            VotingRule::Power(beta) => {
                if w == 0.0 {
                    0.0
                } else {
                    w.powf(beta.0)
                }
            }
            VotingRule::Logarithmic => w.ln_1p(),
        }
    }

    /// Inverse of [`VotingRule::value`]: the balance needed for `votes` votes.
    pub fn balance_for(&self, votes: f64) -> f64 {
        match self {
            VotingRule::Linear => votes,
            VotingRule::Quadratic => votes * votes,
            VotingRule::Power(beta) => votes.powf(1.0 / beta.0),
            VotingRule::Logarithmic => votes.exp_m1(),
        }
    }

    /// Linear counts as (weakly) concave. Callers that need strict concavity
    /// should check [`VotingRule::is_strictly_concave`].
    pub fn is_concave(&self) -> bool {
        true
    }

    pub fn is_strictly_concave(&self) -> bool {
        !matches!(self, VotingRule::Linear)
    }
}

impl fmt::Display for VotingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VotingRule::Linear => f.write_str("linear"),
            VotingRule::Quadratic => f.write_str("quadratic"),
            VotingRule::Power(beta) => write!(f, "power:{}", beta.0),
            VotingRule::Logarithmic => f.write_str("log"),
        }
    }
}

impl FromStr for VotingRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "linear" => Ok(VotingRule::Linear),
            "quadratic" => Ok(VotingRule::Quadratic),
            "log" => Ok(VotingRule::Logarithmic),
            _ => {
                let beta = s
                    .strip_prefix("power:")
                    .ok_or_else(|| RuleError::UnknownRule(s.to_string()))?;
                let beta: f64 = beta.parse().map_err(|_| RuleError::UnknownRule(s.to_string()))?;
                VotingRule::power(beta)
            }
        }
    }
}

impl Serialize for VotingRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VotingRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
