//! Sybil-optimal wallet splitting against wallet-based DAO voting rules.
//!
//! An attacker holding `a` tokens may spread them over many wallets. Under a
//! concave voting rule `f` and a linear cost scheme `(m, v, p, s)` the best
//! split is even, each wallet holds `w* = (a - p)/n - v - s`, and the
//! resulting power `n f(w*)` grows linearly in `a` with slope at most
//! `kappa = sup_{x >= m} f(x) / (x + v + s)`.
//!
//! * [`rules`] and [`costs`] define the model.
//! * [`optimizer`] finds the integer-optimal split and lower bounds.
//! * [`closedform`] holds the relaxed optimum and a Lambert W evaluator.
//! * [`ingest`] and [`report`] replay governance proposals and emit tables
//!   and per-dollar curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amount;
pub mod closedform;
pub mod costs;
pub mod ingest;
pub mod optimizer;
pub mod report;
pub mod rules;

pub use closedform::{closed_form_power, lambert_w0, per_dollar, relaxed_optimum, RelaxedOptimum};
pub use costs::CostScheme;
pub use optimizer::{optimal_split, AttackPlan, PlutocracyBound};
pub use rules::VotingRule;
