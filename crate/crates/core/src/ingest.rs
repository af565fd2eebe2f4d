//! Loading finalized-proposal vote snapshots and pricing gas in tokens.
//!
//! One JSON file holds one protocol:
//!
//! ```json
//! { "protocol": "ens",
//!   "proposals": [ { "id": "ens-1", "chain": "ethereum", "created_at": "2026-01-03",
//!                    "gas_price_wei": "2000000000", "native_usd": 3100.5, "token_usd": 21.3,
//!                    "votes": [ { "address": "0xab..", "weight": "1520.25", "support": "for" } ] } ] }
//! ```
//!
//! Weights are decimal strings in whole-token units and the gas price is an
//! integer string in wei, already averaged over the proposal's creation day.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{format_amount, parse_amount};
use crate::costs::{CostError, CostScheme};
use crate::rules::VotingRule;

const WEI_PER_NATIVE: f64 = 1e18;
const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed snapshot JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("gas must be positive, got split_gas={split_gas} vote_gas={vote_gas}")]
    InvalidGas { split_gas: u64, vote_gas: u64 },
    #[error(transparent)]
    Cost(#[from] CostError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chain {
    EthereumL1,
    Rollup,
}

impl Chain {
    pub fn tag(self) -> &'static str {
        match self {
            Chain::EthereumL1 => "ethereum",
            Chain::Rollup => "rollup",
        }
    }

    fn from_tag(tag: &str) -> Option<Chain> {
        match tag {
            "ethereum" => Some(Chain::EthereumL1),
            "rollup" => Some(Chain::Rollup),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    For,
    Against,
    Abstain,
}

impl Support {
    pub fn tag(self) -> &'static str {
        match self {
            Support::For => "for",
            Support::Against => "against",
            Support::Abstain => "abstain",
        }
    }

    fn from_tag(tag: &str) -> Option<Support> {
        match tag {
            "for" => Some(Support::For),
            "against" => Some(Support::Against),
            "abstain" => Some(Support::Abstain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub address: String,
    pub weight: f64,
    pub support: Support,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSnapshot {
    pub protocol: String,
    pub proposal_id: String,
    pub chain: Chain,
    pub created_at: NaiveDate,
    pub votes: Vec<VoteRecord>,
    pub gas_price_wei: u128,
    pub native_usd: f64,
    pub token_usd: f64,
}

impl ProposalSnapshot {
    pub fn total_weight(&self) -> f64 {
        self.votes.iter().map(|v| v.weight).sum()
    }
}

/// Gas consumed by one split transfer and by one vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGasProfile")]
pub struct GasProfile {
    split_gas: u64,
    vote_gas: u64,
}

#[derive(Deserialize)]
struct RawGasProfile {
    split_gas: u64,
    vote_gas: u64,
}

impl TryFrom<RawGasProfile> for GasProfile {
    type Error = IngestError;

    fn try_from(raw: RawGasProfile) -> Result<Self, Self::Error> {
        GasProfile::new(raw.split_gas, raw.vote_gas)
    }
}

impl GasProfile {
    pub fn new(split_gas: u64, vote_gas: u64) -> Result<Self, IngestError> {
        if split_gas == 0 || vote_gas == 0 {
            return Err(IngestError::InvalidGas { split_gas, vote_gas });
        }
        Ok(GasProfile { split_gas, vote_gas })
    }

    pub fn split_gas(&self) -> u64 {
        self.split_gas
    }

    pub fn vote_gas(&self) -> u64 {
        self.vote_gas
    }
}

/// Ethereum: an ERC-20 transfer to a fresh address (65k) and a combined
/// delegate + castVote (175k). Rollups: a flat 500k for either action.
pub fn default_gas_profile(chain: Chain) -> GasProfile {
    match chain {
        Chain::EthereumL1 => GasProfile {
            split_gas: 65_000,
            vote_gas: 175_000,
        },
        Chain::Rollup => GasProfile {
            split_gas: 500_000,
            vote_gas: 500_000,
        },
    }
}

/// Token-denominated cost scheme for a proposal: `s` and `v` are the gas
/// units of each action times the proposal's gas price, converted through
/// the native token's and governance token's USD prices.
pub fn gas_to_cost_scheme(
    snapshot: &ProposalSnapshot,
    profile: &GasProfile,
    min_balance: f64,
    setup_cost: f64,
) -> Result<CostScheme, IngestError> {
    let to_tokens = |gas: u64| {
        gas as f64 * snapshot.gas_price_wei as f64 / WEI_PER_NATIVE * snapshot.native_usd / snapshot.token_usd
    };
    Ok(CostScheme::new(
        min_balance,
        to_tokens(profile.vote_gas),
        setup_cost,
        to_tokens(profile.split_gas),
    )?)
}

/// Total votes cast by every recorded voter, whatever side they took.
pub fn honest_power(rule: &VotingRule, snapshot: &ProposalSnapshot) -> f64 {
    snapshot.votes.iter().map(|v| rule.value(v.weight)).sum()
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFile {
    protocol: String,
    proposals: Vec<RawProposal>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawProposal {
    id: String,
    chain: String,
    created_at: String,
    gas_price_wei: String,
    native_usd: f64,
    token_usd: f64,
    votes: Vec<RawVote>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawVote {
    address: String,
    weight: String,
    support: String,
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<Vec<ProposalSnapshot>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_snapshots(&text)
}

pub fn parse_snapshots(text: &str) -> Result<Vec<ProposalSnapshot>, IngestError> {
    let raw: RawFile = serde_json::from_str(text)?;
    if raw.protocol.trim().is_empty() {
        return Err(invalid("protocol", "must not be empty"));
    }
    raw.proposals
        .iter()
        .enumerate()
        .map(|(i, p)| validate_proposal(&raw.protocol, i, p))
        .collect()
}

fn validate_proposal(protocol: &str, index: usize, raw: &RawProposal) -> Result<ProposalSnapshot, IngestError> {
    let at = |field: &str| format!("proposals[{index}].{field}");

    if raw.id.trim().is_empty() {
        return Err(invalid(at("id"), "must not be empty"));
    }
    let chain =
        Chain::from_tag(&raw.chain).ok_or_else(|| invalid(at("chain"), format!("unknown chain `{}`", raw.chain)))?;
    let created_at = NaiveDate::parse_from_str(&raw.created_at, DATE_FORMAT)
        .map_err(|e| invalid(at("created_at"), format!("`{}`: {e}", raw.created_at)))?;
    let gas_price_wei: u128 = raw.gas_price_wei.trim().parse().map_err(|_| {
        invalid(
            at("gas_price_wei"),
            format!("`{}` is not an integer", raw.gas_price_wei),
        )
    })?;
    if gas_price_wei == 0 {
        return Err(invalid(at("gas_price_wei"), "must be positive"));
    }
    for (field, price) in [("native_usd", raw.native_usd), ("token_usd", raw.token_usd)] {
        if !(price.is_finite() && price > 0.0) {
            return Err(invalid(at(field), format!("must be positive, got {price}")));
        }
    }
    if raw.votes.is_empty() {
        return Err(invalid(at("votes"), "at least one vote record is required"));
    }

    let votes = raw
        .votes
        .iter()
        .enumerate()
        .map(|(j, vote)| {
            let at = |field: &str| format!("proposals[{index}].votes[{j}].{field}");
            let weight = parse_amount(&vote.weight).map_err(|e| invalid(at("weight"), e.to_string()))?;
            let support = Support::from_tag(&vote.support)
                .ok_or_else(|| invalid(at("support"), format!("unknown support `{}`", vote.support)))?;
            Ok(VoteRecord {
                address: vote.address.clone(),
                weight,
                support,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    Ok(ProposalSnapshot {
        protocol: protocol.to_string(),
        proposal_id: raw.id.clone(),
        chain,
        created_at,
        votes,
        gas_price_wei,
        native_usd: raw.native_usd,
        token_usd: raw.token_usd,
    })
}

/// Serializes snapshots of a single protocol back into the file schema,
/// with weights in shortest round-trip decimal form.
pub fn snapshots_to_json(snapshots: &[ProposalSnapshot]) -> Result<String, IngestError> {
    let protocol = match snapshots.first() {
        Some(first) => first.protocol.clone(),
        None => return Err(invalid("proposals", "nothing to serialize")),
    };
    if let Some(other) = snapshots.iter().find(|s| s.protocol != protocol) {
        return Err(invalid(
            "protocol",
            format!("mixed protocols `{protocol}` and `{}`", other.protocol),
        ));
    }
    let raw = RawFile {
        protocol,
        proposals: snapshots
            .iter()
            .map(|s| RawProposal {
                id: s.proposal_id.clone(),
                chain: s.chain.tag().to_string(),
                created_at: s.created_at.format(DATE_FORMAT).to_string(),
                gas_price_wei: s.gas_price_wei.to_string(),
                native_usd: s.native_usd,
                token_usd: s.token_usd,
                votes: s
                    .votes
                    .iter()
                    .map(|v| RawVote {
                        address: v.address.clone(),
                        weight: format_amount(v.weight),
                        support: v.support.tag().to_string(),
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}
