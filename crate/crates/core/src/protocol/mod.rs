//! The secret sharing run as a state machine.
//!
//! Alice prepares `2n` copies of `Psi(alpha)_XYY` and sends the second and
//! third qudits to Bob and Charlie. The receivers acknowledge receipt, pick
//! X or Y uniformly and measure. Alice then publishes a sift mask; for each
//! test round she picks one of two announcement orders and the receivers
//! reveal outcomes and directions in that order. Alice measures her test
//! qudits in the basis her rule assigns to the announced directions and
//! aborts at the first round where `s + t + u != alpha (mod d)`. Otherwise
//! the key-round directions are announced, Alice measures those qudits too,
//! and revealing `alpha` lets Bob and Charlie together recover her digits.
//!
//! Every classical message goes through a [`transcript::BroadcastLog`].

mod run;
pub mod transcript;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryReport, DetectionEstimate};
use crate::error::{contract, Result};
use crate::math::{Dim, Sampler};
use crate::measurement::MeasOutcome;
use crate::mub::{BasisLabel, Direction};

pub use run::run_protocol;
pub use transcript::{AlphaSchedule, AnnounceOrder, BroadcastLog, Message, Violation};

/// Largest `d` accepted for protocol runs.
pub const RUN_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AlphaMode {
    /// One hidden value for every round.
    Fixed { alpha: usize },
    /// A fresh uniform hidden value per round.
    PerRound,
}

/// How often Alice redraws the announcement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRule {
    PerRound,
    PerRun,
}

/// How the sift mask is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MaskRule {
    /// Exactly `n` of the `2n` rounds are tested.
    Balanced,
    /// Each round is tested independently with probability `p`.
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub d: Dim,
    /// Half the number of prepared rounds.
    pub n: usize,
    pub alpha: AlphaMode,
    pub order: OrderRule,
    pub mask: MaskRule,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(d: Dim, n: usize, alpha: AlphaMode, seed: u64) -> Result<Self> {
        let cfg = ProtocolConfig {
            d,
            n,
            alpha,
            order: OrderRule::PerRound,
            mask: MaskRule::Balanced,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fixed(d: Dim, n: usize, alpha: usize, seed: u64) -> Result<Self> {
        Self::new(d, n, AlphaMode::Fixed { alpha }, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return contract("n must be at least 1");
        }
        if self.d.get() > RUN_LIMIT {
            return Err(crate::QssError::Resource(format!(
                "protocol runs support d <= {RUN_LIMIT}, got d={}",
                self.d
            )));
        }
        if let AlphaMode::Fixed { alpha } = self.alpha {
            if alpha >= self.d.get() {
                return contract(format!("alpha={alpha} is not a residue mod {}", self.d));
            }
        }
        if let MaskRule::Bernoulli { p } = self.mask {
            if !(0.0..=1.0).contains(&p) {
                return contract(format!("test fraction {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn total_rounds(&self) -> usize {
        2 * self.n
    }
}

/// One prepared GHZ-like state and what happened to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub is_test: bool,
    pub alpha: usize,
    pub bob_dir: Direction,
    pub charlie_dir: Direction,
    /// Bob's own outcome, `t`.
    pub bob: MeasOutcome,
    /// Charlie's outcome on the qudit he received, `u`.
    pub charlie: MeasOutcome,
    /// What Bob put on the log, if it differs from his outcome.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bob_claimed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub announce_order: Option<AnnounceOrder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alice_basis: Option<BasisLabel>,
    /// Alice's outcome, `s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alice: Option<MeasOutcome>,
    /// Correlation check result; only test rounds are ever checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ProtocolConfig,
    pub aborted: bool,
    pub first_failed_round: Option<usize>,
    /// Set when an adversary hook failed; such a run is neither aborted nor
    /// completed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invalid: Option<String>,
    pub alice_key: Vec<usize>,
    pub reconstructed_key: Vec<usize>,
    pub key_agreement: bool,
    pub rounds: Vec<RoundRecord>,
    pub transcript: Vec<Message>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<DetectionEstimate>,
}

impl RunReport {
    pub fn key_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.rounds.iter().filter(|r| !r.is_test)
    }

    pub fn test_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.rounds.iter().filter(|r| r.is_test)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn transcript_lines(&self) -> String {
        BroadcastLog::from_messages(self.transcript.clone()).to_lines()
    }
}

/// Uniform choice between the two announcement orders.
pub fn announcement_order(sampler: &mut Sampler) -> AnnounceOrder {
    if sampler.coin() {
        AnnounceOrder::CharlieFirst
    } else {
        AnnounceOrder::BobFirst
    }
}

/// Alice's digits as Bob and Charlie recover them: `alpha_i - t_i - u_i`.
pub fn reconstruct_key(bob: &[usize], charlie: &[usize], alphas: &[usize], d: Dim) -> Result<Vec<usize>> {
    if bob.len() != charlie.len() || bob.len() != alphas.len() {
        return contract(format!(
            "reconstruction inputs have lengths {}, {} and {}",
            bob.len(),
            charlie.len(),
            alphas.len()
        ));
    }
    Ok(bob
        .iter()
        .zip(charlie)
        .zip(alphas)
        .map(|((&t, &u), &a)| d.residue(a as i64 - t as i64 - u as i64).value())
        .collect())
}

/// Causality and ordering violations in a report's transcript.
pub fn transcript_audit(report: &RunReport) -> Vec<Violation> {
    transcript::audit_messages(&report.transcript)
}
