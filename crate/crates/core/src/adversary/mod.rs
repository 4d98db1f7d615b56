//! Attack strategies and detection estimates.
//!
//! An [`Adversary`] only ever receives what its role could see:
//!
//! * every strategy gets the flying qudits through [`Transit`] and the public
//!   log prefix,
//! * a dishonest Bob is additionally handed his own private memory through
//!   [`BobMemory`] whenever Bob must speak. External eavesdroppers are never
//!   given a `BobMemory`.

mod estimate;
mod strategies;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::math::{Dim, PureState, Sampler};
use crate::measurement::measure_subsystem;
use crate::mub::{Direction, MeasBasis};
use crate::protocol::transcript::Message;

pub use estimate::{detection_analytic, estimate_detection, trial_seed, DetectionEstimate};
pub use strategies::{BobEntangle, BobInterceptResend, EveInterceptResend, EveTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    ExternalEve,
    DishonestBob,
}

/// The quantum channels from Alice to the receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    ToBob,
    ToCharlie,
}

/// The quantum data of one round. Slots of `ghz` are Alice, Bob and
/// Charlie's original qudit. When Charlie's qudit is diverted, `decoy`
/// holds `sum_j |jj> / sqrt(d)`: slot 0 stays with Bob, slot 1 goes to
/// Charlie in place of the original.
#[derive(Debug, Clone)]
pub struct RoundRegister {
    pub(crate) ghz: PureState,
    pub(crate) decoy: Option<PureState>,
}

impl RoundRegister {
    pub fn new(ghz: PureState) -> Self {
        RoundRegister { ghz, decoy: None }
    }

    pub fn ghz(&self) -> &PureState {
        &self.ghz
    }

    pub fn decoy(&self) -> Option<&PureState> {
        self.decoy.as_ref()
    }

    fn measure_ghz(&mut self, slot: usize, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        let (k, _, after) = measure_subsystem(&self.ghz, slot, basis, sampler)?;
        self.ghz = after;
        Ok(k)
    }

    fn measure_decoy(&mut self, slot: usize, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        let Some(decoy) = &self.decoy else {
            return contract("no decoy pair in this round");
        };
        let (k, _, after) = measure_subsystem(decoy, slot, basis, sampler)?;
        self.decoy = Some(after);
        Ok(k)
    }

    /// Measures the qudit Charlie actually holds.
    pub(crate) fn measure_charlie(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        if self.decoy.is_some() {
            self.measure_decoy(1, basis, sampler)
        } else {
            self.measure_ghz(2, basis, sampler)
        }
    }

    pub(crate) fn measure_bob(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        self.measure_ghz(1, basis, sampler)
    }

    pub(crate) fn measure_alice(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        self.measure_ghz(0, basis, sampler)
    }
}

/// Access to one qudit while it travels from Alice to a receiver.
pub struct Transit<'a> {
    round: usize,
    channel: Channel,
    d: Dim,
    register: &'a mut RoundRegister,
}

impl<'a> Transit<'a> {
    pub(crate) fn new(round: usize, channel: Channel, d: Dim, register: &'a mut RoundRegister) -> Self {
        Transit {
            round,
            channel,
            d,
            register,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    /// Measures the flying qudit and lets the collapsed state continue.
    pub fn measure(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        match self.channel {
            Channel::ToBob => self.register.measure_ghz(1, basis, sampler),
            Channel::ToCharlie => self.register.measure_charlie(basis, sampler),
        }
    }

    /// Keeps Charlie's qudit back and sends him half of a maximally
    /// entangled pair instead.
    pub fn divert_with_pair(&mut self) -> Result<()> {
        if self.channel != Channel::ToCharlie {
            return contract("only Charlie's qudit can be diverted");
        }
        if self.register.decoy.is_some() {
            return contract("Charlie's qudit is already diverted");
        }
        let n = self.d.get();
        let amp = num_complex::Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            amps[j * n + j] = amp;
        }
        self.register.decoy = Some(PureState::from_amplitudes(&[n, n], amps)?);
        Ok(())
    }
}

/// Whether Bob is speaking during the test or the key phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Test,
    Key,
}

/// Bob's private memory for one round, lent to a dishonest-Bob strategy.
pub struct BobMemory<'a> {
    round: usize,
    phase: Phase,
    direction: Direction,
    outcome: usize,
    d: Dim,
    register: &'a mut RoundRegister,
}

impl<'a> BobMemory<'a> {
    pub(crate) fn new(
        round: usize,
        phase: Phase,
        direction: Direction,
        outcome: usize,
        d: Dim,
        register: &'a mut RoundRegister,
    ) -> Self {
        BobMemory {
            round,
            phase,
            direction,
            outcome,
            d,
            register,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// The direction Bob measured his own qudit in.
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Bob's own measurement outcome.
    pub fn outcome(&self) -> usize {
        self.outcome
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn holds_charlie_qudit(&self) -> bool {
        self.register.decoy.is_some()
    }

    /// Measures Charlie's original qudit, which Bob kept back.
    pub fn measure_kept_qudit(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        if self.register.decoy.is_none() {
            return contract("Bob did not keep Charlie's qudit");
        }
        self.register.measure_ghz(2, basis, sampler)
    }

    /// Measures Bob's half of the pair he shares with Charlie.
    pub fn measure_pair_half(&mut self, basis: &MeasBasis, sampler: &mut Sampler) -> Result<usize> {
        self.register.measure_decoy(0, basis, sampler)
    }
}

/// What Bob puts on the log for an outcome announcement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub value: usize,
    /// Log messages the value was computed from.
    pub cites: Vec<usize>,
}

/// Summary of what an adversary learned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub name: String,
    pub identity: Identity,
    /// Guess for each key digit, aligned with the key; `None` where the
    /// adversary has no informed guess.
    pub key_guesses: Vec<Option<usize>>,
    /// Guesses equal to Alice's digit (filled in by the protocol).
    pub correct_guesses: usize,
}

/// A pluggable attack.
pub trait Adversary: Send {
    fn name(&self) -> &'static str;

    fn identity(&self) -> Identity;

    /// Called for each flying qudit, Bob's channel first.
    fn on_transit(&mut self, tap: &mut Transit<'_>, sampler: &mut Sampler) -> Result<()>;

    /// Bob's outcome announcement in a test round. Only called for a
    /// dishonest Bob.
    fn bob_outcome(&mut self, bob: &mut BobMemory<'_>, _log: &[Message], _sampler: &mut Sampler) -> Result<Claim> {
        Ok(Claim {
            value: bob.outcome(),
            cites: vec![],
        })
    }

    /// Bob's direction announcement, in either phase. Only called for a
    /// dishonest Bob.
    fn bob_direction(
        &mut self,
        bob: &mut BobMemory<'_>,
        _log: &[Message],
        _sampler: &mut Sampler,
    ) -> Result<Direction> {
        Ok(bob.direction())
    }

    /// Runs once per key round after both directions are public. Only
    /// called for a dishonest Bob.
    fn bob_after_directions(
        &mut self,
        _bob: &mut BobMemory<'_>,
        _log: &[Message],
        _sampler: &mut Sampler,
    ) -> Result<()> {
        Ok(())
    }

    /// Called once the run ends, with the complete public log.
    fn finish(&mut self, log: &[Message]) -> AdversaryReport;
}

/// Named strategies, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    None,
    EveIr(EveTarget),
    BobIr,
    BobEntangle,
}

impl AdversaryKind {
    pub const NAMES: [&'static str; 4] = ["none", "eve-ir", "bob-ir", "bob-entangle"];

    /// A fresh strategy instance; `None` for honest runs.
    pub fn build(self) -> Option<Box<dyn Adversary>> {
        match self {
            AdversaryKind::None => None,
            AdversaryKind::EveIr(target) => Some(Box::new(EveInterceptResend::new(target))),
            AdversaryKind::BobIr => Some(Box::new(BobInterceptResend::new())),
            AdversaryKind::BobEntangle => Some(Box::new(BobEntangle::new())),
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AdversaryKind::None => "none",
            AdversaryKind::EveIr(_) => "eve-ir",
            AdversaryKind::BobIr => "bob-ir",
            AdversaryKind::BobEntangle => "bob-entangle",
        };
        f.write_str(name)
    }
}

impl FromStr for AdversaryKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(AdversaryKind::None),
            "eve-ir" => Ok(AdversaryKind::EveIr(EveTarget::Both)),
            "bob-ir" => Ok(AdversaryKind::BobIr),
            "bob-entangle" => Ok(AdversaryKind::BobEntangle),
            other => Err(format!(
                "unknown adversary {other:?}; expected one of {}",
                Self::NAMES.join(", ")
            )),
        }
    }
}
