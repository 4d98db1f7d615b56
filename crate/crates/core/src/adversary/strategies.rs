use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Adversary, AdversaryReport, BobMemory, Channel, Claim, Identity, Phase, Transit};
use crate::error::Result;
use crate::math::{Dim, Sampler};
use crate::measurement::Party;
use crate::mub::{basis_for, Direction};
use crate::protocol::transcript::{Body, BroadcastLog, Message};

fn key_guesses(
    log: &[Message],
    d: Option<Dim>,
    mut guess: impl FnMut(usize, usize, &crate::protocol::transcript::PublicView) -> Option<i64>,
) -> Vec<Option<usize>> {
    let view = BroadcastLog::public_view(log);
    let (Some(alpha), Some(d)) = (view.alpha.clone(), d) else {
        return Vec::new();
    };
    view.key_rounds()
        .into_iter()
        .map(|r| guess(r, alpha.at(r), &view).map(|v| d.residue(v).value()))
        .collect()
}

/// Dishonest Bob measures Charlie's flying qudit in a uniformly guessed
/// direction and forwards the collapsed eigenstate. All his announcements
/// are honest.
#[derive(Debug, Default)]
pub struct BobInterceptResend {
    d: Option<Dim>,
    stolen: BTreeMap<usize, (Direction, usize)>,
    own: BTreeMap<usize, usize>,
}

impl BobInterceptResend {
    pub fn new() -> Self {
        Self::default()
    }

    /// The guessed direction and stolen outcome for each round.
    pub fn stolen(&self) -> &BTreeMap<usize, (Direction, usize)> {
        &self.stolen
    }
}

impl Adversary for BobInterceptResend {
    fn name(&self) -> &'static str {
        "bob-ir"
    }

    fn identity(&self) -> Identity {
        Identity::DishonestBob
    }

    fn on_transit(&mut self, tap: &mut Transit<'_>, sampler: &mut Sampler) -> Result<()> {
        if tap.channel() != Channel::ToCharlie {
            return Ok(());
        }
        let d = tap.dim();
        self.d = Some(d);
        let guess = Direction::uniform(sampler);
        let k = tap.measure(&basis_for(d, guess), sampler)?;
        self.stolen.insert(tap.round(), (guess, k));
        Ok(())
    }

    fn bob_direction(&mut self, bob: &mut BobMemory<'_>, _log: &[Message], _s: &mut Sampler) -> Result<Direction> {
        if bob.phase() == Phase::Key {
            self.own.insert(bob.round(), bob.outcome());
        }
        Ok(bob.direction())
    }

    fn finish(&mut self, log: &[Message]) -> AdversaryReport {
        let key_guesses = key_guesses(log, self.d, |r, alpha, view| {
            let (guess, stolen) = *self.stolen.get(&r)?;
            let t = *self.own.get(&r)?;
            (view.charlie_dirs.get(&r) == Some(&guess)).then(|| alpha as i64 - t as i64 - stolen as i64)
        });
        AdversaryReport {
            name: self.name().into(),
            identity: self.identity(),
            key_guesses,
            correct_guesses: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveTarget {
    BobChannel,
    CharlieChannel,
    Both,
}

impl EveTarget {
    fn taps(self, channel: Channel) -> bool {
        matches!(
            (self, channel),
            (EveTarget::Both, _)
                | (EveTarget::BobChannel, Channel::ToBob)
                | (EveTarget::CharlieChannel, Channel::ToCharlie)
        )
    }
}

/// External Eve measures the targeted flying qudits in uniformly chosen
/// directions and forwards the collapsed states.
#[derive(Debug)]
pub struct EveInterceptResend {
    target: EveTarget,
    d: Option<Dim>,
    records: BTreeMap<(usize, u8), (Direction, usize)>,
}

impl EveInterceptResend {
    pub fn new(target: EveTarget) -> Self {
        EveInterceptResend {
            target,
            d: None,
            records: BTreeMap::new(),
        }
    }

    pub fn records(&self) -> &BTreeMap<(usize, u8), (Direction, usize)> {
        &self.records
    }
}

impl Adversary for EveInterceptResend {
    fn name(&self) -> &'static str {
        "eve-ir"
    }

    fn identity(&self) -> Identity {
        Identity::ExternalEve
    }

    fn on_transit(&mut self, tap: &mut Transit<'_>, sampler: &mut Sampler) -> Result<()> {
        if !self.target.taps(tap.channel()) {
            return Ok(());
        }
        let d = tap.dim();
        self.d = Some(d);
        let dir = Direction::uniform(sampler);
        let k = tap.measure(&basis_for(d, dir), sampler)?;
        let slot = match tap.channel() {
            Channel::ToBob => 1,
            Channel::ToCharlie => 2,
        };
        self.records.insert((tap.round(), slot), (dir, k));
        Ok(())
    }

    /// Eve guesses `alpha - e_b - e_c` for every key round where she holds
    /// both receivers' outcomes. The guess is informative only when both of
    /// her directions matched the announced ones.
    fn finish(&mut self, log: &[Message]) -> AdversaryReport {
        let key_guesses = key_guesses(log, self.d, |r, alpha, _view| {
            let (_, eb) = *self.records.get(&(r, 1))?;
            let (_, ec) = *self.records.get(&(r, 2))?;
            Some(alpha as i64 - eb as i64 - ec as i64)
        });
        AdversaryReport {
            name: self.name().into(),
            identity: self.identity(),
            key_guesses,
            correct_guesses: 0,
        }
    }
}

/// Dishonest Bob keeps Charlie's qudit and hands Charlie half of a
/// maximally entangled pair.
///
/// Announcement policy: when Bob must give his outcome before hearing
/// anything from Charlie, he gives his honest outcome. When Charlie's
/// outcome `u` is already public he guesses Charlie's direction, measures the
/// kept qudit in it for `u'` and announces `t + u' - u`, which passes
/// whenever the guess was right. Directions are always honest. In key rounds
/// he waits for Charlie's direction, then reads both the kept qudit and his
/// pair half in matching bases.
#[derive(Debug, Default)]
pub struct BobEntangle {
    d: Option<Dim>,
    /// round -> (t, kept-qudit outcome, Charlie's outcome as read from the pair)
    key_view: BTreeMap<usize, (usize, usize, usize)>,
}

impl BobEntangle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Per key round: Bob's outcome, the outcome of Charlie's original qudit
    /// and Charlie's decoy outcome as Bob infers it.
    pub fn key_view(&self) -> &BTreeMap<usize, (usize, usize, usize)> {
        &self.key_view
    }
}

impl Adversary for BobEntangle {
    fn name(&self) -> &'static str {
        "bob-entangle"
    }

    fn identity(&self) -> Identity {
        Identity::DishonestBob
    }

    fn on_transit(&mut self, tap: &mut Transit<'_>, _sampler: &mut Sampler) -> Result<()> {
        if tap.channel() == Channel::ToCharlie {
            self.d = Some(tap.dim());
            tap.divert_with_pair()?;
        }
        Ok(())
    }

    fn bob_outcome(&mut self, bob: &mut BobMemory<'_>, log: &[Message], sampler: &mut Sampler) -> Result<Claim> {
        let round = bob.round();
        let charlie_outcome = log.iter().find_map(|m| match m.body {
            Body::Outcome { value } if m.round == Some(round) && m.sender == Party::Charlie => Some((m.seq, value)),
            _ => None,
        });
        let Some((seq, u)) = charlie_outcome else {
            return Ok(Claim {
                value: bob.outcome(),
                cites: vec![],
            });
        };
        let d = bob.dim();
        let guess = Direction::uniform(sampler);
        let kept = bob.measure_kept_qudit(&basis_for(d, guess), sampler)?;
        let value = d.residue(bob.outcome() as i64 + kept as i64 - u as i64).value();
        Ok(Claim {
            value,
            cites: vec![seq],
        })
    }

    fn bob_after_directions(&mut self, bob: &mut BobMemory<'_>, log: &[Message], sampler: &mut Sampler) -> Result<()> {
        let round = bob.round();
        let view = BroadcastLog::public_view(log);
        let Some(&dir) = view.charlie_dirs.get(&round) else {
            return Err(crate::QssError::Adversary(format!(
                "Charlie's direction for round {round} not public"
            )));
        };
        let d = bob.dim();
        let basis = basis_for(d, dir);
        let kept = bob.measure_kept_qudit(&basis, sampler)?;
        let pair = bob.measure_pair_half(&basis.conjugate(), sampler)?;
        self.key_view.insert(round, (bob.outcome(), kept, pair));
        Ok(())
    }

    fn finish(&mut self, log: &[Message]) -> AdversaryReport {
        let key_guesses = key_guesses(log, self.d, |r, alpha, _| {
            let (t, kept, _) = *self.key_view.get(&r)?;
            Some(alpha as i64 - t as i64 - kept as i64)
        });
        AdversaryReport {
            name: self.name().into(),
            identity: self.identity(),
            key_guesses,
            correct_guesses: 0,
        }
    }
}
