use super::transcript::{AlphaSchedule, AnnounceOrder, Body, BroadcastLog, MessageKind};
use super::{
    announcement_order, reconstruct_key, AlphaMode, MaskRule, OrderRule, ProtocolConfig, RoundRecord, RunReport,
};
use crate::adversary::{Adversary, BobMemory, Channel, Claim, Identity, Phase, RoundRegister, Transit};
use crate::error::{QssError, Result};
use crate::ghz::{ghz_closed_form, GhzSpec};
use crate::math::{rng_stream, Dim, Sampler};
use crate::measurement::{alice_basis_for, correlation_holds, MeasOutcome, Party};
use crate::mub::{basis_for, Direction};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Prepared,
    Measured,
    Sifted,
    Tested,
    Aborted,
    KeyMeasured,
    Revealed,
}

type Keys = (Vec<usize>, Vec<usize>);

/// What the receivers put on the log for one test round.
#[derive(Debug, Clone, Copy)]
struct Announced {
    bob_outcome: usize,
    charlie_outcome: usize,
    bob_dir: Direction,
    charlie_dir: Direction,
}

struct Session<'a, 'b> {
    config: ProtocolConfig,
    d: Dim,
    stage: Stage,
    log: BroadcastLog,
    alphas: Vec<usize>,
    registers: Vec<RoundRegister>,
    records: Vec<RoundRecord>,
    announced: Vec<Option<Announced>>,
    adversary: Option<&'a mut (dyn Adversary + 'b)>,
    alice: Sampler,
    bob: Sampler,
    charlie: Sampler,
    eve: Sampler,
}

fn hook<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        QssError::Adversary(msg) => QssError::Adversary(msg),
        other => QssError::Adversary(other.to_string()),
    })
}

impl<'a, 'b> Session<'a, 'b> {
    fn new(config: &ProtocolConfig, adversary: Option<&'a mut (dyn Adversary + 'b)>) -> Self {
        let seed = config.seed;
        Session {
            config: config.clone(),
            d: config.d,
            stage: Stage::Prepared,
            log: BroadcastLog::new(),
            alphas: Vec::new(),
            registers: Vec::new(),
            records: Vec::new(),
            announced: Vec::new(),
            adversary,
            alice: rng_stream(seed, "alice"),
            bob: rng_stream(seed, "bob"),
            charlie: rng_stream(seed, "charlie"),
            eve: rng_stream(seed, "adversary"),
        }
    }

    fn dishonest_bob(&self) -> bool {
        self.adversary
            .as_ref()
            .is_some_and(|a| a.identity() == Identity::DishonestBob)
    }

    /// Preparation and distribution, with the adversary on the channels.
    fn prepare(&mut self) -> Result<()> {
        let rounds = self.config.total_rounds();
        let d = self.d;
        self.alphas = match self.config.alpha {
            AlphaMode::Fixed { alpha } => vec![alpha; rounds],
            AlphaMode::PerRound => (0..rounds).map(|_| self.alice.below(d.get())).collect(),
        };
        for r in 0..rounds {
            let ghz = ghz_closed_form(&GhzSpec::xyy(d, self.alphas[r]))?;
            let mut reg = RoundRegister::new(ghz);
            if let Some(adv) = self.adversary.as_deref_mut() {
                for channel in [Channel::ToBob, Channel::ToCharlie] {
                    let mut tap = Transit::new(r, channel, d, &mut reg);
                    hook(adv.on_transit(&mut tap, &mut self.eve))?;
                }
            }
            self.registers.push(reg);
        }
        Ok(())
    }

    /// Receipts, then local measurements in random directions.
    fn measure_receivers(&mut self) -> Result<()> {
        assert_eq!(self.stage, Stage::Prepared);
        let count = self.registers.len();
        self.log.post(None, 2, Party::Bob, Body::Receipt { count }, vec![]);
        self.log.post(None, 2, Party::Charlie, Body::Receipt { count }, vec![]);
        let d = self.d;
        for (r, reg) in self.registers.iter_mut().enumerate() {
            let bob_dir = Direction::uniform(&mut self.bob);
            let t = reg.measure_bob(&basis_for(d, bob_dir), &mut self.bob)?;
            let charlie_dir = Direction::uniform(&mut self.charlie);
            let u = reg.measure_charlie(&basis_for(d, charlie_dir), &mut self.charlie)?;
            self.records.push(RoundRecord {
                index: r,
                is_test: false,
                alpha: self.alphas[r],
                bob_dir,
                charlie_dir,
                bob: MeasOutcome {
                    value: t,
                    basis_label: bob_dir.label(),
                    party: Party::Bob,
                },
                charlie: MeasOutcome {
                    value: u,
                    basis_label: charlie_dir.label(),
                    party: Party::Charlie,
                },
                bob_claimed: None,
                announce_order: None,
                alice_basis: None,
                alice: None,
                passed: None,
            });
        }
        self.announced = vec![None; count];
        self.stage = Stage::Measured;
        Ok(())
    }

    /// Sift mask and the ordered test-round announcements.
    fn sift(&mut self) -> Result<()> {
        assert_eq!(self.stage, Stage::Measured);
        let rounds = self.records.len();
        let mut bits = vec![0u8; rounds];
        match self.config.mask {
            MaskRule::Balanced => {
                for i in self.alice.choose_k(rounds, self.config.n) {
                    bits[i] = 1;
                }
            }
            MaskRule::Bernoulli { p } => {
                for b in bits.iter_mut() {
                    *b = self.alice.bernoulli(p) as u8;
                }
            }
        }
        for (rec, &b) in self.records.iter_mut().zip(&bits) {
            rec.is_test = b == 1;
        }
        self.log.post(None, 3, Party::Alice, Body::SiftMask { bits }, vec![]);

        let run_order = announcement_order(&mut self.alice);
        for r in 0..rounds {
            if !self.records[r].is_test {
                continue;
            }
            let order = match self.config.order {
                OrderRule::PerRound => announcement_order(&mut self.alice),
                OrderRule::PerRun => run_order,
            };
            self.records[r].announce_order = Some(order);
            self.log.post(Some(r), 3, Party::Alice, Body::Order { order }, vec![]);
            let announced = self.announce_test_round(r, order)?;
            if announced.bob_outcome != self.records[r].bob.value {
                self.records[r].bob_claimed = Some(announced.bob_outcome);
            }
            self.announced[r] = Some(announced);
        }
        self.stage = Stage::Sifted;
        Ok(())
    }

    fn announce_test_round(&mut self, r: usize, order: AnnounceOrder) -> Result<Announced> {
        let rec = self.records[r].clone();
        let mut out = Announced {
            bob_outcome: rec.bob.value,
            charlie_outcome: rec.charlie.value,
            bob_dir: rec.bob_dir,
            charlie_dir: rec.charlie_dir,
        };
        let dishonest = self.dishonest_bob();
        for (sender, kind) in order.sequence() {
            let (body, cites) = match (sender, kind) {
                (Party::Bob, MessageKind::Outcome) => {
                    let claim = if dishonest {
                        let adv = self.adversary.as_deref_mut().expect("dishonest Bob present");
                        let mut mem = BobMemory::new(
                            r,
                            Phase::Test,
                            rec.bob_dir,
                            rec.bob.value,
                            self.d,
                            &mut self.registers[r],
                        );
                        hook(adv.bob_outcome(&mut mem, self.log.messages(), &mut self.eve))?
                    } else {
                        Claim {
                            value: rec.bob.value,
                            cites: vec![],
                        }
                    };
                    if claim.value >= self.d.get() {
                        return Err(QssError::Adversary(format!("outcome {} out of range", claim.value)));
                    }
                    out.bob_outcome = claim.value;
                    (Body::Outcome { value: claim.value }, claim.cites)
                }
                (Party::Bob, _) => {
                    let dir = if dishonest {
                        let adv = self.adversary.as_deref_mut().expect("dishonest Bob present");
                        let mut mem = BobMemory::new(
                            r,
                            Phase::Test,
                            rec.bob_dir,
                            rec.bob.value,
                            self.d,
                            &mut self.registers[r],
                        );
                        hook(adv.bob_direction(&mut mem, self.log.messages(), &mut self.eve))?
                    } else {
                        rec.bob_dir
                    };
                    out.bob_dir = dir;
                    (Body::Direction { direction: dir }, vec![])
                }
                (_, MessageKind::Outcome) => (
                    Body::Outcome {
                        value: rec.charlie.value,
                    },
                    vec![],
                ),
                _ => (
                    Body::Direction {
                        direction: rec.charlie_dir,
                    },
                    vec![],
                ),
            };
            self.log.post(Some(r), 3, sender, body, cites);
        }
        Ok(out)
    }

    /// Alice checks every test round; the first failure aborts the run.
    fn check_tests(&mut self) -> Result<Option<usize>> {
        assert_eq!(self.stage, Stage::Sifted);
        let d = self.d;
        let mut first_failed = None;
        for r in 0..self.records.len() {
            let Some(a) = self.announced[r] else { continue };
            let basis = alice_basis_for(a.bob_dir, a.charlie_dir, d);
            let s = self.registers[r].measure_alice(&basis, &mut self.alice)?;
            let rec = &mut self.records[r];
            let ok = correlation_holds(
                d.residue(s as i64),
                d.residue(a.bob_outcome as i64),
                d.residue(a.charlie_outcome as i64),
                d.residue(rec.alpha as i64),
            );
            rec.alice_basis = Some(basis.label());
            rec.alice = Some(MeasOutcome {
                value: s,
                basis_label: basis.label(),
                party: Party::Alice,
            });
            rec.passed = Some(ok);
            if !ok && first_failed.is_none() {
                first_failed = Some(r);
            }
        }
        if let Some(r) = first_failed {
            self.log
                .post(None, 5, Party::Alice, Body::Abort { failed_round: r }, vec![]);
            self.stage = Stage::Aborted;
        } else {
            self.stage = Stage::Tested;
        }
        Ok(first_failed)
    }

    /// Key-round directions, then Alice's matching measurements.
    fn measure_key(&mut self) -> Result<()> {
        assert_eq!(self.stage, Stage::Tested);
        self.log.post(None, 5, Party::Alice, Body::Proceed, vec![]);
        let d = self.d;
        let dishonest = self.dishonest_bob();
        for r in 0..self.records.len() {
            if self.records[r].is_test {
                continue;
            }
            let rec = self.records[r].clone();
            let bob_dir = if dishonest {
                let adv = self.adversary.as_deref_mut().expect("dishonest Bob present");
                let mut mem = BobMemory::new(r, Phase::Key, rec.bob_dir, rec.bob.value, d, &mut self.registers[r]);
                hook(adv.bob_direction(&mut mem, self.log.messages(), &mut self.eve))?
            } else {
                rec.bob_dir
            };
            self.log
                .post(Some(r), 5, Party::Bob, Body::Direction { direction: bob_dir }, vec![]);
            self.log.post(
                Some(r),
                5,
                Party::Charlie,
                Body::Direction {
                    direction: rec.charlie_dir,
                },
                vec![],
            );
            if dishonest {
                let adv = self.adversary.as_deref_mut().expect("dishonest Bob present");
                let mut mem = BobMemory::new(r, Phase::Key, rec.bob_dir, rec.bob.value, d, &mut self.registers[r]);
                hook(adv.bob_after_directions(&mut mem, self.log.messages(), &mut self.eve))?;
            }
            let basis = alice_basis_for(bob_dir, rec.charlie_dir, d);
            let s = self.registers[r].measure_alice(&basis, &mut self.alice)?;
            let rec = &mut self.records[r];
            rec.alice_basis = Some(basis.label());
            rec.alice = Some(MeasOutcome {
                value: s,
                basis_label: basis.label(),
                party: Party::Alice,
            });
        }
        self.stage = Stage::KeyMeasured;
        Ok(())
    }

    fn reveal(&mut self) -> Keys {
        assert_eq!(self.stage, Stage::KeyMeasured);
        let schedule = match self.config.alpha {
            AlphaMode::Fixed { alpha } => AlphaSchedule::Fixed(alpha),
            AlphaMode::PerRound => AlphaSchedule::PerRound(self.alphas.clone()),
        };
        self.log.post(None, 7, Party::Alice, Body::Alpha { schedule }, vec![]);
        self.stage = Stage::Revealed;
        let key: Vec<&RoundRecord> = self.records.iter().filter(|r| !r.is_test).collect();
        let alice_key = key.iter().map(|r| r.alice.expect("key round measured").value).collect();
        let t: Vec<usize> = key.iter().map(|r| r.bob.value).collect();
        let u: Vec<usize> = key.iter().map(|r| r.charlie.value).collect();
        let a: Vec<usize> = key.iter().map(|r| r.alpha).collect();
        let reconstructed = reconstruct_key(&t, &u, &a, self.d).expect("equal lengths");
        (alice_key, reconstructed)
    }

    fn into_report(mut self, first_failed: Option<usize>, keys: Option<Keys>) -> RunReport {
        let adversary = self.adversary.as_deref_mut().map(|adv| {
            let mut rep = adv.finish(self.log.messages());
            if let Some((alice_key, _)) = &keys {
                rep.correct_guesses = rep
                    .key_guesses
                    .iter()
                    .zip(alice_key)
                    .filter(|(g, s)| **g == Some(**s))
                    .count();
            }
            rep
        });
        let aborted = self.stage == Stage::Aborted;
        let (alice_key, reconstructed_key) = keys.unwrap_or_default();
        let key_agreement = !aborted && self.stage == Stage::Revealed && alice_key == reconstructed_key;
        RunReport {
            schema_version: SCHEMA_VERSION,
            config: self.config,
            aborted,
            first_failed_round: first_failed,
            invalid: None,
            alice_key,
            reconstructed_key,
            key_agreement,
            rounds: self.records,
            transcript: self.log.messages().to_vec(),
            adversary,
            attack: None,
        }
    }

    /// First failed test round and, for a completed run, Alice's key and
    /// the reconstructed one.
    fn drive(&mut self) -> Result<(Option<usize>, Option<Keys>)> {
        self.prepare()?;
        self.measure_receivers()?;
        self.sift()?;
        let first_failed = self.check_tests()?;
        if first_failed.is_some() {
            return Ok((first_failed, None));
        }
        self.measure_key()?;
        Ok((None, Some(self.reveal())))
    }
}

/// Runs the whole protocol once. `adversary` may tap the quantum channels
/// and, as a dishonest Bob, speak for Bob.
///
/// An error from an adversary hook does not surface as `Err`; the report
/// comes back with `invalid` set instead.
pub fn run_protocol<'a, 'b>(
    config: &ProtocolConfig,
    adversary: Option<&'a mut (dyn Adversary + 'b)>,
) -> Result<RunReport> {
    config.validate()?;
    let mut session = Session::new(config, adversary);
    match session.drive() {
        Ok((first_failed, keys)) => Ok(session.into_report(first_failed, keys)),
        Err(QssError::Adversary(msg)) => {
            let mut report = session.into_report(None, None);
            report.aborted = false;
            report.invalid = Some(msg);
            Ok(report)
        }
        Err(e) => Err(e),
    }
}
