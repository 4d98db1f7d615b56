//! The authenticated classical channel: an ordered, append-only broadcast
//! log, its line-delimited text form, and the causality audit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::measurement::Party;
use crate::mub::Direction;

/// Which receiver speaks first in a test round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnounceOrder {
    /// Bob's outcome, Charlie's outcome, Charlie's direction, Bob's direction.
    BobFirst,
    /// Charlie's outcome, Bob's outcome, Bob's direction, Charlie's direction.
    CharlieFirst,
}

impl AnnounceOrder {
    /// The four `(sender, kind)` slots in announcement order.
    pub fn sequence(self) -> [(Party, MessageKind); 4] {
        use MessageKind::{Direction as Dir, Outcome};
        use Party::{Bob, Charlie};
        match self {
            AnnounceOrder::BobFirst => [(Bob, Outcome), (Charlie, Outcome), (Charlie, Dir), (Bob, Dir)],
            AnnounceOrder::CharlieFirst => [(Charlie, Outcome), (Bob, Outcome), (Bob, Dir), (Charlie, Dir)],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            AnnounceOrder::BobFirst => "bob-first",
            AnnounceOrder::CharlieFirst => "charlie-first",
        }
    }
}

/// Hidden values as revealed in the last step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSchedule {
    Fixed(usize),
    PerRound(Vec<usize>),
}

impl AlphaSchedule {
    pub fn at(&self, round: usize) -> usize {
        match self {
            AlphaSchedule::Fixed(a) => *a,
            AlphaSchedule::PerRound(v) => v[round],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Receipt,
    SiftMask,
    Order,
    Outcome,
    Direction,
    Abort,
    Proceed,
    Alpha,
}

impl MessageKind {
    fn as_str(self) -> &'static str {
        match self {
            MessageKind::Receipt => "receipt",
            MessageKind::SiftMask => "sift-mask",
            MessageKind::Order => "order",
            MessageKind::Outcome => "outcome",
            MessageKind::Direction => "direction",
            MessageKind::Abort => "abort",
            MessageKind::Proceed => "proceed",
            MessageKind::Alpha => "alpha",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed message content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    Receipt { count: usize },
    SiftMask { bits: Vec<u8> },
    Order { order: AnnounceOrder },
    Outcome { value: usize },
    Direction { direction: Direction },
    Abort { failed_round: usize },
    Proceed,
    Alpha { schedule: AlphaSchedule },
}

impl Body {
    pub fn kind(&self) -> MessageKind {
        match self {
            Body::Receipt { .. } => MessageKind::Receipt,
            Body::SiftMask { .. } => MessageKind::SiftMask,
            Body::Order { .. } => MessageKind::Order,
            Body::Outcome { .. } => MessageKind::Outcome,
            Body::Direction { .. } => MessageKind::Direction,
            Body::Abort { .. } => MessageKind::Abort,
            Body::Proceed => MessageKind::Proceed,
            Body::Alpha { .. } => MessageKind::Alpha,
        }
    }

    fn payload(&self) -> String {
        let digits = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        match self {
            Body::Receipt { count } => count.to_string(),
            Body::SiftMask { bits } => bits.iter().map(|b| char::from(b'0' + b)).collect(),
            Body::Order { order } => order.as_str().to_string(),
            Body::Outcome { value } => value.to_string(),
            Body::Direction { direction } => direction.to_string(),
            Body::Abort { failed_round } => failed_round.to_string(),
            Body::Proceed => String::new(),
            Body::Alpha {
                schedule: AlphaSchedule::Fixed(a),
            } => a.to_string(),
            Body::Alpha {
                schedule: AlphaSchedule::PerRound(v),
            } => format!("string:{}", digits(v)),
        }
    }

    fn parse(kind: &str, payload: &str) -> Result<Body> {
        let int = |s: &str| s.parse::<usize>().or_else(|_| contract(format!("bad integer {s:?}")));
        Ok(match kind {
            "receipt" => Body::Receipt { count: int(payload)? },
            "sift-mask" => Body::SiftMask {
                bits: payload
                    .bytes()
                    .map(|b| match b {
                        b'0' | b'1' => Ok(b - b'0'),
                        _ => contract(format!("bad mask bit {:?}", b as char)),
                    })
                    .collect::<Result<_>>()?,
            },
            "order" => Body::Order {
                order: match payload {
                    "bob-first" => AnnounceOrder::BobFirst,
                    "charlie-first" => AnnounceOrder::CharlieFirst,
                    other => return contract(format!("bad order {other:?}")),
                },
            },
            "outcome" => Body::Outcome { value: int(payload)? },
            "direction" => Body::Direction {
                direction: payload.parse().or_else(|e: String| contract(e))?,
            },
            "abort" => Body::Abort {
                failed_round: int(payload)?,
            },
            "proceed" => Body::Proceed,
            "alpha" => match payload.strip_prefix("string:") {
                Some("") => Body::Alpha {
                    schedule: AlphaSchedule::PerRound(vec![]),
                },
                Some(rest) => Body::Alpha {
                    schedule: AlphaSchedule::PerRound(rest.split(';').map(int).collect::<Result<_>>()?),
                },
                None => Body::Alpha {
                    schedule: AlphaSchedule::Fixed(int(payload)?),
                },
            },
            other => return contract(format!("unknown message kind {other:?}")),
        })
    }
}

/// One broadcast. `cites` lists the sequence numbers of earlier messages
/// whose content this message was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub seq: usize,
    pub round: Option<usize>,
    pub step: u8,
    pub sender: Party,
    pub body: Body,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cites: Vec<usize>,
}

impl Message {
    /// `round, step, sender, kind, payload`, with citations appended to the
    /// payload as `|cites=3;7`.
    pub fn to_line(&self) -> String {
        let round = self.round.map_or_else(|| "-".to_string(), |r| r.to_string());
        let mut payload = self.body.payload();
        if !self.cites.is_empty() {
            let cites: Vec<String> = self.cites.iter().map(usize::to_string).collect();
            payload.push_str("|cites=");
            payload.push_str(&cites.join(";"));
        }
        format!(
            "{round}, {}, {}, {}, {payload}",
            self.step,
            self.sender,
            self.body.kind()
        )
    }

    pub fn parse_line(seq: usize, line: &str) -> Result<Message> {
        let fields: Vec<&str> = line.splitn(5, ", ").collect();
        let [round, step, sender, kind, payload] = fields[..] else {
            return contract(format!("line {seq}: expected 5 fields"));
        };
        let round = match round {
            "-" => None,
            r => Some(r.parse().or_else(|_| contract(format!("line {seq}: bad round")))?),
        };
        let step = step.parse().or_else(|_| contract(format!("line {seq}: bad step")))?;
        let sender = match sender {
            "Alice" => Party::Alice,
            "Bob" => Party::Bob,
            "Charlie" => Party::Charlie,
            other => return contract(format!("line {seq}: unknown sender {other:?}")),
        };
        let (payload, cites) = match payload.split_once("|cites=") {
            Some((p, c)) => (
                p,
                c.split(';')
                    .map(|x| x.parse().or_else(|_| contract(format!("line {seq}: bad citation"))))
                    .collect::<Result<Vec<usize>>>()?,
            ),
            None => (payload, Vec::new()),
        };
        Ok(Message {
            seq,
            round,
            step,
            sender,
            body: Body::parse(kind, payload)?,
            cites,
        })
    }
}

/// Append-only broadcast log. Every party, and any eavesdropper, sees the
/// same prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BroadcastLog {
    messages: Vec<Message>,
}

impl BroadcastLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn post(&mut self, round: Option<usize>, step: u8, sender: Party, body: Body, cites: Vec<usize>) -> usize {
        let seq = self.messages.len();
        self.messages.push(Message {
            seq,
            round,
            step,
            sender,
            body,
            cites,
        });
        seq
    }

    pub fn from_messages(messages: Vec<Message>) -> Self {
        BroadcastLog { messages }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// One message per line after a `#` header carrying the schema version.
    pub fn to_lines(&self) -> String {
        let mut out = format!("# qss transcript schema_version={}\n", crate::SCHEMA_VERSION);
        for m in &self.messages {
            out.push_str(&m.to_line());
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        let messages = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .enumerate()
            .map(|(i, l)| Message::parse_line(i, l))
            .collect::<Result<_>>()?;
        Ok(BroadcastLog { messages })
    }

    /// Public facts a passive observer can recover from the log.
    pub fn public_view(messages: &[Message]) -> PublicView {
        let mut view = PublicView::default();
        for m in messages {
            match (&m.body, m.round) {
                (Body::SiftMask { bits }, _) => view.mask = Some(bits.clone()),
                (Body::Alpha { schedule }, _) => view.alpha = Some(schedule.clone()),
                (Body::Direction { direction }, Some(r)) => match m.sender {
                    Party::Bob => {
                        view.bob_dirs.insert(r, *direction);
                    }
                    Party::Charlie => {
                        view.charlie_dirs.insert(r, *direction);
                    }
                    Party::Alice => {}
                },
                (Body::Abort { .. }, _) => view.aborted = true,
                _ => {}
            }
        }
        view
    }
}

/// What the public log says about the run so far.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PublicView {
    pub mask: Option<Vec<u8>>,
    pub alpha: Option<AlphaSchedule>,
    pub bob_dirs: std::collections::BTreeMap<usize, Direction>,
    pub charlie_dirs: std::collections::BTreeMap<usize, Direction>,
    pub aborted: bool,
}

impl PublicView {
    pub fn key_rounds(&self) -> Vec<usize> {
        self.mask
            .as_ref()
            .map(|m| m.iter().enumerate().filter(|(_, &b)| b == 0).map(|(i, _)| i).collect())
            .unwrap_or_default()
    }
}

/// A causality or ordering problem found by [`audit_messages`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub seq: usize,
    pub reason: String,
}

/// Checks that no message depends on a later one and that the test-round
/// announcements follow the order Alice requested.
pub fn audit_messages(messages: &[Message]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |seq: usize, reason: String| out.push(Violation { seq, reason });

    let mut receipts = [false, false];
    let mut mask_seen = false;
    let mut proceed_seen = false;
    let mut abort_seen = false;
    // round -> (order, number of announcements seen so far)
    let mut pending: std::collections::HashMap<usize, (AnnounceOrder, usize)> = Default::default();

    for (i, m) in messages.iter().enumerate() {
        if m.seq != i {
            flag(m.seq, format!("sequence number {} at position {i}", m.seq));
        }
        for &c in &m.cites {
            if c >= m.seq {
                flag(m.seq, format!("cites message {c}, which is not earlier"));
            }
        }
        if abort_seen {
            flag(m.seq, "message after abort".into());
        }
        match &m.body {
            Body::Receipt { .. } => match m.sender {
                Party::Bob => receipts[0] = true,
                Party::Charlie => receipts[1] = true,
                Party::Alice => flag(m.seq, "receipt from Alice".into()),
            },
            Body::SiftMask { .. } => {
                if !(receipts[0] && receipts[1]) {
                    flag(m.seq, "sift mask published before both receipts".into());
                }
                mask_seen = true;
            }
            Body::Order { order } => {
                if !mask_seen {
                    flag(m.seq, "order request before sift mask".into());
                }
                if let Some(r) = m.round {
                    pending.insert(r, (*order, 0));
                }
            }
            Body::Outcome { .. } | Body::Direction { .. } if m.step == 3 => {
                let Some(round) = m.round else {
                    flag(m.seq, "test announcement without a round".into());
                    continue;
                };
                match pending.get_mut(&round) {
                    None => flag(m.seq, format!("round {round} announcement without an order request")),
                    Some((order, pos)) => {
                        let expected = order.sequence().get(*pos).copied();
                        if expected != Some((m.sender, m.body.kind())) {
                            flag(
                                m.seq,
                                format!(
                                    "round {round}: {} {} out of the {} order",
                                    m.sender,
                                    m.body.kind(),
                                    order.as_str()
                                ),
                            );
                        }
                        *pos += 1;
                    }
                }
            }
            Body::Outcome { .. } => flag(m.seq, "outcome announced outside the test step".into()),
            Body::Direction { .. } => {
                if !proceed_seen {
                    flag(m.seq, "key-round direction before Alice let the run proceed".into());
                }
            }
            Body::Abort { .. } => abort_seen = true,
            Body::Proceed => proceed_seen = true,
            Body::Alpha { .. } => {
                if !proceed_seen {
                    flag(m.seq, "hidden value revealed before the test passed".into());
                }
            }
        }
    }
    for (round, (order, pos)) in pending {
        if pos != 4 {
            flag(
                usize::MAX,
                format!("round {round}: {pos} of 4 {} announcements", order.as_str()),
            );
        }
    }
    out.sort_by_key(|v| v.seq);
    out
}
