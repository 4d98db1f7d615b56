//! Simulation and numerical verification of a three-party, d-level quantum
//! secret sharing protocol built on GHZ-like states and two mutually unbiased
//! bases.
//!
//! The crate is layered bottom-up:
//!
//! * [`math`]: dense complex linear algebra over qudit registers, modular
//!   residues and seeded sampling streams.
//! * [`mub`]: generalized Pauli operators, the X and Y eigenbases and the
//!   local phase unitary `U`.
//! * [`ghz`]: the GHZ-like states, their equivalences and the common
//!   eigenspace (uniqueness) check.
//! * [`measurement`]: Born-rule measurement with collapse, Alice's basis rule
//!   and the `s + t + u = alpha (mod d)` correlation.
//! * [`protocol`]: the full run as a state machine over an authenticated
//!   broadcast log, with transcript auditing.
//! * [`adversary`]: attack strategies and Monte Carlo detection estimates.

pub mod adversary;
pub mod error;
pub mod ghz;
pub mod math;
pub mod measurement;
pub mod mub;
pub mod protocol;
pub mod stats;

pub use adversary::{detection_analytic, estimate_detection, AdversaryKind, DetectionEstimate};
pub use error::{QssError, Result};
pub use ghz::{GhzForm, GhzSpec};
pub use math::{rng_stream, Dim, Operator, PureState, Sampler, ZMod};
pub use measurement::{MeasOutcome, Party};
pub use mub::{BasisLabel, Direction, MeasBasis};
pub use protocol::{run_protocol, AlphaMode, ProtocolConfig, RunReport};

/// Version tag written into every serialized report.
pub const SCHEMA_VERSION: u32 = 1;
