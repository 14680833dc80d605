//! Streaming Hidden Matching with a simulated quantum pair sketch.
//!
//! The crate is layered bottom-up:
//!
//! * [`statevector`]: dense state simulation, projective measurement and
//!   Pauli-trajectory noise.
//! * [`circuit`]: multi-controlled X lowering to Clifford+T and gate tallies.
//! * [`sketch`]: the quantum pair sketch (`create`, `query_one`,
//!   `query_pair`, `update`).
//! * [`instance`]: Hidden Matching instances and their update streams.
//! * [`wire`]: the framed TCP protocol that serves a stream to a client.
//! * [`runner`]: quantum and classical shots, exact outcome distributions.
//! * [`classical`], [`boosting`], [`estimator`]: closed-form space bounds,
//!   majority-vote analysis and fault-tolerant resource estimates.

pub mod boosting;
pub mod circuit;
pub mod classical;
pub mod estimator;
pub mod instance;
pub mod rng;
pub mod runner;
pub mod sketch;
pub mod stats;
pub mod statevector;
pub mod wire;

pub use instance::{Alpha, Case, HmInstance, StreamUpdate};
pub use runner::{OutcomeDistribution, SketchOutcome, Verdict};
pub use statevector::{Control, GateOp, NoiseConfig, QuantumState};
