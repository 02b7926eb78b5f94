//! Kinetic Monte Carlo toolkit for an Ising chain protected by
//! domain-wall swap protocols.
//!
//! The chain and its dual lattice live in [`lattice`]; [`bath`] holds the
//! thermal rates and the incremental event catalog; [`protocol`] and
//! [`matchseq`] build and verify gate sequences; [`engine`] runs trials;
//! [`oracle`] gives exact answers on small chains.

pub mod analysis;
pub mod bath;
pub mod engine;
pub mod error;
pub mod lattice;
pub mod matchseq;
pub mod oracle;
pub mod protocol;
pub mod stats;
pub mod sweep;
pub mod syndrome;

pub use bath::{EventCatalog, EventKind, RateModel, SpectralBath};
pub use engine::{
    estimate_lifetime, run_trial, Absorbing, GateClock, InitialState, LifetimeEstimate, SimConfig, TrialResult,
};
pub use error::{Error, Result};
pub use lattice::{ChainState, Gate, GateKind, Spin};
pub use matchseq::{constructive_strategy, pairing_number_bfs, Graph, Strategy};
pub use protocol::{generate_lambda_mixing, verify_protocol, GateSequence, Mode, ProtocolSchedule};
