//! Island-model runtime.
//!
//! Each island owns one population. On migration generations islands
//! broadcast copies of randomly chosen members as anonymous text envelopes
//! over a best-effort transport and append whatever arrives.

mod envelope;
mod migration;
mod policy;
mod runtime;
mod transport;

pub use envelope::{EnvelopeError, MigrantEnvelope, WIRE_TAG};
pub use migration::{admit_immigrants, inject_random, select_emigrants, AdmitReport};
pub use policy::{MigrationMode, MigrationPolicy};
pub use runtime::{
    derive_seed, run_islands, DatagramConfig, IslandError, IslandRun, IslandSpec,
    IslandGenerationStats, TransportMode,
};
pub use transport::{SimEndpoint, SimulatedBus, Transport, UdpTransport};
