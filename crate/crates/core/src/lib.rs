//! Typed tree genetic programming with an island-model runtime.
//!
//! The crate is layered bottom-up:
//!
//! * [`program`] typed program trees, random construction, canonical text form
//! * [`interp`] tree-walking interpreter under a step/virtual-time supervisor
//! * [`evolve`] populations, wheel selection, mutation/crossover, strategies, helper guards
//! * [`island`] migration policy, anonymous envelopes, best-effort transports, lock-step runner
//! * [`apps`] the feed-personalisation and energy/accuracy localisation benchmarks
//! * [`harness`] repeated seeded experiments, CSV datasets, convergence comparison

pub mod apps;
pub mod evolve;
pub mod harness;
pub mod interp;
pub mod island;
pub mod program;

pub use evolve::{EvolutionStrategy, Individual, Origin, Population};
pub use program::{NodeKind, PrimitiveSet, ProgramTree, Sort};
