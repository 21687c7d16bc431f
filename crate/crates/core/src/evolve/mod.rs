//! Populations, selectors, genetic operators and declarative breeding plans.

mod breed;
mod individual;
mod operators;
mod select;
mod space;
mod strategy;

pub use breed::{
    breed_next_generation, evaluate_population, evaluate_unscored, summarize, EvalError, Evaluator,
    GenerationStats,
};
pub use individual::{Individual, Origin, Population};
pub use operators::{crossover, mutate, CROSSOVER_RETRIES};
pub use select::{n_best, n_best_indices, select_wheel, wheel_index};
pub use space::{HelperGuard, ProgramSpace, DEFAULT_REBUILD_ATTEMPTS};
pub use strategy::{
    EvolutionStrategy, Operator, Pool, SelectorBinding, SelectorKind, StrategyStep,
};

use thiserror::Error;

use crate::program::ConfigError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("selection pool is empty")]
    EmptyPool,
    #[error("asked for the {requested} best of {available} members")]
    NotEnoughMembers { requested: usize, available: usize },
    #[error("member {0} has not been evaluated")]
    Unevaluated(usize),
    #[error("strategy counts sum to {total}, population capacity is {capacity}")]
    CapacityMismatch { total: usize, capacity: usize },
    #[error("strategy step uses undefined selector `{0}`")]
    UnknownSelector(String),
    #[error("{0:?} step needs a selector")]
    MissingSelector(Operator),
    #[error("selector `{0}` has an empty pool")]
    EmptySelectorPool(String),
    #[error("strategy file: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
