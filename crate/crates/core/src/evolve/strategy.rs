//! Declarative breeding plans.
//!
//! A strategy binds named wheel selectors to pools and lists generation
//! steps in order. The TOML form mirrors the command table:
//!
//! ```toml
//! [[selector]]
//! name = "HR"
//! pool = { n_best = 3 }
//!
//! [[selector]]
//! name = "Leader"
//! pool = { n_best = 1 }
//!
//! [[step]]
//! selector = "Leader"
//! operator = "COPY"
//! count = 1
//!
//! [[step]]
//! selector = "HR"
//! operator = "MUTATION"
//! count = 2
//! ```

use serde::{Deserialize, Serialize};

use super::EvolveError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    #[default]
    Wheel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    /// The `n` fittest members.
    NBest(usize),
    /// The whole population.
    All,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorBinding {
    pub name: String,
    #[serde(default)]
    pub kind: SelectorKind,
    pub pool: Pool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Operator {
    #[serde(alias = "mutation")]
    Mutation,
    #[serde(alias = "crossover")]
    Crossover,
    #[serde(alias = "copy")]
    Copy,
    #[serde(alias = "random")]
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyStep {
    /// Unused (and optional) for `RANDOM`.
    #[serde(default)]
    pub selector: Option<String>,
    pub operator: Operator,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionStrategy {
    #[serde(rename = "selector", default)]
    pub selectors: Vec<SelectorBinding>,
    #[serde(rename = "step")]
    pub steps: Vec<StrategyStep>,
}

impl EvolutionStrategy {
    pub fn new() -> Self {
        Self {
            selectors: Vec::new(),
            steps: Vec::new(),
        }
    }

    /// `setSelector(WHEEL, name, pool)`
    pub fn selector(mut self, name: &str, pool: Pool) -> Self {
        self.selectors.push(SelectorBinding {
            name: name.to_string(),
            kind: SelectorKind::Wheel,
            pool,
        });
        self
    }

    /// `generate(selector, operator, count)`
    pub fn generate(mut self, selector: &str, operator: Operator, count: usize) -> Self {
        self.steps.push(StrategyStep {
            selector: Some(selector.to_string()),
            operator,
            count,
        });
        self
    }

    pub fn random(mut self, count: usize) -> Self {
        self.steps.push(StrategyStep {
            selector: None,
            operator: Operator::Random,
            count,
        });
        self
    }

    /// Five members: the leader copied, two HR mutations, two HR crossovers.
    pub fn feed_standalone() -> Self {
        Self::new()
            .selector("HR", Pool::NBest(3))
            .selector("Leader", Pool::NBest(1))
            .generate("Leader", Operator::Copy, 1)
            .generate("HR", Operator::Mutation, 2)
            .generate("HR", Operator::Crossover, 2)
    }

    /// Twelve members: elite, four mutations, five crossovers, two random.
    pub fn localisation_standalone() -> Self {
        Self::new()
            .selector("HR", Pool::NBest(3))
            .selector("Leader", Pool::NBest(1))
            .generate("Leader", Operator::Copy, 1)
            .generate("HR", Operator::Mutation, 4)
            .generate("HR", Operator::Crossover, 5)
            .random(2)
    }

    /// Elite, three HR mutations, crossovers over the whole pool for the rest.
    pub fn island(capacity: usize) -> Self {
        Self::new()
            .selector("HR", Pool::NBest(3))
            .selector("Leader", Pool::NBest(1))
            .selector("Pool", Pool::All)
            .generate("Leader", Operator::Copy, 1)
            .generate("HR", Operator::Mutation, 3)
            .generate("Pool", Operator::Crossover, capacity.saturating_sub(4))
    }

    pub fn from_toml(text: &str) -> Result<Self, EvolveError> {
        toml::from_str(text).map_err(|e| EvolveError::Parse(e.to_string()))
    }

    pub fn total(&self) -> usize {
        self.steps.iter().map(|s| s.count).sum()
    }

    pub fn binding(&self, name: &str) -> Option<&SelectorBinding> {
        self.selectors.iter().find(|s| s.name == name)
    }

    /// Checks the plan against a population capacity.
    pub fn validate(&self, capacity: usize) -> Result<(), EvolveError> {
        let total = self.total();
        if total != capacity {
            return Err(EvolveError::CapacityMismatch { total, capacity });
        }
        for binding in &self.selectors {
            if binding.pool == Pool::NBest(0) {
                return Err(EvolveError::EmptySelectorPool(binding.name.clone()));
            }
        }
        for step in &self.steps {
            match (&step.selector, step.operator) {
                (_, Operator::Random) => {}
                (None, op) => return Err(EvolveError::MissingSelector(op)),
                (Some(name), _) => {
                    if self.binding(name).is_none() {
                        return Err(EvolveError::UnknownSelector(name.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Default for EvolutionStrategy {
    fn default() -> Self {
        Self::new()
    }
}
