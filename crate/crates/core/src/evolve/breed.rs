use std::collections::HashMap;

use log::warn;
use rand::Rng;
use thiserror::Error;

use super::operators::{crossover, mutate};
use super::select::{n_best_indices, wheel_index};
use super::space::ProgramSpace;
use super::strategy::{EvolutionStrategy, Operator, Pool};
use super::{EvolveError, Individual, Origin, Population};
use crate::program::{build_random_tree, ProgramTree};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("evaluation failed: {0}")]
pub struct EvalError(pub String);

/// Application fitness callback.
pub trait Evaluator {
    /// Fitness in `[0, 1]`.
    fn evaluate(&mut self, tree: &ProgramTree) -> Result<f64, EvalError>;
}

impl<F> Evaluator for F
where
    F: FnMut(&ProgramTree) -> Result<f64, EvalError>,
{
    fn evaluate(&mut self, tree: &ProgramTree) -> Result<f64, EvalError> {
        self(tree)
    }
}

impl Evaluator for Box<dyn Evaluator + Send> {
    fn evaluate(&mut self, tree: &ProgramTree) -> Result<f64, EvalError> {
        (**self).evaluate(tree)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GenerationStats {
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub mean_size: f64,
    pub mean_depth: f64,
    pub helper_rejections: usize,
    pub evaluation_failures: usize,
}

/// Scores every member (elite copies included). Failures and out-of-range
/// scores are logged and recorded as 0.
pub fn evaluate_population<E: Evaluator + ?Sized>(
    pop: &mut Population,
    evaluator: &mut E,
) -> GenerationStats {
    for member in &mut pop.members {
        member.clear_fitness();
    }
    let failures = evaluate_unscored(pop, evaluator);
    let mut stats = summarize(pop);
    stats.evaluation_failures = failures;
    stats
}

/// Scores only members without a fitness (e.g. freshly admitted immigrants)
/// and returns how many evaluations failed.
pub fn evaluate_unscored<E: Evaluator + ?Sized>(pop: &mut Population, evaluator: &mut E) -> usize {
    let mut failures = 0;
    for (idx, member) in pop.members.iter_mut().enumerate() {
        if member.fitness().is_some() {
            continue;
        }
        let fitness = match evaluator.evaluate(member.tree()) {
            Ok(f) if (0.0..=1.0).contains(&f) => f,
            Ok(f) => {
                warn!("member {idx}: fitness {f} outside [0, 1], scoring 0");
                failures += 1;
                0.0
            }
            Err(e) => {
                warn!("member {idx}: {e}, scoring 0");
                failures += 1;
                0.0
            }
        };
        member.set_fitness(fitness);
    }
    failures
}

/// Aggregates over the current members; unevaluated members count as 0.
pub fn summarize(pop: &Population) -> GenerationStats {
    let n = pop.members.len();
    if n == 0 {
        return GenerationStats {
            helper_rejections: pop.helper_rejections,
            ..GenerationStats::default()
        };
    }
    let nf = n as f64;
    let fitness = pop.members.iter().map(|m| m.fitness().unwrap_or(0.0));
    GenerationStats {
        max_fitness: fitness.clone().fold(0.0, f64::max),
        mean_fitness: fitness.sum::<f64>() / nf,
        mean_size: pop.members.iter().map(|m| m.size() as f64).sum::<f64>() / nf,
        mean_depth: pop.members.iter().map(|m| m.depth() as f64).sum::<f64>() / nf,
        helper_rejections: pop.helper_rejections,
        evaluation_failures: 0,
    }
}

/// Produces generation `g + 1` by executing the strategy steps in order.
///
/// Every member of `pop` must be evaluated. Each selector's pool is fixed
/// from the parent generation before any step runs.
pub fn breed_next_generation<R: Rng + ?Sized>(
    pop: &Population,
    strategy: &EvolutionStrategy,
    space: &ProgramSpace,
    rng: &mut R,
) -> Result<Population, EvolveError> {
    strategy.validate(pop.capacity)?;
    if pop.is_empty() {
        return Err(EvolveError::EmptyPool);
    }
    let fitness = pop
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| m.fitness().ok_or(EvolveError::Unevaluated(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pools: HashMap<&str, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for binding in &strategy.selectors {
        let indices = match binding.pool {
            Pool::NBest(n) => n_best_indices(pop, n.min(pop.len()))?,
            Pool::All => (0..pop.len()).collect(),
        };
        let weights = indices.iter().map(|&i| fitness[i]).collect();
        pools.insert(binding.name.as_str(), (indices, weights));
    }

    let mut next = Population::new(Vec::with_capacity(pop.capacity), pop.capacity);
    next.generation = pop.generation + 1;

    let pick = |name: &Option<String>, rng: &mut R| -> Result<&Individual, EvolveError> {
        let name = name.as_deref().unwrap_or_default();
        let (indices, weights) = pools
            .get(name)
            .ok_or_else(|| EvolveError::UnknownSelector(name.to_string()))?;
        let slot = wheel_index(weights, rng).ok_or(EvolveError::EmptyPool)?;
        Ok(&pop.members[indices[slot]])
    };

    for step in &strategy.steps {
        for _ in 0..step.count {
            if step.operator == Operator::Copy {
                let mut elite = pick(&step.selector, rng)?.clone();
                elite.origin = Origin::EliteCopy;
                next.members.push(elite);
                continue;
            }
            let built = space.guarded(rng, |rng| {
                Ok(match step.operator {
                    Operator::Random => build_random_tree(&space.prims, space.max_depth, rng)?,
                    Operator::Mutation => {
                        let parent = pick(&step.selector, rng).expect("validated selector");
                        mutate(parent.tree(), &space.prims, space.max_depth, rng)
                    }
                    Operator::Crossover => {
                        let a = pick(&step.selector, rng).expect("validated selector");
                        let b = pick(&step.selector, rng).expect("validated selector");
                        crossover(a.tree(), b.tree(), space.max_depth, rng)
                    }
                    Operator::Copy => unreachable!(),
                })
            })?;
            let origin = match step.operator {
                Operator::Random => Origin::RandomInjected,
                _ => Origin::Local,
            };
            let mut child = Individual::new(built.tree, origin);
            child.guard_fallback = built.fallback;
            next.helper_rejections += built.rejections;
            next.helper_fallbacks += usize::from(built.fallback);
            next.members.push(child);
        }
    }
    Ok(next)
}
