use rand::Rng;

use super::{EvolveError, Individual, Population};

/// Fitness-proportionate draw over `fitness`; uniform when every weight is 0.
pub fn wheel_index<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> Option<usize> {
    if fitness.is_empty() {
        return None;
    }
    let total: f64 = fitness.iter().map(|f| f.max(0.0)).sum();
    if total <= 0.0 {
        return Some(rng.gen_range(0..fitness.len()));
    }
    let spin = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, f) in fitness.iter().enumerate() {
        let f = f.max(0.0);
        if f > 0.0 {
            acc += f;
            last_positive = idx;
            if spin < acc {
                return Some(idx);
            }
        }
    }
    // Rounding can leave `spin` a hair above the final partial sum.
    Some(last_positive)
}

/// Roulette-wheel selection over an evaluated pool.
pub fn select_wheel<'a, R: Rng + ?Sized>(
    pool: &[&'a Individual],
    rng: &mut R,
) -> Result<&'a Individual, EvolveError> {
    let fitness = pool
        .iter()
        .enumerate()
        .map(|(i, m)| m.fitness().ok_or(EvolveError::Unevaluated(i)))
        .collect::<Result<Vec<_>, _>>()?;
    wheel_index(&fitness, rng)
        .map(|i| pool[i])
        .ok_or(EvolveError::EmptyPool)
}

/// Indices of the `n` fittest members, fittest first; ties keep member order.
pub fn n_best_indices(pop: &Population, n: usize) -> Result<Vec<usize>, EvolveError> {
    if n > pop.len() {
        return Err(EvolveError::NotEnoughMembers {
            requested: n,
            available: pop.len(),
        });
    }
    let mut ranked = pop
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| m.fitness().map(|f| (i, f)).ok_or(EvolveError::Unevaluated(i)))
        .collect::<Result<Vec<_>, _>>()?;
    // sort_by is stable, so equal fitness keeps the lower index first
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked.into_iter().take(n).map(|(i, _)| i).collect())
}

pub fn n_best(pop: &Population, n: usize) -> Result<Vec<&Individual>, EvolveError> {
    Ok(n_best_indices(pop, n)?
        .into_iter()
        .map(|i| &pop.members[i])
        .collect())
}
