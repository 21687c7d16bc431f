use rand::seq::index::sample;
use rand::Rng;

use super::envelope::MigrantEnvelope;
use super::policy::MigrationPolicy;
use crate::evolve::{Individual, Origin, Population, ProgramSpace};
use crate::program::{deserialize_bounded, ConfigError};

/// Copies of `round(rate * capacity)` distinct members chosen uniformly at
/// random. The population is left untouched.
pub fn select_emigrants<R: Rng + ?Sized>(
    pop: &Population,
    policy: &MigrationPolicy,
    rng: &mut R,
) -> Vec<MigrantEnvelope> {
    let count = policy.count(pop.capacity).min(pop.len());
    sample(rng, pop.len(), count)
        .into_iter()
        .map(|i| MigrantEnvelope::from_tree(pop.members[i].tree()))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdmitReport {
    pub admitted: usize,
    pub malformed: usize,
}

/// Appends every envelope that decodes to a valid program of this island's
/// space as an unevaluated immigrant; the rest are counted and dropped.
pub fn admit_immigrants(
    pop: &mut Population,
    envelopes: &[MigrantEnvelope],
    space: &ProgramSpace,
) -> AdmitReport {
    let mut report = AdmitReport::default();
    for envelope in envelopes {
        match deserialize_bounded(&envelope.payload, &space.prims, space.max_depth) {
            Ok(tree) => {
                pop.members.push(Individual::new(tree, Origin::Immigrant));
                report.admitted += 1;
            }
            Err(e) => {
                log::debug!("dropping immigrant: {e}");
                report.malformed += 1;
            }
        }
    }
    report
}

/// On an event generation, appends `round(rate * capacity)` fresh random
/// programs (built under the space's helper, if any). Returns how many were
/// added.
pub fn inject_random<R: Rng + ?Sized>(
    pop: &mut Population,
    policy: &MigrationPolicy,
    generation: u64,
    space: &ProgramSpace,
    rng: &mut R,
) -> Result<usize, ConfigError> {
    if !policy.is_event(generation) {
        return Ok(0);
    }
    let count = policy.count(pop.capacity);
    for _ in 0..count {
        let (ind, rejections) = space.random_individual(Origin::RandomInjected, rng)?;
        pop.helper_rejections += rejections;
        pop.helper_fallbacks += usize::from(ind.guard_fallback);
        pop.members.push(ind);
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::program::{ConstantSource, NodeKind, PrimitiveSet, Sort};

    fn space() -> ProgramSpace {
        ProgramSpace::new(
            PrimitiveSet::new(
                vec![
                    NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                    NodeKind::terminal("x", Sort::Number),
                    NodeKind::constant(Sort::Number),
                ],
                Sort::Number,
                BTreeMap::from([(Sort::Number, ConstantSource::Uniform { lo: 0.0, hi: 1.0 })]),
            )
            .unwrap(),
            3,
        )
    }

    fn pop(rng: &mut ChaCha8Rng) -> Population {
        space().initial_population(10, rng).unwrap()
    }

    #[test]
    fn emigrant_counts_follow_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = pop(&mut rng);
        assert_eq!(select_emigrants(&p, &MigrationPolicy::migrate(5, 0.3), &mut rng).len(), 3);
        assert_eq!(select_emigrants(&p, &MigrationPolicy::migrate(5, 0.1), &mut rng).len(), 1);
    }

    #[test]
    fn emigration_does_not_touch_the_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = pop(&mut rng);
        let before = p.clone();
        let _ = select_emigrants(&p, &MigrationPolicy::migrate(5, 0.3), &mut rng);
        assert_eq!(p, before);
    }

    #[test]
    fn valid_immigrants_are_appended() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let donor = pop(&mut rng);
        let mut p = pop(&mut rng);
        let envs = select_emigrants(&donor, &MigrationPolicy::migrate(5, 0.3), &mut rng);
        let report = admit_immigrants(&mut p, &envs, &space());
        assert_eq!(report, AdmitReport { admitted: 3, malformed: 0 });
        assert_eq!(p.len(), 13);
        assert_eq!(p.count_origin(Origin::Immigrant), 3);
        assert!(p.members[10..].iter().all(|m| m.fitness().is_none()));
    }

    #[test]
    fn malformed_immigrants_are_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = pop(&mut rng);
        let bad = [MigrantEnvelope {
            payload: "(add (x))".into(),
        }];
        let report = admit_immigrants(&mut p, &bad, &space());
        assert_eq!(report, AdmitReport { admitted: 0, malformed: 1 });
        assert_eq!(p.len(), 10);
    }

    #[test]
    fn random_injection_only_on_events() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = space();
        let policy = MigrationPolicy::random(5, 0.3);
        let mut p = pop(&mut rng);
        assert_eq!(inject_random(&mut p, &policy, 4, &s, &mut rng).unwrap(), 0);
        assert_eq!(p.len(), 10);
        assert_eq!(inject_random(&mut p, &policy, 5, &s, &mut rng).unwrap(), 3);
        assert_eq!(p.count_origin(Origin::RandomInjected), 3);
        for m in &p.members {
            m.tree().validate(&s.prims, Some(3)).unwrap();
        }
    }
}
