use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{Individual, Origin, Population};
use crate::program::{build_random_tree, ConfigError, PrimitiveSet, ProgramTree};

pub const DEFAULT_REBUILD_ATTEMPTS: usize = 64;

type Predicate = dyn Fn(&ProgramTree) -> bool + Send + Sync;

/// Generation-time validity check applied to every newly built program.
#[derive(Clone)]
pub struct HelperGuard {
    predicate: Arc<Predicate>,
    pub max_rebuild_attempts: usize,
}

impl HelperGuard {
    pub fn new(predicate: impl Fn(&ProgramTree) -> bool + Send + Sync + 'static) -> Self {
        Self {
            predicate: Arc::new(predicate),
            max_rebuild_attempts: DEFAULT_REBUILD_ATTEMPTS,
        }
    }

    pub fn with_attempts(mut self, attempts: usize) -> Self {
        self.max_rebuild_attempts = attempts;
        self
    }

    pub fn accepts(&self, tree: &ProgramTree) -> bool {
        (self.predicate)(tree)
    }
}

impl fmt::Debug for HelperGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HelperGuard")
            .field("max_rebuild_attempts", &self.max_rebuild_attempts)
            .finish_non_exhaustive()
    }
}

/// Outcome of building one program under an optional guard.
#[derive(Debug)]
pub(crate) struct Guarded {
    pub tree: ProgramTree,
    pub rejections: usize,
    pub fallback: bool,
}

/// The space programs live in: primitives, depth bound and optional helper.
#[derive(Clone, Debug)]
pub struct ProgramSpace {
    pub prims: Arc<PrimitiveSet>,
    pub max_depth: usize,
    pub guard: Option<HelperGuard>,
}

impl ProgramSpace {
    pub fn new(prims: PrimitiveSet, max_depth: usize) -> Self {
        Self {
            prims: Arc::new(prims),
            max_depth,
            guard: None,
        }
    }

    pub fn with_guard(mut self, guard: HelperGuard) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn without_guard(mut self) -> Self {
        self.guard = None;
        self
    }

    /// Runs `make` until the guard accepts, up to `1 + max_rebuild_attempts`
    /// candidates; the final candidate is admitted regardless.
    pub(crate) fn guarded<R, F>(&self, rng: &mut R, mut make: F) -> Result<Guarded, ConfigError>
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R) -> Result<ProgramTree, ConfigError>,
    {
        let mut tree = make(rng)?;
        let Some(guard) = &self.guard else {
            return Ok(Guarded {
                tree,
                rejections: 0,
                fallback: false,
            });
        };
        let mut rejections = 0;
        loop {
            if guard.accepts(&tree) {
                return Ok(Guarded {
                    tree,
                    rejections,
                    fallback: false,
                });
            }
            rejections += 1;
            if rejections > guard.max_rebuild_attempts {
                return Ok(Guarded {
                    tree,
                    rejections,
                    fallback: true,
                });
            }
            tree = make(rng)?;
        }
    }

    pub(crate) fn random_guarded<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Guarded, ConfigError> {
        self.guarded(rng, |rng| build_random_tree(&self.prims, self.max_depth, rng))
    }

    /// A fresh random program that passed the guard (or exhausted it).
    pub fn random_individual<R: Rng + ?Sized>(
        &self,
        origin: Origin,
        rng: &mut R,
    ) -> Result<(Individual, usize), ConfigError> {
        let built = self.random_guarded(rng)?;
        let mut ind = Individual::new(built.tree, origin);
        ind.guard_fallback = built.fallback;
        Ok((ind, built.rejections))
    }

    /// Generation-0 population of `capacity` random programs.
    pub fn initial_population<R: Rng + ?Sized>(
        &self,
        capacity: usize,
        rng: &mut R,
    ) -> Result<Population, ConfigError> {
        let mut pop = Population::new(Vec::with_capacity(capacity), capacity);
        for _ in 0..capacity {
            let (ind, rejections) = self.random_individual(Origin::Local, rng)?;
            pop.helper_rejections += rejections;
            pop.helper_fallbacks += usize::from(ind.guard_fallback);
            pop.members.push(ind);
        }
        Ok(pop)
    }
}
