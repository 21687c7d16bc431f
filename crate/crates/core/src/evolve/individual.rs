use crate::program::ProgramTree;

/// How a member entered its population.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Local,
    Immigrant,
    RandomInjected,
    EliteCopy,
}

/// A program with its fitness record and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    tree: ProgramTree,
    fitness: Option<f64>,
    size: usize,
    depth: usize,
    pub origin: Origin,
    /// Admitted after the helper's rebuild budget ran out.
    pub guard_fallback: bool,
}

impl Individual {
    pub fn new(tree: ProgramTree, origin: Origin) -> Self {
        Self {
            size: tree.size(),
            depth: tree.depth(),
            tree,
            fitness: None,
            origin,
            guard_fallback: false,
        }
    }

    pub fn tree(&self) -> &ProgramTree {
        &self.tree
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    /// Records a fitness, clamped into `[0, 1]`; NaN becomes 0.
    pub fn set_fitness(&mut self, fitness: f64) {
        self.fitness = Some(if fitness.is_nan() {
            0.0
        } else {
            fitness.clamp(0.0, 1.0)
        });
    }

    pub fn clear_fitness(&mut self) {
        self.fitness = None;
    }
}

/// Members of one island plus bookkeeping from the breed that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: u64,
    pub capacity: usize,
    /// Candidates the helper rejected while building this generation.
    pub helper_rejections: usize,
    /// Slots filled with a rejected candidate after the rebuild budget ran out.
    pub helper_fallbacks: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>, capacity: usize) -> Self {
        Self {
            members,
            generation: 0,
            capacity,
            helper_rejections: 0,
            helper_fallbacks: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Fittest evaluated member; ties go to the lowest index.
    pub fn best(&self) -> Option<&Individual> {
        super::n_best_indices(self, 1)
            .ok()
            .and_then(|idx| idx.first().map(|&i| &self.members[i]))
    }

    pub fn count_origin(&self, origin: Origin) -> usize {
        self.members.iter().filter(|m| m.origin == origin).count()
    }
}
