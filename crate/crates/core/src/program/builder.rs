use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::primitives::{Category, ConfigError, NodeKind, PrimitiveSet, Sort};
use super::tree::{Node, ProgramTree};

/// Grow-style random tree of the primitive set's root sort.
///
/// Every node picks uniformly among all kinds producing the required sort;
/// once the depth budget reaches 1 only terminals and constants qualify.
pub fn build_random_tree<R: Rng + ?Sized>(
    prims: &PrimitiveSet,
    max_depth: usize,
    rng: &mut R,
) -> Result<ProgramTree, ConfigError> {
    grow(prims, prims.root(), max_depth, rng).map(ProgramTree::new)
}

/// Grows a subtree producing `sort` whose depth is at most `budget`.
pub fn grow<R: Rng + ?Sized>(
    prims: &PrimitiveSet,
    sort: Sort,
    budget: usize,
    rng: &mut R,
) -> Result<Node, ConfigError> {
    if budget == 0 {
        return Err(ConfigError::ZeroDepth);
    }
    let mut candidates: Vec<&Arc<NodeKind>> = prims.leaves_of(sort).collect();
    if candidates.is_empty() {
        return Err(ConfigError::NoTerminal(sort));
    }
    if budget > 1 {
        candidates.extend(prims.functions_of(sort));
    }
    let kind = (*candidates.choose(rng).expect("non-empty")).clone();
    match kind.category {
        Category::Terminal => Ok(Node::leaf(kind)),
        Category::Constant => {
            let source = prims
                .constant_source(sort)
                .ok_or(ConfigError::MissingConstantSource(sort))?;
            let value = source.sample(rng);
            Ok(Node::constant(kind, value))
        }
        Category::Function => {
            let children = kind
                .arg_sorts
                .iter()
                .map(|&arg| grow(prims, arg, budget - 1, rng))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Node::apply(kind, children))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::program::ConstantSource;

    #[test]
    fn single_terminal_is_forced() {
        let prims = PrimitiveSet::new(
            vec![NodeKind::terminal("latitude", Sort::Number)],
            Sort::Number,
            BTreeMap::new(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = build_random_tree(&prims, 1, &mut rng).unwrap();
        assert_eq!(tree.size(), 1);
        assert_eq!(tree.root().kind.name, "latitude");
    }

    #[test]
    fn zero_depth_is_a_config_error() {
        let prims = PrimitiveSet::new(
            vec![NodeKind::terminal("x", Sort::Number)],
            Sort::Number,
            BTreeMap::new(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            build_random_tree(&prims, 0, &mut rng).unwrap_err(),
            ConfigError::ZeroDepth
        );
    }

    #[test]
    fn mixed_sorts_stay_sort_correct() {
        let prims = PrimitiveSet::new(
            vec![
                NodeKind::function(
                    "if_greater",
                    &[Sort::Number, Sort::Number, Sort::Action, Sort::Action],
                    Sort::Action,
                ),
                NodeKind::function("seq", &[Sort::Action, Sort::Action], Sort::Action),
                NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::terminal("go", Sort::Action),
                NodeKind::terminal("x", Sort::Number),
                NodeKind::constant(Sort::Number),
            ],
            Sort::Action,
            BTreeMap::from([(Sort::Number, ConstantSource::Choice(vec![1.0, 2.0]))]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let tree = build_random_tree(&prims, 4, &mut rng).unwrap();
            tree.validate(&prims, Some(4)).unwrap();
        }
    }
}
