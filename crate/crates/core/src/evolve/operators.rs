use rand::seq::SliceRandom;
use rand::Rng;

use crate::program::{grow, PrimitiveSet, ProgramTree};

/// Grafting attempts before crossover gives up and returns the first parent.
pub const CROSSOVER_RETRIES: usize = 16;

fn budget_at(max_depth: usize, level: usize) -> usize {
    (max_depth + 1).saturating_sub(level).max(1)
}

/// Subtree mutation: a uniformly chosen node is replaced by a freshly grown
/// subtree of the same sort that keeps the whole tree within `max_depth`.
pub fn mutate<R: Rng + ?Sized>(
    tree: &ProgramTree,
    prims: &PrimitiveSet,
    max_depth: usize,
    rng: &mut R,
) -> ProgramTree {
    let nodes = tree.nodes();
    let index = rng.gen_range(0..nodes.len());
    let (node, level) = nodes[index];
    let replacement = grow(prims, node.sort(), budget_at(max_depth, level), rng)
        .expect("primitive set has a leaf for every reachable sort");
    tree.replace(index, replacement)
}

/// Subtree crossover producing one child from `a`.
///
/// A node of `a` is chosen uniformly and replaced by a uniformly chosen
/// subtree of `b` with the same sort that fits the remaining depth. Falls
/// back to a copy of `a` after [`CROSSOVER_RETRIES`] fruitless draws.
pub fn crossover<R: Rng + ?Sized>(
    a: &ProgramTree,
    b: &ProgramTree,
    max_depth: usize,
    rng: &mut R,
) -> ProgramTree {
    let a_nodes = a.nodes();
    let b_nodes = b.nodes();
    for _ in 0..CROSSOVER_RETRIES {
        let index = rng.gen_range(0..a_nodes.len());
        let (target, level) = a_nodes[index];
        let room = budget_at(max_depth, level);
        let donors: Vec<_> = b_nodes
            .iter()
            .filter(|(n, _)| n.sort() == target.sort() && n.depth() <= room)
            .collect();
        if let Some((donor, _)) = donors.choose(rng) {
            return a.replace(index, (*donor).clone());
        }
    }
    a.clone()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::program::{build_random_tree, deserialize, ConstantSource, NodeKind, Sort};

    fn numeric() -> PrimitiveSet {
        PrimitiveSet::new(
            vec![
                NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::function("mul", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::terminal("x", Sort::Number),
                NodeKind::constant(Sort::Number),
            ],
            Sort::Number,
            BTreeMap::from([(Sort::Number, ConstantSource::Uniform { lo: 0.0, hi: 1.0 })]),
        )
        .unwrap()
    }

    #[test]
    fn mutating_a_lone_terminal_yields_a_terminal() {
        let p = PrimitiveSet::new(
            vec![
                NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::terminal("x", Sort::Number),
                NodeKind::terminal("y", Sort::Number),
            ],
            Sort::Number,
            BTreeMap::new(),
        )
        .unwrap();
        let t = deserialize("(x)", &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = mutate(&t, &p, 1, &mut rng);
            assert_eq!(m.size(), 1);
            assert_eq!(m.sort(), Sort::Number);
        }
    }

    #[test]
    fn self_crossover_stays_valid() {
        let p = numeric();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let t = build_random_tree(&p, 3, &mut rng).unwrap();
            let child = crossover(&t, &t, 3, &mut rng);
            child.validate(&p, Some(3)).unwrap();
        }
    }

    #[test]
    fn incompatible_sorts_fall_back_to_first_parent() {
        // a is all Number; b is rooted in a Boolean but only carries Action below it.
        let p = PrimitiveSet::new(
            vec![
                NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::function("did", &[Sort::Action], Sort::Boolean),
                NodeKind::terminal("x", Sort::Number),
                NodeKind::terminal("go", Sort::Action),
                NodeKind::terminal("yes", Sort::Boolean),
            ],
            Sort::Number,
            BTreeMap::new(),
        )
        .unwrap();
        let a = deserialize("(add (x) (add (x) (x)))", &p).unwrap();
        let did = p.kind("did").unwrap().clone();
        let go = p.kind("go").unwrap().clone();
        let b = ProgramTree::new(crate::program::Node::apply(
            did,
            vec![crate::program::Node::leaf(go)],
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(crossover(&a, &b, 3, &mut rng), a);
        }
    }

    #[test]
    fn crossover_respects_depth_room() {
        let p = numeric();
        let shallow = deserialize("(add (x) (x))", &p).unwrap();
        let deep = deserialize("(add (mul (x) (x)) (mul (x) (x)))", &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            assert!(crossover(&shallow, &deep, 2, &mut rng).depth() <= 2);
            assert!(crossover(&deep, &deep, 3, &mut rng).depth() <= 3);
        }
    }
}
