use islandgp::program::{Category, Node, PrimitiveSet, Sort};

/// Every tree of `sort` with depth at most `depth`, constants drawn from
/// `constants`.
pub fn enumerate(prims: &PrimitiveSet, sort: Sort, depth: usize, constants: &[f64]) -> Vec<Node> {
    let mut out = Vec::new();
    for kind in prims.kinds().filter(|k| k.result == sort) {
        match kind.category {
            Category::Terminal => out.push(Node::leaf(kind.clone())),
            Category::Constant => {
                out.extend(constants.iter().map(|&c| Node::constant(kind.clone(), c)));
            }
            Category::Function if depth > 1 => {
                let options: Vec<Vec<Node>> = kind
                    .arg_sorts
                    .iter()
                    .map(|&s| enumerate(prims, s, depth - 1, constants))
                    .collect();
                let mut combos: Vec<Vec<Node>> = vec![Vec::new()];
                for opts in &options {
                    combos = combos
                        .into_iter()
                        .flat_map(|prefix| {
                            opts.iter().map(move |o| {
                                let mut next = prefix.clone();
                                next.push(o.clone());
                                next
                            })
                        })
                        .collect();
                }
                out.extend(combos.into_iter().map(|c| Node::apply(kind.clone(), c)));
            }
            Category::Function => {}
        }
    }
    out
}
