use islandgp::apps::{feed, localisation};
use islandgp::program::{build_random_tree, deserialize, serialize, PrimitiveSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn feed_prims() -> PrimitiveSet {
    feed::primitive_set(&feed::FeedCatalog::default())
}

fn tree_of(prims: &PrimitiveSet, depth: usize, seed: u64) -> islandgp::ProgramTree {
    build_random_tree(prims, depth, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

const GOLDEN_SEED_42: &str = include_str!("golden/feed_depth3_seed42.txt");

#[test]
fn seed_42_feed_tree_matches_golden() {
    let prims = feed_prims();
    let tree = tree_of(&prims, 3, 42);
    assert!(tree.depth() <= 3);
    tree.validate(&prims, Some(3)).unwrap();
    assert_eq!(serialize(&tree), GOLDEN_SEED_42.trim_end());
}

#[test]
fn seed_42_localisation_sequence_matches_golden() {
    let prims = localisation::primitive_set();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for expected in include_str!("golden/localisation_depth4_seed42.txt").lines() {
        let tree = build_random_tree(&prims, 4, &mut rng).unwrap();
        assert_eq!(serialize(&tree), expected);
    }
}

#[test]
fn round_trip_thousand_trees_each_space() {
    for (prims, depth) in [(feed_prims(), 3), (localisation::primitive_set(), 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let tree = build_random_tree(&prims, depth, &mut rng).unwrap();
            let text = serialize(&tree);
            assert_eq!(deserialize(&text, &prims).unwrap(), tree, "{text}");
        }
    }
}

proptest! {
    #[test]
    fn build_is_deterministic_valid_and_round_trips(seed in any::<u64>(), depth in 1usize..6) {
        for prims in [feed_prims(), localisation::primitive_set()] {
            let a = tree_of(&prims, depth, seed);
            let b = tree_of(&prims, depth, seed);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.depth() <= depth);
            prop_assert!(a.validate(&prims, Some(depth)).is_ok());
            let text = serialize(&a);
            prop_assert_eq!(&serialize(&deserialize(&text, &prims).unwrap()), &text);
            prop_assert_eq!(deserialize(&text, &prims).unwrap(), a);
        }
    }

    #[test]
    fn decoder_never_panics(text in "\\PC{0,64}") {
        let _ = deserialize(&text, &feed_prims());
    }

    #[test]
    fn truncated_text_is_rejected(seed in any::<u64>(), cut in 1usize..40) {
        let prims = feed_prims();
        let text = serialize(&tree_of(&prims, 3, seed));
        prop_assume!(cut < text.len() && text.is_char_boundary(text.len() - cut));
        prop_assert!(deserialize(&text[..text.len() - cut], &prims).is_err());
    }
}
