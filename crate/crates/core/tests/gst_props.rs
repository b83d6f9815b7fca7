use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsboss::dataset::unroll;
use tsboss::gst::{naive_grow, naive_grow_shrink, GrowShrinkTree};
use tsboss::scoring::{compute_stats, Bic};
use tsboss::simgen::{sample_model, simulate, GenConfig};
use tsboss::NodeId;

fn instance(seed: u64, m: usize, tau: usize, t: usize) -> Bic {
    let cfg = GenConfig {
        n_vars: m,
        tau_max: tau.max(1),
        d: 1.0,
        t,
        ..GenConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = sample_model(&cfg, &mut rng).unwrap();
    let data = simulate(&model, t, 50, &mut rng).unwrap();
    let stats = compute_stats(&unroll(&data, tau).unwrap()).unwrap();
    Bic::new(&stats, 1.0).unwrap()
}

/// Best grow-then-shrink result by brute force: greedy grow over the
/// prefix, then the best-scoring subset of the grown set reachable by
/// steepest single removals.
fn exhaustive_greedy(bic: &Bic, target: NodeId, prefix: &BTreeSet<NodeId>) -> (BTreeSet<NodeId>, f64) {
    let (mut set, mut score) = naive_grow(bic, target, prefix);
    loop {
        let best = set
            .iter()
            .map(|&p| {
                let mut s = set.clone();
                s.remove(&p);
                let v = bic.local_score(target, &s).unwrap().value;
                (v, s)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((v, s)) if v > score => {
                set = s;
                score = v;
            }
            _ => return (set, score),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cached_queries_equal_naive_queries(seed in any::<u64>(), queries in prop::collection::vec(any::<u8>(), 1..40)) {
        let bic = instance(seed, 3, 1, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let target = NodeId::new(rng.random_range(0..3), 0);
        let mut cached = GrowShrinkTree::new(target, bic.clone()).unwrap();
        let mut bypass = GrowShrinkTree::new(target, bic.clone()).unwrap();
        bypass.set_caching(false);
        let candidates: Vec<NodeId> = (0..6).map(|i| NodeId::from_index(i, 3)).filter(|&n| n != target).collect();
        for q in queries {
            let prefix: BTreeSet<NodeId> = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| q & (1 << i) != 0)
                .map(|(_, &n)| n)
                .collect();
            let a = cached.score_under_prefix(&prefix).unwrap();
            let b = bypass.score_under_prefix(&prefix).unwrap();
            let c = naive_grow_shrink(&bic, target, &prefix);
            prop_assert_eq!(&a.0, &c.0);
            prop_assert_eq!(a.1.to_bits(), c.1.to_bits());
            prop_assert_eq!(&b.0, &c.0);
            prop_assert_eq!(b.1.to_bits(), c.1.to_bits());
            prop_assert!(cached.check_invariants());
        }
    }

    #[test]
    fn shrink_dominates_grow(seed in any::<u64>(), mask in any::<u8>()) {
        let bic = instance(seed, 3, 1, 150);
        let target = NodeId::new(0, 0);
        let prefix: BTreeSet<NodeId> = (1..6)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| NodeId::from_index(i, 3))
            .collect();
        let mut tree = GrowShrinkTree::new(target, bic).unwrap();
        let (grown, gs) = tree.grow(&prefix).unwrap();
        let (shrunk, ss) = tree.shrink(&grown, gs).unwrap();
        prop_assert!(ss >= gs);
        prop_assert_eq!(ss == gs, shrunk == grown);
        prop_assert!(shrunk.is_subset(&grown));
        prop_assert!(grown.is_subset(&prefix));
    }

    #[test]
    fn full_prefix_matches_brute_force(seed in any::<u64>()) {
        let bic = instance(seed, 4, 0, 200);
        let target = NodeId::new(3, 0);
        let prefix: BTreeSet<NodeId> = (0..3).map(|v| NodeId::new(v, 0)).collect();
        let mut tree = GrowShrinkTree::new(target, bic.clone()).unwrap();
        let got = tree.score_under_prefix(&prefix).unwrap();
        let want = exhaustive_greedy(&bic, target, &prefix);
        prop_assert_eq!(got.0, want.0);
        prop_assert!((got.1 - want.1).abs() < 1e-9);
    }
}

#[test]
fn prefix_sets_are_pure_functions_over_long_sequences() {
    let bic = instance(21, 3, 2, 300);
    let target = NodeId::new(1, 0);
    let mut tree = GrowShrinkTree::new(target, bic).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let candidates: Vec<NodeId> = (0..9).map(|i| NodeId::from_index(i, 3)).filter(|&n| n != target).collect();
    let mut seen: Vec<(BTreeSet<NodeId>, (BTreeSet<NodeId>, f64))> = Vec::new();
    for _ in 0..300 {
        let prefix: BTreeSet<NodeId> = candidates.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let r = tree.score_under_prefix(&prefix).unwrap();
        if let Some((_, old)) = seen.iter().find(|(p, _)| *p == prefix) {
            assert_eq!(old.0, r.0);
            assert_eq!(old.1.to_bits(), r.1.to_bits());
        }
        seen.push((prefix, r));
    }
    assert!(tree.check_invariants());
}
