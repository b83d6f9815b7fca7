mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsboss::cpdag::ts_dag_to_ts_cpdag;
use tsboss::eval::{adjacency_metrics, evaluate, orientation_metrics, EvalMode};
use tsboss::graph::{expand_from_slice_as, Edge};
use tsboss::{GraphKind, NodeId, WindowGraph};

/// Renames variable `v` to `perm[v]` in every edge.
fn relabel(g: &WindowGraph, perm: &[usize]) -> WindowGraph {
    let slice: Vec<Edge> = g
        .slice_edges()
        .into_iter()
        .map(|e| Edge {
            src: NodeId::new(perm[e.src.var], e.src.lag),
            dst: NodeId::new(perm[e.dst.var], e.dst.lag),
            mark: e.mark,
        })
        .collect();
    expand_from_slice_as(g.kind(), &slice, g.m(), g.tau_max()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn self_comparison_is_perfect(seed in any::<u64>(), m in 1usize..5, tau in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_stationary_dag(&mut rng, m, tau, 0.3, 0.5);
        let cp = ts_dag_to_ts_cpdag(&g).unwrap();
        for (est, mode) in [(&cp, EvalMode::Cpdag), (&g, EvalMode::Dag)] {
            let r = evaluate(&g, est, mode).unwrap();
            prop_assert_eq!(r.adjacency.fp, 0);
            prop_assert_eq!(r.adjacency.fn_, 0);
            prop_assert_eq!(r.orientation.fp, 0);
            prop_assert_eq!(r.orientation.fn_, 0);
        }
    }

    #[test]
    fn adjacency_counts_partition_the_slots(seed in any::<u64>(), m in 1usize..5, tau in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = common::random_stationary_dag(&mut rng, m, tau, 0.3, 0.5);
        let est = common::random_stationary_dag(&mut rng, m, tau, 0.3, 0.5);
        let c = adjacency_metrics(&truth, &est).unwrap();
        // each slice edge is one slot
        prop_assert_eq!(c.tp + c.fn_, truth.slice_edges().len());
        prop_assert_eq!(c.tp + c.fp, est.slice_edges().len());
        prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn, m * m * tau + m * (m - 1) / 2);
    }

    #[test]
    fn metrics_do_not_depend_on_variable_names(seed in any::<u64>(), m in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = common::random_stationary_dag(&mut rng, m, 1, 0.3, 0.5);
        let est = common::random_stationary_dag(&mut rng, m, 1, 0.3, 0.5);
        let perm = common::random_permutation(&mut rng, m, 1).contemporaneous().to_vec();
        let (tc, ec) = (ts_dag_to_ts_cpdag(&truth).unwrap(), ts_dag_to_ts_cpdag(&est).unwrap());
        let (tr, er) = (ts_dag_to_ts_cpdag(&relabel(&truth, &perm)).unwrap(), ts_dag_to_ts_cpdag(&relabel(&est, &perm)).unwrap());
        prop_assert_eq!(adjacency_metrics(&tc, &ec).unwrap(), adjacency_metrics(&tr, &er).unwrap());
        prop_assert_eq!(orientation_metrics(&tc, &ec).unwrap(), orientation_metrics(&tr, &er).unwrap());
    }
}

#[test]
fn reversed_contemporaneous_edge_is_one_fp_and_one_fn() {
    let a = NodeId::new(0, 0);
    let b = NodeId::new(1, 0);
    let truth = expand_from_slice_as(GraphKind::Dag, &[Edge::directed(a, b)], 2, 0).unwrap();
    let est = expand_from_slice_as(GraphKind::Dag, &[Edge::directed(b, a)], 2, 0).unwrap();
    let r = evaluate(&truth, &est, EvalMode::Dag).unwrap();
    assert_eq!((r.adjacency.tp, r.adjacency.fp, r.adjacency.fn_), (1, 0, 0));
    assert_eq!((r.orientation.tp, r.orientation.fp, r.orientation.fn_, r.orientation.tn), (0, 1, 1, 0));
    assert_eq!(r.ori_precision, 0.0);
    assert_eq!(r.adj_f1, 1.0);
}

#[test]
fn empty_estimate_has_undefined_precision() {
    let truth = expand_from_slice_as(
        GraphKind::Dag,
        &[Edge::directed(NodeId::new(0, 1), NodeId::new(1, 0))],
        2,
        1,
    )
    .unwrap();
    let empty = WindowGraph::new(2, 1, GraphKind::Cpdag).unwrap();
    let r = evaluate(&truth, &empty, EvalMode::Cpdag).unwrap();
    assert!(r.adj_precision.is_nan());
    assert_eq!(r.adj_recall, 0.0);
    assert!(r.zero_division());
}

#[test]
fn shape_mismatch_is_rejected() {
    let a = WindowGraph::new(2, 1, GraphKind::Dag).unwrap();
    let b = WindowGraph::new(3, 1, GraphKind::Dag).unwrap();
    assert!(evaluate(&a, &b, EvalMode::Dag).is_err());
    assert!(orientation_metrics(&a, &a).is_err());
}
