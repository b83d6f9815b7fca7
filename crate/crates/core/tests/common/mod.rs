#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use tsboss::graph::{expand_from_slice_as, Edge};
use tsboss::scoring::SufficientStats;
use tsboss::search::AdmissiblePermutation;
use tsboss::{GraphKind, NodeId, WindowGraph};

/// Random stationary DAG: each lagged slice edge with probability `p_lag`,
/// each contemporaneous pair with probability `p_cont` along a random order.
pub fn random_stationary_dag<R: Rng>(rng: &mut R, m: usize, tau: usize, p_lag: f64, p_cont: f64) -> WindowGraph {
    let mut edges = Vec::new();
    for lag in 1..=tau {
        for i in 0..m {
            for j in 0..m {
                if rng.random_bool(p_lag) {
                    edges.push(Edge::directed(NodeId::new(i, lag), NodeId::new(j, 0)));
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    for a in 0..m {
        for b in a + 1..m {
            if rng.random_bool(p_cont) {
                edges.push(Edge::directed(NodeId::new(order[a], 0), NodeId::new(order[b], 0)));
            }
        }
    }
    expand_from_slice_as(GraphKind::Dag, &edges, m, tau).unwrap()
}

pub fn random_permutation<R: Rng>(rng: &mut R, m: usize, tau: usize) -> AdmissiblePermutation {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    AdmissiblePermutation::from_contemporaneous(order, tau).unwrap()
}

/// Every stationary acyclic DAG over the window.
pub fn all_stationary_dags(m: usize, tau: usize) -> Vec<WindowGraph> {
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let lagged: Vec<Edge> = (1..=tau)
        .flat_map(|lag| {
            (0..m).flat_map(move |i| (0..m).map(move |j| Edge::directed(NodeId::new(i, lag), NodeId::new(j, 0))))
        })
        .collect();
    let mut out = Vec::new();
    let n_cont = 3usize.pow(pairs.len() as u32);
    for c in 0..n_cont {
        let mut base = Vec::new();
        let mut code = c;
        for &(i, j) in &pairs {
            match code % 3 {
                1 => base.push(Edge::directed(NodeId::new(i, 0), NodeId::new(j, 0))),
                2 => base.push(Edge::directed(NodeId::new(j, 0), NodeId::new(i, 0))),
                _ => {}
            }
            code /= 3;
        }
        let probe = expand_from_slice_as(GraphKind::Dag, &base, m, tau).unwrap();
        if !probe.is_acyclic() {
            continue;
        }
        for mask in 0..(1usize << lagged.len()) {
            let mut edges = base.clone();
            edges.extend((0..lagged.len()).filter(|k| mask & (1 << k) != 0).map(|k| lagged[k]));
            out.push(expand_from_slice_as(GraphKind::Dag, &edges, m, tau).unwrap());
        }
    }
    out
}

/// Exact covariance of a linear SEM on the window DAG with coefficients of
/// magnitude in [0.5, 1.0] and unit noise, scored as if from `n` samples.
pub fn population_stats<R: Rng>(g: &WindowGraph, rng: &mut R, n: usize) -> SufficientStats {
    let p = g.num_nodes();
    let m = g.m();
    let mut b = DMatrix::<f64>::zeros(p, p);
    for e in g.edges() {
        let s = e.src.index(m);
        let d = e.dst.index(m);
        let mag = rng.random_range(0.5..1.0);
        b[(d, s)] = if rng.random_bool(0.5) { mag } else { -mag };
    }
    let inv = (DMatrix::identity(p, p) - b).try_inverse().unwrap();
    let cov = &inv * inv.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let columns = (0..p).map(|i| NodeId::from_index(i, m)).collect();
    SufficientStats::from_covariance(cov, n, columns, m, g.tau_max()).unwrap()
}
