//! TS-BOSS: permutation search over the contemporaneous slice followed by a
//! backward equivalence search restricted to edges into lag 0.

use std::collections::BTreeSet;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpdag::{consistent_extension, ts_dag_to_ts_cpdag};
use crate::dataset::WindowDataset;
use crate::error::{Error, Result};
use crate::graph::{expand_from_slice_as, CiOracle, Edge, GraphKind, NodeId, WindowGraph};
use crate::gst::GrowShrinkTree;
use crate::scoring::{compute_stats, Bic, SufficientStats};

/// Largest number of variables for [`TsBoss::exhaustive_best`].
pub const EXHAUSTIVE_VAR_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub penalty_discount: f64,
    pub run_bes: bool,
    pub num_restarts: usize,
    pub rng_seed: u64,
    pub gst_cache: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            penalty_discount: 1.0,
            run_bes: true,
            num_restarts: 0,
            rng_seed: 0,
            gst_cache: true,
        }
    }
}

/// A window ordering whose lags never increase along the order. The lagged
/// prefix is fixed, so only the contemporaneous suffix is stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdmissiblePermutation {
    m: usize,
    tau_max: usize,
    contemporaneous: Vec<usize>,
}

impl AdmissiblePermutation {
    /// Lag-0 variables in ascending order.
    pub fn identity(m: usize, tau_max: usize) -> Self {
        AdmissiblePermutation {
            m,
            tau_max,
            contemporaneous: (0..m).collect(),
        }
    }

    /// From the order of the lag-0 variables.
    pub fn from_contemporaneous(order: Vec<usize>, tau_max: usize) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &v in &order {
            if v >= m || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidInput(format!(
                    "{order:?} is not a permutation of 0..{m}"
                )));
            }
        }
        Ok(AdmissiblePermutation {
            m,
            tau_max,
            contemporaneous: order,
        })
    }

    /// From a full window order. Lags must be non-increasing.
    pub fn from_window_order(order: &[NodeId], m: usize, tau_max: usize) -> Result<Self> {
        if order.len() != m * (tau_max + 1) {
            return Err(Error::InvalidInput("order does not cover the window".into()));
        }
        let mut seen = vec![false; order.len()];
        for n in order {
            if n.var >= m || n.lag > tau_max || std::mem::replace(&mut seen[n.index(m)], true) {
                return Err(Error::InvalidInput(format!("bad or repeated node {n}")));
            }
        }
        if order.windows(2).any(|w| w[0].lag < w[1].lag) {
            return Err(Error::InvalidInput(
                "order places a later node before an earlier one".into(),
            ));
        }
        let contemporaneous = order[order.len() - m..].iter().map(|n| n.var).collect();
        Ok(AdmissiblePermutation {
            m,
            tau_max,
            contemporaneous,
        })
    }

    pub fn contemporaneous(&self) -> &[usize] {
        &self.contemporaneous
    }

    /// Full order: lag `tau_max` first, variables ascending inside each
    /// lagged block, then the contemporaneous order.
    pub fn window_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.m * (self.tau_max + 1));
        for lag in (1..=self.tau_max).rev() {
            out.extend((0..self.m).map(|v| NodeId::new(v, lag)));
        }
        out.extend(self.contemporaneous.iter().map(|&v| NodeId::new(v, 0)));
        out
    }

    /// Nodes before `node` in [`window_order`](Self::window_order).
    pub fn predecessors(&self, node: NodeId) -> BTreeSet<NodeId> {
        let order = self.window_order();
        order.iter().take_while(|&&n| n != node).copied().collect()
    }

    fn moved(&self, var: usize, to: usize) -> Self {
        let mut c = self.contemporaneous.clone();
        let from = c.iter().position(|&v| v == var).expect("variable in order");
        let v = c.remove(from);
        c.insert(to, v);
        AdmissiblePermutation {
            contemporaneous: c,
            ..*self
        }
    }
}

/// Result of the permutation phase.
#[derive(Clone, Debug)]
pub struct Phase1 {
    pub permutation: AdmissiblePermutation,
    pub score: f64,
    pub graph: WindowGraph,
}

/// Permutation search state: one grow–shrink tree per lag-0 variable.
pub struct TsBoss {
    m: usize,
    tau_max: usize,
    config: SearchConfig,
    bic: Bic,
    trees: Vec<GrowShrinkTree>,
}

impl TsBoss {
    pub fn new(stats: &SufficientStats, config: SearchConfig) -> Result<Self> {
        let bic = Bic::new(stats, config.penalty_discount)?;
        let m = bic.m();
        if m == 0 {
            return Err(Error::InvalidInput("no variables".into()));
        }
        let trees = (0..m)
            .map(|v| {
                let mut t = GrowShrinkTree::new(NodeId::new(v, 0), bic.clone())?;
                t.set_caching(config.gst_cache);
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TsBoss {
            m,
            tau_max: bic.tau_max(),
            config,
            bic,
            trees,
        })
    }

    pub fn bic(&self) -> &Bic {
        &self.bic
    }

    pub fn trees(&self) -> &[GrowShrinkTree] {
        &self.trees
    }

    /// Local-score evaluations across all trees.
    pub fn evaluations(&self) -> usize {
        self.trees.iter().map(|t| t.evaluations()).sum()
    }

    fn check(&self, pi: &AdmissiblePermutation) -> Result<()> {
        if pi.m != self.m || pi.tau_max != self.tau_max {
            return Err(Error::InvalidInput("permutation does not match the window".into()));
        }
        Ok(())
    }

    // parent sets and total score of the lag-0 targets
    fn evaluate(&mut self, order: &[usize]) -> (Vec<Vec<usize>>, f64) {
        let m = self.m;
        let mut mask = vec![false; self.bic.num_nodes()];
        for x in mask.iter_mut().skip(m) {
            *x = true;
        }
        let mut parents = vec![Vec::new(); m];
        let mut total = 0.0;
        for &v in order {
            let (p, s) = self.trees[v].query_mask(&mask);
            parents[v] = p;
            total += s;
            mask[v] = true;
        }
        (parents, total)
    }

    /// Sum of the lag-0 local scores of the graph induced by `pi`.
    pub fn permutation_score(&mut self, pi: &AdmissiblePermutation) -> Result<f64> {
        self.check(pi)?;
        Ok(self.evaluate(&pi.contemporaneous).1)
    }

    /// The best position for `var` within the contemporaneous block; the
    /// permutation is returned unchanged unless some position is strictly
    /// better.
    pub fn best_ts_move(&mut self, pi: &AdmissiblePermutation, node: NodeId) -> Result<AdmissiblePermutation> {
        self.check(pi)?;
        if node.lag != 0 || node.var >= self.m {
            return Err(Error::InvalidInput(format!(
                "{node} is not a contemporaneous node of the window"
            )));
        }
        let var = node.var;
        let mut best = pi.clone();
        let mut best_score = self.evaluate(&pi.contemporaneous).1;
        for to in 0..self.m {
            let cand = pi.moved(var, to);
            let s = self.evaluate(&cand.contemporaneous).1;
            if s > best_score {
                best_score = s;
                best = cand;
            }
        }
        Ok(best)
    }

    /// True when no single move of a lag-0 variable strictly improves `pi`.
    pub fn is_local_optimum(&mut self, pi: &AdmissiblePermutation) -> Result<bool> {
        let s = self.permutation_score(pi)?;
        for v in 0..self.m {
            let moved = self.best_ts_move(pi, NodeId::new(v, 0))?;
            if self.evaluate(&moved.contemporaneous).1 > s {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn sweep(&mut self, mut pi: AdmissiblePermutation) -> Result<(AdmissiblePermutation, f64)> {
        loop {
            let best = self.permutation_score(&pi)?;
            let mut improved = false;
            for v in 0..self.m {
                let cand = self.best_ts_move(&pi, NodeId::new(v, 0))?;
                if self.permutation_score(&cand)? > best {
                    pi = cand;
                    improved = true;
                    break;
                }
            }
            if !improved {
                let s = self.permutation_score(&pi)?;
                return Ok((pi, s));
            }
        }
    }

    /// Stationary window DAG induced by `pi` under the score.
    pub fn project(&mut self, pi: &AdmissiblePermutation) -> Result<WindowGraph> {
        self.check(pi)?;
        let (parents, _) = self.evaluate(&pi.contemporaneous);
        let mut slice = Vec::new();
        for (v, ps) in parents.iter().enumerate() {
            for &p in ps {
                slice.push(Edge::directed(NodeId::from_index(p, self.m), NodeId::new(v, 0)));
            }
        }
        expand_from_slice_as(GraphKind::Dag, &slice, self.m, self.tau_max)
    }

    /// First-improvement sweeps from the natural order and from
    /// `num_restarts` random lag-0 orders; keeps the strictly best result.
    pub fn phase1(&mut self) -> Result<Phase1> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        let mut best: Option<(AdmissiblePermutation, f64)> = None;
        for r in 0..=self.config.num_restarts {
            let mut start = AdmissiblePermutation::identity(self.m, self.tau_max);
            if r > 0 {
                start.contemporaneous.shuffle(&mut rng);
            }
            let (pi, s) = self.sweep(start)?;
            debug!("restart {r}: score {s:.6}, order {:?}", pi.contemporaneous);
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((pi, s));
            }
        }
        let (permutation, score) = best.expect("at least one start");
        let graph = self.project(&permutation)?;
        info!(
            "permutation phase done: score {score:.6}, {} local score evaluations",
            self.evaluations()
        );
        Ok(Phase1 {
            permutation,
            score,
            graph,
        })
    }

    /// Best permutation over all `m!` lag-0 orders (the first one found on
    /// ties, in lexicographic order).
    pub fn exhaustive_best(&mut self) -> Result<(AdmissiblePermutation, f64)> {
        if self.m > EXHAUSTIVE_VAR_CAP {
            return Err(Error::SizeCap {
                nodes: self.m,
                cap: EXHAUSTIVE_VAR_CAP,
            });
        }
        let mut order: Vec<usize> = (0..self.m).collect();
        let mut best = (order.clone(), f64::NEG_INFINITY);
        loop {
            let s = self.evaluate(&order).1;
            if s > best.1 {
                best = (order.clone(), s);
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        Ok((
            AdmissiblePermutation::from_contemporaneous(best.0, self.tau_max)?,
            best.1,
        ))
    }
}

/// Advances to the next lexicographic permutation; false after the last.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).expect("successor exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Permutation phase on a window dataset.
pub fn ts_boss_phase1(d: &WindowDataset, tau_max: usize, config: &SearchConfig) -> Result<WindowGraph> {
    if d.tau_max() != tau_max {
        return Err(Error::InvalidInput(format!(
            "dataset window has tau_max {}, expected {tau_max}",
            d.tau_max()
        )));
    }
    let stats = compute_stats(d)?;
    Ok(TsBoss::new(&stats, config.clone())?.phase1()?.graph)
}

/// Full TS-BOSS: the permutation phase, then the backward search when
/// `run_bes` is set. Returns a CPDAG with `run_bes`, otherwise the DAG.
pub fn discover(d: &WindowDataset, config: &SearchConfig) -> Result<WindowGraph> {
    let stats = compute_stats(d)?;
    discover_from_stats(&stats, config)
}

pub fn discover_from_stats(stats: &SufficientStats, config: &SearchConfig) -> Result<WindowGraph> {
    let dag = TsBoss::new(stats, config.clone())?.phase1()?.graph;
    if config.run_bes {
        ts_bes(&dag, stats, config.penalty_discount)
    } else {
        Ok(dag)
    }
}

/// A candidate deletion for the backward search.
#[derive(Clone, Debug)]
struct Deletion {
    delta: f64,
    y: usize,
    x: usize,
    h: Vec<usize>,
}

fn is_clique(g: &WindowGraph, nodes: &[usize]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| g.adjacent_idx(a, b)))
}

fn deletions(cp: &WindowGraph, bic: &Bic) -> Vec<Deletion> {
    let m = cp.m();
    let mut out = Vec::new();
    for y in 0..m {
        let pa: Vec<usize> = cp.parents_idx(y).collect();
        for x in cp.adjacents_idx(y).collect::<Vec<_>>() {
            // edges into the present or contemporaneous o-o
            if !(cp.directed_idx(x, y) || cp.undirected_idx(x, y)) {
                continue;
            }
            let na: Vec<usize> = (0..m)
                .filter(|&h| h != x && cp.undirected_idx(h, y) && cp.adjacent_idx(h, x))
                .collect();
            for mask in 0..(1usize << na.len()) {
                let (mut h, mut rest) = (Vec::new(), Vec::new());
                for (i, &v) in na.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        h.push(v);
                    } else {
                        rest.push(v);
                    }
                }
                if !is_clique(cp, &rest) {
                    continue;
                }
                let mut without: Vec<usize> = pa.iter().chain(&rest).copied().filter(|&v| v != x).collect();
                without.sort_unstable();
                without.dedup();
                let mut with = without.clone();
                let at = with.partition_point(|&v| v < x);
                with.insert(at, x);
                let delta = bic.score_idx(y, &without) - bic.score_idx(y, &with);
                if delta > 0.0 {
                    out.push(Deletion { delta, y, x, h });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.delta
            .total_cmp(&a.delta)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
            .then(a.h.cmp(&b.h))
    });
    out
}

fn apply_deletion(cp: &WindowGraph, op: &Deletion) -> Result<Option<WindowGraph>> {
    let m = cp.m();
    let mut slice = cp.clone();
    slice.remove_idx(op.x, op.y);
    for &h in &op.h {
        slice.orient_idx(op.y, h);
        if slice.undirected_idx(op.x, h) {
            slice.orient_idx(op.x, h);
        }
    }
    // rebuild from the edited lag-0 slice so every copy agrees
    let edited = expand_from_slice_as(GraphKind::Cpdag, &slice.slice_edges(), m, cp.tau_max())?;
    match consistent_extension(&edited) {
        Some(dag) => Ok(Some(ts_dag_to_ts_cpdag(&dag)?)),
        None => Ok(None),
    }
}

/// Backward equivalence search over edges into the contemporaneous slice.
/// Starts from a stationary DAG and returns a time-series CPDAG.
pub fn ts_bes(g: &WindowGraph, stats: &SufficientStats, penalty_discount: f64) -> Result<WindowGraph> {
    let bic = Bic::new(stats, penalty_discount)?;
    if g.m() != bic.m() || g.tau_max() != bic.tau_max() {
        return Err(Error::InvalidInput("graph does not match the statistics".into()));
    }
    let mut cp = ts_dag_to_ts_cpdag(g)?;
    let mut removed = 0;
    loop {
        let mut applied = false;
        for op in deletions(&cp, &bic) {
            if let Some(next) = apply_deletion(&cp, &op)? {
                debug!(
                    "delete {} - {} (H = {:?}), gain {:.6}",
                    cp.node(op.x),
                    cp.node(op.y),
                    op.h,
                    op.delta
                );
                cp = next;
                applied = true;
                removed += 1;
                break;
            }
        }
        if !applied {
            break;
        }
    }
    info!("backward search removed {removed} slice edges");
    Ok(cp)
}

/// Stationary DAG induced by `pi` under a conditional independence oracle:
/// a predecessor `u` of a lag-0 node `v` is a parent unless
/// `v ⟂ u | pre(v) \ {u}`.
pub fn permutation_induced_graph(
    pi: &AdmissiblePermutation,
    oracle: &dyn CiOracle,
) -> Result<WindowGraph> {
    let mut slice = Vec::new();
    for &v in &pi.contemporaneous {
        let node = NodeId::new(v, 0);
        let pre = pi.predecessors(node);
        for &u in &pre {
            let rest: Vec<NodeId> = pre.iter().copied().filter(|&w| w != u).collect();
            if !oracle.independent(&[node], &[u], &rest) {
                slice.push(Edge::directed(u, node));
            }
        }
    }
    expand_from_slice_as(GraphKind::Dag, &slice, pi.m, pi.tau_max)
}
