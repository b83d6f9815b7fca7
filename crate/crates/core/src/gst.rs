//! Grow–shrink trees.
//!
//! One tree per contemporaneous target. The root holds the empty parent set;
//! each child adds one parent that strictly improves the target's score, and
//! children are kept best-first. Growing under a permutation prefix walks
//! down the best child whose added parent lies in the prefix, evaluating new
//! candidates only when a node meets them for the first time. The result of
//! shrinking a grown set is cached on the node where growing stopped.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scoring::{Bic, SufficientStats};

#[derive(Clone, Debug)]
struct GstNode {
    added: Option<usize>,
    parents: Vec<usize>,
    score: f64,
    children: Vec<usize>,
    // candidates already scored at this node (path parents and target included)
    evaluated: Vec<bool>,
    shrunk: Option<(Vec<usize>, f64)>,
}

/// Parent set reached by [`GrowShrinkTree::grow`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grown {
    node: Option<usize>,
    parents: Vec<usize>,
    pub score: f64,
}

impl Grown {
    pub fn parent_indices(&self) -> &[usize] {
        &self.parents
    }
}

#[derive(Clone, Debug)]
pub struct GrowShrinkTree {
    target: usize,
    bic: Bic,
    nodes: Vec<GstNode>,
    caching: bool,
    evaluations: usize,
}

impl GrowShrinkTree {
    /// A tree holding only the root. The target must be contemporaneous.
    pub fn new(target: NodeId, bic: Bic) -> Result<Self> {
        if target.lag != 0 {
            return Err(Error::InvalidInput(format!(
                "grow-shrink trees exist only for contemporaneous targets, got {target}"
            )));
        }
        if target.var >= bic.m() {
            return Err(Error::InvalidInput(format!("{target} outside the window")));
        }
        let t = target.index(bic.m());
        let p = bic.num_nodes();
        let mut evaluated = vec![false; p];
        evaluated[t] = true;
        let root = GstNode {
            added: None,
            parents: Vec::new(),
            score: bic.score_idx(t, &[]),
            children: Vec::new(),
            evaluated,
            shrunk: None,
        };
        Ok(GrowShrinkTree {
            target: t,
            bic,
            nodes: vec![root],
            caching: true,
            evaluations: 1,
        })
    }

    pub fn target(&self) -> NodeId {
        NodeId::from_index(self.target, self.bic.m())
    }

    /// Score of the empty parent set.
    pub fn root_score(&self) -> f64 {
        self.nodes[0].score
    }

    /// Number of local-score evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Materialized tree nodes, root included.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// With caching off every query recomputes grow and shrink from scratch.
    pub fn set_caching(&mut self, on: bool) {
        self.caching = on;
    }

    pub fn caching(&self) -> bool {
        self.caching
    }

    fn mask_of(&self, prefix: &BTreeSet<NodeId>) -> Result<Vec<bool>> {
        let m = self.bic.m();
        let mut mask = vec![false; self.bic.num_nodes()];
        for &n in prefix {
            if n.var >= m || n.lag > self.bic.tau_max() {
                return Err(Error::InvalidInput(format!("{n} outside the window")));
            }
            let i = n.index(m);
            if i == self.target {
                return Err(Error::InvalidInput(format!(
                    "target {n} cannot be in its own prefix"
                )));
            }
            mask[i] = true;
        }
        Ok(mask)
    }

    fn to_nodes(&self, idx: &[usize]) -> BTreeSet<NodeId> {
        idx.iter()
            .map(|&i| NodeId::from_index(i, self.bic.m()))
            .collect()
    }

    /// Grows the parent set allowed by `prefix`.
    pub fn grow(&mut self, prefix: &BTreeSet<NodeId>) -> Result<(BTreeSet<NodeId>, f64)> {
        let mask = self.mask_of(prefix)?;
        let g = self.grow_mask(&mask);
        Ok((self.to_nodes(&g.parents), g.score))
    }

    /// Shrinks a set returned by [`grow`](Self::grow) on this tree.
    pub fn shrink(&mut self, grown: &BTreeSet<NodeId>, score: f64) -> Result<(BTreeSet<NodeId>, f64)> {
        let m = self.bic.m();
        let mut parents: Vec<usize> = grown.iter().map(|n| n.index(m)).collect();
        parents.sort_unstable();
        if parents.contains(&self.target) || parents.iter().any(|&i| i >= self.bic.num_nodes()) {
            return Err(Error::InvalidInput("grown set is not valid for this tree".into()));
        }
        let node = self.find_node(&parents);
        let g = Grown {
            node,
            parents,
            score,
        };
        let (p, s) = self.shrink_grown(&g);
        Ok((self.to_nodes(&p), s))
    }

    /// `shrink(grow(prefix))`: the target's parent set and score under any
    /// permutation whose pre-target set is `prefix`.
    pub fn score_under_prefix(
        &mut self,
        prefix: &BTreeSet<NodeId>,
    ) -> Result<(BTreeSet<NodeId>, f64)> {
        let mask = self.mask_of(prefix)?;
        let (p, s) = self.query_mask(&mask);
        Ok((self.to_nodes(&p), s))
    }

    pub(crate) fn query_mask(&mut self, mask: &[bool]) -> (Vec<usize>, f64) {
        debug_assert!(!mask[self.target]);
        if !self.caching {
            let (p, s, evals) = naive_grow_shrink_counted(&self.bic, self.target, mask);
            self.evaluations += evals;
            return (p, s);
        }
        let g = self.grow_mask(mask);
        self.shrink_grown(&g)
    }

    fn find_node(&self, parents: &[usize]) -> Option<usize> {
        self.nodes.iter().position(|n| n.parents == parents)
    }

    pub(crate) fn grow_mask(&mut self, mask: &[bool]) -> Grown {
        if !self.caching {
            let (parents, score, evals) = naive_grow_counted(&self.bic, self.target, mask);
            self.evaluations += evals;
            return Grown {
                node: None,
                parents,
                score,
            };
        }
        let mut cur = 0;
        loop {
            self.expand(cur, mask);
            let next = self.nodes[cur]
                .children
                .iter()
                .copied()
                .find(|&ch| mask[self.nodes[ch].added.expect("child has a parent")]);
            match next {
                Some(ch) => cur = ch,
                None => break,
            }
        }
        let n = &self.nodes[cur];
        Grown {
            node: Some(cur),
            parents: n.parents.clone(),
            score: n.score,
        }
    }

    // Scores every prefix candidate the node has not seen yet and attaches
    // the strictly improving ones as children.
    fn expand(&mut self, id: usize, mask: &[bool]) {
        let p = mask.len();
        for c in 0..p {
            if !mask[c] || self.nodes[id].evaluated[c] {
                continue;
            }
            self.nodes[id].evaluated[c] = true;
            let mut parents = self.nodes[id].parents.clone();
            let at = parents.partition_point(|&x| x < c);
            parents.insert(at, c);
            let score = self.bic.score_idx(self.target, &parents);
            self.evaluations += 1;
            if score > self.nodes[id].score {
                let mut evaluated = vec![false; p];
                evaluated[self.target] = true;
                for &q in &parents {
                    evaluated[q] = true;
                }
                let child = self.nodes.len();
                self.nodes.push(GstNode {
                    added: Some(c),
                    parents,
                    score,
                    children: Vec::new(),
                    evaluated,
                    shrunk: None,
                });
                let nodes = &self.nodes;
                let children = &nodes[id].children;
                // best first; equal scores keep the lower index first
                let pos = children.partition_point(|&e| {
                    let (es, ea) = (nodes[e].score, nodes[e].added.unwrap_or(0));
                    es > score || (es == score && ea < c)
                });
                self.nodes[id].children.insert(pos, child);
            }
        }
    }

    pub(crate) fn shrink_grown(&mut self, g: &Grown) -> (Vec<usize>, f64) {
        if let Some(id) = g.node.filter(|_| self.caching) {
            if let Some(hit) = &self.nodes[id].shrunk {
                return hit.clone();
            }
            let (p, s, evals) = naive_shrink_counted(&self.bic, self.target, &g.parents, g.score);
            self.evaluations += evals;
            self.nodes[id].shrunk = Some((p.clone(), s));
            return (p, s);
        }
        let (p, s, evals) = naive_shrink_counted(&self.bic, self.target, &g.parents, g.score);
        self.evaluations += evals;
        (p, s)
    }

    /// Checks that every branch strictly improves on its parent node and
    /// that siblings are ordered best first.
    pub fn check_invariants(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.iter().all(|&c| self.nodes[c].score > n.score)
                && n.children.windows(2).all(|w| {
                    let (a, b) = (&self.nodes[w[0]], &self.nodes[w[1]]);
                    a.score > b.score || (a.score == b.score && a.added < b.added)
                })
        })
    }
}

/// Tree for `target` over fresh statistics.
pub fn gst_new(target: NodeId, stats: &SufficientStats, penalty_discount: f64) -> Result<GrowShrinkTree> {
    GrowShrinkTree::new(target, Bic::new(stats, penalty_discount)?)
}

fn naive_grow_counted(bic: &Bic, target: usize, mask: &[bool]) -> (Vec<usize>, f64, usize) {
    let mut parents: Vec<usize> = Vec::new();
    let mut score = bic.score_idx(target, &parents);
    let mut evals = 1;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..mask.len() {
            if !mask[c] || c == target || parents.binary_search(&c).is_ok() {
                continue;
            }
            let mut trial = parents.clone();
            trial.insert(trial.partition_point(|&x| x < c), c);
            let s = bic.score_idx(target, &trial);
            evals += 1;
            if s > score && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((c, s));
            }
        }
        match best {
            Some((c, s)) => {
                parents.insert(parents.partition_point(|&x| x < c), c);
                score = s;
            }
            None => return (parents, score, evals),
        }
    }
}

fn naive_shrink_counted(
    bic: &Bic,
    target: usize,
    grown: &[usize],
    grown_score: f64,
) -> (Vec<usize>, f64, usize) {
    let mut parents = grown.to_vec();
    let mut score = grown_score;
    let mut evals = 0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..parents.len() {
            let mut trial = parents.clone();
            trial.remove(i);
            let s = bic.score_idx(target, &trial);
            evals += 1;
            if s > score && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((i, s));
            }
        }
        match best {
            Some((i, s)) => {
                parents.remove(i);
                score = s;
            }
            None => return (parents, score, evals),
        }
    }
}

fn naive_grow_shrink_counted(bic: &Bic, target: usize, mask: &[bool]) -> (Vec<usize>, f64, usize) {
    let (g, gs, e1) = naive_grow_counted(bic, target, mask);
    let (p, s, e2) = naive_shrink_counted(bic, target, &g, gs);
    (p, s, e1 + e2)
}

/// Greedy forward selection over `prefix` without a tree: repeatedly add
/// the best strictly improving candidate (lower index on ties).
pub fn naive_grow(bic: &Bic, target: NodeId, prefix: &BTreeSet<NodeId>) -> (BTreeSet<NodeId>, f64) {
    let m = bic.m();
    let mut mask = vec![false; bic.num_nodes()];
    for n in prefix {
        mask[n.index(m)] = true;
    }
    let (p, s, _) = naive_grow_counted(bic, target.index(m), &mask);
    (p.iter().map(|&i| NodeId::from_index(i, m)).collect(), s)
}

/// Steepest-descent removal: drop the parent whose removal improves the
/// score most, until nothing improves.
pub fn naive_shrink(
    bic: &Bic,
    target: NodeId,
    grown: &BTreeSet<NodeId>,
    grown_score: f64,
) -> (BTreeSet<NodeId>, f64) {
    let m = bic.m();
    let mut idx: Vec<usize> = grown.iter().map(|n| n.index(m)).collect();
    idx.sort_unstable();
    let (p, s, _) = naive_shrink_counted(bic, target.index(m), &idx, grown_score);
    (p.iter().map(|&i| NodeId::from_index(i, m)).collect(), s)
}

pub fn naive_grow_shrink(bic: &Bic, target: NodeId, prefix: &BTreeSet<NodeId>) -> (BTreeSet<NodeId>, f64) {
    let (g, s) = naive_grow(bic, target, prefix);
    naive_shrink(bic, target, &g, s)
}
