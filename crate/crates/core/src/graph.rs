//! Window graphs over variable × lag nodes.
//!
//! A [`WindowGraph`] covers the `m · (tau_max + 1)` nodes of one time window.
//! Nodes are stored densely at index `var + m · lag`, so lag 0 (the
//! contemporaneous slice) occupies the first `m` indices. Edges never point
//! into the past, and undirected marks only join two nodes of the same slice
//! in a CPDAG.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest window the brute-force minimality check will enumerate.
pub const BRUTE_FORCE_NODE_CAP: usize = 8;

/// A variable at a lag relative to the contemporaneous slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub var: usize,
    pub lag: usize,
}

impl NodeId {
    pub const fn new(var: usize, lag: usize) -> Self {
        NodeId { var, lag }
    }

    /// Dense index inside a window with `m` variables.
    pub const fn index(self, m: usize) -> usize {
        self.var + m * self.lag
    }

    pub const fn from_index(index: usize, m: usize) -> Self {
        NodeId {
            var: index % m,
            lag: index / m,
        }
    }

    pub const fn is_contemporaneous(self) -> bool {
        self.lag == 0
    }
}

// Ordered like the dense index: by lag, then by variable.
impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.lag, self.var).cmp(&(other.lag, other.var))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}(t-{})", self.var + 1, self.lag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mark {
    /// `src -> dst`
    Directed,
    /// `src o-o dst`
    Undirected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Cpdag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub mark: Mark,
}

impl Edge {
    pub const fn directed(src: NodeId, dst: NodeId) -> Self {
        Edge {
            src,
            dst,
            mark: Mark::Directed,
        }
    }

    pub const fn undirected(a: NodeId, b: NodeId) -> Self {
        Edge {
            src: a,
            dst: b,
            mark: Mark::Undirected,
        }
    }

    /// Time lag spanned by the edge.
    pub const fn time_lag(&self) -> usize {
        self.src.lag - self.dst.lag
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mark {
            Mark::Directed => write!(f, "{} -> {}", self.src, self.dst),
            Mark::Undirected => write!(f, "{} o-o {}", self.src, self.dst),
        }
    }
}

/// Relation between two nodes as seen from the first one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeRelation {
    /// `a <- b`
    Into,
    /// `a -> b`
    OutOf,
    /// `a o-o b`
    Undirected,
    /// no edge
    Absent,
}

impl EdgeRelation {
    /// The same edge seen from the other endpoint.
    pub const fn reversed(self) -> Self {
        match self {
            EdgeRelation::Into => EdgeRelation::OutOf,
            EdgeRelation::OutOf => EdgeRelation::Into,
            other => other,
        }
    }
}

/// Directed mixed graph over one time window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowGraph {
    m: usize,
    tau_max: usize,
    kind: GraphKind,
    // adj[src * p + dst]; undirected edges are stored in both directions.
    adj: Vec<Option<Mark>>,
}

impl WindowGraph {
    /// An edgeless window graph.
    pub fn new(m: usize, tau_max: usize, kind: GraphKind) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("window graph needs m >= 1".into()));
        }
        let p = m * (tau_max + 1);
        Ok(WindowGraph {
            m,
            tau_max,
            kind,
            adj: vec![None; p * p],
        })
    }

    pub fn from_edges(
        m: usize,
        tau_max: usize,
        kind: GraphKind,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        let mut g = WindowGraph::new(m, tau_max, kind)?;
        for e in edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.m * (self.tau_max + 1)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.var < self.m && node.lag <= self.tau_max
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.num_nodes()).map(|i| self.node(i))
    }

    pub fn contemporaneous_nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.m).map(|v| NodeId::new(v, 0))
    }

    pub fn node(&self, index: usize) -> NodeId {
        NodeId::from_index(index, self.m)
    }

    pub fn index(&self, node: NodeId) -> Result<usize> {
        if self.contains(node) {
            Ok(node.index(self.m))
        } else {
            Err(Error::InvalidInput(format!(
                "node {node} outside window (m={}, tau_max={})",
                self.m, self.tau_max
            )))
        }
    }

    #[inline]
    pub(crate) fn mark_idx(&self, src: usize, dst: usize) -> Option<Mark> {
        self.adj[src * self.num_nodes() + dst]
    }

    #[inline]
    pub(crate) fn adjacent_idx(&self, a: usize, b: usize) -> bool {
        self.mark_idx(a, b).is_some() || self.mark_idx(b, a).is_some()
    }

    #[inline]
    pub(crate) fn directed_idx(&self, src: usize, dst: usize) -> bool {
        self.mark_idx(src, dst) == Some(Mark::Directed)
    }

    #[inline]
    pub(crate) fn undirected_idx(&self, a: usize, b: usize) -> bool {
        self.mark_idx(a, b) == Some(Mark::Undirected)
    }

    pub(crate) fn parents_idx(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&u| self.directed_idx(u, v))
    }

    pub(crate) fn children_idx(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&w| self.directed_idx(v, w))
    }

    pub(crate) fn adjacents_idx(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&w| w != v && self.adjacent_idx(v, w))
    }

    fn validate_edge(&self, e: &Edge) -> Result<(usize, usize)> {
        let s = self.index(e.src)?;
        let d = self.index(e.dst)?;
        if s == d {
            return Err(Error::InvalidInput(format!("self loop on {}", e.src)));
        }
        if e.src.lag < e.dst.lag {
            return Err(Error::InvalidInput(format!(
                "edge {e} points into the past"
            )));
        }
        if e.mark == Mark::Undirected {
            if self.kind != GraphKind::Cpdag {
                return Err(Error::InvalidInput(format!(
                    "undirected edge {e} in a DAG"
                )));
            }
            if e.src.lag != e.dst.lag {
                return Err(Error::InvalidInput(format!(
                    "undirected edge {e} spans a time lag"
                )));
            }
        }
        Ok((s, d))
    }

    /// Adds an edge; the endpoints must not already be adjacent.
    pub fn add_edge(&mut self, e: Edge) -> Result<()> {
        let (s, d) = self.validate_edge(&e)?;
        if self.adjacent_idx(s, d) {
            return Err(Error::InvalidInput(format!(
                "{} and {} are already adjacent",
                e.src, e.dst
            )));
        }
        self.put(s, d, e.mark);
        Ok(())
    }

    fn put(&mut self, s: usize, d: usize, mark: Mark) {
        let p = self.num_nodes();
        self.adj[s * p + d] = Some(mark);
        if mark == Mark::Undirected {
            self.adj[d * p + s] = Some(mark);
        }
    }

    pub(crate) fn remove_idx(&mut self, a: usize, b: usize) {
        let p = self.num_nodes();
        self.adj[a * p + b] = None;
        self.adj[b * p + a] = None;
    }

    /// Replaces whatever joins `src` and `dst` with `src -> dst`.
    pub(crate) fn orient_idx(&mut self, src: usize, dst: usize) {
        self.remove_idx(src, dst);
        self.put(src, dst, Mark::Directed);
    }

    /// All edges, each listed once, in dense-index order.
    pub fn edges(&self) -> Vec<Edge> {
        let p = self.num_nodes();
        let mut out = Vec::new();
        for d in 0..p {
            for s in 0..p {
                match self.mark_idx(s, d) {
                    Some(Mark::Directed) => out.push(Edge::directed(self.node(s), self.node(d))),
                    Some(Mark::Undirected) if s < d => {
                        out.push(Edge::undirected(self.node(s), self.node(d)))
                    }
                    _ => {}
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.edges().len()
    }

    /// Edges with an endpoint in the contemporaneous slice that carry the
    /// stationary representation of the graph.
    pub fn slice_edges(&self) -> Vec<Edge> {
        self.edges()
            .into_iter()
            .filter(|e| e.dst.lag == 0)
            .collect()
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        match (self.index(src), self.index(dst)) {
            (Ok(s), Ok(d)) => self.directed_idx(s, d),
            _ => false,
        }
    }

    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        match (self.index(a), self.index(b)) {
            (Ok(s), Ok(d)) => self.undirected_idx(s, d),
            _ => false,
        }
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        match (self.index(a), self.index(b)) {
            (Ok(s), Ok(d)) => self.adjacent_idx(s, d),
            _ => false,
        }
    }

    /// How the edge between `a` and `b` looks from `a`.
    pub fn relation(&self, a: NodeId, b: NodeId) -> EdgeRelation {
        let (Ok(ia), Ok(ib)) = (self.index(a), self.index(b)) else {
            return EdgeRelation::Absent;
        };
        if self.directed_idx(ib, ia) {
            EdgeRelation::Into
        } else if self.directed_idx(ia, ib) {
            EdgeRelation::OutOf
        } else if self.undirected_idx(ia, ib) {
            EdgeRelation::Undirected
        } else {
            EdgeRelation::Absent
        }
    }

    pub fn parents(&self, node: NodeId) -> BTreeSet<NodeId> {
        match self.index(node) {
            Ok(v) => self.parents_idx(v).map(|u| self.node(u)).collect(),
            Err(_) => BTreeSet::new(),
        }
    }

    pub fn children(&self, node: NodeId) -> BTreeSet<NodeId> {
        match self.index(node) {
            Ok(v) => self.children_idx(v).map(|u| self.node(u)).collect(),
            Err(_) => BTreeSet::new(),
        }
    }

    pub(crate) fn descendants_idx(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_nodes()];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            stack.extend(self.children_idx(u).filter(|&w| !seen[w]));
        }
        seen
    }

    /// Nodes reachable from `node` by directed paths, `node` included.
    pub fn descendants(&self, node: NodeId) -> BTreeSet<NodeId> {
        match self.index(node) {
            Ok(v) => self
                .descendants_idx(v)
                .iter()
                .enumerate()
                .filter(|(_, &d)| d)
                .map(|(i, _)| self.node(i))
                .collect(),
            Err(_) => BTreeSet::new(),
        }
    }

    /// Window nodes that are neither `node` nor one of its descendants.
    pub fn nondescendants(&self, node: NodeId) -> BTreeSet<NodeId> {
        match self.index(node) {
            Ok(v) => self
                .descendants_idx(v)
                .iter()
                .enumerate()
                .filter(|(_, &d)| !d)
                .map(|(i, _)| self.node(i))
                .collect(),
            Err(_) => BTreeSet::new(),
        }
    }

    /// True when the directed part has no cycle.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Topological order of the directed part (Kahn, smallest index first).
    pub(crate) fn topological_order(&self) -> Option<Vec<usize>> {
        let p = self.num_nodes();
        let mut indeg: Vec<usize> = (0..p).map(|v| self.parents_idx(v).count()).collect();
        let mut ready: BTreeSet<usize> = (0..p).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for w in self.children_idx(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        (order.len() == p).then_some(order)
    }

    /// True iff the graph equals the replication of its slice edges.
    pub fn is_stationary(&self) -> bool {
        match expand_from_slice_as(self.kind, &self.slice_edges(), self.m, self.tau_max) {
            Ok(g) => g == *self,
            Err(_) => false,
        }
    }

    /// Standard d-separation; the graph must be a DAG.
    pub fn d_separated(&self, q: &SeparationQuery) -> Result<bool> {
        if self.kind != GraphKind::Dag {
            return Err(Error::InvalidInput(
                "d-separation requires a DAG".into(),
            ));
        }
        q.check_disjoint()?;
        let to_idx = |s: &BTreeSet<NodeId>| -> Result<Vec<usize>> {
            s.iter().map(|&n| self.index(n)).collect()
        };
        Ok(self.d_separated_idx(&to_idx(&q.s1)?, &to_idx(&q.s2)?, &to_idx(&q.s3)?))
    }

    /// Reachability ("Bayes ball") test on dense indices. Sets are assumed
    /// disjoint.
    pub(crate) fn d_separated_idx(&self, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
        if xs.is_empty() || ys.is_empty() {
            return true;
        }
        let p = self.num_nodes();
        let mut in_z = vec![false; p];
        for &z in zs {
            in_z[z] = true;
        }
        let mut is_y = vec![false; p];
        for &y in ys {
            is_y[y] = true;
        }

        // Z together with its ancestors: colliders here are open.
        let mut anc = vec![false; p];
        let mut stack: Vec<usize> = zs.to_vec();
        while let Some(v) = stack.pop() {
            if anc[v] {
                continue;
            }
            anc[v] = true;
            stack.extend(self.parents_idx(v).filter(|&u| !anc[u]));
        }

        const UP: usize = 0; // arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; p];
        let mut queue: Vec<(usize, usize)> = xs.iter().map(|&x| (x, UP)).collect();
        while let Some((v, dir)) = queue.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] && is_y[v] {
                return false;
            }
            if dir == UP {
                if !in_z[v] {
                    queue.extend(self.parents_idx(v).map(|u| (u, UP)));
                    queue.extend(self.children_idx(v).map(|w| (w, DOWN)));
                }
            } else {
                if !in_z[v] {
                    queue.extend(self.children_idx(v).map(|w| (w, DOWN)));
                }
                if anc[v] {
                    queue.extend(self.parents_idx(v).map(|u| (u, UP)));
                }
            }
        }
        true
    }

    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            m: self.m,
            tau_max: self.tau_max,
            kind: Some(
                match self.kind {
                    GraphKind::Dag => "dag",
                    GraphKind::Cpdag => "cpdag",
                }
                .into(),
            ),
            edges: self
                .edges()
                .into_iter()
                .map(|e| EdgeJson {
                    src_var: e.src.var,
                    src_lag: e.src.lag,
                    dst_var: e.dst.var,
                    dst_lag: e.dst.lag,
                    mark: match e.mark {
                        Mark::Directed => "->".into(),
                        Mark::Undirected => "o-o".into(),
                    },
                })
                .collect(),
        }
    }

    pub fn from_json_value(j: &GraphJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(j.edges.len());
        let mut kind = GraphKind::Dag;
        for e in &j.edges {
            let mark = match e.mark.as_str() {
                "->" => Mark::Directed,
                "o-o" => {
                    kind = GraphKind::Cpdag;
                    Mark::Undirected
                }
                other => {
                    return Err(Error::Format(format!("unknown edge mark {other:?}")));
                }
            };
            edges.push(Edge {
                src: NodeId::new(e.src_var, e.src_lag),
                dst: NodeId::new(e.dst_var, e.dst_lag),
                mark,
            });
        }
        match j.kind.as_deref() {
            None => {}
            Some("cpdag") => kind = GraphKind::Cpdag,
            Some("dag") if kind == GraphKind::Dag => {}
            Some(other) => {
                return Err(Error::Format(format!("graph kind {other:?} does not fit its edges")));
            }
        }
        WindowGraph::from_edges(j.m, j.tau_max, kind, edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("graph json")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphJson = serde_json::from_str(s)?;
        WindowGraph::from_json_value(&j)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WindowGraph::from_json(&s)
    }
}

impl fmt::Display for WindowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:?} window graph (m={}, tau_max={})",
            self.kind, self.m, self.tau_max
        )?;
        for e in self.slice_edges() {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// On-disk graph format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub m: usize,
    pub tau_max: usize,
    /// `"dag"` or `"cpdag"`. Inferred from the marks when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub src_var: usize,
    pub src_lag: usize,
    pub dst_var: usize,
    pub dst_lag: usize,
    pub mark: String,
}

/// Replicates edges into the contemporaneous slice across every lag slice of
/// the window. The kind is `Cpdag` if any edge is undirected.
pub fn expand_from_slice(slice_edges: &[Edge], m: usize, tau_max: usize) -> Result<WindowGraph> {
    let kind = if slice_edges.iter().any(|e| e.mark == Mark::Undirected) {
        GraphKind::Cpdag
    } else {
        GraphKind::Dag
    };
    expand_from_slice_as(kind, slice_edges, m, tau_max)
}

pub fn expand_from_slice_as(
    kind: GraphKind,
    slice_edges: &[Edge],
    m: usize,
    tau_max: usize,
) -> Result<WindowGraph> {
    let mut g = WindowGraph::new(m, tau_max, kind)?;
    for e in slice_edges {
        if e.dst.lag != 0 {
            return Err(Error::InvalidInput(format!(
                "slice edge {e} does not end in the contemporaneous slice"
            )));
        }
        if e.src.lag > tau_max {
            return Err(Error::InvalidInput(format!(
                "slice edge {e} exceeds tau_max={tau_max}"
            )));
        }
        for shift in 0..=(tau_max - e.src.lag) {
            g.add_edge(Edge {
                src: NodeId::new(e.src.var, e.src.lag + shift),
                dst: NodeId::new(e.dst.var, shift),
                mark: e.mark,
            })?;
        }
    }
    Ok(g)
}

/// `s1 ⟂ s2 | s3` over window nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeparationQuery {
    pub s1: BTreeSet<NodeId>,
    pub s2: BTreeSet<NodeId>,
    pub s3: BTreeSet<NodeId>,
}

impl SeparationQuery {
    pub fn new(
        s1: impl IntoIterator<Item = NodeId>,
        s2: impl IntoIterator<Item = NodeId>,
        s3: impl IntoIterator<Item = NodeId>,
    ) -> Self {
        SeparationQuery {
            s1: s1.into_iter().collect(),
            s2: s2.into_iter().collect(),
            s3: s3.into_iter().collect(),
        }
    }

    fn check_disjoint(&self) -> Result<()> {
        let overlap = |a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>| a.intersection(b).next().copied();
        if let Some(n) = overlap(&self.s1, &self.s2)
            .or_else(|| overlap(&self.s1, &self.s3))
            .or_else(|| overlap(&self.s2, &self.s3))
        {
            return Err(Error::InvalidInput(format!(
                "separation query sets overlap at {n}"
            )));
        }
        Ok(())
    }
}

/// Source of conditional-independence answers over window nodes.
pub trait CiOracle {
    fn independent(&self, x: &[NodeId], y: &[NodeId], given: &[NodeId]) -> bool;
}

/// Answers independence queries by d-separation in a fixed DAG.
#[derive(Clone, Copy, Debug)]
pub struct DSepOracle<'g> {
    graph: &'g WindowGraph,
}

impl<'g> DSepOracle<'g> {
    pub fn new(graph: &'g WindowGraph) -> Result<Self> {
        if graph.kind() != GraphKind::Dag {
            return Err(Error::InvalidInput("d-separation oracle needs a DAG".into()));
        }
        Ok(DSepOracle { graph })
    }

    pub fn graph(&self) -> &'g WindowGraph {
        self.graph
    }
}

impl CiOracle for DSepOracle<'_> {
    fn independent(&self, x: &[NodeId], y: &[NodeId], given: &[NodeId]) -> bool {
        let m = self.graph.m();
        let idx = |s: &[NodeId]| s.iter().map(|n| n.index(m)).collect::<Vec<_>>();
        self.graph.d_separated_idx(&idx(x), &idx(y), &idx(given))
    }
}

/// Every contemporaneous node is independent of its non-descendants given
/// its parents.
pub fn satisfies_window_markov(g: &WindowGraph, oracle: &dyn CiOracle) -> bool {
    g.contemporaneous_nodes().all(|v| {
        let pa = g.parents(v);
        let rest: Vec<NodeId> = g
            .nondescendants(v)
            .into_iter()
            .filter(|n| !pa.contains(n))
            .collect();
        if rest.is_empty() {
            return true;
        }
        let pa: Vec<NodeId> = pa.into_iter().collect();
        oracle.independent(&[v], &rest, &pa)
    })
}

/// Brute-force check that no proper stationary subgraph of `g` keeps the
/// window Markov property. Exponential in the number of slice edges; capped
/// at [`BRUTE_FORCE_NODE_CAP`] window nodes.
pub fn is_window_subgraph_minimal(g: &WindowGraph, oracle: &dyn CiOracle) -> Result<bool> {
    is_window_subgraph_minimal_capped(g, oracle, BRUTE_FORCE_NODE_CAP)
}

pub fn is_window_subgraph_minimal_capped(
    g: &WindowGraph,
    oracle: &dyn CiOracle,
    node_cap: usize,
) -> Result<bool> {
    if g.num_nodes() > node_cap {
        return Err(Error::SizeCap {
            nodes: g.num_nodes(),
            cap: node_cap,
        });
    }
    if g.kind() != GraphKind::Dag || !g.is_stationary() {
        return Err(Error::InvalidInput(
            "minimality check needs a stationary DAG".into(),
        ));
    }
    if !satisfies_window_markov(g, oracle) {
        return Err(Error::InvalidInput(
            "graph does not satisfy the window Markov property".into(),
        ));
    }
    let slice = g.slice_edges();
    let k = slice.len();
    if k >= usize::BITS as usize - 1 {
        return Err(Error::SizeCap {
            nodes: g.num_nodes(),
            cap: node_cap,
        });
    }
    let full: usize = (1usize << k) - 1;
    for mask in 0..full {
        let kept: Vec<Edge> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| slice[i])
            .collect();
        let sub = expand_from_slice_as(GraphKind::Dag, &kept, g.m(), g.tau_max())?;
        if satisfies_window_markov(&sub, oracle) {
            return Ok(false);
        }
    }
    Ok(true)
}
