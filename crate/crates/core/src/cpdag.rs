//! Time-series CPDAGs.
//!
//! Conversion from a stationary window DAG: lagged edges keep their
//! temporal orientation, contemporaneous edges start undirected, colliders
//! (contemporaneous and mixed-time) are oriented, lagged edges propagate by
//! Meek R1 into the contemporaneous slice, and R1–R3 close the
//! contemporaneous subgraph. All work happens on the lag-0 slice and is then
//! replicated over the window.

use crate::error::{Error, Result};
use crate::graph::{
    expand_from_slice_as, Edge, GraphKind, Mark, WindowGraph, BRUTE_FORCE_NODE_CAP,
};

/// Which Meek rules to run on the contemporaneous subgraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeekRules {
    pub r1: bool,
    pub r2: bool,
    pub r3: bool,
}

impl MeekRules {
    pub const ALL: MeekRules = MeekRules {
        r1: true,
        r2: true,
        r3: true,
    };
}

impl Default for MeekRules {
    fn default() -> Self {
        MeekRules::ALL
    }
}

/// Stationary DAG to its time-series CPDAG.
pub fn ts_dag_to_ts_cpdag(g: &WindowGraph) -> Result<WindowGraph> {
    if g.kind() != GraphKind::Dag {
        return Err(Error::InvalidInput("expected a DAG".into()));
    }
    if !g.is_acyclic() {
        return Err(Error::InvalidInput("input graph has a directed cycle".into()));
    }
    if !g.is_stationary() {
        return Err(Error::InvalidInput("input graph is not stationary".into()));
    }
    let m = g.m();

    // lagged edges directed, contemporaneous edges undirected
    let slice: Vec<Edge> = g
        .slice_edges()
        .into_iter()
        .map(|e| {
            if e.src.lag == 0 {
                Edge::undirected(e.src, e.dst)
            } else {
                e
            }
        })
        .collect();
    let mut p = expand_from_slice_as(GraphKind::Cpdag, &slice, m, g.tau_max())?;

    // colliders into the contemporaneous slice, including mixed-time ones
    for y in 0..m {
        let pa: Vec<usize> = g.parents_idx(y).collect();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if g.adjacent_idx(a, b) || (a >= m && b >= m) {
                    continue;
                }
                for x in [a, b] {
                    if x < m {
                        orient_slice(&mut p, x, y);
                    }
                }
            }
        }
    }

    // R1 from lagged edges: L -> b o-o c with L, c non-adjacent gives b -> c
    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..m {
            let lagged: Vec<usize> = p.parents_idx(b).filter(|&a| a >= m).collect();
            for c in 0..m {
                if !p.undirected_idx(b, c) {
                    continue;
                }
                if lagged.iter().any(|&a| !p.adjacent_idx(a, c)) {
                    orient_slice(&mut p, b, c);
                    changed = true;
                }
            }
        }
    }

    meek_closure(&p, MeekRules::ALL)
}

/// Orients the contemporaneous edge `src o-o dst` (dense lag-0 indices) in
/// every lag slice.
fn orient_slice(p: &mut WindowGraph, src: usize, dst: usize) {
    let m = p.m();
    for k in 0..=p.tau_max() {
        let (s, d) = (src + k * m, dst + k * m);
        if p.adjacent_idx(s, d) {
            p.orient_idx(s, d);
        }
    }
}

fn contemporaneous_cycle(p: &WindowGraph) -> bool {
    let m = p.m();
    // Kahn on the directed contemporaneous edges of lag 0
    let mut indeg: Vec<usize> = (0..m)
        .map(|v| (0..m).filter(|&u| p.directed_idx(u, v)).count())
        .collect();
    let mut stack: Vec<usize> = (0..m).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for w in 0..m {
            if p.directed_idx(v, w) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
    }
    seen != m
}

/// Runs the selected Meek rules on the contemporaneous (lag-0) subgraph to
/// a fixed point and copies the orientations to the other lag slices.
pub fn meek_closure(p: &WindowGraph, rules: MeekRules) -> Result<WindowGraph> {
    if p.kind() != GraphKind::Cpdag {
        return Err(Error::InvalidInput("Meek closure needs a CPDAG".into()));
    }
    let m = p.m();
    let mut p = p.clone();
    if contemporaneous_cycle(&p) {
        return Err(Error::Internal("input has a directed contemporaneous cycle".into()));
    }
    let adj = |p: &WindowGraph, a: usize, b: usize| p.adjacent_idx(a, b);
    loop {
        let mut fired = None;
        'search: for b in 0..m {
            for c in 0..m {
                if !p.undirected_idx(b, c) {
                    continue;
                }
                // R1: a -> b o-o c, a and c non-adjacent
                if rules.r1 && (0..m).any(|a| a != c && p.directed_idx(a, b) && !adj(&p, a, c)) {
                    fired = Some((b, c));
                    break 'search;
                }
                // R2: b -> a -> c and b o-o c
                if rules.r2 && (0..m).any(|a| p.directed_idx(b, a) && p.directed_idx(a, c)) {
                    fired = Some((b, c));
                    break 'search;
                }
                // R3: b o-o x, b o-o y, x -> c <- y, x and y non-adjacent
                if rules.r3 {
                    let cand: Vec<usize> = (0..m)
                        .filter(|&x| x != c && p.undirected_idx(b, x) && p.directed_idx(x, c))
                        .collect();
                    for (i, &x) in cand.iter().enumerate() {
                        if cand[i + 1..].iter().any(|&y| !adj(&p, x, y)) {
                            fired = Some((b, c));
                            break 'search;
                        }
                    }
                }
            }
        }
        match fired {
            Some((b, c)) => {
                orient_slice(&mut p, b, c);
                if contemporaneous_cycle(&p) {
                    return Err(Error::Internal(format!(
                        "orienting {} -> {} closed a directed cycle",
                        p.node(b),
                        p.node(c)
                    )));
                }
            }
            None => break,
        }
    }
    Ok(p)
}

/// A stationary DAG in the class of a stationary time-series PDAG that adds
/// no new v-structure (Dor–Tarsi on the contemporaneous slice), or `None`
/// when no such extension exists.
pub fn consistent_extension(p: &WindowGraph) -> Option<WindowGraph> {
    let m = p.m();
    let mut work = p.clone();
    let mut remaining = vec![true; m];
    for _ in 0..m {
        let x = (0..m).find(|&x| {
            if !remaining[x] {
                return false;
            }
            let sink = (0..m).all(|y| !(remaining[y] && work.directed_idx(x, y)));
            if !sink {
                return false;
            }
            let adjacent: Vec<usize> = work
                .adjacents_idx(x)
                .filter(|&a| a >= m || remaining[a])
                .collect();
            (0..m)
                .filter(|&y| remaining[y] && work.undirected_idx(x, y))
                .all(|y| adjacent.iter().all(|&a| a == y || work.adjacent_idx(a, y)))
        })?;
        for y in 0..m {
            if remaining[y] && work.undirected_idx(x, y) {
                orient_slice(&mut work, y, x);
            }
        }
        remaining[x] = false;
    }
    let slice: Vec<Edge> = work
        .slice_edges()
        .into_iter()
        .map(|e| Edge::directed(e.src, e.dst))
        .collect();
    debug_assert!(slice.iter().all(|e| e.mark == Mark::Directed));
    let dag = expand_from_slice_as(GraphKind::Dag, &slice, m, p.tau_max()).ok()?;
    dag.is_acyclic().then_some(dag)
}

/// Enumerates every stationary, temporally admissible DAG with the same
/// skeleton and the same d-separation statements as `g`.
pub fn mec_brute_force(g: &WindowGraph) -> Result<Vec<WindowGraph>> {
    if g.num_nodes() > BRUTE_FORCE_NODE_CAP {
        return Err(Error::SizeCap {
            nodes: g.num_nodes(),
            cap: BRUTE_FORCE_NODE_CAP,
        });
    }
    if g.kind() != GraphKind::Dag || !g.is_stationary() || !g.is_acyclic() {
        return Err(Error::InvalidInput("expected a stationary acyclic DAG".into()));
    }
    let slice = g.slice_edges();
    let (contemporaneous, lagged): (Vec<Edge>, Vec<Edge>) =
        slice.into_iter().partition(|e| e.src.lag == 0);
    let k = contemporaneous.len();
    let mut members = Vec::new();
    for mask in 0..(1usize << k) {
        let mut edges = lagged.clone();
        for (i, e) in contemporaneous.iter().enumerate() {
            // canonical pair orientation, flipped when the bit is set
            let (a, b) = if e.src < e.dst { (e.src, e.dst) } else { (e.dst, e.src) };
            edges.push(if mask & (1 << i) == 0 {
                Edge::directed(a, b)
            } else {
                Edge::directed(b, a)
            });
        }
        let cand = expand_from_slice_as(GraphKind::Dag, &edges, g.m(), g.tau_max())?;
        if cand.is_acyclic() && d_separation_equivalent(g, &cand) {
            members.push(cand);
        }
    }
    Ok(members)
}

/// Compares every pairwise statement `x ⟂ y | Z` over the window. Pairwise
/// statements determine all set statements for d-separation.
pub fn d_separation_equivalent(a: &WindowGraph, b: &WindowGraph) -> bool {
    let p = a.num_nodes();
    if p != b.num_nodes() {
        return false;
    }
    for x in 0..p {
        for y in x + 1..p {
            let others: Vec<usize> = (0..p).filter(|&v| v != x && v != y).collect();
            for mask in 0..(1usize << others.len()) {
                let z: Vec<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                if a.d_separated_idx(&[x], &[y], &z) != b.d_separated_idx(&[x], &[y], &z) {
                    return false;
                }
            }
        }
    }
    true
}
