//! Gaussian BIC local scores from covariance statistics.
//!
//! The local score of a target given a parent set is
//!
//! ```text
//! -(n/2) ln(σ̂²) - (c/2) |parents| ln(n)
//! ```
//!
//! where σ̂² is the MLE residual variance of the linear regression of the
//! target on its parents. Higher is better; terms that do not depend on the
//! parent set are dropped.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};
use crate::graph::{GraphKind, NodeId, WindowGraph};

/// Ridge added to a singular parent covariance before retrying the solve.
pub const RIDGE: f64 = 1e-10;
/// Residual variances below this are clamped.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Sample covariance (1/n normalization) and row count.
#[derive(Clone, Debug, PartialEq)]
pub struct SufficientStats {
    cov: DMatrix<f64>,
    n: usize,
    columns: Vec<NodeId>,
    m: usize,
    tau_max: usize,
}

impl SufficientStats {
    /// Builds statistics from an explicit covariance matrix whose rows
    /// follow `columns`. Every window node must appear exactly once.
    pub fn from_covariance(
        cov: DMatrix<f64>,
        n: usize,
        columns: Vec<NodeId>,
        m: usize,
        tau_max: usize,
    ) -> Result<Self> {
        let p = m * (tau_max + 1);
        if cov.shape() != (p, p) || columns.len() != p {
            return Err(Error::InvalidInput(format!(
                "covariance is {:?}, expected {p}x{p} with {p} columns",
                cov.shape()
            )));
        }
        let mut seen = vec![false; p];
        for c in &columns {
            if c.var >= m || c.lag > tau_max || std::mem::replace(&mut seen[c.index(m)], true) {
                return Err(Error::InvalidInput(format!("bad or repeated column {c}")));
            }
        }
        if n == 0 {
            return Err(Error::InsufficientData("n must be at least 1".into()));
        }
        for i in 0..p {
            if cov[(i, i)] < 0.0 || !cov[(i, i)].is_finite() {
                return Err(Error::InvalidInput(format!("bad variance at column {i}")));
            }
            for j in 0..i {
                if cov[(i, j)] != cov[(j, i)] {
                    return Err(Error::InvalidInput("covariance is not symmetric".into()));
                }
            }
        }
        Ok(SufficientStats {
            cov,
            n,
            columns,
            m,
            tau_max,
        })
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[NodeId] {
        &self.columns
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn num_nodes(&self) -> usize {
        self.columns.len()
    }

    fn column_of(&self, node: NodeId) -> Result<usize> {
        self.columns
            .iter()
            .position(|&c| c == node)
            .ok_or_else(|| Error::InvalidInput(format!("{node} is not a column")))
    }
}

/// Sample covariance of the window columns, preserving their order.
pub fn compute_stats(d: &WindowDataset) -> Result<SufficientStats> {
    let n = d.num_rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let x = d.values();
    let p = x.ncols();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let mut cov = centered.tr_mul(&centered) / n as f64;
    for i in 0..p {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    SufficientStats::from_covariance(cov, n, d.columns().to_vec(), d.m(), d.tau_max())
}

/// A local score together with what it was computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScore {
    pub value: f64,
    pub target: NodeId,
    pub parent_set: BTreeSet<NodeId>,
}

/// BIC scorer over dense window indices (`var + m * lag`).
///
/// Cheap to clone: the reordered covariance is shared.
#[derive(Clone, Debug)]
pub struct Bic {
    cov: Arc<DMatrix<f64>>,
    n: f64,
    ln_n: f64,
    penalty_discount: f64,
    m: usize,
    tau_max: usize,
}

impl Bic {
    pub fn new(stats: &SufficientStats, penalty_discount: f64) -> Result<Self> {
        if !(penalty_discount > 0.0 && penalty_discount.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "penalty discount must be positive, got {penalty_discount}"
            )));
        }
        let p = stats.num_nodes();
        let m = stats.m;
        // position of each dense index inside the stats column order
        let mut pos = vec![0; p];
        for (c, node) in stats.columns.iter().enumerate() {
            pos[node.index(m)] = c;
        }
        let cov = DMatrix::from_fn(p, p, |i, j| stats.cov[(pos[i], pos[j])]);
        let n = stats.n as f64;
        Ok(Bic {
            cov: Arc::new(cov),
            n,
            ln_n: n.ln(),
            penalty_discount,
            m,
            tau_max: stats.tau_max,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn num_nodes(&self) -> usize {
        self.cov.nrows()
    }

    pub fn penalty_discount(&self) -> f64 {
        self.penalty_discount
    }

    /// Residual variance of `target` regressed on `parents` (sorted, dense
    /// indices), before clamping.
    pub(crate) fn residual_variance(&self, target: usize, parents: &[usize]) -> f64 {
        let cov = &*self.cov;
        let k = parents.len();
        if k == 0 {
            return cov[(target, target)];
        }
        let sub = DMatrix::from_fn(k, k, |i, j| cov[(parents[i], parents[j])]);
        let rhs = DVector::from_fn(k, |i, _| cov[(parents[i], target)]);
        let beta = solve_spd(sub, &rhs);
        cov[(target, target)] - rhs.dot(&beta)
    }

    /// Local score on dense indices. `parents` must be sorted ascending so
    /// that equal sets give bit-identical values.
    pub(crate) fn score_idx(&self, target: usize, parents: &[usize]) -> f64 {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(!parents.contains(&target));
        let mut var = self.residual_variance(target, parents);
        if var < VARIANCE_FLOOR {
            warn!(
                "residual variance {var:e} for target {target} clamped to {VARIANCE_FLOOR:e}"
            );
            var = VARIANCE_FLOOR;
        }
        -0.5 * self.n * var.ln() - 0.5 * self.penalty_discount * parents.len() as f64 * self.ln_n
    }

    fn dense(&self, node: NodeId) -> Result<usize> {
        if node.var < self.m && node.lag <= self.tau_max {
            Ok(node.index(self.m))
        } else {
            Err(Error::InvalidInput(format!("{node} outside the window")))
        }
    }

    pub fn local_score(&self, target: NodeId, parents: &BTreeSet<NodeId>) -> Result<LocalScore> {
        if parents.contains(&target) {
            return Err(Error::InvalidInput(format!(
                "{target} cannot be its own parent"
            )));
        }
        let t = self.dense(target)?;
        let mut idx = parents
            .iter()
            .map(|&p| self.dense(p))
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        Ok(LocalScore {
            value: self.score_idx(t, &idx),
            target,
            parent_set: parents.clone(),
        })
    }
}

fn solve_spd(sub: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = Cholesky::new(sub.clone()) {
        return ch.solve(rhs);
    }
    warn!("singular parent covariance; solving with ridge {RIDGE:e}");
    let k = sub.nrows();
    let mut ridge = RIDGE;
    loop {
        let reg = &sub + DMatrix::identity(k, k) * ridge;
        if let Some(ch) = Cholesky::new(reg) {
            return ch.solve(rhs);
        }
        // only reachable with negative or non-finite input
        ridge *= 10.0;
        if !ridge.is_finite() || ridge > 1e6 {
            return DVector::zeros(k);
        }
    }
}

/// Local BIC of `target` given `parents`.
pub fn local_bic(
    target: NodeId,
    parents: &BTreeSet<NodeId>,
    stats: &SufficientStats,
    penalty_discount: f64,
) -> Result<LocalScore> {
    stats.column_of(target)?;
    Bic::new(stats, penalty_discount)?.local_score(target, parents)
}

/// Sum of local scores of the contemporaneous nodes of a stationary DAG.
pub fn graph_score(g: &WindowGraph, stats: &SufficientStats, penalty_discount: f64) -> Result<f64> {
    let bic = Bic::new(stats, penalty_discount)?;
    graph_score_with(g, &bic)
}

pub fn graph_score_with(g: &WindowGraph, bic: &Bic) -> Result<f64> {
    if g.kind() != GraphKind::Dag {
        return Err(Error::InvalidInput("graph score needs a DAG".into()));
    }
    if g.m() != bic.m() || g.tau_max() != bic.tau_max() {
        return Err(Error::InvalidInput(format!(
            "graph window (m={}, tau_max={}) does not match the data (m={}, tau_max={})",
            g.m(),
            g.tau_max(),
            bic.m(),
            bic.tau_max()
        )));
    }
    Ok((0..g.m())
        .map(|v| {
            let parents: Vec<usize> = g.parents_idx(v).collect();
            bic.score_idx(v, &parents)
        })
        .sum())
}
