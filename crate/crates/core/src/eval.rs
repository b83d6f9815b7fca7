//! Adjacency and orientation precision / recall.
//!
//! Counts run over the stationary representative edges only: one slot per
//! pair of nodes with at least one endpoint in the contemporaneous slice, so
//! window copies of a repeated edge are counted once. Orientation looks at
//! ordered pairs of lag-0 nodes and asks whether the edge carries an
//! arrowhead into the first node.

use serde::{Deserialize, Serialize};

use crate::cpdag::ts_dag_to_ts_cpdag;
use crate::error::{Error, Result};
use crate::graph::{EdgeRelation, GraphKind, NodeId, WindowGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    TP,
    FP,
    FN,
    TN,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn add(&mut self, o: Outcome) {
        match o {
            Outcome::TP => self.tp += 1,
            Outcome::FP => self.fp += 1,
            Outcome::FN => self.fn_ += 1,
            Outcome::TN => self.tn += 1,
        }
    }

    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `None` when the truth has no positives.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.recall()?);
        if p + r == 0.0 {
            Some(0.0)
        } else {
            Some(2.0 * p * r / (p + r))
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn adjacency_outcome(true_adjacent: bool, est_adjacent: bool) -> Outcome {
    match (true_adjacent, est_adjacent) {
        (true, true) => Outcome::TP,
        (true, false) => Outcome::FN,
        (false, true) => Outcome::FP,
        (false, false) => Outcome::TN,
    }
}

/// Outcome for the ordered pair `(a, b)` given how each graph's edge looks
/// from `a`. `None` when the pair does not count: absent in the truth and
/// absent or undirected in the estimate. An estimated directed edge between
/// non-adjacent true nodes counts as a false arrowhead in either direction.
pub fn orientation_outcome(truth: EdgeRelation, est: EdgeRelation) -> Option<Outcome> {
    use EdgeRelation::*;
    if truth == Absent {
        return match est {
            Absent | Undirected => None,
            Into | OutOf => Some(Outcome::FP),
        };
    }
    let t = truth == Into;
    let e = est == Into;
    Some(match (t, e) {
        (true, true) => Outcome::TP,
        (false, true) => Outcome::FP,
        (true, false) => Outcome::FN,
        (false, false) => Outcome::TN,
    })
}

fn check_shape(a: &WindowGraph, b: &WindowGraph) -> Result<()> {
    if a.m() != b.m() || a.tau_max() != b.tau_max() {
        return Err(Error::InvalidInput(format!(
            "graphs differ in shape: m {} vs {}, tau_max {} vs {}",
            a.m(),
            b.m(),
            a.tau_max(),
            b.tau_max()
        )));
    }
    Ok(())
}

/// Unordered slots `(i, j)`: `j` in the lag-0 slice, `i` lagged or an
/// earlier lag-0 variable.
fn adjacency_slots(m: usize, tau_max: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    (0..m).flat_map(move |j| {
        let dst = NodeId::new(j, 0);
        (0..=tau_max).flat_map(move |lag| {
            (0..m).filter_map(move |i| {
                let src = NodeId::new(i, lag);
                (lag > 0 || i < j).then_some((src, dst))
            })
        })
    })
}

pub fn adjacency_metrics(truth: &WindowGraph, est: &WindowGraph) -> Result<ConfusionCounts> {
    check_shape(truth, est)?;
    let mut c = ConfusionCounts::default();
    for (a, b) in adjacency_slots(truth.m(), truth.tau_max()) {
        c.add(adjacency_outcome(truth.adjacent(a, b), est.adjacent(a, b)));
    }
    Ok(c)
}

fn orientation_counts(truth: &WindowGraph, est: &WindowGraph) -> ConfusionCounts {
    let m = truth.m();
    let mut c = ConfusionCounts::default();
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let (na, nb) = (NodeId::new(a, 0), NodeId::new(b, 0));
            if let Some(o) = orientation_outcome(truth.relation(na, nb), est.relation(na, nb)) {
                c.add(o);
            }
        }
    }
    c
}

/// Arrowhead counts over ordered lag-0 pairs. Both graphs must be CPDAGs.
pub fn orientation_metrics(truth: &WindowGraph, est: &WindowGraph) -> Result<ConfusionCounts> {
    check_shape(truth, est)?;
    if truth.kind() != GraphKind::Cpdag || est.kind() != GraphKind::Cpdag {
        return Err(Error::InvalidInput("orientation metrics compare CPDAGs".into()));
    }
    Ok(orientation_counts(truth, est))
}

/// Reference graph for [`evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Compare with the CPDAG of the true DAG.
    Cpdag,
    /// Compare with the true DAG itself.
    Dag,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Cpdag => "cpdag",
            EvalMode::Dag => "dag",
        }
    }
}

/// Counts and rates for one comparison. Undefined rates are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub adjacency: ConfusionCounts,
    pub orientation: ConfusionCounts,
    pub adj_precision: f64,
    pub adj_recall: f64,
    pub adj_f1: f64,
    pub ori_precision: f64,
    pub ori_recall: f64,
    pub ori_f1: f64,
}

impl MetricsRecord {
    pub fn from_counts(adjacency: ConfusionCounts, orientation: ConfusionCounts) -> Self {
        let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
        MetricsRecord {
            adjacency,
            orientation,
            adj_precision: nan(adjacency.precision()),
            adj_recall: nan(adjacency.recall()),
            adj_f1: nan(adjacency.f1()),
            ori_precision: nan(orientation.precision()),
            ori_recall: nan(orientation.recall()),
            ori_f1: nan(orientation.f1()),
        }
    }

    /// True if any rate had a zero denominator.
    pub fn zero_division(&self) -> bool {
        [
            self.adj_precision,
            self.adj_recall,
            self.ori_precision,
            self.ori_recall,
        ]
        .iter()
        .any(|x| x.is_nan())
    }
}

/// Compares `est` with the true DAG or with its CPDAG.
pub fn evaluate(truth_dag: &WindowGraph, est: &WindowGraph, mode: EvalMode) -> Result<MetricsRecord> {
    check_shape(truth_dag, est)?;
    if truth_dag.kind() != GraphKind::Dag {
        return Err(Error::InvalidInput("truth must be a DAG".into()));
    }
    let reference = match mode {
        EvalMode::Cpdag => ts_dag_to_ts_cpdag(truth_dag)?,
        EvalMode::Dag => truth_dag.clone(),
    };
    Ok(MetricsRecord::from_counts(
        adjacency_metrics(&reference, est)?,
        orientation_counts(&reference, est),
    ))
}
