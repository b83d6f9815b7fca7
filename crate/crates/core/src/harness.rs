//! Simulation experiments: parameter sweeps over generated models, parallel
//! replicates, and CSV / JSON output.
//!
//! Replicate seeds are `derive_seed(base_seed, sweep_index, replicate)`.
//! Model sampling, the sliding-window series and the i.i.d. realizations
//! each draw from their own stream derived from that seed, so the rows of a
//! method do not depend on which other methods run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpdag::ts_dag_to_ts_cpdag;
use crate::dataset::{iid_windows, unroll, TimeSeriesDataset, WindowDataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalMode};
use crate::graph::WindowGraph;
use crate::scoring::compute_stats;
use crate::search::{ts_bes, SearchConfig, TsBoss};
use crate::simgen::{sample_model, simulate, true_graph, GenConfig, LinearTsScm};

/// Fraction of failed replicates above which a run is an error.
pub const MAX_FAILURE_RATE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Sliding windows over one long series.
    #[serde(rename = "tsboss")]
    TsBoss,
    /// One window from each of many independent realizations.
    #[serde(rename = "tsboss_iid")]
    TsBossIid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TsBoss => "tsboss",
            Method::TsBossIid => "tsboss_iid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "burn_in_factor")]
    BurnInFactor,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::T => "T",
            SweepParameter::D => "d",
            SweepParameter::N => "N",
            SweepParameter::A => "a",
            SweepParameter::BurnInFactor => "burn_in_factor",
        }
    }

    fn apply(self, cfg: &mut GenConfig, value: f64) -> Result<()> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidInput(format!(
                    "{} must be a positive integer, got {v}",
                    self.as_str()
                )))
            }
        };
        match self {
            SweepParameter::T => cfg.t = count(value)?,
            SweepParameter::N => cfg.n_vars = count(value)?,
            SweepParameter::D => cfg.d = value,
            SweepParameter::A => cfg.a = value,
            SweepParameter::BurnInFactor => cfg.burn_in_factor = value,
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub base: GenConfig,
    /// `None` runs the base configuration only.
    pub sweep: Option<Sweep>,
    pub methods: Vec<Method>,
    pub search: SearchConfig,
    pub output_dir: Option<String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: GenConfig::default(),
            sweep: None,
            methods: vec![Method::TsBoss],
            search: SearchConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// One generator configuration per sweep value.
    pub fn settings(&self) -> Result<Vec<(String, f64, GenConfig)>> {
        match &self.sweep {
            None => Ok(vec![("none".into(), 0.0, self.base.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| {
                    let mut cfg = self.base.clone();
                    s.parameter.apply(&mut cfg, v)?;
                    cfg.validate()?;
                    Ok((s.parameter.as_str().to_string(), v, cfg))
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("no methods selected".into()));
        }
        if self.sweep.as_ref().is_some_and(|s| s.values.is_empty()) {
            return Err(Error::InvalidInput("sweep has no values".into()));
        }
        self.base.validate()?;
        self.settings().map(|_| ())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one replicate.
pub fn derive_seed(base_seed: u64, sweep_index: u64, replicate: u64) -> u64 {
    mix(mix(mix(base_seed) ^ sweep_index) ^ replicate)
}

fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(purpose)))
}

/// Model and sliding-window series of the replicate with `seed`.
pub fn replicate_data(cfg: &GenConfig, seed: u64) -> Result<(LinearTsScm, TimeSeriesDataset)> {
    let model = sample_model(cfg, &mut stream(seed, 0))?;
    let data = simulate(&model, cfg.t, cfg.burn_in(), &mut stream(seed, 1))?;
    Ok((model, data))
}

/// `T - tau_max` independent realizations, one window each.
pub fn iid_data(cfg: &GenConfig, model: &LinearTsScm, seed: u64) -> Result<WindowDataset> {
    let n = cfg.t.saturating_sub(cfg.tau_max);
    let mut rng = stream(seed, 2);
    let reals = (0..n)
        .map(|_| simulate(model, cfg.tau_max + 1, cfg.burn_in(), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    iid_windows(&reals, cfg.tau_max)
}

/// Estimated graph plus diagnostics from one search.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub graph: WindowGraph,
    pub phase1_score: f64,
    pub local_optimum: bool,
    pub runtime_seconds: f64,
}

/// Runs the search and then certifies that no single move improves the
/// final permutation. Runtime covers the search only.
pub fn run_search(d: &WindowDataset, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let start = Instant::now();
    let stats = compute_stats(d)?;
    let mut boss = TsBoss::new(&stats, cfg.clone())?;
    let p1 = boss.phase1()?;
    let graph = if cfg.run_bes {
        ts_bes(&p1.graph, &stats, cfg.penalty_discount)?
    } else {
        p1.graph.clone()
    };
    let runtime_seconds = start.elapsed().as_secs_f64();
    let local_optimum = boss.is_local_optimum(&p1.permutation)?;
    Ok(SearchOutcome {
        graph,
        phase1_score: p1.score,
        local_optimum,
        runtime_seconds,
    })
}

/// One CSV row: a replicate, a method and a reference mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub sweep_parameter: String,
    pub sweep_value: f64,
    pub sweep_index: usize,
    pub replicate: usize,
    pub seed: u64,
    pub method: String,
    pub mode: String,
    #[serde(rename = "N")]
    pub n_vars: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: f64,
    pub frac_contemporaneous: f64,
    pub a: f64,
    pub autocorr_lower: String,
    pub tau_max: usize,
    pub burn_in_factor: f64,
    pub noise_std: f64,
    pub base_seed: u64,
    pub penalty_discount: f64,
    pub run_bes: bool,
    pub num_restarts: usize,
    pub n_samples: usize,
    pub adj_precision: f64,
    pub adj_recall: f64,
    pub adj_f1: f64,
    pub ori_precision: f64,
    pub ori_recall: f64,
    pub ori_f1: f64,
    pub adj_tp: usize,
    pub adj_fp: usize,
    pub adj_fn: usize,
    pub adj_tn: usize,
    pub ori_tp: usize,
    pub ori_fp: usize,
    pub ori_fn: usize,
    pub ori_tn: usize,
    pub exact_match: bool,
    pub local_optimum: bool,
    pub phase1_score: f64,
}

/// Runtime of one search, kept apart from the deterministic CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sweep_index: usize,
    pub replicate: usize,
    pub method: String,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub sweep_index: usize,
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    pub n_valid: usize,
    pub n_nan: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub mode: String,
    pub sweep_parameter: String,
    pub sweep_value: f64,
    pub n_rows: usize,
    pub metrics: Vec<MetricSummary>,
    pub exact_match_rate: f64,
    pub local_optimum_rate: f64,
}

impl SummaryRow {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub rows: Vec<RowRecord>,
    pub summary: Vec<SummaryRow>,
    pub timings: Vec<Timing>,
    pub failures: Vec<ReplicateFailure>,
    pub seeds: Vec<(usize, usize, u64)>,
    pub total_replicates: usize,
}

impl RunRecord {
    pub fn failure_rate(&self) -> f64 {
        if self.total_replicates == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.total_replicates as f64
        }
    }
}

pub const METRIC_NAMES: [&str; 6] = [
    "adj_precision",
    "adj_recall",
    "adj_f1",
    "ori_precision",
    "ori_recall",
    "ori_f1",
];

fn metric_value(r: &RowRecord, name: &str) -> f64 {
    match name {
        "adj_precision" => r.adj_precision,
        "adj_recall" => r.adj_recall,
        "adj_f1" => r.adj_f1,
        "ori_precision" => r.ori_precision,
        "ori_recall" => r.ori_recall,
        "ori_f1" => r.ori_f1,
        _ => f64::NAN,
    }
}

struct Task<'a> {
    sweep_parameter: &'a str,
    sweep_value: f64,
    sweep_index: usize,
    replicate: usize,
    seed: u64,
    cfg: &'a GenConfig,
}

type TaskOutput = (Vec<RowRecord>, Vec<Timing>);

fn run_task(spec: &ExperimentSpec, task: &Task<'_>) -> Result<TaskOutput> {
    let cfg = task.cfg;
    let (model, data) = replicate_data(cfg, task.seed)?;
    let truth = true_graph(&model)?;
    let truth_cpdag = ts_dag_to_ts_cpdag(&truth)?;
    let search = SearchConfig {
        rng_seed: task.seed,
        ..spec.search.clone()
    };
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &method in &spec.methods {
        let window = match method {
            Method::TsBoss => unroll(&data, cfg.tau_max)?,
            Method::TsBossIid => iid_data(cfg, &model, task.seed)?,
        };
        let out = run_search(&window, &search)?;
        timings.push(Timing {
            sweep_index: task.sweep_index,
            replicate: task.replicate,
            method: method.as_str().into(),
            runtime_seconds: out.runtime_seconds,
        });
        for mode in [EvalMode::Cpdag, EvalMode::Dag] {
            let m = evaluate(&truth, &out.graph, mode)?;
            let reference = match mode {
                EvalMode::Cpdag => &truth_cpdag,
                EvalMode::Dag => &truth,
            };
            rows.push(RowRecord {
                sweep_parameter: task.sweep_parameter.into(),
                sweep_value: task.sweep_value,
                sweep_index: task.sweep_index,
                replicate: task.replicate,
                seed: task.seed,
                method: method.as_str().into(),
                mode: mode.as_str().into(),
                n_vars: cfg.n_vars,
                t: cfg.t,
                d: cfg.d,
                frac_contemporaneous: cfg.frac_contemporaneous,
                a: cfg.a,
                autocorr_lower: serde_json::to_value(cfg.autocorr_lower)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                tau_max: cfg.tau_max,
                burn_in_factor: cfg.burn_in_factor,
                noise_std: cfg.noise_std,
                base_seed: cfg.rng_seed,
                penalty_discount: search.penalty_discount,
                run_bes: search.run_bes,
                num_restarts: search.num_restarts,
                n_samples: window.num_rows(),
                adj_precision: m.adj_precision,
                adj_recall: m.adj_recall,
                adj_f1: m.adj_f1,
                ori_precision: m.ori_precision,
                ori_recall: m.ori_recall,
                ori_f1: m.ori_f1,
                adj_tp: m.adjacency.tp,
                adj_fp: m.adjacency.fp,
                adj_fn: m.adjacency.fn_,
                adj_tn: m.adjacency.tn,
                ori_tp: m.orientation.tp,
                ori_fp: m.orientation.fp,
                ori_fn: m.orientation.fn_,
                ori_tn: m.orientation.tn,
                exact_match: same_edges(&out.graph, reference),
                local_optimum: out.local_optimum,
                phase1_score: out.phase1_score,
            });
        }
    }
    Ok((rows, timings))
}

fn same_edges(a: &WindowGraph, b: &WindowGraph) -> bool {
    a.edges() == b.edges()
}

/// Runs every sweep value and replicate on a pool of `jobs` threads.
/// Results come back in (sweep, replicate) order regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<RunRecord> {
    spec.validate()?;
    let settings = spec.settings()?;
    let mut tasks = Vec::new();
    for (si, (name, value, cfg)) in settings.iter().enumerate() {
        for k in 0..cfg.k {
            tasks.push(Task {
                sweep_parameter: name,
                sweep_value: *value,
                sweep_index: si,
                replicate: k,
                seed: derive_seed(spec.base.rng_seed, si as u64, k as u64),
                cfg,
            });
        }
    }
    info!("running {} replicates on {jobs} threads", tasks.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Experiment(e.to_string()))?;
    let results: Vec<Result<TaskOutput>> =
        pool.install(|| tasks.par_iter().map(|t| run_task(spec, t)).collect());

    let mut record = RunRecord {
        rows: Vec::new(),
        summary: Vec::new(),
        timings: Vec::new(),
        failures: Vec::new(),
        seeds: tasks.iter().map(|t| (t.sweep_index, t.replicate, t.seed)).collect(),
        total_replicates: tasks.len(),
    };
    for (t, r) in tasks.iter().zip(results) {
        match r {
            Ok((rows, timings)) => {
                record.rows.extend(rows);
                record.timings.extend(timings);
            }
            Err(e) => {
                warn!("replicate {} of sweep {} failed: {e}", t.replicate, t.sweep_index);
                record.failures.push(ReplicateFailure {
                    sweep_index: t.sweep_index,
                    replicate: t.replicate,
                    seed: t.seed,
                    error: e.to_string(),
                });
            }
        }
    }
    if !record.rows.is_empty() {
        record.summary = aggregate(&record.rows)?;
    }
    Ok(record)
}

/// Mean and standard error per (method, mode, sweep value), skipping NaN.
pub fn aggregate(rows: &[RowRecord]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, String, usize), Vec<&RowRecord>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.method.clone(), r.mode.clone(), r.sweep_index))
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((method, mode, _), g) in groups {
        let metrics = METRIC_NAMES
            .iter()
            .map(|&name| {
                let vals: Vec<f64> = g
                    .iter()
                    .map(|r| metric_value(r, name))
                    .filter(|v| !v.is_nan())
                    .collect();
                let (mean, se) = mean_se(&vals);
                MetricSummary {
                    name: name.into(),
                    mean,
                    se,
                    n_valid: vals.len(),
                    n_nan: g.len() - vals.len(),
                }
            })
            .collect();
        let rate = |f: fn(&RowRecord) -> bool| {
            g.iter().filter(|r| f(r)).count() as f64 / g.len() as f64
        };
        out.push(SummaryRow {
            method,
            mode,
            sweep_parameter: g[0].sweep_parameter.clone(),
            sweep_value: g[0].sweep_value,
            n_rows: g.len(),
            metrics,
            exact_match_rate: rate(|r| r.exact_match),
            local_optimum_rate: rate(|r| r.local_optimum),
        });
    }
    Ok(out)
}

/// Sample mean and standard error of the mean; NaN mean for no values and
/// zero error for one.
pub fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn write_rows_csv(rows: &[RowRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(summary: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["method", "mode", "sweep_parameter", "sweep_value", "n_rows"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for name in METRIC_NAMES {
        for suffix in ["mean", "se", "n_valid", "n_nan"] {
            header.push(format!("{name}_{suffix}"));
        }
    }
    header.push("exact_match_rate".into());
    header.push("local_optimum_rate".into());
    w.write_record(&header)?;
    for s in summary {
        let mut rec = vec![
            s.method.clone(),
            s.mode.clone(),
            s.sweep_parameter.clone(),
            s.sweep_value.to_string(),
            s.n_rows.to_string(),
        ];
        for m in &s.metrics {
            rec.push(m.mean.to_string());
            rec.push(m.se.to_string());
            rec.push(m.n_valid.to_string());
            rec.push(m.n_nan.to_string());
        }
        rec.push(s.exact_match_rate.to_string());
        rec.push(s.local_optimum_rate.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    spec: &'a ExperimentSpec,
    iid_convention: &'static str,
    self_links: &'static str,
    total_replicates: usize,
    failures: &'a [ReplicateFailure],
    seeds: Vec<SeedEntry>,
    timing: TimingSection<'a>,
}

#[derive(Serialize)]
struct SeedEntry {
    sweep_index: usize,
    replicate: usize,
    seed: u64,
}

#[derive(Serialize)]
struct TimingSection<'a> {
    jobs: usize,
    wall_seconds: f64,
    mean_runtime_seconds: BTreeMap<String, f64>,
    runs: &'a [Timing],
}

/// Writes `rows.csv`, `summary.csv` and `manifest.json` into `dir`.
pub fn write_outputs(
    record: &RunRecord,
    spec: &ExperimentSpec,
    dir: &Path,
    jobs: usize,
    wall_seconds: f64,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows_csv(&record.rows, &dir.join("rows.csv"))?;
    write_summary_csv(&record.summary, &dir.join("summary.csv"))?;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for t in &record.timings {
        let e = sums.entry(t.method.clone()).or_default();
        e.0 += t.runtime_seconds;
        e.1 += 1;
    }
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        spec,
        iid_convention: "tsboss_iid uses T - tau_max independent realizations, one window each, \
                         so both methods see the same number of rows",
        self_links: "one lag-1 self-link per variable in addition to the floor(d*N) cross-links",
        total_replicates: record.total_replicates,
        failures: &record.failures,
        seeds: record
            .seeds
            .iter()
            .map(|&(sweep_index, replicate, seed)| SeedEntry {
                sweep_index,
                replicate,
                seed,
            })
            .collect(),
        timing: TimingSection {
            jobs,
            wall_seconds,
            mean_runtime_seconds: sums
                .into_iter()
                .map(|(k, (s, n))| (k, s / n as f64))
                .collect(),
            runs: &record.timings,
        },
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Runs, writes all outputs, and fails if too many replicates failed.
pub fn run_and_write(spec: &ExperimentSpec, jobs: usize, dir: &Path) -> Result<RunRecord> {
    let start = Instant::now();
    let record = run_experiment(spec, jobs)?;
    write_outputs(&record, spec, dir, jobs, start.elapsed().as_secs_f64())?;
    if record.failure_rate() > MAX_FAILURE_RATE {
        return Err(Error::Experiment(format!(
            "{} of {} replicates failed",
            record.failures.len(),
            record.total_replicates
        )));
    }
    Ok(record)
}
