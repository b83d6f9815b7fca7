use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsboss::dataset::{iid_windows, load_csv, load_realizations_csv, load_realizations_dir, unroll};
use tsboss::harness::{run_and_write, ExperimentSpec};
use tsboss::search::{discover, SearchConfig};
use tsboss::simgen::{sample_model, simulate, true_graph, AutocorrLower, GenConfig};
use tsboss::{Error, Result};

#[derive(Parser)]
#[command(name = "tsboss", version, about = "Causal discovery for multivariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a window graph from data.
    Discover(DiscoverArgs),
    /// Sample a random model and simulate a series from it.
    Simulate(SimulateArgs),
    /// Run a simulation experiment.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DiscoverArgs {
    /// CSV with one column per variable and one row per time step.
    #[arg(long, required_unless_present = "iid_dir")]
    input: Option<PathBuf>,
    #[arg(long)]
    tau_max: usize,
    /// Directory of CSV files, one independent realization each.
    #[arg(long, conflicts_with = "input")]
    iid_dir: Option<PathBuf>,
    /// Treat the first column of --input as a realization id.
    #[arg(long)]
    realization_id_column: bool,
    #[arg(long, default_value_t = 1.0)]
    penalty_discount: f64,
    /// Skip the backward pass and return the permutation DAG.
    #[arg(long)]
    no_bes: bool,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale each window column to unit variance first.
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    no_gst_cache: bool,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator configuration JSON; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_data: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
    #[arg(long, value_enum)]
    autocorr_lower: Option<AutocorrLower>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides `output_dir` in the spec.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn run_discover(a: DiscoverArgs) -> Result<()> {
    let window = if let Some(dir) = &a.iid_dir {
        iid_windows(&load_realizations_dir(dir)?, a.tau_max)?
    } else {
        let input = a.input.as_ref().expect("clap requires input");
        if a.realization_id_column {
            iid_windows(&load_realizations_csv(input)?, a.tau_max)?
        } else {
            unroll(&load_csv(input)?, a.tau_max)?
        }
    };
    let window = if a.standardize {
        window.standardized()
    } else {
        window
    };
    let cfg = SearchConfig {
        penalty_discount: a.penalty_discount,
        run_bes: !a.no_bes,
        num_restarts: a.restarts,
        rng_seed: a.seed,
        gst_cache: !a.no_gst_cache,
    };
    let g = discover(&window, &cfg)?;
    match &a.output {
        Some(p) => g.write_json(p),
        None => {
            println!("{}", g.to_json());
            Ok(())
        }
    }
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg: GenConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => GenConfig::default(),
    };
    if let Some(l) = a.autocorr_lower {
        cfg.autocorr_lower = l;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let model = sample_model(&cfg, &mut rng)?;
    let data = simulate(&model, cfg.t, cfg.burn_in(), &mut rng)?;
    data.write_csv(&a.out_data)?;
    true_graph(&model)?.write_json(&a.out_truth)
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let spec = ExperimentSpec::from_json(&read(&a.spec)?)?;
    let dir = a
        .out
        .or_else(|| spec.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::InvalidInput("no output directory (--out)".into()))?;
    let record = run_and_write(&spec, a.jobs, &dir)?;
    eprintln!(
        "{} rows, {} failed replicates, written to {}",
        record.rows.len(),
        record.failures.len(),
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discover(a) => run_discover(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
