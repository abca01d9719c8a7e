use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bnmon_core::budget::comm_bound;
use bnmon_core::{Algorithm, BayesNet};
use bnmon_harness::experiment::RunLabel;
use bnmon_harness::{emit_report, new_alarm, run_experiment, ExperimentConfig, HarnessError, RunStatus};

/// Distributed monitoring of Bayesian network parameters.
#[derive(Debug, Parser)]
#[command(name = "bnmon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stream seeded training data through trackers and write a CSV report.
    Run(RunArgs),
    /// Generate a network.
    GenNet {
        kind: NetKind,
        /// Network the variant is derived from.
        #[arg(long)]
        base: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a network, check it and print a summary.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NetKind {
    /// Six nodes widened to 20 values with re-drawn CPTs.
    NewAlarm,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "exact,baseline,uniform,nonuniform,naive")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 30)]
    sites: usize,
    #[arg(long, default_value_t = 500_000)]
    events: usize,
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,500000")]
    checkpoints: Vec<usize>,
    #[arg(long, default_value_t = 1_000)]
    queries: usize,
    #[arg(long, default_value_t = 0.01)]
    min_prob: f64,
    #[arg(long, default_value_t = 1_000)]
    classify_trials: usize,
    /// Run counters at ε/4 so classification carries the ε guarantee.
    #[arg(long)]
    classification_mode: bool,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

fn load(path: &Path) -> Result<BayesNet, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(BayesNet::from_json(&text)?)
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let config = ExperimentConfig {
        network: args.network,
        algorithms: args.algorithms,
        epsilon: args.epsilon,
        delta: args.delta,
        sites: args.sites,
        events: args.events,
        checkpoints: args.checkpoints,
        test_queries: args.queries,
        min_true_prob: args.min_prob,
        classify_trials: args.classify_trials,
        classification_mode: args.classification_mode,
        seeds: args.seeds,
        seed: args.seed,
    };
    let report = run_experiment(&config)?;
    emit_report(&report, &args.out)?;

    let last = *config.checkpoints.last().expect("validated non-empty");
    eprintln!("{} → {}", report.network, args.out.display());
    eprintln!("{:<11} {:>12} {:>12} {:>8} {:>14}", "algorithm", "err_truth", "err_mle", "band", "update_msgs");
    for &a in &config.algorithms {
        if let Some(r) = report.row(a, RunLabel::Median, last) {
            eprintln!(
                "{:<11} {:>12.6} {:>12.6} {:>8.3} {:>14.0}",
                a.as_str(),
                r.mean_err_truth,
                r.mean_err_mle,
                r.band_fraction,
                r.update_messages
            );
        }
    }
    match report.status {
        RunStatus::Complete => Ok(()),
        RunStatus::Failed { exit_code, message } => {
            eprintln!("error: run incomplete: {message}");
            std::process::exit(exit_code);
        }
    }
}

fn gen_net(kind: NetKind, base: &Path, seed: u64, out: &Path) -> Result<(), HarnessError> {
    let base = load(base)?;
    let net = match kind {
        NetKind::NewAlarm => new_alarm(&base, seed)?,
    };
    let json = serde_json::to_string_pretty(&net.to_doc()).expect("network documents serialize");
    std::fs::write(out, json + "\n").map_err(|e| HarnessError::io(out, e))?;
    eprintln!(
        "wrote {} ({} nodes, {} parameters)",
        out.display(),
        net.len(),
        net.parameter_count()
    );
    Ok(())
}

fn validate(path: &Path) -> Result<(), HarnessError> {
    let net = load(path)?;
    let jk: usize = net.nodes().iter().map(|n| n.cardinality() * n.parent_configs()).sum();
    let k: usize = net.nodes().iter().map(|n| n.parent_configs()).sum();
    println!("network      {}", net.name());
    println!("nodes        {}", net.len());
    println!("edges        {}", net.edge_count());
    println!("parameters   {}", net.parameter_count());
    println!("max parents  {}", net.max_parents());
    println!("counters     {jk} joint + {k} parent");
    println!("gamma        {:.1}", comm_bound(&net).gamma);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are validation errors; help and version succeed.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::GenNet { kind, base, seed, out } => gen_net(kind, &base, seed, &out),
        Command::Validate { network } => validate(&network),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
