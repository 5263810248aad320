//! `wdist`: generate datasets, train and evaluate distance predictors, rank
//! features and run the bound validations.

mod commands;
mod error;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "wdist",
    version,
    about = "Learned proxies for the quantum Wasserstein-1 distance"
)]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled dataset and split it into train/val/test CSVs.
    GenData(GenDataArgs),
    /// Fit a regression model on a training CSV.
    Train(TrainArgs),
    /// Score a trained model on a dataset.
    Eval(EvalArgs),
    /// Rank features by absolute Pearson correlation with the label.
    Rank(RankArgs),
    /// Monte-Carlo bound checks and the gate/noise sweep.
    #[command(subcommand)]
    Validate(ValidateCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    /// Qubits per state (per gate for gate_choi and mixed_config).
    #[arg(long, default_value_t = 2)]
    pub qubits: usize,
    #[arg(long, default_value_t = 14000)]
    pub samples: usize,
    /// Uniform label bins; 0 keeps the natural distribution.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// random_pure, random_mixed, gate_choi or mixed_config.
    #[arg(long, default_value = "random_pure")]
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Component rank for random_mixed: an integer or "uniform".
    #[arg(long, default_value = "uniform")]
    pub rank: String,
    /// Share of gate pairs in mixed_config.
    #[arg(long, default_value_t = 0.5)]
    pub gate_fraction: f64,
    #[arg(long, default_value_t = 0.01)]
    pub gate_eps_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gate_eps_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: String,
    /// Training CSV, or a directory holding train.csv (and val.csv).
    #[arg(long)]
    pub data: PathBuf,
    /// Validation CSV; defaults to val.csv when --data is a directory.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON object of hyperparameters, inline or as a file path.
    #[arg(long)]
    pub hyperparams: Option<String>,
    /// Overrides the hyperparameter seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset CSV, or a directory holding test.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    /// Dataset CSV, or a directory whose splits are pooled.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ValidateCommand {
    /// Measurement-probability bound for perturbed gates.
    Prop1(Prop1Args),
    /// Gate error rate bound for mixed-unitary noise.
    Prop2(Prop2Args),
    /// Error rates of named gates under bit-flip, phase and depolarizing noise.
    Gates(GatesArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Prop1Args {
    /// Trained model; without it predicted distances equal true ones.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub qubits: usize,
    #[arg(long, default_value_t = 300)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.01)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave per-trial records out of the report.
    #[arg(long)]
    pub no_records: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct Prop2Args {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub qubits: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Noise unitaries per channel.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 64)]
    pub n_states: usize,
    #[arg(long, default_value_t = 0.01)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eps_max: f64,
    /// pauli_rotation or hamiltonian.
    #[arg(long, default_value = "pauli_rotation")]
    pub noise: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_records: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GatesArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "swap,cz,cs,toffoli,fredkin"
    )]
    pub gates: Vec<String>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "bit_flip,phase,depolarizing"
    )]
    pub noises: Vec<String>,
    #[arg(long, default_value_t = wdist::validation::DEFAULT_NOISE_P)]
    pub p: f64,
    #[arg(long, default_value_t = wdist::validation::DEFAULT_NOISE_THETA)]
    pub theta: f64,
    #[arg(long, default_value_t = 64)]
    pub n_states: usize,
    /// Model scoring the state pairs; its layout must match every gate.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Rank(a) => commands::rank(&a),
        Command::Validate(ValidateCommand::Prop1(a)) => commands::validate_prop1(&a),
        Command::Validate(ValidateCommand::Prop2(a)) => commands::validate_prop2(&a),
        Command::Validate(ValidateCommand::Gates(a)) => commands::validate_gates(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::usage(first));
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code)
        }
    }
}
