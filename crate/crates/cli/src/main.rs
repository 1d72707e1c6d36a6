//! `drivepat`: train a population model, transform and segment trajectories,
//! and summarize segmentations over a test set.

mod commands;
mod error;
mod eval;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drivepat::{ParameterCount, QuantizationConfig, SegmentationConfig, ValidationConfig};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "drivepat",
    version,
    about = "Discover driving patterns by trajectory segmentation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Acceleration quantization step, m/s²
    #[arg(long, global = true, default_value_t = 0.25)]
    quantize_acc: f64,

    /// Heading quantization step, degrees (must divide 360)
    #[arg(long, global = true, default_value_t = 5.0)]
    quantize_heading: f64,

    /// Speed quantization step, km/h
    #[arg(long, global = true, default_value_t = 1.0)]
    quantize_speed: f64,

    /// Seed for every random choice (splits, synthetic data, oracle trials)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for per-trajectory work; defaults to all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
}

impl GlobalArgs {
    fn quantization(&self) -> QuantizationConfig {
        QuantizationConfig {
            acc_step: self.quantize_acc,
            heading_step: self.quantize_heading,
            speed_step: self.quantize_speed,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ValidationArgs {
    /// Points faster than this (km/h) are dropped
    #[arg(long, default_value_t = 250.0)]
    max_speed: f64,

    /// Points with |acceleration| above this (m/s²) are dropped
    #[arg(long, default_value_t = 12.0)]
    max_abs_acc: f64,

    /// Largest accepted time step in seconds; longer gaps split the trajectory
    #[arg(long, default_value_t = 1)]
    allow_gap: u64,
}

impl ValidationArgs {
    fn config(&self) -> ValidationConfig {
        ValidationConfig {
            max_speed: self.max_speed,
            max_abs_acc: self.max_abs_acc,
            allow_gap: self.allow_gap,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Parameters {
    /// r_n = 3n - 1
    MeanSigmaAndCuts,
    /// r_n = 2n
    MeanAndSigma,
}

#[derive(Args, Debug, Clone)]
struct SegmentationArgs {
    /// Upper bound on segments is floor(N / divisor)
    #[arg(long, default_value_t = 10)]
    kmax_divisor: usize,

    /// Smallest upper bound on segments
    #[arg(long, default_value_t = 1)]
    kmax_floor: usize,

    /// Absolute floor on a segment's standard deviation
    #[arg(long, default_value_t = 1e-6)]
    sigma_floor: f64,

    /// Floor on a segment's standard deviation relative to the signal's noise scale
    #[arg(long, default_value_t = 1.0)]
    noise_floor_factor: f64,

    /// Parameter count charged by the description-length penalty
    #[arg(long, value_enum, default_value_t = Parameters::MeanSigmaAndCuts)]
    parameters: Parameters,
}

impl SegmentationArgs {
    fn config(&self) -> SegmentationConfig {
        SegmentationConfig {
            kmax_divisor: self.kmax_divisor,
            kmax_floor: self.kmax_floor,
            sigma_floor: self.sigma_floor,
            noise_floor_factor: self.noise_floor_factor,
            parameter_count: match self.parameters {
                Parameters::MeanSigmaAndCuts => ParameterCount::MeanSigmaAndCuts,
                Parameters::MeanAndSigma => ParameterCount::MeanAndSigma,
            },
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the population Markov model from a directory of trajectory CSVs
    Train {
        /// Directory with one CSV per trajectory
        #[arg(long)]
        input: PathBuf,
        /// Model JSON to write
        #[arg(long)]
        output: PathBuf,
        /// Hold out this fraction of trajectories (ids written next to the model)
        #[arg(long)]
        holdout: Option<f64>,
        #[command(flatten)]
        validation: ValidationArgs,
    },
    /// Write the PMD signal of one trajectory as `t,pmd` CSV
    Transform {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        validation: ValidationArgs,
    },
    /// Segment one trajectory; writes segmentation JSON and its signal CSV
    Segment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Signal CSV path; defaults to the output path with `.signal.csv`
        #[arg(long)]
        signal_output: Option<PathBuf>,
        #[command(flatten)]
        validation: ValidationArgs,
        #[command(flatten)]
        segmentation: SegmentationArgs,
    },
    /// Segment every trajectory in a directory and summarize per group
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_dir: PathBuf,
        /// Report JSON to write
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        validation: ValidationArgs,
        #[command(flatten)]
        segmentation: SegmentationArgs,
    },
    /// Generate synthetic trajectories with ground-truth regime boundaries
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Number of groups to spread trajectories over in `vehicles.csv`
        #[arg(long, default_value_t = 1)]
        groups: usize,
        /// Regime spec JSON to use instead of random regimes
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "synth")]
        prefix: String,
    },
    /// Compare the dynamic program against exhaustive search on random signals
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Longest random signal (at most 40)
        #[arg(long, default_value_t = 30)]
        max_len: usize,
        /// Largest segment count checked (at most 5)
        #[arg(long, default_value_t = 4)]
        max_segments: usize,
        #[command(flatten)]
        segmentation: SegmentationArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.global.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.global, cli.command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
