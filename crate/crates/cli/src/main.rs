mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sarsoil::forward::BandProfile;
use sarsoil::synth::Scenario;

/// Multiband SAR soil moisture retrieval.
#[derive(Debug, Parser)]
#[command(name = "sarsoil", version, args_override_self = true)]
pub struct Cli {
    /// key=value file of defaults for the chosen subcommand; flags win over file values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic training set from the forward model.
    Synth(SynthArgs),
    /// Train a bare or vegetated inverter on a sample CSV.
    Train(TrainArgs),
    /// Assemble a model directory from trained networks and coefficients.
    Bundle(BundleArgs),
    /// Retrieve moisture, crop height and branch rasters.
    Estimate(EstimateArgs),
    /// Compare an estimate raster against ground samples.
    Evaluate(EvaluateArgs),
    /// Fit the crop-height model or the forward-model constants.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Bare,
    #[value(alias = "vegetated")]
    Veg,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Bare => Scenario::Bare,
            ScenarioArg::Veg => Scenario::Vegetated,
        }
    }
}

/// Radar wavelengths, cm.
#[derive(Debug, Clone, Copy, Args)]
pub struct BandArgs {
    #[arg(long, default_value_t = BandProfile::DRONE_SAR.p_cm)]
    pub lambda_p: f64,
    #[arg(long, default_value_t = BandProfile::DRONE_SAR.l_cm)]
    pub lambda_l: f64,
    #[arg(long, default_value_t = BandProfile::DRONE_SAR.c_cm)]
    pub lambda_c: f64,
}

impl BandArgs {
    pub fn profile(&self) -> BandProfile {
        BandProfile {
            p_cm: self.lambda_p,
            l_cm: self.lambda_l,
            c_cm: self.lambda_c,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian noise added to every band, dB.
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    pub noise_db: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub bands: BandArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub data: PathBuf,
    /// Weight file; the training report goes next to it as `<stem>.report.txt`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    /// Stop once the scaled-unit MSE drops below this.
    #[arg(long, default_value_t = 1e-6, value_parser = non_negative)]
    pub mse_goal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[arg(long)]
    pub bnn: Option<PathBuf>,
    #[arg(long)]
    pub vnn: Option<PathBuf>,
    /// Crop-height coefficients from `fit --what height-lm`; published values otherwise.
    #[arg(long)]
    pub height_lm: Option<PathBuf>,
    /// Forward-model constants from `fit --what dubois`; published values otherwise.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    /// Heights at or above this take the vegetated branch, m.
    #[arg(long, default_value_t = sarsoil::pipeline::DEFAULT_THRESHOLD_M)]
    pub threshold: f64,
    /// rms height used when estimate gets no --h-rms, cm.
    #[arg(long, default_value_t = sarsoil::pipeline::DEFAULT_H_RMS_CM)]
    pub h_rms: f64,
    #[command(flatten)]
    pub bands: BandArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Model directory written by `bundle`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub sigma_p: PathBuf,
    #[arg(long)]
    pub sigma_l: PathBuf,
    #[arg(long)]
    pub sigma_c: Option<PathBuf>,
    /// Incidence angle in degrees, or a raster of angles.
    #[arg(long)]
    pub theta: String,
    /// rms height, cm; defaults to the model's value.
    #[arg(long)]
    pub h_rms: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub speckle_window_m: Option<f64>,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Moisture raster from `estimate`.
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Branch raster from `estimate`, for a per-branch breakdown.
    #[arg(long)]
    pub branch: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub window_m: f64,
    /// Text report; per-point values go to `<stem>_points.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitTarget {
    HeightLm,
    Dubois,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub what: FitTarget,
    #[arg(long)]
    pub data: PathBuf,
    /// Coefficient file; residual quartiles go to `<stem>_residuals.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Starting constants for the dubois fit.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    #[command(flatten)]
    pub bands: BandArgs,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got {s:?}")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number > 0, got {s:?}")),
    }
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    if let Ok(raw) = std::env::var("SARSOIL_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: SARSOIL_THREADS must be a positive integer, got {raw:?}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }

    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Bundle(a) => commands::bundle(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Fit(a) => commands::fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
