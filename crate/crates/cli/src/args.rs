use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use maxmin_core::montecarlo::SweepParam;
use maxmin_core::sigkit::CpRatio;
use maxmin_core::SensingMode;

/// Max-min SNR spectrum sensing: combiner design, calibration, ROC and
/// parameter sweeps, and offline sensing of recorded IQ files.
#[derive(Debug, Parser)]
#[command(name = "maxmin", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design the combiner weights for one roll-off factor.
    Design(DesignArgs),
    /// Calibrate detection thresholds on noise-only trials.
    Calibrate(CalibrateArgs),
    /// Estimate false-alarm and detection rates over a threshold grid.
    Roc(RocArgs),
    /// Sweep one parameter at the calibrated threshold.
    Sweep(SweepArgs),
    /// Run the detector over windows of a recorded IQ file.
    Sense(SenseArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; a fresh one is generated and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file of flat dotted keys; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.2)]
    pub rolloff: f64,
    /// Samples per symbol `L`.
    #[arg(long, default_value_t = 8)]
    pub oversampling: usize,
    /// Pulse half-span in symbols.
    #[arg(long, default_value_t = 16)]
    pub span: usize,
    /// Number of interfering symbols on each side used to build the signal matrix.
    #[arg(long, default_value_t = maxmin_core::design::DEFAULT_TRUNCATION)]
    pub truncation: usize,
    /// Output directory for the weights file and report.
    #[arg(long, default_value = "weights")]
    pub out: PathBuf,
}

/// Overrides for the experiment parameters; unset flags keep config-file values.
#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub rolloff: Option<f64>,
    /// Per-sample SNR in dB.
    #[arg(long = "snr", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Symbols per sensing window `N`.
    #[arg(long)]
    pub n_symbols: Option<usize>,
    /// Cyclic-prefix ratio such as `1/8`.
    #[arg(long = "cp")]
    pub cp_ratio: Option<CpRatio>,
    /// Half-width of the noise power uncertainty in dB.
    #[arg(long)]
    pub noise_uncertainty: Option<f64>,
    /// Carrier frequency offset in cycles per symbol.
    #[arg(long, allow_hyphen_values = true)]
    pub cfo: Option<f64>,
    /// Fixed timing offset as a fraction of a symbol.
    #[arg(long)]
    pub timing: Option<f64>,
    /// Draw a uniform timing offset per trial.
    #[arg(long)]
    pub random_timing: bool,
    /// RMS spur amplitude; enables the spur and the receiver frequency shift.
    #[arg(long)]
    pub spur_amplitude: Option<f64>,
    /// Spur bandwidth in Hz (default `F_s / 32`).
    #[arg(long)]
    pub spur_bandwidth: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub spur_center: Option<f64>,
    /// Transmit amplitude in the signal-present branch.
    #[arg(long)]
    pub signal_amplitude: Option<f64>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Noise-only trials used to calibrate thresholds.
    #[arg(long)]
    pub calibration_trials: Option<usize>,
    /// Target false-alarm rate.
    #[arg(long = "pf")]
    pub target_pf: Option<f64>,
    /// Sensing modes, comma separated.
    #[arg(long = "mode", value_delimiter = ',')]
    pub modes: Vec<SensingMode>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Weights file; defaults to `<weights-dir>/beta_<rolloff>.toml`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value = "weights")]
    pub weights_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub weights: WeightsArgs,
    /// Also estimate the mean and spread of the statistic with the signal present.
    #[arg(long)]
    pub h1: bool,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub weights: WeightsArgs,
    /// Explicit thresholds, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Vec<f64>,
    /// Evenly spaced grid `start:stop:count` (default `0:7:15`).
    #[arg(long, conflicts_with = "thresholds")]
    pub grid: Option<String>,
    /// Energy-detector thresholds, comma separated; scored on the same trials.
    #[arg(long, value_delimiter = ',')]
    pub energy_thresholds: Vec<f64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub weights: WeightsArgs,
    /// Parameter to sweep: snr, n-symbols, rolloff or cp.
    #[arg(long)]
    pub param: Option<SweepParam>,
    /// Values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<String>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SenseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Raw cf32 IQ file with a `.toml` sidecar.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub weights: WeightsArgs,
    #[arg(long, default_value_t = 0.2)]
    pub rolloff: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: f64,
    #[arg(long, default_value = "async-est")]
    pub mode: SensingMode,
    #[arg(long, default_value_t = 1 << 13)]
    pub n_symbols: usize,
    /// Apply the quarter-rate frequency shift before filtering.
    #[arg(long)]
    pub spur_shift: bool,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}
