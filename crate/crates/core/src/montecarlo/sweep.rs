use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate, CalibrationResult};
use super::roc::{score, simulate_trials};
use super::scenario::{Scenario, Simulator};
use super::seeds::derive_seed;
use crate::channel::{ChannelConfig, SpurConfig, DEFAULT_INTERP_HALFWIDTH};
use crate::design::{design, CombinerWeights};
use crate::error::{Error, Result};
use crate::sensing::SensingMode;
use crate::sigkit::{CpRatio, OfdmConfig, PulseSpec};

/// One operating point plus the Monte Carlo budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rolloff: f64,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub cp_ratio: CpRatio,
    pub noise_uncertainty_db: f64,
    /// Carrier offset in cycles per symbol period.
    pub cfo: f64,
    pub timing_offset_frac: f64,
    pub random_timing: bool,
    pub spur: Option<SpurConfig>,
    pub signal_amplitude: f64,
    pub trials: usize,
    pub calibration_trials: usize,
    pub target_pf: f64,
    pub modes: Vec<SensingMode>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rolloff: 0.2,
            snr_db: -20.0,
            n_symbols: 1 << 13,
            cp_ratio: CpRatio { num: 1, den: 8 },
            noise_uncertainty_db: 0.0,
            cfo: 0.0,
            timing_offset_frac: 0.0,
            random_timing: false,
            spur: None,
            signal_amplitude: 1.0,
            trials: 2000,
            calibration_trials: 2000,
            target_pf: 0.1,
            modes: SensingMode::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn pulse_spec(&self) -> Result<PulseSpec> {
        PulseSpec::with_rolloff(self.rolloff)
    }

    pub fn channel(&self) -> Result<ChannelConfig> {
        let spec = self.pulse_spec()?;
        let cfg = ChannelConfig {
            snr_db: self.snr_db,
            noise_uncertainty_db: self.noise_uncertainty_db,
            cfo_hz: self.cfo / spec.symbol_period_s,
            timing_offset_frac: self.timing_offset_frac,
            spur: self.spur,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse_spec()?;
        self.channel()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if !(self.target_pf > 0.0 && self.target_pf < 1.0) {
            return Err(Error::Config(format!(
                "target false-alarm rate {} outside (0, 1)",
                self.target_pf
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("no sensing modes selected".into()));
        }
        Ok(())
    }

    pub fn simulator(&self, weights: &CombinerWeights) -> Result<Simulator> {
        let mut scenario = Scenario::new(
            weights.clone(),
            OfdmConfig::standard(self.cp_ratio)?,
            self.channel()?,
            self.n_symbols,
        );
        scenario.random_timing = self.random_timing;
        scenario.signal_amplitude = self.signal_amplitude;
        scenario.interp_halfwidth = DEFAULT_INTERP_HALFWIDTH;
        Simulator::new(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Snr,
    NSymbols,
    Rolloff,
    CpRatio,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Snr => "snr",
            SweepParam::NSymbols => "n-symbols",
            SweepParam::Rolloff => "rolloff",
            SweepParam::CpRatio => "cp-ratio",
        }
    }

    /// Sets this parameter of `cfg` from its textual value.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| {
            Error::Config(format!("invalid {} value {value:?}: {e}", self.as_str()))
        };
        let value = value.trim();
        match self {
            SweepParam::Snr => cfg.snr_db = value.parse().map_err(|e| bad(&e))?,
            SweepParam::NSymbols => cfg.n_symbols = value.parse().map_err(|e| bad(&e))?,
            SweepParam::Rolloff => cfg.rolloff = value.parse().map_err(|e| bad(&e))?,
            SweepParam::CpRatio => cfg.cp_ratio = value.parse().map_err(|e| bad(&e))?,
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "snr" | "snr-db" => Ok(SweepParam::Snr),
            "n" | "n-symbols" | "nd" => Ok(SweepParam::NSymbols),
            "rolloff" | "beta" => Ok(SweepParam::Rolloff),
            "cp" | "cp-ratio" => Ok(SweepParam::CpRatio),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<String>,
    pub base: ExperimentConfig,
}

/// One table row: a sweep value under one sensing mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: SensingMode,
    pub beta: f64,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub cp_ratio: CpRatio,
    pub threshold: f64,
    pub pf_hat: f64,
    pub pf_ci95: f64,
    pub pd_hat: f64,
    pub pd_ci95: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Evaluates each sweep value at its calibrated threshold. Weights are
/// designed once per roll-off and thresholds calibrated once per
/// `(roll-off, N)`; every value reuses the same trial seeds.
pub fn run_sweep(cfg: &SweepConfig, seed: u64, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    run_sweep_with_weights(cfg, seed, jobs, design)
}

/// As [`run_sweep`], taking weights from `weights_for` instead of designing them.
pub fn run_sweep_with_weights(
    cfg: &SweepConfig,
    seed: u64,
    jobs: Option<usize>,
    mut weights_for: impl FnMut(&PulseSpec) -> Result<CombinerWeights>,
) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() {
        return Err(Error::Config("sweep has no values".into()));
    }
    let calibration_seed = derive_seed(seed, "calibration");
    let roc_seed = derive_seed(seed, "roc");
    let mut weights_cache: HashMap<u64, CombinerWeights> = HashMap::new();
    let mut calibration_cache: HashMap<(u64, usize), CalibrationResult> = HashMap::new();
    let mut rows = Vec::new();
    for value in &cfg.values {
        let mut point = cfg.base.clone();
        cfg.param.apply(&mut point, value)?;
        point.validate()?;
        let key = point.rolloff.to_bits();
        if let Entry::Vacant(e) = weights_cache.entry(key) {
            e.insert(weights_for(&point.pulse_spec()?)?);
        }
        let weights = &weights_cache[&key];
        let sim = point.simulator(weights)?;
        let cal_key = (key, point.n_symbols);
        if let Entry::Vacant(e) = calibration_cache.entry(cal_key) {
            let cal = calibrate(
                &sim,
                point.calibration_trials,
                &[point.target_pf],
                calibration_seed,
                jobs,
            )?;
            e.insert(cal);
        }
        let cal = &calibration_cache[&cal_key];
        let outcomes = simulate_trials(&sim, point.trials, roc_seed, jobs)?;
        for &mode in &point.modes {
            let threshold = cal
                .threshold(mode, point.target_pf)
                .ok_or_else(|| Error::Config(format!("no calibrated threshold for {mode}")))?;
            let roc = score(&outcomes, mode, &[threshold])?[0];
            rows.push(SweepRow {
                mode,
                beta: point.rolloff,
                snr_db: point.snr_db,
                n_symbols: point.n_symbols,
                cp_ratio: point.cp_ratio,
                threshold,
                pf_hat: roc.pf_hat,
                pf_ci95: roc.pf_ci95,
                pd_hat: roc.pd_hat,
                pd_ci95: roc.pd_ci95,
                trials: roc.trials,
                seed,
            });
        }
    }
    Ok(rows)
}
