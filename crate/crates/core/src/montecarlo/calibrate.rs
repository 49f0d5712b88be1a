use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::Simulator;
use super::with_jobs;
use crate::error::{Error, Result};
use crate::sensing::{argmax, SensingMode};

pub const MIN_CALIBRATION_TRIALS: usize = 1000;

/// Threshold meeting a target false-alarm rate for one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub mode: SensingMode,
    pub target_pf: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Sample standard deviation of the single-phase statistic under H0.
    pub sigma_h0: f64,
    pub sigma_h1: Option<f64>,
    pub mu_hat: Option<f64>,
    pub thresholds: Vec<ThresholdEntry>,
    pub trials: usize,
    pub n_symbols: usize,
    pub rolloff: f64,
    pub seed: u64,
}

impl CalibrationResult {
    pub fn threshold(&self, mode: SensingMode, target_pf: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|e| e.mode == mode && (e.target_pf - target_pf).abs() < 1e-12)
            .map(|e| e.threshold)
    }
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mode_statistic(t: &[f64], mode: SensingMode, pick: usize, true_phase: usize) -> f64 {
    match mode {
        SensingMode::Synchronous => t[true_phase],
        SensingMode::AsyncNoEst => t[pick],
        SensingMode::AsyncEst => t[argmax(t)],
    }
}

/// Runs `trials` noise-only windows and derives thresholds for every
/// statistic and every target false-alarm rate.
pub fn calibrate(
    sim: &Simulator,
    trials: usize,
    target_pfs: &[f64],
    seed: u64,
    jobs: Option<usize>,
) -> Result<CalibrationResult> {
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(Error::Config(format!(
            "calibration needs at least {MIN_CALIBRATION_TRIALS} trials, got {trials}"
        )));
    }
    if let Some(p) = target_pfs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::Config(format!(
            "target false-alarm rate {p} outside (0, 1)"
        )));
    }
    let rows: Vec<(Vec<f64>, usize, usize)> = with_jobs(jobs, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let r = sim.realize(seed, t, false)?;
                Ok((r.t_values, r.pick, sim.true_phase(seed, t)))
            })
            .collect::<Result<_>>()
    })?;
    let single: Vec<f64> = rows.iter().map(|(t, _, _)| t[0]).collect();
    let (_, sigma_h0) = mean_std(&single);
    if !(sigma_h0 > 0.0) {
        return Err(Error::NumericDegeneracy(
            "statistic has zero spread under H0".into(),
        ));
    }
    let mut thresholds = Vec::new();
    for mode in SensingMode::ALL {
        let mut stats: Vec<f64> = rows
            .iter()
            .map(|(t, pick, phase)| mode_statistic(t, mode, *pick, *phase))
            .collect();
        stats.sort_by(f64::total_cmp);
        for &p in target_pfs {
            thresholds.push(ThresholdEntry {
                mode,
                target_pf: p,
                threshold: quantile_sorted(&stats, 1.0 - p),
            });
        }
    }
    Ok(CalibrationResult {
        sigma_h0,
        sigma_h1: None,
        mu_hat: None,
        thresholds,
        trials,
        n_symbols: sim.scenario().n_symbols,
        rolloff: sim.scenario().weights.spec.rolloff,
        seed,
    })
}

/// Empirical mean and standard deviation of the mode's statistic under H1.
pub fn estimate_h1(
    sim: &Simulator,
    trials: usize,
    mode: SensingMode,
    seed: u64,
    jobs: Option<usize>,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::Config(
            "H1 estimate needs at least two trials".into(),
        ));
    }
    let stats: Vec<f64> = with_jobs(jobs, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let r = sim.realize(seed, t, true)?;
                Ok(mode_statistic(
                    &r.t_values,
                    mode,
                    r.pick,
                    sim.true_phase(seed, t),
                ))
            })
            .collect::<Result<_>>()
    })?;
    Ok(mean_std(&stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantile_interpolates() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&x, 0.0), 1.0);
        assert_eq!(quantile_sorted(&x, 1.0), 5.0);
        assert_eq!(quantile_sorted(&x, 0.5), 3.0);
        assert!((quantile_sorted(&x, 0.9) - 4.6).abs() < 1e-12);
    }

    #[test]
    fn sample_std_is_unbiased_form() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
