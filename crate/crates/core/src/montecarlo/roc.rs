use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Realization, Simulator};
use super::with_jobs;
use crate::error::{Error, Result};
use crate::sensing::{argmax, SensingMode};

/// Paired H0/H1 realizations of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub h0: Realization,
    pub h1: Realization,
    pub true_phase: usize,
}

impl TrialOutcome {
    fn statistic(&self, r: &Realization, mode: SensingMode) -> f64 {
        match mode {
            SensingMode::Synchronous => r.t_values[self.true_phase],
            SensingMode::AsyncNoEst => r.t_values[r.pick],
            SensingMode::AsyncEst => r.t_values[argmax(&r.t_values)],
        }
    }

    pub fn h0_statistic(&self, mode: SensingMode) -> f64 {
        self.statistic(&self.h0, mode)
    }

    pub fn h1_statistic(&self, mode: SensingMode) -> f64 {
        self.statistic(&self.h1, mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub pf_hat: f64,
    pub pd_hat: f64,
    pub pf_ci95: f64,
    pub pd_ci95: f64,
    pub trials: usize,
}

/// Normal-approximation 95% half-width of a binomial proportion.
pub fn ci95(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Trials `0..trials` under `seed`, returned in trial order.
pub fn simulate_trials(
    sim: &Simulator,
    trials: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<TrialOutcome>> {
    with_jobs(jobs, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                Ok(TrialOutcome {
                    h0: sim.realize(seed, t, false)?,
                    h1: sim.realize(seed, t, true)?,
                    true_phase: sim.true_phase(seed, t),
                })
            })
            .collect()
    })
}

fn score_pairs(pairs: &[(f64, f64)], thresholds: &[f64]) -> Result<Vec<RocPoint>> {
    if thresholds.is_empty() {
        return Err(Error::Config("threshold list is empty".into()));
    }
    let n = pairs.len();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let (fa, det) = pairs.iter().fold((0usize, 0usize), |(fa, det), &(t0, t1)| {
                (
                    fa + (t0 > threshold) as usize,
                    det + (t1 > threshold) as usize,
                )
            });
            let pf_hat = fa as f64 / n as f64;
            let pd_hat = det as f64 / n as f64;
            RocPoint {
                threshold,
                pf_hat,
                pd_hat,
                pf_ci95: ci95(pf_hat, n),
                pd_ci95: ci95(pd_hat, n),
                trials: n,
            }
        })
        .collect())
}

/// Scores every threshold against the same per-trial statistics.
pub fn score(
    outcomes: &[TrialOutcome],
    mode: SensingMode,
    thresholds: &[f64],
) -> Result<Vec<RocPoint>> {
    let pairs: Vec<(f64, f64)> = outcomes
        .iter()
        .map(|o| (o.h0_statistic(mode), o.h1_statistic(mode)))
        .collect();
    score_pairs(&pairs, thresholds)
}

/// Energy-detector baseline on the same realizations.
pub fn score_energy(outcomes: &[TrialOutcome], thresholds: &[f64]) -> Result<Vec<RocPoint>> {
    if outcomes.iter().any(|o| o.h0.energy.is_nan()) {
        return Err(Error::Config(
            "energy detector needs a finite noise variance".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = outcomes
        .iter()
        .map(|o| (o.h0.energy, o.h1.energy))
        .collect();
    score_pairs(&pairs, thresholds)
}

pub fn run_roc(
    sim: &Simulator,
    trials: usize,
    thresholds: &[f64],
    mode: SensingMode,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<RocPoint>> {
    if trials == 0 {
        return Err(Error::Config("trial count must be positive".into()));
    }
    if thresholds.is_empty() {
        return Err(Error::Config("threshold list is empty".into()));
    }
    score(&simulate_trials(sim, trials, seed, jobs)?, mode, thresholds)
}
