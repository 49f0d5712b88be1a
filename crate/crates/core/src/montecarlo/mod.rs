//! Calibration and experiment harness.
//!
//! Every realization draws from its own counter-based random streams keyed
//! by `(master seed, trial index, stream id)`, so results do not depend on
//! thread count or completion order, and switching one impairment on or off
//! leaves the other streams untouched.

mod calibrate;
mod qfunc;
mod report;
mod roc;
mod scenario;
pub mod seeds;
mod sweep;

pub use calibrate::{
    calibrate, estimate_h1, CalibrationResult, ThresholdEntry, MIN_CALIBRATION_TRIALS,
};
pub use qfunc::{operational_snr, predict_pd, predict_pf, q_function, q_inv};
pub use report::{write_calibration_csv, write_roc_csv, write_sweep_csv};
pub use roc::{ci95, run_roc, score, score_energy, simulate_trials, RocPoint, TrialOutcome};
pub use scenario::{Realization, Scenario, Simulator};
pub use sweep::{
    run_sweep, run_sweep_with_weights, ExperimentConfig, SweepConfig, SweepParam, SweepRow,
};

/// Runs `f` on a pool of `jobs` threads, or on the global pool when `None`.
pub(crate) fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
