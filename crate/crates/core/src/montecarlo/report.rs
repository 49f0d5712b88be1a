use std::io::Write;

use super::calibrate::CalibrationResult;
use super::roc::RocPoint;
use super::sweep::SweepRow;
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes sweep rows with the fixed column order
/// `mode, beta, snr_db, n_symbols, cp_ratio, threshold, pf_hat, pf_ci95, pd_hat, pd_ci95, trials, seed`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "beta",
        "snr_db",
        "n_symbols",
        "cp_ratio",
        "threshold",
        "pf_hat",
        "pf_ci95",
        "pd_hat",
        "pd_ci95",
        "trials",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            r.beta.to_string(),
            r.snr_db.to_string(),
            r.n_symbols.to_string(),
            r.cp_ratio.to_string(),
            r.threshold.to_string(),
            r.pf_hat.to_string(),
            r.pf_ci95.to_string(),
            r.pd_hat.to_string(),
            r.pd_ci95.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(out: W, points: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (mode, target Pf) with the shared H0/H1 moments repeated.
pub fn write_calibration_csv<W: Write>(out: W, cal: &CalibrationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "target_pf",
        "threshold",
        "sigma_h0",
        "sigma_h1",
        "mu_hat",
        "beta",
        "n_symbols",
        "trials",
        "seed",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in &cal.thresholds {
        w.write_record([
            e.mode.to_string(),
            e.target_pf.to_string(),
            e.threshold.to_string(),
            cal.sigma_h0.to_string(),
            opt(cal.sigma_h1),
            opt(cal.mu_hat),
            cal.rolloff.to_string(),
            cal.n_symbols.to_string(),
            cal.trials.to_string(),
            cal.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
