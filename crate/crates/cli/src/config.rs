//! Run configuration: built-in defaults, then the `--config` file, then flags.

use std::fs;
use std::path::Path;

use maxmin_core::montecarlo::ExperimentConfig;
use maxmin_core::SpurConfig;
use serde::Serialize;

use crate::args::{Common, ExperimentArgs};
use crate::error::{CliError, CliResult};

/// Keys read from the config file that are not experiment parameters.
#[derive(Debug, Default)]
pub struct FileExtras {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub table: toml::Table,
}

/// Reads the config file, splitting off `seed`, `jobs` and the given
/// command-specific tables (e.g. `sweep.*`).
pub fn read_config(path: Option<&Path>, sections: &[&str]) -> CliResult<(toml::Table, FileExtras)> {
    let Some(path) = path else {
        return Ok((toml::Table::new(), FileExtras::default()));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))?;
    let mut extras = FileExtras::default();
    if let Some(v) = table.remove("seed") {
        let seed = match &v {
            toml::Value::Integer(i) if *i >= 0 => Some(*i as u64),
            toml::Value::String(s) => s.parse().ok(),
            _ => None,
        };
        extras.seed =
            Some(seed.ok_or_else(|| {
                CliError::usage("config key `seed` must be a non-negative integer")
            })?);
    }
    if let Some(v) = table.remove("jobs") {
        let jobs = v
            .as_integer()
            .filter(|j| *j > 0)
            .ok_or_else(|| CliError::usage("config key `jobs` must be a positive integer"))?;
        extras.jobs = Some(jobs as usize);
    }
    for s in sections {
        if let Some(v) = table.remove(*s) {
            match v {
                toml::Value::Table(t) => {
                    extras.table.insert((*s).to_string(), toml::Value::Table(t));
                }
                _ => return Err(CliError::usage(format!("config key `{s}` must be a table"))),
            }
        }
    }
    Ok((table, extras))
}

pub fn experiment_from_table(table: toml::Table) -> CliResult<ExperimentConfig> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::usage(format!("invalid config: {e}")))
}

/// Applies flag overrides on top of the file/default configuration.
pub fn apply_overrides(cfg: &mut ExperimentConfig, a: &ExperimentArgs) -> CliResult<()> {
    macro_rules! set {
        ($field:ident, $src:expr) => {
            if let Some(v) = $src {
                cfg.$field = v;
            }
        };
    }
    set!(rolloff, a.rolloff);
    set!(snr_db, a.snr_db);
    set!(n_symbols, a.n_symbols);
    set!(cp_ratio, a.cp_ratio);
    set!(noise_uncertainty_db, a.noise_uncertainty);
    set!(cfo, a.cfo);
    set!(timing_offset_frac, a.timing);
    set!(signal_amplitude, a.signal_amplitude);
    set!(trials, a.trials);
    set!(calibration_trials, a.calibration_trials);
    set!(target_pf, a.target_pf);
    if a.random_timing {
        cfg.random_timing = true;
    }
    if !a.modes.is_empty() {
        cfg.modes = a.modes.clone();
    }
    if a.spur_amplitude.is_some() || a.spur_bandwidth.is_some() || a.spur_center.is_some() {
        let fs = cfg.pulse_spec()?.sample_rate_hz();
        let mut spur = cfg.spur.unwrap_or(SpurConfig {
            amplitude: 1.0,
            bandwidth_hz: fs / 32.0,
            center_hz: 0.0,
        });
        if let Some(v) = a.spur_amplitude {
            spur.amplitude = v;
        }
        if let Some(v) = a.spur_bandwidth {
            spur.bandwidth_hz = v;
        }
        if let Some(v) = a.spur_center {
            spur.center_hz = v;
        }
        cfg.spur = Some(spur);
    }
    cfg.validate()?;
    Ok(())
}

/// Seed from the flag, else the config file, else a fresh one that is reported.
pub fn resolve_seed(common: &Common, extras: &FileExtras) -> u64 {
    common.seed.or(extras.seed).unwrap_or_else(|| {
        // 63 bits so the echoed config stays a plain TOML integer.
        let seed = rand::random::<u64>() >> 1;
        eprintln!("seed: {seed} (pass --seed {seed} to reproduce)");
        seed
    })
}

/// Writes the fully resolved configuration next to the command's outputs.
pub fn echo<T: Serialize>(out_dir: &Path, command: &str, resolved: &T) -> CliResult<()> {
    fs::create_dir_all(out_dir)?;
    let text = toml::to_string(resolved)
        .map_err(|e| CliError::data(format!("cannot serialize config: {e}")))?;
    fs::write(out_dir.join(format!("{command}.resolved.toml")), text)?;
    Ok(())
}

/// TOML integers are signed 64-bit; larger seeds are echoed as strings.
pub fn seed_value(seed: u64) -> toml::Value {
    match i64::try_from(seed) {
        Ok(i) => toml::Value::Integer(i),
        Err(_) => toml::Value::String(seed.to_string()),
    }
}
