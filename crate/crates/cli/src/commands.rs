use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use maxmin_core::design::{
    build_matrices, compare_with_golden, load_weights, save_weights, solve_extremal_snr,
};
use maxmin_core::iq::read_iq;
use maxmin_core::linalg::jacobi_eigen;
use maxmin_core::montecarlo::seeds::{trial_rng, Stream};
use maxmin_core::montecarlo::{
    calibrate, estimate_h1, operational_snr, predict_pd, predict_pf, run_sweep_with_weights, score,
    score_energy, simulate_trials, write_calibration_csv, write_roc_csv, write_sweep_csv,
    ExperimentConfig, SweepConfig, SweepParam,
};
use maxmin_core::sensing::Detector;
use maxmin_core::{CombinerWeights, DetectorConfig, Loading, PulseSpec, SensingMode};

use crate::args::{
    CalibrateArgs, Common, DesignArgs, ExperimentArgs, RocArgs, SenseArgs, SweepArgs, WeightsArgs,
};
use crate::config::{
    apply_overrides, echo, experiment_from_table, read_config, resolve_seed, seed_value, FileExtras,
};
use crate::error::{CliError, CliResult};

pub fn weights_file_name(rolloff: f64) -> String {
    format!("beta_{rolloff}.toml")
}

fn weights_path(w: &WeightsArgs, rolloff: f64) -> PathBuf {
    w.weights
        .clone()
        .unwrap_or_else(|| w.weights_dir.join(weights_file_name(rolloff)))
}

fn load_weights_for(w: &WeightsArgs, rolloff: f64) -> CliResult<CombinerWeights> {
    let path = weights_path(w, rolloff);
    if !path.exists() {
        return Err(CliError::missing(format!(
            "weights file {} not found; create it with `maxmin design --rolloff {rolloff} --out {}`",
            path.display(),
            path.parent().map(Path::display).map(|d| d.to_string()).unwrap_or_else(|| ".".into()),
        )));
    }
    let weights =
        load_weights(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if (weights.spec.rolloff - rolloff).abs() > 1e-12 {
        return Err(CliError::usage(format!(
            "{} was designed for roll-off {}, not {rolloff}",
            path.display(),
            weights.spec.rolloff
        )));
    }
    Ok(weights)
}

/// Defaults, then the config file, then flags.
fn resolve_experiment(
    common: &Common,
    flags: &ExperimentArgs,
    weights: &WeightsArgs,
    sections: &[&str],
) -> CliResult<(ExperimentConfig, FileExtras, u64)> {
    let (table, extras) = read_config(common.config.as_deref(), sections)?;
    let mut cfg = experiment_from_table(table)?;
    apply_overrides(&mut cfg, flags)?;
    if let Some(path) = &weights.weights {
        if path.exists() {
            let file_rolloff = load_weights(path)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
                .spec
                .rolloff;
            match flags.rolloff {
                Some(r) if (r - file_rolloff).abs() > 1e-12 => {
                    return Err(CliError::usage(format!(
                        "--rolloff {r} conflicts with {} (roll-off {file_rolloff})",
                        path.display()
                    )))
                }
                _ => cfg.rolloff = file_rolloff,
            }
        }
    }
    let seed = resolve_seed(common, &extras);
    Ok((cfg, extras, seed))
}

fn resolved_table(
    cfg: &ExperimentConfig,
    seed: u64,
    jobs: Option<usize>,
) -> CliResult<toml::Table> {
    let mut t = toml::Table::try_from(cfg)
        .map_err(|e| CliError::data(format!("cannot serialize config: {e}")))?;
    t.insert("seed".into(), seed_value(seed));
    if let Some(j) = jobs {
        t.insert("jobs".into(), toml::Value::Integer(j as i64));
    }
    Ok(t)
}

fn jobs(common: &Common, extras: &FileExtras) -> CliResult<Option<usize>> {
    match common.jobs.or(extras.jobs) {
        Some(0) => Err(CliError::usage("--jobs must be positive")),
        j => Ok(j),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn design(a: &DesignArgs) -> CliResult<()> {
    let spec = PulseSpec::new(a.rolloff, 1.0, a.oversampling, a.span).map_err(CliError::from)?;
    let m = build_matrices(&spec, a.truncation)?;
    let w = solve_extremal_snr(&m, Loading::default())?;
    let eig = jacobi_eigen(&m.b)?;
    let cond_b = eig.values[eig.values.len() - 1] / eig.values[0];

    let mut report = String::new();
    let mut line = |k: &str, v: String| report.push_str(&format!("{k:<18}{v}\n"));
    line("rolloff", spec.rolloff.to_string());
    line("oversampling", spec.oversampling.to_string());
    line("span_symbols", spec.span_symbols.to_string());
    line("truncation_k", m.truncation_k.to_string());
    line(
        "loading",
        format!(
            "signal {:e}, noise {:e} (relative to tr(B)/L)",
            w.loading.signal, w.loading.noise
        ),
    );
    line("cond(B)", format!("{cond_b:.6e}"));
    line("gamma_min", w.gamma_min.to_string());
    line("gamma_max", w.gamma_max.to_string());
    line("gamma_d", w.gamma_d.to_string());
    match compare_with_golden(&w) {
        Some(c) => line(
            "reference cosine",
            format!(
                "alpha_min {:.6}, alpha_max {:.6}",
                c.cos_alpha_min, c.cos_alpha_max
            ),
        ),
        None => line(
            "reference cosine",
            "no published vectors for this configuration".into(),
        ),
    }
    let fmt = |v: &[maxmin_core::Complex64]| {
        v.iter()
            .map(|c| format!("{:.6}", c.re))
            .collect::<Vec<_>>()
            .join(", ")
    };
    line("alpha_min", format!("[{}]", fmt(&w.alpha_min)));
    line("alpha_max", format!("[{}]", fmt(&w.alpha_max)));

    let mut resolved = toml::Table::new();
    resolved.insert("rolloff".into(), toml::Value::Float(a.rolloff));
    resolved.insert(
        "oversampling".into(),
        toml::Value::Integer(a.oversampling as i64),
    );
    resolved.insert("span".into(), toml::Value::Integer(a.span as i64));
    resolved.insert(
        "truncation".into(),
        toml::Value::Integer(a.truncation as i64),
    );
    echo(&a.out, "design", &resolved)?;
    let path = a.out.join(weights_file_name(a.rolloff));
    save_weights(&path, &w)?;
    fs::write(
        a.out.join(format!("beta_{}.report.txt", a.rolloff)),
        &report,
    )?;
    print!("{report}");
    println!("{:<18}{}", "weights", path.display());
    Ok(())
}

pub fn calibrate_cmd(a: &CalibrateArgs) -> CliResult<()> {
    let mut flags_trials = a.experiment.trials;
    let (mut cfg, extras, seed) = resolve_experiment(&a.common, &a.experiment, &a.weights, &[])?;
    if let Some(t) = flags_trials.take() {
        cfg.calibration_trials = t;
    }
    let jobs = jobs(&a.common, &extras)?;
    let weights = load_weights_for(&a.weights, cfg.rolloff)?;
    let sim = cfg.simulator(&weights)?;
    echo(&a.out, "calibrate", &resolved_table(&cfg, seed, jobs)?)?;

    let mut cal = calibrate(&sim, cfg.calibration_trials, &[cfg.target_pf], seed, jobs)?;
    let sync_threshold = cal.threshold(SensingMode::Synchronous, cfg.target_pf);
    cal.thresholds.retain(|e| cfg.modes.contains(&e.mode));
    if a.h1 {
        let (mu, sigma) = estimate_h1(
            &sim,
            cfg.calibration_trials,
            SensingMode::Synchronous,
            seed ^ 1,
            jobs,
        )?;
        cal.mu_hat = Some(mu);
        cal.sigma_h1 = Some(sigma);
    }
    write_calibration_csv(create(&a.out.join("calibration.csv"))?, &cal)?;
    for e in &cal.thresholds {
        println!(
            "mode={} beta={} n_symbols={} target_pf={} threshold={:.6} sigma_h0={:.6} q_model_pf={:.4}",
            e.mode,
            cfg.rolloff,
            cfg.n_symbols,
            e.target_pf,
            e.threshold,
            cal.sigma_h0,
            predict_pf(e.threshold, cal.sigma_h0)?
        );
    }
    if let (Some(mu), Some(s1), Some(lambda)) = (cal.mu_hat, cal.sigma_h1, sync_threshold) {
        let snr = operational_snr(cfg.snr_db, weights.spec.oversampling);
        println!(
            "h1 snr_db={} mu_hat={mu:.6} sigma_h1={s1:.6} synchronous_threshold={lambda:.6} q_model_pd={:.4}",
            cfg.snr_db,
            predict_pd(lambda, &weights, cfg.n_symbols, snr, s1)?
        );
    }
    Ok(())
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("grid {spec:?} must be start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

pub fn roc(a: &RocArgs) -> CliResult<()> {
    let (cfg, extras, seed) = resolve_experiment(&a.common, &a.experiment, &a.weights, &["roc"])?;
    let jobs = jobs(&a.common, &extras)?;
    let file_roc = extras.table.get("roc");
    let file_thresholds = file_roc
        .and_then(|t| t.get("thresholds"))
        .map(|v| {
            v.as_array()
                .and_then(|arr| {
                    arr.iter()
                        .map(|x| x.as_float().or(x.as_integer().map(|i| i as f64)))
                        .collect()
                })
                .ok_or_else(|| {
                    CliError::usage("config key `roc.thresholds` must be an array of numbers")
                })
        })
        .transpose()?;
    let thresholds = if !a.thresholds.is_empty() {
        a.thresholds.clone()
    } else if let (None, Some(t)) = (&a.grid, file_thresholds) {
        t
    } else {
        let from_file = file_roc
            .and_then(|t| t.get("grid"))
            .and_then(|v| v.as_str())
            .map(str::to_string);
        parse_grid(
            a.grid
                .as_deref()
                .or(from_file.as_deref())
                .unwrap_or("0:7:15"),
        )?
    };
    let weights = load_weights_for(&a.weights, cfg.rolloff)?;
    let sim = cfg.simulator(&weights)?;
    let mut resolved = resolved_table(&cfg, seed, jobs)?;
    let mut section = toml::Table::new();
    section.insert(
        "thresholds".into(),
        toml::Value::Array(thresholds.iter().map(|t| toml::Value::Float(*t)).collect()),
    );
    resolved.insert("roc".into(), toml::Value::Table(section));
    echo(&a.out, "roc", &resolved)?;

    let outcomes = simulate_trials(&sim, cfg.trials, seed, jobs)?;
    for &mode in &cfg.modes {
        let points = score(&outcomes, mode, &thresholds)?;
        write_roc_csv(create(&a.out.join(format!("roc_{mode}.csv")))?, &points)?;
        for p in &points {
            println!(
                "mode={mode} threshold={:.6} pf={:.4}±{:.4} pd={:.4}±{:.4} trials={}",
                p.threshold, p.pf_hat, p.pf_ci95, p.pd_hat, p.pd_ci95, p.trials
            );
        }
    }
    if !a.energy_thresholds.is_empty() {
        let points = score_energy(&outcomes, &a.energy_thresholds)?;
        write_roc_csv(create(&a.out.join("roc_energy.csv"))?, &points)?;
        for p in &points {
            println!(
                "mode=energy threshold={:.6} pf={:.4} pd={:.4}",
                p.threshold, p.pf_hat, p.pd_hat
            );
        }
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let (cfg, extras, seed) = resolve_experiment(&a.common, &a.experiment, &a.weights, &["sweep"])?;
    let jobs = jobs(&a.common, &extras)?;
    let file_sweep = extras.table.get("sweep");
    let param = match (
        a.param,
        file_sweep
            .and_then(|t| t.get("param"))
            .and_then(|v| v.as_str()),
    ) {
        (Some(p), _) => p,
        (None, Some(s)) => s.parse::<SweepParam>()?,
        (None, None) => return Err(CliError::usage("sweep needs --param")),
    };
    let values: Vec<String> = if !a.values.is_empty() {
        a.values.clone()
    } else {
        file_sweep
            .and_then(|t| t.get("values"))
            .and_then(|v| v.as_array())
            .map(|arr| {
                arr.iter()
                    .map(|v| match v {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    if values.is_empty() {
        return Err(CliError::usage("sweep needs --values"));
    }
    let sweep = SweepConfig {
        param,
        values,
        base: cfg,
    };
    let mut rolloffs = vec![sweep.base.rolloff];
    for v in &sweep.values {
        let mut point = sweep.base.clone();
        param.apply(&mut point, v)?;
        point.validate()?;
        rolloffs.push(point.rolloff);
    }
    let mut weights: HashMap<u64, CombinerWeights> = HashMap::new();
    for r in rolloffs {
        if let std::collections::hash_map::Entry::Vacant(e) = weights.entry(r.to_bits()) {
            e.insert(load_weights_for(&a.weights, r)?);
        }
    }
    let mut resolved = resolved_table(&sweep.base, seed, jobs)?;
    let mut section = toml::Table::new();
    section.insert("param".into(), toml::Value::String(param.to_string()));
    section.insert(
        "values".into(),
        toml::Value::Array(
            sweep
                .values
                .iter()
                .cloned()
                .map(toml::Value::String)
                .collect(),
        ),
    );
    resolved.insert("sweep".into(), toml::Value::Table(section));
    echo(&a.out, "sweep", &resolved)?;

    let rows = run_sweep_with_weights(&sweep, seed, jobs, |spec| {
        weights
            .get(&spec.rolloff.to_bits())
            .cloned()
            .ok_or_else(|| {
                maxmin_core::Error::Config(format!("no weights for roll-off {}", spec.rolloff))
            })
    })?;
    let path = a.out.join(format!("sweep_{param}.csv"));
    write_sweep_csv(create(&path)?, &rows)?;
    for r in &rows {
        println!(
            "{param} mode={} beta={} snr_db={} n_symbols={} cp={} threshold={:.6} pf={:.4}±{:.4} pd={:.4}±{:.4}",
            r.mode, r.beta, r.snr_db, r.n_symbols, r.cp_ratio, r.threshold, r.pf_hat, r.pf_ci95, r.pd_hat, r.pd_ci95
        );
    }
    Ok(())
}

pub fn sense(a: &SenseArgs) -> CliResult<()> {
    let (_, extras) = read_config(a.common.config.as_deref(), &[])?;
    let seed = resolve_seed(&a.common, &extras);
    let weights = match &a.weights.weights {
        Some(p) if !p.exists() => {
            return Err(CliError::missing(format!(
                "weights file {} not found",
                p.display()
            )))
        }
        Some(p) => load_weights(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?,
        None => load_weights_for(&a.weights, a.rolloff)?,
    };
    let mut cfg = DetectorConfig::new(weights, a.n_symbols, a.mode, a.threshold)?;
    cfg.spur_shift = a.spur_shift;
    let detector = Detector::new(cfg)?;
    let (signal, meta) =
        read_iq(&a.input).map_err(|e| CliError::data(format!("{}: {e}", a.input.display())))?;
    let expected = detector.config().weights.spec.sample_rate_hz();
    if (meta.sample_rate_hz - expected).abs() > 1e-9 * expected {
        return Err(CliError::data(format!(
            "{} is sampled at {} Hz but the weights expect {expected} Hz",
            a.input.display(),
            meta.sample_rate_hz
        )));
    }
    let window = detector.window_len();
    if signal.len() < window {
        return Err(CliError::data(format!(
            "{} holds {} samples, fewer than one {window}-sample window",
            a.input.display(),
            signal.len()
        )));
    }
    let mut resolved = toml::Table::new();
    resolved.insert(
        "input".into(),
        toml::Value::String(a.input.display().to_string()),
    );
    resolved.insert(
        "rolloff".into(),
        toml::Value::Float(detector.config().weights.spec.rolloff),
    );
    resolved.insert("threshold".into(), toml::Value::Float(a.threshold));
    resolved.insert("mode".into(), toml::Value::String(a.mode.to_string()));
    resolved.insert("n_symbols".into(), toml::Value::Integer(a.n_symbols as i64));
    resolved.insert("spur_shift".into(), toml::Value::Boolean(a.spur_shift));
    resolved.insert("seed".into(), seed_value(seed));
    echo(&a.out, "sense", &resolved)?;

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut detections = 0usize;
    let windows = signal.len() / window;
    for (k, chunk) in signal.samples().chunks_exact(window).enumerate() {
        let mut rng = trial_rng(seed, k as u64, Stream::PickH0);
        let result = detector.sense(chunk, &mut rng)?;
        detections += (result.decision == maxmin_core::Decision::H1) as usize;
        writeln!(out, "{}", result.record(k))?;
    }
    out.flush()?;
    eprintln!(
        "windows={windows} h1={detections} fraction={:.4}",
        detections as f64 / windows as f64
    );
    Ok(())
}
