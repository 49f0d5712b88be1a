//! Detector runtime: spur pre-shift, matched filtering, linear combining,
//! the power-ratio test statistic over all sampling phases, thresholding,
//! and an energy-detector baseline.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::CombinerWeights;
use crate::error::{Error, Result};
use crate::fir::FftFilter;
use crate::iq::IqBuffer;
use crate::sigkit::{srrc_taps, PulseSpec};

pub const MIN_SYMBOLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    /// Phase 0 of a caller-aligned window.
    Synchronous,
    /// One phase drawn uniformly at random.
    AsyncNoEst,
    /// Maximum over all phases.
    AsyncEst,
}

impl SensingMode {
    pub const ALL: [SensingMode; 3] = [
        SensingMode::Synchronous,
        SensingMode::AsyncNoEst,
        SensingMode::AsyncEst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensingMode::Synchronous => "synchronous",
            SensingMode::AsyncNoEst => "async-no-est",
            SensingMode::AsyncEst => "async-est",
        }
    }
}

impl fmt::Display for SensingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synchronous" | "sync" => Ok(SensingMode::Synchronous),
            "async-no-est" | "async_no_est" => Ok(SensingMode::AsyncNoEst),
            "async-est" | "async_est" => Ok(SensingMode::AsyncEst),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; expected synchronous, async-no-est or async-est"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::H0 => "H0",
            Decision::H1 => "H1",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    pub weights: CombinerWeights,
    pub n_symbols: usize,
    pub mode: SensingMode,
    pub threshold: f64,
    /// Shift the stream by `-F_s/4` before filtering (spur pre-processing).
    pub spur_shift: bool,
}

impl DetectorConfig {
    pub fn new(
        weights: CombinerWeights,
        n_symbols: usize,
        mode: SensingMode,
        threshold: f64,
    ) -> Result<Self> {
        let cfg = Self {
            weights,
            n_symbols,
            mode,
            threshold,
            spur_shift: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_symbols < MIN_SYMBOLS {
            return Err(Error::Range(format!(
                "N = {} is below the asymptotic regime (need at least {MIN_SYMBOLS})",
                self.n_symbols
            )));
        }
        if self.weights.len() != self.weights.spec.oversampling {
            return Err(Error::InputShape(
                "combiner length must equal the oversampling factor".into(),
            ));
        }
        if self.threshold.is_nan() {
            return Err(Error::Range("threshold is NaN".into()));
        }
        Ok(())
    }

    /// Raw samples consumed per decision: `N + 1` symbols of filtered output
    /// plus the matched filter's transient.
    pub fn window_len(&self) -> usize {
        window_len(&self.weights.spec, self.n_symbols)
    }
}

pub fn window_len(spec: &PulseSpec, n_symbols: usize) -> usize {
    (n_symbols + 1) * spec.oversampling + spec.tap_count() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingResult {
    pub t_values: Vec<f64>,
    pub t_max: f64,
    pub chosen_branch: usize,
    pub statistic_used: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub mode: SensingMode,
}

impl SensingResult {
    /// Field order of [`SensingResult::record`].
    pub const RECORD_FIELDS: [&'static str; 8] = [
        "window",
        "mode",
        "decision",
        "statistic",
        "threshold",
        "branch",
        "t_max",
        "t_values",
    ];

    /// One line of `key=value` pairs in the fixed order of [`Self::RECORD_FIELDS`].
    pub fn record(&self, window: usize) -> String {
        let t: Vec<String> = self.t_values.iter().map(|v| v.to_string()).collect();
        format!(
            "window={window} mode={} decision={} statistic={} threshold={} branch={} t_max={} t_values={}",
            self.mode,
            self.decision,
            self.statistic_used,
            self.threshold,
            self.chosen_branch,
            self.t_max,
            t.join(",")
        )
    }
}

/// Multiplies sample `m` by `exp(-j pi m / 2)`: the cycle `1, -j, -1, j`.
pub fn preprocess_spur_shift(signal: &IqBuffer) -> IqBuffer {
    let mut out = signal.samples().to_vec();
    spur_shift_in_place(&mut out);
    IqBuffer::from_parts(out, signal.sample_rate_hz())
}

pub(crate) fn spur_shift_in_place(samples: &mut [Complex64]) {
    for (m, s) in samples.iter_mut().enumerate() {
        *s = match m % 4 {
            0 => *s,
            1 => Complex64::new(s.im, -s.re),
            2 => -*s,
            _ => Complex64::new(-s.im, s.re),
        };
    }
}

/// Output of the receive matched filter.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub buffer: IqBuffer,
    pub group_delay: usize,
}

/// Full convolution with the unit-energy SRRC taps.
pub fn matched_filter(signal: &IqBuffer, spec: &PulseSpec) -> Result<Filtered> {
    spec.validate()?;
    let filter = FftFilter::new(&srrc_taps(spec));
    Ok(Filtered {
        buffer: IqBuffer::from_parts(
            filter.convolve_full(signal.samples()),
            signal.sample_rate_hz(),
        ),
        group_delay: spec.group_delay(),
    })
}

fn samples_needed(l: usize, phase: usize, n: usize) -> usize {
    n * l + phase
}

/// `y[n] = sum_i alpha_i x[n L + phase + i]` for `n = 0..N`.
pub fn combine(
    filtered: &[Complex64],
    alpha: &[Complex64],
    phase_offset: usize,
    n_symbols: usize,
) -> Result<Vec<Complex64>> {
    let l = alpha.len();
    if l == 0 || phase_offset >= l {
        return Err(Error::InputShape(format!(
            "phase offset {phase_offset} outside [0, {l})"
        )));
    }
    let need = samples_needed(l, phase_offset, n_symbols);
    if filtered.len() < need {
        return Err(Error::InputShape(format!(
            "combining {n_symbols} symbols at phase {phase_offset} needs {need} samples, got {}",
            filtered.len()
        )));
    }
    Ok((0..n_symbols)
        .map(|n| {
            let base = n * l + phase_offset;
            filtered[base..base + l]
                .iter()
                .zip(alpha)
                .map(|(x, a)| a * x)
                .sum()
        })
        .collect())
}

fn mean_power_of(y: &[Complex64]) -> f64 {
    y.iter().map(|s| s.norm_sqr()).sum::<f64>() / y.len() as f64
}

/// `sqrt(N) (mean|z|^2 / mean|e|^2 - 1)` from the two combiner outputs.
pub fn statistic_from_branches(z: &[Complex64], e: &[Complex64]) -> Result<f64> {
    if z.len() != e.len() || z.is_empty() {
        return Err(Error::InputShape(
            "branches must be nonempty and of equal length".into(),
        ));
    }
    let pe = mean_power_of(e);
    if pe == 0.0 {
        return Err(Error::DegenerateInput(
            "minimum-SNR branch has zero power".into(),
        ));
    }
    let n = z.len() as f64;
    Ok(n.sqrt() * (mean_power_of(z) / pe - 1.0))
}

pub fn test_statistic(
    filtered: &[Complex64],
    weights: &CombinerWeights,
    phase_offset: usize,
    n_symbols: usize,
) -> Result<f64> {
    let z = combine(filtered, &weights.alpha_max, phase_offset, n_symbols)?;
    let e = combine(filtered, &weights.alpha_min, phase_offset, n_symbols)?;
    statistic_from_branches(&z, &e)
}

/// Per-phase statistics `T_0..T_{L-1}` on one filtered window.
///
/// Equivalent to calling [`test_statistic`] for every phase, with a
/// real-coefficient fast path.
pub fn phase_statistics(
    filtered: &[Complex64],
    weights: &CombinerWeights,
    n_symbols: usize,
) -> Result<Vec<f64>> {
    let l = weights.len();
    let need = samples_needed(l, l - 1, n_symbols);
    if filtered.len() < need {
        return Err(Error::InputShape(format!(
            "{} filtered samples cannot cover {n_symbols} symbols at every phase (need {need})",
            filtered.len()
        )));
    }
    let real = weights
        .alpha_min
        .iter()
        .chain(&weights.alpha_max)
        .all(|a| a.im == 0.0);
    if !real {
        return (0..l)
            .map(|p| test_statistic(filtered, weights, p, n_symbols))
            .collect();
    }
    let amax: Vec<f64> = weights.alpha_max.iter().map(|a| a.re).collect();
    let amin: Vec<f64> = weights.alpha_min.iter().map(|a| a.re).collect();
    let sqrt_n = (n_symbols as f64).sqrt();
    (0..l)
        .map(|p| {
            let mut pz = 0.0;
            let mut pe = 0.0;
            for n in 0..n_symbols {
                let block = &filtered[n * l + p..n * l + p + l];
                let mut z = Complex64::new(0.0, 0.0);
                let mut e = Complex64::new(0.0, 0.0);
                for i in 0..l {
                    z += block[i] * amax[i];
                    e += block[i] * amin[i];
                }
                pz += z.norm_sqr();
                pe += e.norm_sqr();
            }
            if pe == 0.0 {
                return Err(Error::DegenerateInput(
                    "minimum-SNR branch has zero power".into(),
                ));
            }
            Ok(sqrt_n * (pz / pe - 1.0))
        })
        .collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Reusable detector with the matched filter planned once.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    filter: FftFilter,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let filter = FftFilter::new(&srrc_taps(&cfg.weights.spec));
        Ok(Self { cfg, filter })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn window_len(&self) -> usize {
        self.cfg.window_len()
    }

    /// Matched-filtered, mean-removed window: exactly `(N + 1) L` samples,
    /// sample 0 aligned with raw sample `span L`.
    pub fn filter_window(&self, raw: &[Complex64]) -> Result<Vec<Complex64>> {
        let need = self.window_len();
        if raw.len() < need {
            return Err(Error::InputShape(format!(
                "sensing window needs {need} samples, got {}",
                raw.len()
            )));
        }
        let mut y = if self.cfg.spur_shift {
            let mut shifted = raw[..need].to_vec();
            spur_shift_in_place(&mut shifted);
            self.filter.convolve_valid(&shifted)
        } else {
            self.filter.convolve_valid(&raw[..need])
        };
        let mean = y.iter().sum::<Complex64>() / y.len() as f64;
        for s in &mut y {
            *s -= mean;
        }
        Ok(y)
    }

    /// All `L` phase statistics for a raw window.
    pub fn statistics(&self, raw: &[Complex64]) -> Result<Vec<f64>> {
        let y = self.filter_window(raw)?;
        phase_statistics(&y, &self.cfg.weights, self.cfg.n_symbols)
    }

    pub fn sense<R: Rng + ?Sized>(&self, raw: &[Complex64], rng: &mut R) -> Result<SensingResult> {
        let t_values = self.statistics(raw)?;
        Ok(self.decide(t_values, rng))
    }

    pub(crate) fn decide<R: Rng + ?Sized>(&self, t_values: Vec<f64>, rng: &mut R) -> SensingResult {
        let best = argmax(&t_values);
        let t_max = t_values[best];
        let chosen_branch = match self.cfg.mode {
            SensingMode::Synchronous => 0,
            SensingMode::AsyncNoEst => rng.random_range(0..t_values.len()),
            SensingMode::AsyncEst => best,
        };
        let statistic_used = t_values[chosen_branch];
        let decision = if statistic_used > self.cfg.threshold {
            Decision::H1
        } else {
            Decision::H0
        };
        SensingResult {
            t_values,
            t_max,
            chosen_branch,
            statistic_used,
            threshold: self.cfg.threshold,
            decision,
            mode: self.cfg.mode,
        }
    }
}

/// Runs the detector once on `signal` (raw, unfiltered samples at `L / P_s`).
pub fn sense<R: Rng + ?Sized>(
    signal: &IqBuffer,
    cfg: &DetectorConfig,
    spec: &PulseSpec,
    rng: &mut R,
) -> Result<SensingResult> {
    if spec != &cfg.weights.spec {
        return Err(Error::Config(
            "pulse spec differs from the one the weights were designed for".into(),
        ));
    }
    Detector::new(cfg.clone())?.sense(signal.samples(), rng)
}

/// `(1/n) sum |r|^2 / assumed_noise_var` over the first `n_samples`.
pub fn energy_statistic(
    signal: &[Complex64],
    assumed_noise_var: f64,
    n_samples: usize,
) -> Result<f64> {
    if !(assumed_noise_var > 0.0) {
        return Err(Error::Domain(format!(
            "assumed noise variance must be positive, got {assumed_noise_var}"
        )));
    }
    if n_samples == 0 || n_samples > signal.len() {
        return Err(Error::InputShape(format!(
            "energy detector over {n_samples} samples of a {}-sample signal",
            signal.len()
        )));
    }
    Ok(mean_power_of(&signal[..n_samples]) / assumed_noise_var)
}

pub fn energy_detector(
    signal: &IqBuffer,
    assumed_noise_var: f64,
    n_samples: usize,
    threshold: f64,
) -> Result<Decision> {
    let stat = energy_statistic(signal.samples(), assumed_noise_var, n_samples)?;
    Ok(if stat > threshold {
        Decision::H1
    } else {
        Decision::H0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn shift_cycle() {
        let ones = IqBuffer::new(vec![c(1.0); 6], 8.0).unwrap();
        let out = preprocess_spur_shift(&ones);
        let want = [
            c(1.0),
            Complex64::new(0.0, -1.0),
            c(-1.0),
            Complex64::new(0.0, 1.0),
            c(1.0),
            Complex64::new(0.0, -1.0),
        ];
        assert_eq!(out.samples(), &want);
    }

    #[test]
    fn toy_combine() {
        let y = combine(&[c(1.0), c(2.0), c(3.0), c(4.0)], &[c(1.0), c(1.0)], 0, 2).unwrap();
        assert_eq!(y, vec![c(3.0), c(7.0)]);
        assert!(combine(&[c(1.0); 3], &[c(1.0), c(1.0)], 0, 2).is_err());
        assert!(combine(&[c(1.0); 8], &[c(1.0), c(1.0)], 2, 2).is_err());
        let zero = combine(&[c(5.0); 8], &[c(0.0), c(0.0)], 1, 3).unwrap();
        assert!(zero.iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn injected_branches() {
        let t = statistic_from_branches(&[c(2.0), c(0.0)], &[c(1.0), c(1.0)]).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            statistic_from_branches(&[c(1.0)], &[c(0.0)]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn identical_branches_give_zero() {
        let mut w = design::design(&PulseSpec::with_rolloff(0.2).unwrap()).unwrap();
        w.alpha_min = w.alpha_max.clone();
        let y: Vec<Complex64> = (0..1000)
            .map(|m| Complex64::from_polar(1.0 + (m % 7) as f64, m as f64))
            .collect();
        for t in phase_statistics(&y, &w, 100).unwrap() {
            assert_eq!(t, 0.0);
        }
    }

    #[test]
    fn fast_path_matches_generic() {
        let w = design::design(&PulseSpec::with_rolloff(0.25).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = crate::channel::complex_noise(80 * 8, 1.0, &mut rng);
        let fast = phase_statistics(&y, &w, 78).unwrap();
        for (p, f) in fast.iter().enumerate() {
            let slow = test_statistic(&y, &w, p, 78).unwrap();
            assert!((f - slow).abs() < 1e-9 * (1.0 + slow.abs()));
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    }

    #[test]
    fn energy_detector_basics() {
        let zero = IqBuffer::zeros(100, 1.0).unwrap();
        assert_eq!(energy_detector(&zero, 1.0, 100, 0.5).unwrap(), Decision::H0);
        assert!(energy_detector(&zero, 0.0, 100, 0.5).is_err());
        let unit = IqBuffer::new(vec![Complex64::new(0.6, 0.8); 10], 1.0).unwrap();
        assert_eq!(energy_statistic(unit.samples(), 1.0, 10).unwrap(), 1.0);
    }

    #[test]
    fn small_n_rejected() {
        let w = design::design(&PulseSpec::with_rolloff(0.2).unwrap()).unwrap();
        assert!(DetectorConfig::new(w, 63, SensingMode::AsyncEst, 1.0).is_err());
    }

    #[test]
    fn mode_strings() {
        for m in SensingMode::ALL {
            assert_eq!(m.as_str().parse::<SensingMode>().unwrap(), m);
        }
        assert!("bogus".parse::<SensingMode>().is_err());
    }
}
