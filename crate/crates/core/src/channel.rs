//! Channel impairments: AWGN with bounded noise-variance uncertainty,
//! carrier frequency offset, fractional timing offset and a narrowband
//! low-frequency spur.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fir::FftFilter;
use crate::iq::IqBuffer;

pub const DEFAULT_INTERP_HALFWIDTH: usize = 32;
const SPUR_FILTER_TAPS: usize = 257;

/// Narrowband interference added to the received stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpurConfig {
    /// RMS amplitude; the spur's mean power is `amplitude^2`.
    pub amplitude: f64,
    /// Double-sided bandwidth. At most `F_s / 8`.
    pub bandwidth_hz: f64,
    pub center_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Signal-to-noise ratio per sample; `+inf` disables noise.
    pub snr_db: f64,
    /// Half-width of the uniform-in-dB noise power uncertainty.
    pub noise_uncertainty_db: f64,
    pub cfo_hz: f64,
    /// Timing offset `t0 / P_s` in `[0, 1)`.
    pub timing_offset_frac: f64,
    pub spur: Option<SpurConfig>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: 0.0,
            noise_uncertainty_db: 0.0,
            cfo_hz: 0.0,
            timing_offset_frac: 0.0,
            spur: None,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(Error::Range("SNR must not be NaN".into()));
        }
        if !(self.noise_uncertainty_db >= 0.0 && self.noise_uncertainty_db.is_finite()) {
            return Err(Error::Range(format!(
                "noise uncertainty must be a finite non-negative dB value, got {}",
                self.noise_uncertainty_db
            )));
        }
        if !(0.0..1.0).contains(&self.timing_offset_frac) {
            return Err(Error::Range(format!(
                "timing offset {} outside [0, 1)",
                self.timing_offset_frac
            )));
        }
        Ok(())
    }

    pub fn noise_enabled(&self) -> bool {
        self.snr_db != f64::INFINITY
    }
}

/// Draws the per-realization noise power factor `10^(u/10)`, `u ~ U[-d, d]` dB.
pub fn uncertainty_factor<R: Rng + ?Sized>(half_width_db: f64, rng: &mut R) -> f64 {
    if half_width_db == 0.0 {
        return 1.0;
    }
    let u = rng.random_range(-half_width_db..=half_width_db);
    10f64.powf(u / 10.0)
}

/// Circularly-symmetric complex Gaussian samples of the given variance.
pub fn complex_noise<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

/// Adds noise of the given variance in place.
pub fn add_noise_in_place<R: Rng + ?Sized>(samples: &mut [Complex64], variance: f64, rng: &mut R) {
    let sd = (variance / 2.0).sqrt();
    for s in samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re * sd, im * sd);
    }
}

/// Adds AWGN at `cfg.snr_db` relative to the measured signal power, scaled
/// by one uncertainty draw per call.
pub fn add_awgn<R: Rng + ?Sized>(
    signal: &IqBuffer,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<IqBuffer> {
    if signal.is_empty() {
        return Err(Error::InputShape(
            "cannot add noise to an empty signal".into(),
        ));
    }
    cfg.validate()?;
    if !cfg.noise_enabled() {
        return Ok(signal.clone());
    }
    let factor = uncertainty_factor(cfg.noise_uncertainty_db, rng);
    let variance = signal.power() * 10f64.powf(-cfg.snr_db / 10.0) * factor;
    let mut out = signal.samples().to_vec();
    add_noise_in_place(&mut out, variance, rng);
    Ok(IqBuffer::from_parts(out, signal.sample_rate_hz()))
}

/// Multiplies sample `m` by `exp(j 2 pi f m / F_s)`.
pub fn apply_cfo(signal: &IqBuffer, cfo_hz: f64) -> Result<IqBuffer> {
    let fs = signal.sample_rate_hz();
    if !(cfo_hz.abs() < fs / 2.0) {
        return Err(Error::Range(format!(
            "CFO {cfo_hz} Hz aliases at sample rate {fs} Hz"
        )));
    }
    let mut out = signal.samples().to_vec();
    rotate_in_place(&mut out, cfo_hz / fs);
    Ok(IqBuffer::from_parts(out, fs))
}

/// Multiplies sample `m` by `exp(j 2 pi cycles_per_sample m)`. The phase is
/// reduced modulo one cycle each step so long buffers stay accurate.
pub(crate) fn rotate_in_place(samples: &mut [Complex64], cycles_per_sample: f64) {
    if cycles_per_sample == 0.0 {
        return;
    }
    for (m, s) in samples.iter_mut().enumerate() {
        let phase = (cycles_per_sample * m as f64).fract();
        *s *= Complex64::from_polar(1.0, 2.0 * PI * phase);
    }
}

/// A buffer with the index range whose samples are fully determined.
#[derive(Debug, Clone)]
pub struct TimedBuffer {
    pub buffer: IqBuffer,
    pub valid: Range<usize>,
}

fn blackman(u: f64) -> f64 {
    // u in [-1, 1]
    0.42 + 0.5 * (PI * u).cos() + 0.08 * (2.0 * PI * u).cos()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Delays the stream by `frac * samples_per_symbol` samples with a
/// Blackman-windowed sinc interpolator spanning `2 * halfwidth` taps.
pub fn apply_timing_offset(
    signal: &IqBuffer,
    frac: f64,
    samples_per_symbol: usize,
    halfwidth: usize,
) -> Result<TimedBuffer> {
    if halfwidth == 0 {
        return Err(Error::Range(
            "interpolator half-width must be positive".into(),
        ));
    }
    if signal.len() <= 2 * halfwidth {
        return Err(Error::InputShape(format!(
            "signal of {} samples is too short for a {halfwidth}-tap half-width interpolator",
            signal.len()
        )));
    }
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::Range(format!("timing offset {frac} outside [0, 1)")));
    }
    let delay = frac * samples_per_symbol as f64;
    Ok(fractional_delay(signal, delay, halfwidth))
}

/// Delays by `delay >= 0` samples (not necessarily an integer).
pub fn fractional_delay(signal: &IqBuffer, delay: f64, halfwidth: usize) -> TimedBuffer {
    let x = signal.samples();
    let len = x.len();
    let whole = delay.floor() as usize;
    let mu = delay - whole as f64;
    let valid_start = (whole + halfwidth).min(len);
    let valid_end = (len + whole + 1)
        .saturating_sub(halfwidth)
        .min(len)
        .max(valid_start);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if mu == 0.0 {
        let shift = whole.min(len);
        out[shift..].copy_from_slice(&x[..len - shift]);
    } else {
        // y[m] = sum_j x[m - whole - j] w(j - mu) sinc(j - mu), j in (-hw, hw],
        // evaluated as a causal FIR: y[m] = full[m - whole + hw - 1].
        let hw = halfwidth as i64;
        let kernel: Vec<f64> = ((-hw + 1)..=hw)
            .map(|j| {
                let d = j as f64 - mu;
                sinc(d) * blackman(d / hw as f64)
            })
            .collect();
        let full = FftFilter::new(&kernel).convolve_full(x);
        for (m, y) in out.iter_mut().enumerate() {
            let idx = m as i64 - whole as i64 + hw - 1;
            if idx >= 0 && (idx as usize) < full.len() {
                *y = full[idx as usize];
            }
        }
    }
    TimedBuffer {
        buffer: IqBuffer::from_parts(out, signal.sample_rate_hz()),
        valid: valid_start..valid_end,
    }
}

/// Windowed-sinc low-pass taps with double-sided bandwidth `bw` (cycles per
/// sample), scaled to unit energy.
fn spur_taps(bw: f64) -> Vec<f64> {
    let half = (SPUR_FILTER_TAPS / 2) as i64;
    let cutoff = bw / 2.0;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|k| {
            2.0 * cutoff * sinc(2.0 * cutoff * k as f64) * blackman(k as f64 / (half + 1) as f64)
        })
        .collect();
    let e: f64 = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    for t in &mut taps {
        *t /= e;
    }
    taps
}

/// Adds a filtered-Gaussian spur of mean power `amplitude^2`.
pub fn inject_spur<R: Rng + ?Sized>(
    signal: &IqBuffer,
    spur: &SpurConfig,
    rng: &mut R,
) -> Result<IqBuffer> {
    let fs = signal.sample_rate_hz();
    if !(spur.bandwidth_hz > 0.0 && spur.bandwidth_hz <= fs / 8.0) {
        return Err(Error::Range(format!(
            "spur bandwidth {} Hz must lie in (0, F_s/8 = {} Hz]",
            spur.bandwidth_hz,
            fs / 8.0
        )));
    }
    if !(spur.center_hz.abs() < fs / 2.0) {
        return Err(Error::Range(format!(
            "spur centre {} Hz aliases",
            spur.center_hz
        )));
    }
    if spur.amplitude == 0.0 || signal.is_empty() {
        return Ok(signal.clone());
    }
    let mut spur_samples = spur_process(signal.len(), spur.bandwidth_hz / fs, rng);
    rotate_in_place(&mut spur_samples, spur.center_hz / fs);
    let out = signal
        .samples()
        .iter()
        .zip(&spur_samples)
        .map(|(x, s)| x + s * spur.amplitude)
        .collect();
    Ok(IqBuffer::from_parts(out, fs))
}

/// Unit-power low-pass Gaussian process at DC.
pub(crate) fn spur_process<R: Rng + ?Sized>(
    len: usize,
    bw_cycles: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let taps = spur_taps(bw_cycles);
    let white = complex_noise(len + taps.len() - 1, 1.0, rng);
    FftFilter::new(&taps).convolve_valid(&white)
}

/// `10 log10((P1 - P0) / P0)` from average powers under both hypotheses.
pub fn estimate_snr(power_h1: f64, power_h0: f64) -> Result<f64> {
    if !(power_h0 > 0.0 && power_h1 > power_h0) {
        return Err(Error::Domain(format!(
            "need power_h1 > power_h0 > 0, got {power_h1} and {power_h0}"
        )));
    }
    Ok(10.0 * ((power_h1 - power_h0) / power_h0).log10())
}

/// Indices with the valid range intersected; helper for callers that chain impairments.
pub fn intersect(a: &Range<usize>, b: &Range<usize>) -> Range<usize> {
    let start = a.start.max(b.start);
    start..a.end.min(b.end).max(start)
}
