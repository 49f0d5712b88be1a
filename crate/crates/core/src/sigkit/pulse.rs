use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fir::FftFilter;
use crate::iq::IqBuffer;

/// Square-root raised-cosine pulse description shared by transmitter,
/// receiver and combiner design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub rolloff: f64,
    pub symbol_period_s: f64,
    pub oversampling: usize,
    pub span_symbols: usize,
}

impl PulseSpec {
    pub const DEFAULT_OVERSAMPLING: usize = 8;
    pub const DEFAULT_SPAN: usize = 16;

    pub fn new(
        rolloff: f64,
        symbol_period_s: f64,
        oversampling: usize,
        span_symbols: usize,
    ) -> Result<Self> {
        let spec = Self {
            rolloff,
            symbol_period_s,
            oversampling,
            span_symbols,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `L = 8`, span 16, unit symbol period.
    pub fn with_rolloff(rolloff: f64) -> Result<Self> {
        Self::new(rolloff, 1.0, Self::DEFAULT_OVERSAMPLING, Self::DEFAULT_SPAN)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::Range(format!(
                "roll-off must lie in (0, 1], got {}",
                self.rolloff
            )));
        }
        if !(self.symbol_period_s > 0.0 && self.symbol_period_s.is_finite()) {
            return Err(Error::Range(format!(
                "symbol period must be positive, got {}",
                self.symbol_period_s
            )));
        }
        if self.oversampling == 0 || self.span_symbols == 0 {
            return Err(Error::Range(
                "oversampling and span must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.oversampling as f64 / self.symbol_period_s
    }

    /// `t_i = P_s (1/2 + i/L)` for `i = 0..L`, in seconds.
    pub fn sampling_offsets(&self) -> Vec<f64> {
        let l = self.oversampling as f64;
        (0..self.oversampling)
            .map(|i| self.symbol_period_s * (0.5 + i as f64 / l))
            .collect()
    }

    pub fn tap_count(&self) -> usize {
        2 * self.span_symbols * self.oversampling + 1
    }

    /// Delay in samples from a symbol to the peak of its shaped pulse.
    pub fn group_delay(&self) -> usize {
        self.span_symbols * self.oversampling
    }
}

/// Continuous SRRC impulse response at `x = t / P_s`, unit energy over
/// continuous time in symbol units.
pub fn srrc_value(x: f64, beta: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if (ax - edge).abs() < 1e-10 {
        let a = PI / (4.0 * beta);
        return beta * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    num / (PI * x * (1.0 - (4.0 * beta * x).powi(2)))
}

/// Raised-cosine pulse with unit peak, evaluated at `t` seconds.
pub fn rc_pulse(t: f64, beta: f64, ps: f64) -> f64 {
    let x = t / ps;
    let den = 1.0 - (2.0 * beta * x).powi(2);
    if den.abs() < 1e-9 {
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(x) * (PI * beta * x).cos() / den
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// SRRC taps at `P_s / L` spacing over `±span` symbols, scaled to unit energy.
pub fn srrc_taps(spec: &PulseSpec) -> Vec<f64> {
    let l = spec.oversampling as i64;
    let half = spec.span_symbols as i64 * l;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|m| srrc_value(m as f64 / l as f64, spec.rolloff))
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let norm = energy.sqrt();
    for t in &mut taps {
        *t /= norm;
    }
    taps
}

/// Output of the transmit pulse shaper.
#[derive(Debug, Clone)]
pub struct Shaped {
    pub buffer: IqBuffer,
    /// Sample index of symbol 0's pulse peak.
    pub group_delay: usize,
}

/// Zero-stuffs by `L` and filters with the SRRC taps. The result is scaled
/// by `sqrt(L)` so unit-power symbols give a unit-power waveform; sample `m`
/// corresponds to time `(m - group_delay) P_s / L`.
pub fn shape_and_upsample(symbols: &[Complex64], spec: &PulseSpec) -> Result<Shaped> {
    spec.validate()?;
    let filter = FftFilter::new(&srrc_taps(spec));
    Ok(shape_with(&filter, symbols, spec))
}

pub(crate) fn shape_with(filter: &FftFilter, symbols: &[Complex64], spec: &PulseSpec) -> Shaped {
    let l = spec.oversampling;
    let gain = (l as f64).sqrt();
    let mut stuffed = vec![Complex64::new(0.0, 0.0); symbols.len() * l];
    for (k, s) in symbols.iter().enumerate() {
        stuffed[k * l] = s * gain;
    }
    let samples = filter.convolve_full(&stuffed);
    Shaped {
        buffer: IqBuffer::from_parts(samples, spec.sample_rate_hz()),
        group_delay: spec.group_delay(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_unit_energy_and_even() {
        for beta in [0.2, 0.25, 0.35, 1.0] {
            let spec = PulseSpec::with_rolloff(beta).unwrap();
            let taps = srrc_taps(&spec);
            assert_eq!(taps.len(), 2 * 16 * 8 + 1);
            let e: f64 = taps.iter().map(|t| t * t).sum();
            assert!((e - 1.0).abs() < 1e-9);
            let c = taps.len() / 2;
            for k in 1..=c {
                assert_eq!(taps[c + k], taps[c - k]);
            }
        }
    }

    #[test]
    fn singular_points_are_continuous() {
        // beta = 0.25 puts the SRRC singularity exactly on the tap grid (t = P_s).
        for beta in [0.2, 0.25, 0.5] {
            let edge = 1.0 / (4.0 * beta);
            let lim = srrc_value(edge, beta);
            let near = 0.5 * (srrc_value(edge + 1e-6, beta) + srrc_value(edge - 1e-6, beta));
            assert!((lim - near).abs() < 1e-8, "beta {beta}: {lim} vs {near}");
        }
    }

    #[test]
    fn rc_basics() {
        assert_eq!(rc_pulse(0.0, 0.2, 1.0), 1.0);
        for k in 1..6 {
            assert!(rc_pulse(k as f64, 0.3, 1.0).abs() < 1e-15);
            assert!(rc_pulse(-(k as f64) * 2.0, 0.3, 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_rolloff_rejected() {
        assert!(PulseSpec::with_rolloff(0.0).is_err());
        assert!(PulseSpec::with_rolloff(1.5).is_err());
    }

    #[test]
    fn offsets_span_one_symbol() {
        let spec = PulseSpec::new(0.2, 2e-6, 8, 16).unwrap();
        let t = spec.sampling_offsets();
        assert_eq!(t.len(), 8);
        assert!((t[0] - 1e-6).abs() < 1e-18);
        // t_L would be t_0 + P_s.
        let step = t[1] - t[0];
        assert!((t[7] + step - t[0] - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn impulse_reproduces_taps() {
        let spec = PulseSpec::with_rolloff(0.2).unwrap();
        let out = shape_and_upsample(&[Complex64::new(1.0, 0.0)], &spec).unwrap();
        let taps = srrc_taps(&spec);
        let g = (8f64).sqrt();
        assert_eq!(out.group_delay, 128);
        for (o, t) in out.buffer.samples().iter().zip(&taps) {
            assert!((o.re - g * t).abs() < 1e-12 && o.im.abs() < 1e-12);
        }
        let zeros = shape_and_upsample(&[Complex64::new(0.0, 0.0); 4], &spec).unwrap();
        assert!(zeros.buffer.samples().iter().all(|s| s.norm() < 1e-15));
    }
}
