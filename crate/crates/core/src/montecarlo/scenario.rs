use num_complex::Complex64;
use rand::Rng;

use super::seeds::{trial_rng, Stream};
use crate::channel::{
    add_noise_in_place, fractional_delay, rotate_in_place, spur_process, uncertainty_factor,
    ChannelConfig, DEFAULT_INTERP_HALFWIDTH,
};
use crate::design::CombinerWeights;
use crate::error::{Error, Result};
use crate::fir::FftFilter;
use crate::iq::IqBuffer;
use crate::sensing::{energy_statistic, Detector, DetectorConfig, SensingMode};
use crate::sigkit::{ofdm_modulate, qpsk_map, random_bits, srrc_taps, OfdmConfig};

/// One experimental configuration: designed weights, transmit framing,
/// channel and sensing window.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub weights: CombinerWeights,
    pub ofdm: OfdmConfig,
    pub channel: ChannelConfig,
    pub n_symbols: usize,
    /// Draw `t0 / P_s` uniformly per trial instead of using `channel.timing_offset_frac`.
    pub random_timing: bool,
    /// Scales the transmitted waveform; 0 makes the H1 branch noise-only.
    pub signal_amplitude: f64,
    pub interp_halfwidth: usize,
}

impl Scenario {
    pub fn new(
        weights: CombinerWeights,
        ofdm: OfdmConfig,
        channel: ChannelConfig,
        n_symbols: usize,
    ) -> Self {
        Self {
            weights,
            ofdm,
            channel,
            n_symbols,
            random_timing: false,
            signal_amplitude: 1.0,
            interp_halfwidth: DEFAULT_INTERP_HALFWIDTH,
        }
    }

    /// Per-sample noise variance before the uncertainty factor; the
    /// transmitted waveform has unit power.
    pub fn nominal_noise_variance(&self) -> f64 {
        if self.channel.noise_enabled() {
            10f64.powf(-self.channel.snr_db / 10.0)
        } else {
            0.0
        }
    }
}

/// Prepared simulator for a [`Scenario`]: filters planned once, shareable across threads.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    detector: Detector,
    shaper: FftFilter,
    window: usize,
    /// First raw-window sample in the shaped stream; sits half a symbol past a symbol peak.
    start: usize,
}

/// Detector outputs for one realization of one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub t_values: Vec<f64>,
    pub pick: usize,
    pub energy: f64,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.channel.validate()?;
        if !(scenario.signal_amplitude >= 0.0 && scenario.signal_amplitude.is_finite()) {
            return Err(Error::Range(
                "signal amplitude must be finite and non-negative".into(),
            ));
        }
        let spec = scenario.weights.spec;
        let fs = spec.sample_rate_hz();
        if !(scenario.channel.cfo_hz.abs() < fs / 2.0) {
            return Err(Error::Range(format!(
                "CFO {} Hz aliases at {fs} Hz",
                scenario.channel.cfo_hz
            )));
        }
        if let Some(spur) = &scenario.channel.spur {
            if !(spur.bandwidth_hz > 0.0 && spur.bandwidth_hz <= fs / 8.0) {
                return Err(Error::Range(format!(
                    "spur bandwidth {} Hz must lie in (0, F_s/8 = {} Hz]",
                    spur.bandwidth_hz,
                    fs / 8.0
                )));
            }
        }
        let mut cfg = DetectorConfig::new(
            scenario.weights.clone(),
            scenario.n_symbols,
            SensingMode::AsyncEst,
            0.0,
        )?;
        cfg.spur_shift = scenario.channel.spur.is_some();
        let detector = Detector::new(cfg)?;
        let l = spec.oversampling;
        let hw = scenario.interp_halfwidth;
        let window = detector.window_len();
        // Leave room for the shaper transient, a delay of up to one symbol
        // and the interpolator support.
        let start = l * (2 * spec.span_symbols + 1 + hw.div_ceil(l)) + l / 2;
        Ok(Self {
            shaper: FftFilter::new(&srrc_taps(&spec)),
            detector,
            scenario,
            window,
            start,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn window_len(&self) -> usize {
        self.window
    }

    pub fn oversampling(&self) -> usize {
        self.scenario.weights.spec.oversampling
    }

    fn timing_frac(&self, master: u64, trial: u64) -> f64 {
        if self.scenario.random_timing {
            trial_rng(master, trial, Stream::Timing).random_range(0.0..1.0)
        } else {
            self.scenario.channel.timing_offset_frac
        }
    }

    /// Grid phase closest to the injected timing offset.
    pub fn true_phase(&self, master: u64, trial: u64) -> usize {
        let l = self.oversampling();
        (self.timing_frac(master, trial) * l as f64).round() as usize % l
    }

    /// Transmitted samples for one trial's window, after timing offset and CFO.
    pub fn transmitted_window(&self, master: u64, trial: u64) -> Result<Vec<Complex64>> {
        let sc = &self.scenario;
        let spec = sc.weights.spec;
        let l = spec.oversampling;
        let hw = sc.interp_halfwidth;
        let needed = self.start + self.window + hw + 1;
        let n_symbols = needed.div_ceil(l) + 1;
        let per_ofdm = sc.ofdm.symbol_len();
        let n_ofdm = n_symbols.div_ceil(per_ofdm);
        let mut rng = trial_rng(master, trial, Stream::Symbols);
        let bits = random_bits(&mut rng, 2 * n_ofdm * sc.ofdm.used_subcarriers().len());
        let tx = ofdm_modulate(&sc.ofdm, &qpsk_map(&bits)?)?;
        let shaped = crate::sigkit::shape_with(&self.shaper, &tx[..n_symbols], &spec).buffer;
        let delay = self.timing_frac(master, trial) * l as f64;
        let mut window = if delay == 0.0 {
            shaped.samples()[self.start..self.start + self.window].to_vec()
        } else {
            let lead = l + 2 * hw;
            let seg = shaped.slice(self.start - lead, lead + self.window + hw)?;
            let delayed = fractional_delay(&seg, delay, hw);
            delayed.buffer.samples()[lead..lead + self.window].to_vec()
        };
        let fs = spec.sample_rate_hz();
        if sc.signal_amplitude != 1.0 {
            for s in &mut window {
                *s *= sc.signal_amplitude;
            }
        }
        rotate_in_place(&mut window, sc.channel.cfo_hz / fs);
        if sc.channel.spur.is_some() {
            // Receiver tuned F_s/4 below the carrier; the spur sits near DC.
            rotate_in_place(&mut window, 0.25);
        }
        Ok(window)
    }

    fn add_receiver_impairments(
        &self,
        window: &mut [Complex64],
        master: u64,
        trial: u64,
        h1: bool,
    ) {
        let sc = &self.scenario;
        let fs = sc.weights.spec.sample_rate_hz();
        if let Some(spur) = &sc.channel.spur {
            if spur.amplitude != 0.0 {
                let mut rng = trial_rng(
                    master,
                    trial,
                    if h1 { Stream::SpurH1 } else { Stream::SpurH0 },
                );
                let mut s = spur_process(window.len(), spur.bandwidth_hz / fs, &mut rng);
                rotate_in_place(&mut s, spur.center_hz / fs);
                for (w, x) in window.iter_mut().zip(&s) {
                    *w += x * spur.amplitude;
                }
            }
        }
        if sc.channel.noise_enabled() {
            let stream = if h1 {
                Stream::UncertaintyH1
            } else {
                Stream::UncertaintyH0
            };
            let factor = uncertainty_factor(
                sc.channel.noise_uncertainty_db,
                &mut trial_rng(master, trial, stream),
            );
            let mut rng = trial_rng(
                master,
                trial,
                if h1 { Stream::NoiseH1 } else { Stream::NoiseH0 },
            );
            add_noise_in_place(window, sc.nominal_noise_variance() * factor, &mut rng);
        }
    }

    /// Raw received window (before the detector's own processing).
    pub fn received_window(&self, master: u64, trial: u64, h1: bool) -> Result<IqBuffer> {
        let mut window = if h1 {
            self.transmitted_window(master, trial)?
        } else {
            vec![Complex64::new(0.0, 0.0); self.window]
        };
        self.add_receiver_impairments(&mut window, master, trial, h1);
        IqBuffer::new(window, self.scenario.weights.spec.sample_rate_hz())
    }

    pub fn realize(&self, master: u64, trial: u64, h1: bool) -> Result<Realization> {
        let raw = self.received_window(master, trial, h1)?;
        let t_values = self.detector.statistics(raw.samples())?;
        let stream = if h1 { Stream::PickH1 } else { Stream::PickH0 };
        let pick = trial_rng(master, trial, stream).random_range(0..t_values.len());
        let noise_var = self.scenario.nominal_noise_variance();
        let energy = if noise_var > 0.0 {
            energy_statistic(raw.samples(), noise_var, raw.len())?
        } else {
            f64::NAN
        };
        Ok(Realization {
            t_values,
            pick,
            energy,
        })
    }
}
