//! FFT-based FIR filtering (overlap-save).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A fixed real-tap FIR filter evaluated with overlap-save block convolution.
///
/// The planned transforms are shared, so one instance can be used from many
/// threads at once.
#[derive(Clone)]
pub struct FftFilter {
    taps: Vec<f64>,
    fft_len: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftFilter")
            .field("taps", &self.taps.len())
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl FftFilter {
    pub fn new(taps: &[f64]) -> Self {
        assert!(!taps.is_empty(), "FIR filter needs at least one tap");
        let fft_len = (4 * taps.len()).next_power_of_two().max(1024);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (s, &t) in spectrum.iter_mut().zip(taps) {
            s.re = t;
        }
        forward.process(&mut spectrum);
        let scale = 1.0 / fft_len as f64;
        for s in &mut spectrum {
            *s *= scale;
        }
        Self {
            taps: taps.to_vec(),
            fft_len,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Samples of delay between an input sample and the centre of its response.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Full-overlap output: `y[j] = sum_k h[k] x[j + M - 1 - k]`, length `n - M + 1`.
    pub fn convolve_valid(&self, input: &[Complex64]) -> Vec<Complex64> {
        let m = self.taps.len();
        if input.len() < m {
            return Vec::new();
        }
        let out_len = input.len() - m + 1;
        let step = self.fft_len - m + 1;
        let mut out = Vec::with_capacity(out_len);
        let mut block = vec![Complex64::new(0.0, 0.0); self.fft_len];
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        let mut start = 0;
        while out.len() < out_len {
            let avail = (input.len() - start).min(self.fft_len);
            block[..avail].copy_from_slice(&input[start..start + avail]);
            block[avail..].fill(Complex64::new(0.0, 0.0));
            self.forward.process_with_scratch(&mut block, &mut scratch);
            for (b, h) in block.iter_mut().zip(&self.spectrum) {
                *b *= h;
            }
            self.inverse.process_with_scratch(&mut block, &mut scratch);
            let take = step.min(out_len - out.len());
            out.extend_from_slice(&block[m - 1..m - 1 + take]);
            start += step;
        }
        out
    }

    /// Full linear convolution, length `n + M - 1`.
    pub fn convolve_full(&self, input: &[Complex64]) -> Vec<Complex64> {
        if input.is_empty() {
            return Vec::new();
        }
        let pad = self.taps.len() - 1;
        let mut padded = vec![Complex64::new(0.0, 0.0); input.len() + 2 * pad];
        padded[pad..pad + input.len()].copy_from_slice(input);
        self.convolve_valid(&padded)
    }
}

/// Direct-form full convolution; used as a reference and for short inputs.
pub fn convolve_direct(input: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if input.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); input.len() + taps.len() - 1];
    for (i, x) in input.iter().enumerate() {
        for (k, &h) in taps.iter().enumerate() {
            out[i + k] += x * h;
        }
    }
    out
}
