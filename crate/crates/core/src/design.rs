//! Combiner design: builds the signal and noise correlation matrices of the
//! `L` intra-symbol samples and finds the weight vectors with extremal
//! output SNR.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, generalized_eigen, Matrix};
use crate::sigkit::{rc_pulse, PulseSpec};

/// Interfering symbols per side in the signal matrix; the raised-cosine
/// tail makes doubling this change entries by under 1e-9.
pub const DEFAULT_TRUNCATION: usize = 64;
pub const MIN_TRUNCATION: usize = 8;

/// Signal (`a`) and noise (`b`) correlation matrices for one pulse.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    pub a: Matrix,
    pub b: Matrix,
    pub spec: PulseSpec,
    pub truncation_k: usize,
}

impl DesignMatrices {
    /// Wraps externally built matrices after checking symmetry and that `b`
    /// is positive definite.
    pub fn from_parts(a: Matrix, b: Matrix, spec: PulseSpec, truncation_k: usize) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::InputShape("A and B must have equal size".into()));
        }
        let tol = 1e-12 * a.frobenius_norm().max(b.frobenius_norm()).max(1.0);
        if a.max_asymmetry() > tol || b.max_asymmetry() > tol {
            return Err(Error::Domain("design matrices must be symmetric".into()));
        }
        cholesky(&b)?;
        Ok(Self {
            a,
            b,
            spec,
            truncation_k,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// `A_ij = sum_{|k| <= K} h(k P_s + t_i) h(k P_s + t_j)`, `B_ij = h(t_i - t_j)`,
/// with `h` the unit-peak raised cosine.
pub fn build_matrices(spec: &PulseSpec, truncation_k: usize) -> Result<DesignMatrices> {
    spec.validate()?;
    if truncation_k < MIN_TRUNCATION {
        return Err(Error::Range(format!(
            "truncation must be at least {MIN_TRUNCATION}, got {truncation_k}"
        )));
    }
    let l = spec.oversampling;
    let ps = spec.symbol_period_s;
    let beta = spec.rolloff;
    let t = spec.sampling_offsets();
    let k_max = truncation_k as i64;
    // Rows of samples h(k P_s + t_i), one row per k.
    let samples: Vec<Vec<f64>> = (-k_max..=k_max)
        .map(|k| {
            t.iter()
                .map(|&ti| rc_pulse(k as f64 * ps + ti, beta, ps))
                .collect()
        })
        .collect();
    let mut a = Matrix::zeros(l);
    let mut b = Matrix::zeros(l);
    for i in 0..l {
        for j in i..l {
            let aij: f64 = samples.iter().map(|row| row[i] * row[j]).sum();
            let bij = rc_pulse(t[i] - t[j], beta, ps);
            a[(i, j)] = aij;
            a[(j, i)] = aij;
            b[(i, j)] = bij;
            b[(j, i)] = bij;
        }
    }
    cholesky(&b).map_err(|e| Error::NumericDegeneracy(format!("noise correlation matrix: {e}")))?;
    Ok(DesignMatrices {
        a,
        b,
        spec: *spec,
        truncation_k,
    })
}

/// Diagonal loading applied before solving the two extremal problems.
///
/// The minimum-SNR problem is solved on `(A + s I, B)` and the maximum-SNR
/// problem on `(A, B + n I)`, with `s` and `n` taken relative to
/// `trace(B) / L`. The noise correlation of a band-limited pulse sampled at
/// `L` points per symbol is nearly singular, and without loading both
/// extremal vectors chase its near-null, out-of-band directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    pub signal: f64,
    pub noise: f64,
}

impl Loading {
    pub const NONE: Loading = Loading {
        signal: 0.0,
        noise: 0.0,
    };
}

impl Default for Loading {
    fn default() -> Self {
        Self {
            signal: 4e-4,
            noise: 3e-7,
        }
    }
}

/// The designed detector: extremal-SNR combiners and their per-unit-SNR gains.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerWeights {
    pub alpha_min: Vec<Complex64>,
    pub alpha_max: Vec<Complex64>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_d: f64,
    pub spec: PulseSpec,
    pub truncation_k: usize,
    pub loading: Loading,
}

impl CombinerWeights {
    pub fn len(&self) -> usize {
        self.alpha_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_min.is_empty()
    }

    /// Gains scaled to an operating point: `gamma * snr_linear`.
    pub fn operational_gammas(&self, snr_linear: f64) -> (f64, f64) {
        (self.gamma_min * snr_linear, self.gamma_max * snr_linear)
    }
}

/// `alpha^H M alpha` for real symmetric `M`.
pub fn hermitian_form(m: &Matrix, alpha: &[Complex64]) -> f64 {
    let n = m.dim();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += alpha[i].conj() * m[(i, j)] * alpha[j];
        }
    }
    s.re
}

pub fn rayleigh_quotient(a: &Matrix, b: &Matrix, alpha: &[Complex64]) -> f64 {
    hermitian_form(a, alpha) / hermitian_form(b, alpha)
}

/// `|<a, b>| / (|a| |b|)`
pub fn cosine_similarity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    dot.norm() / (na * nb)
}

/// Scales `v` to unit `B`-norm and flips it so the first nonzero entry is positive.
fn normalize(v: &[f64], b: &Matrix) -> Vec<Complex64> {
    let norm = b.quadratic_form(v).sqrt();
    let sign = v.iter().find(|x| **x != 0.0).map_or(1.0, |x| x.signum());
    v.iter()
        .map(|x| Complex64::new(sign * x / norm, 0.0))
        .collect()
}

/// Solves the minimum- and maximum-SNR Rayleigh-quotient problems.
///
/// Reported gammas are the quotients of the returned vectors on the
/// unloaded pencil.
pub fn solve_extremal_snr(m: &DesignMatrices, loading: Loading) -> Result<CombinerWeights> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::InputShape("empty design".into()));
    }
    let unit = m.b.trace() / n as f64;
    let low = generalized_eigen(&m.a.add_diagonal(loading.signal * unit), &m.b)?;
    let high = if loading.noise == 0.0 && loading.signal == 0.0 {
        low.clone()
    } else {
        generalized_eigen(&m.a, &m.b.add_diagonal(loading.noise * unit))?
    };
    let alpha_min = normalize(&low.vectors[0], &m.b);
    let alpha_max = normalize(&high.vectors[n - 1], &m.b);
    let gamma_min = rayleigh_quotient(&m.a, &m.b, &alpha_min);
    let gamma_max = rayleigh_quotient(&m.a, &m.b, &alpha_max);
    Ok(CombinerWeights {
        alpha_min,
        alpha_max,
        gamma_min,
        gamma_max,
        gamma_d: gamma_max - gamma_min,
        spec: m.spec,
        truncation_k: m.truncation_k,
        loading,
    })
}

/// Builds the matrices and solves both problems with default settings.
pub fn design(spec: &PulseSpec) -> Result<CombinerWeights> {
    let m = build_matrices(spec, DEFAULT_TRUNCATION)?;
    solve_extremal_snr(&m, Loading::default())
}

/// Reference weights and thresholds published for the three roll-offs
/// (`L = 8`, `N = 2^15`, target false-alarm rate 0.1).
pub mod golden {
    #[derive(Debug, Clone, Copy)]
    pub struct GoldenDesign {
        pub rolloff: f64,
        /// Threshold when one of the `L` statistics is picked at random.
        pub lambda_without_est: f64,
        /// Threshold for the maximum over the `L` statistics.
        pub lambda_with_est: f64,
        pub alpha_min: [f64; 8],
        pub alpha_max: [f64; 8],
    }

    pub const TABLE: [GoldenDesign; 3] = [
        GoldenDesign {
            rolloff: 0.2,
            lambda_without_est: 2.96,
            lambda_with_est: 4.586,
            alpha_min: [
                -8.8565, 5.2981, 8.3685, 3.8283, -3.4689, -8.1746, -5.4128, 8.3317,
            ],
            alpha_max: [
                -0.0586, -0.0033, 0.1166, 0.2486, 0.3346, 0.3213, 0.1697, -0.1375,
            ],
        },
        GoldenDesign {
            rolloff: 0.25,
            lambda_without_est: 2.925,
            lambda_with_est: 4.525,
            alpha_min: [
                -8.1340, 4.8609, 7.7102, 3.5405, -3.1840, -7.5180, -4.9741, 7.6169,
            ],
            alpha_max: [
                -0.0585, -0.0036, 0.1164, 0.2488, 0.3350, 0.3214, 0.1692, -0.1374,
            ],
        },
        GoldenDesign {
            rolloff: 0.35,
            lambda_without_est: 2.75,
            lambda_with_est: 4.22,
            alpha_min: [
                -6.6562, 3.9772, 6.3653, 2.9492, -2.6034, -6.1790, -4.0856, 6.1629,
            ],
            alpha_max: [
                -0.0581, -0.0044, 0.1158, 0.2492, 0.3361, 0.3217, 0.1682, -0.1374,
            ],
        },
    ];

    pub fn lookup(rolloff: f64) -> Option<&'static GoldenDesign> {
        TABLE.iter().find(|g| (g.rolloff - rolloff).abs() < 1e-12)
    }
}

/// Agreement of a design with the published vectors, when one exists.
#[derive(Debug, Clone, Copy)]
pub struct GoldenComparison {
    pub cos_alpha_min: f64,
    pub cos_alpha_max: f64,
}

pub fn compare_with_golden(w: &CombinerWeights) -> Option<GoldenComparison> {
    let g = golden::lookup(w.spec.rolloff)?;
    if w.len() != 8 {
        return None;
    }
    let to_c = |v: &[f64; 8]| {
        v.iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect::<Vec<_>>()
    };
    Some(GoldenComparison {
        cos_alpha_min: cosine_similarity(&w.alpha_min, &to_c(&g.alpha_min)),
        cos_alpha_max: cosine_similarity(&w.alpha_max, &to_c(&g.alpha_max)),
    })
}

/// On-disk form of [`CombinerWeights`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub rolloff: f64,
    pub oversampling: usize,
    pub span_symbols: usize,
    pub symbol_period_s: f64,
    pub sampling_offsets_s: Vec<f64>,
    pub truncation_k: usize,
    pub signal_loading: f64,
    pub noise_loading: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// `[re, im]` pairs.
    pub alpha_min: Vec<[f64; 2]>,
    pub alpha_max: Vec<[f64; 2]>,
}

impl From<&CombinerWeights> for WeightsFile {
    fn from(w: &CombinerWeights) -> Self {
        let pairs = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        Self {
            rolloff: w.spec.rolloff,
            oversampling: w.spec.oversampling,
            span_symbols: w.spec.span_symbols,
            symbol_period_s: w.spec.symbol_period_s,
            sampling_offsets_s: w.spec.sampling_offsets(),
            truncation_k: w.truncation_k,
            signal_loading: w.loading.signal,
            noise_loading: w.loading.noise,
            gamma_min: w.gamma_min,
            gamma_max: w.gamma_max,
            alpha_min: pairs(&w.alpha_min),
            alpha_max: pairs(&w.alpha_max),
        }
    }
}

impl TryFrom<WeightsFile> for CombinerWeights {
    type Error = Error;

    fn try_from(f: WeightsFile) -> Result<Self> {
        let spec = PulseSpec::new(f.rolloff, f.symbol_period_s, f.oversampling, f.span_symbols)?;
        if f.alpha_min.len() != f.oversampling || f.alpha_max.len() != f.oversampling {
            return Err(Error::Format(format!(
                "weights file holds {}/{} coefficients for L = {}",
                f.alpha_min.len(),
                f.alpha_max.len(),
                f.oversampling
            )));
        }
        let cplx = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(Self {
            alpha_min: cplx(&f.alpha_min),
            alpha_max: cplx(&f.alpha_max),
            gamma_min: f.gamma_min,
            gamma_max: f.gamma_max,
            gamma_d: f.gamma_max - f.gamma_min,
            spec,
            truncation_k: f.truncation_k,
            loading: Loading {
                signal: f.signal_loading,
                noise: f.noise_loading,
            },
        })
    }
}

pub fn weights_to_string(w: &CombinerWeights) -> Result<String> {
    toml::to_string(&WeightsFile::from(w)).map_err(|e| Error::Format(e.to_string()))
}

pub fn weights_from_str(text: &str) -> Result<CombinerWeights> {
    let file: WeightsFile =
        toml::from_str(text).map_err(|e| Error::Format(format!("weights file: {e}")))?;
    file.try_into()
}

pub fn save_weights(path: &Path, w: &CombinerWeights) -> Result<()> {
    fs::write(path, weights_to_string(w)?)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<CombinerWeights> {
    weights_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PulseSpec {
        PulseSpec::with_rolloff(0.2).unwrap()
    }

    #[test]
    fn b_has_unit_diagonal_and_half_symbol_entry() {
        let m = build_matrices(&spec(), 16).unwrap();
        for i in 0..8 {
            assert_eq!(m.b[(i, i)], 1.0);
        }
        // |t_0 - t_4| = P_s / 2
        assert!((m.b[(0, 4)] - rc_pulse(0.5, 0.2, 1.0)).abs() < 1e-12);
        assert_eq!(m.a.max_asymmetry(), 0.0);
    }

    #[test]
    fn truncation_guard() {
        assert!(matches!(build_matrices(&spec(), 7), Err(Error::Range(_))));
    }

    #[test]
    fn zero_signal_and_identity_pencils() {
        let m = build_matrices(&spec(), 16).unwrap();
        let zero = DesignMatrices::from_parts(Matrix::zeros(8), m.b.clone(), m.spec, 16).unwrap();
        let w = solve_extremal_snr(&zero, Loading::NONE).unwrap();
        assert_eq!(w.gamma_min, 0.0);
        assert_eq!(w.gamma_max, 0.0);
        let same = DesignMatrices::from_parts(m.b.clone(), m.b.clone(), m.spec, 16).unwrap();
        let w = solve_extremal_snr(&same, Loading::NONE).unwrap();
        assert!((w.gamma_min - 1.0).abs() < 1e-9 && (w.gamma_max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quotients_reproduce_gammas_and_b_norm() {
        let m = build_matrices(&spec(), 16).unwrap();
        let w = solve_extremal_snr(&m, Loading::default()).unwrap();
        assert!((hermitian_form(&m.b, &w.alpha_min) - 1.0).abs() < 1e-9);
        assert!((hermitian_form(&m.b, &w.alpha_max) - 1.0).abs() < 1e-9);
        assert!((rayleigh_quotient(&m.a, &m.b, &w.alpha_max) - w.gamma_max).abs() < 1e-9);
        assert!(w.gamma_min < w.gamma_max);
        assert!(w.alpha_min[0].re > 0.0 && w.alpha_max[0].re > 0.0);
    }

    #[test]
    fn weights_text_round_trip_is_exact() {
        let w = design(&PulseSpec::with_rolloff(0.35).unwrap()).unwrap();
        let text = weights_to_string(&w).unwrap();
        let back = weights_from_str(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(weights_to_string(&back).unwrap(), text);
    }

    #[test]
    fn non_pd_b_rejected() {
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(DesignMatrices::from_parts(Matrix::zeros(2), b, spec(), 16).is_err());
    }
}
