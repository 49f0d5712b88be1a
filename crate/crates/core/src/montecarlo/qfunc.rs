use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

use crate::design::CombinerWeights;
use crate::error::{Error, Result};

/// Standard normal upper tail, `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("Q^-1 needs p in (0, 1), got {p}")));
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish; Q'(x) = -phi(x).
    for _ in 0..3 {
        let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if phi == 0.0 {
            break;
        }
        x += (q_function(x) - p) / phi;
    }
    Ok(x)
}

/// False-alarm probability `Q(lambda / sigma_h0)` of the asymptotic model.
pub fn predict_pf(lambda: f64, sigma_h0: f64) -> Result<f64> {
    if !(sigma_h0 > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_h0 must be positive, got {sigma_h0}"
        )));
    }
    Ok(q_function(lambda / sigma_h0))
}

/// Detection probability `Q((lambda - mu) / sigma_h1)` with
/// `mu = sqrt(N) gamma_d / (1 + gamma_min)` at the operating SNR.
///
/// `operational_snr` multiplies the per-unit-SNR gains stored in the
/// weights; see [`operational_snr`] for the conversion from a per-sample SNR.
pub fn predict_pd(
    lambda: f64,
    weights: &CombinerWeights,
    n_symbols: usize,
    operational_snr: f64,
    sigma_h1: f64,
) -> Result<f64> {
    if !(sigma_h1 > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_h1 must be positive, got {sigma_h1}"
        )));
    }
    let (gmin, gmax) = weights.operational_gammas(operational_snr);
    let mu = (n_symbols as f64).sqrt() * (gmax - gmin) / (1.0 + gmin);
    Ok(q_function((lambda - mu) / sigma_h1))
}

/// Combiner-domain SNR for a per-sample SNR measured over the full sample
/// rate: the matched filter concentrates the signal, which occupies `1/L`
/// of the band, so the in-band SNR is `L` times larger.
pub fn operational_snr(snr_db: f64, oversampling: usize) -> f64 {
    oversampling as f64 * 10f64.powf(snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry() {
        assert_eq!(q_function(0.0), 0.5);
        for x in [0.5, 1.0, 2.0] {
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_round_trip() {
        for p in [1e-9, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.77, 0.999] {
            let x = q_inv(p).unwrap();
            assert!((q_function(x) - p).abs() <= 1e-10 * p.max(1e-3), "p = {p}");
        }
        assert!(q_inv(0.0).is_err() && q_inv(1.0).is_err());
    }

    #[test]
    fn pf_prediction() {
        assert_eq!(predict_pf(0.0, 2.0).unwrap(), 0.5);
        assert!(predict_pf(1.0, 0.0).is_err());
        let sigma = 2.96 / 1.28155;
        assert!((predict_pf(2.96, sigma).unwrap() - 0.1).abs() < 1e-4);
    }
}
