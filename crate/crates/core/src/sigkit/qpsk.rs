use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Gray-mapped unit-power QPSK. Each bit pair `(b0, b1)` maps to
/// `((1 - 2 b1) + j (1 - 2 b0)) / sqrt(2)`.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InputShape(format!(
            "QPSK needs an even bit count, got {}",
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InputShape(format!(
            "bit values must be 0 or 1, got {b}"
        )));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign(pair[1]) * FRAC_1_SQRT_2, sign(pair[0]) * FRAC_1_SQRT_2)
        })
        .collect())
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<u8> {
    (0..count).map(|_| rng.random::<bool>() as u8).collect()
}
