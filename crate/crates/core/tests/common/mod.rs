#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-peak raised cosine, evaluated directly from its closed form.
/// Only valid away from `t = 0` and `|t| = Ps / (2 beta)`.
pub fn rc_closed_form(t: f64, beta: f64, ps: f64) -> f64 {
    let x = t / ps;
    (PI * x).sin() / (PI * x) * (PI * beta * x).cos() / (1.0 - (2.0 * beta * x).powi(2))
}

/// Unit-peak-normalized root raised cosine `g(x)`, `x = t / Ps`, away from singular points.
pub fn srrc_closed_form(x: f64, beta: f64) -> f64 {
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

/// Naive `O(n^2)` DFT.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64))
                .sum()
        })
        .collect()
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (
        m,
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
    )
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Composite Simpson integral of `f` over `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
