use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cyclic-prefix length as a fraction of the FFT size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CpRatio {
    pub num: u32,
    pub den: u32,
}

impl CpRatio {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || 2 * num > den {
            return Err(Error::Range(format!(
                "CP ratio {num}/{den} outside [0, 1/2]"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CpRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CpRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse CP ratio {s:?}; expected e.g. 1/8"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => Self::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None if s == "0" => Self::new(0, 1),
            None => Err(bad()),
        }
    }
}

impl TryFrom<String> for CpRatio {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CpRatio> for String {
    fn from(r: CpRatio) -> String {
        r.to_string()
    }
}

/// OFDM framing parameters. Only QPSK payloads are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    n_fft: usize,
    used_subcarriers: Vec<i32>,
    cp: CpRatio,
}

impl OfdmConfig {
    pub fn new(n_fft: usize, used_subcarriers: Vec<i32>, cp: CpRatio) -> Result<Self> {
        if n_fft == 0 {
            return Err(Error::Range("n_fft must be positive".into()));
        }
        let half = (n_fft / 2) as i32;
        for &k in &used_subcarriers {
            if k == 0 {
                return Err(Error::Range("DC subcarrier must stay empty".into()));
            }
            if k <= -half || k >= half {
                return Err(Error::Range(format!(
                    "subcarrier {k} outside (-{half}, {half})"
                )));
            }
        }
        let mut sorted = used_subcarriers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != used_subcarriers.len() || sorted.is_empty() {
            return Err(Error::Range(
                "used subcarriers must be distinct and nonempty".into(),
            ));
        }
        if !(n_fft as u64 * cp.num as u64).is_multiple_of(cp.den as u64) {
            return Err(Error::Range(format!(
                "CP ratio {cp} of {n_fft} is not a whole sample count"
            )));
        }
        Ok(Self {
            n_fft,
            used_subcarriers,
            cp,
        })
    }

    /// 256-point FFT, carriers -120..=-1 and 1..=120, the given CP ratio.
    pub fn standard(cp: CpRatio) -> Result<Self> {
        let used = (-120..=-1).chain(1..=120).collect();
        Self::new(256, used, cp)
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn used_subcarriers(&self) -> &[i32] {
        &self.used_subcarriers
    }

    pub fn cp_ratio(&self) -> CpRatio {
        self.cp
    }

    pub fn cp_len(&self) -> usize {
        self.n_fft * self.cp.num as usize / self.cp.den as usize
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.cp_len()
    }
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self::standard(CpRatio { num: 1, den: 8 }).expect("standard OFDM parameters are valid")
    }
}

/// Maps payload symbols onto OFDM symbols and returns the time-domain
/// samples (one per transmit symbol period), CP included.
///
/// Scaled by `1/sqrt(|used|)` so unit-power payloads give unit average power.
pub fn ofdm_modulate(cfg: &OfdmConfig, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    let used = cfg.used_subcarriers.len();
    if !symbols.len().is_multiple_of(used) {
        return Err(Error::InputShape(format!(
            "{} payload symbols is not a multiple of {used} subcarriers",
            symbols.len()
        )));
    }
    let n = cfg.n_fft;
    let cp = cfg.cp_len();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = 1.0 / (used as f64).sqrt();
    let mut out = Vec::with_capacity(symbols.len() / used * (n + cp));
    let mut grid = vec![Complex64::new(0.0, 0.0); n];
    for payload in symbols.chunks_exact(used) {
        grid.fill(Complex64::new(0.0, 0.0));
        for (&k, &s) in cfg.used_subcarriers.iter().zip(payload) {
            grid[k.rem_euclid(n as i32) as usize] = s * scale;
        }
        ifft.process(&mut grid);
        out.extend_from_slice(&grid[n - cp..]);
        out.extend_from_slice(&grid);
    }
    Ok(out)
}
