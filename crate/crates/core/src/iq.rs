//! Complex baseband buffers and the on-disk IQ format.
//!
//! Samples are stored as little-endian interleaved `f32` pairs (I then Q)
//! with no header. Metadata lives in a TOML sidecar next to the data file,
//! named `<data file>.toml`, with the keys `sample_rate_hz` and `origin`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite complex sample stream at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::Range(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::Domain(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a buffer without the finiteness scan. Callers guarantee the invariant.
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        debug_assert!(sample_rate_hz > 0.0);
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|^2` over the buffer; zero for an empty buffer.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn scaled(&self, factor: f64) -> IqBuffer {
        let samples = self.samples.iter().map(|s| s * factor).collect();
        IqBuffer::from_parts(samples, self.sample_rate_hz)
    }

    /// Copy of `samples[start..start + len]`.
    pub fn slice(&self, start: usize, len: usize) -> Result<IqBuffer> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.samples.len())
            .ok_or_else(|| {
                Error::InputShape(format!(
                    "slice {start}..{} exceeds buffer of {} samples",
                    start.saturating_add(len),
                    self.samples.len()
                ))
            })?;
        Ok(IqBuffer::from_parts(
            self.samples[start..end].to_vec(),
            self.sample_rate_hz,
        ))
    }
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Sidecar metadata for an IQ data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqMeta {
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub origin: String,
}

/// Path of the sidecar belonging to `data`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut name = data.as_os_str().to_owned();
    name.push(".toml");
    PathBuf::from(name)
}

pub fn encode_cf32(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_cf32(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format(format!(
            "IQ payload of {} bytes is not a whole number of complex f32 samples",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect())
}

/// Writes `buf` to `path` and its metadata to the sidecar.
pub fn write_iq(path: &Path, buf: &IqBuffer, origin: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_cf32(buf.samples()))?;
    w.flush()?;
    let meta = IqMeta {
        sample_rate_hz: buf.sample_rate_hz(),
        origin: origin.to_string(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<IqMeta> {
    let text = fs::read_to_string(sidecar_path(path))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("sidecar: {e}")))
}

/// Reads a data file and its sidecar.
pub fn read_iq(path: &Path) -> Result<(IqBuffer, IqMeta)> {
    let meta = read_meta(path)?;
    let samples = decode_cf32(&fs::read(path)?)?;
    let buf = IqBuffer::new(samples, meta.sample_rate_hz)?;
    Ok((buf, meta))
}
