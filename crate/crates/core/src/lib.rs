//! Max-min SNR signal-energy spectrum sensing.
//!
//! The crate covers the whole chain: OFDM/QPSK transmit signal generation
//! with SRRC shaping ([`sigkit`]), channel impairments ([`channel`]),
//! combiner design by generalized eigen-analysis ([`design`]), the detector
//! runtime ([`sensing`]) and the Monte Carlo calibration and experiment
//! harness ([`montecarlo`]).

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod design;
pub mod error;
pub mod fir;
pub mod iq;
pub mod linalg;
pub mod montecarlo;
pub mod sensing;
pub mod sigkit;

pub use channel::{ChannelConfig, SpurConfig};
pub use design::{CombinerWeights, DesignMatrices, Loading};
pub use error::{Error, Result};
pub use iq::IqBuffer;
pub use montecarlo::{CalibrationResult, RocPoint};
pub use sensing::{Decision, DetectorConfig, SensingMode, SensingResult};
pub use sigkit::{OfdmConfig, PulseSpec};

pub use num_complex::Complex64;
