//! Transmit-side signal generation: QPSK mapping, OFDM framing and SRRC
//! pulse shaping.

mod ofdm;
mod pulse;
mod qpsk;

pub use ofdm::{ofdm_modulate, CpRatio, OfdmConfig};
pub(crate) use pulse::shape_with;
pub use pulse::{rc_pulse, shape_and_upsample, srrc_taps, srrc_value, PulseSpec, Shaped};
pub use qpsk::{qpsk_map, random_bits};
