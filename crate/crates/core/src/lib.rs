//! Link-level simulation and metrology for MIMO over-the-air testing.
//!
//! The crate covers the signal chain of a 2×1 transmit-diversity OFDM link
//! under in-band interference and the measurements taken on it:
//!
//! - [`waveform`]: Gray-coded QAM, CP-OFDM and sub-frame layout
//! - [`channel`]: flat MIMO channel, precoder weights, receiver noise
//! - [`interference`]: band-limited Gaussian and OFDM interferers, SINR calibration
//! - [`metrics`]: channel power, SINR, the RMS EVM family, `A/√SINR` fits
//! - [`stbc`]: Alamouti coding, combining and pilot-based channel estimation
//! - [`uncertainty`]: repeatability statistics and the channel-power budget
//! - [`campaign`]: SINR and power sweeps, summaries and CSV I/O

pub mod campaign;
pub mod channel;
pub mod error;
pub mod interference;
pub mod metrics;
pub mod seed;
pub mod stbc;
pub mod uncertainty;
pub mod waveform;

pub use error::{Error, Result};
