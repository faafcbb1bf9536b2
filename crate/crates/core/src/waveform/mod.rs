//! QAM mapping, CP-OFDM modulation and sub-frame construction.

mod frame;
mod ofdm;
mod qam;

pub use frame::{
    build_subframe, data_capacity, pilot_sequence, pss_sequence, Layout, ReRole, SymbolFrame,
};
pub use ofdm::{
    dft_unitary, idft_unitary, ofdm_demodulate, ofdm_modulate, IqBuffer, OfdmParams, ResourceGrid,
};
pub use qam::{demap_symbols, map_symbols, ConstellationOrder};

use rand::Rng;

/// `n` uniformly random bits drawn from `rng`.
pub fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}
