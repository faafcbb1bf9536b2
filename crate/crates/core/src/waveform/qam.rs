//! Gray-coded square QAM with unit average power.
//!
//! Bits of one symbol are split in half: the leading half selects the
//! in-phase level and the trailing half the quadrature level. Each half is a
//! Gray-coded PAM index where all-zero bits select the largest positive level,
//! so `[0, 0]` on QPSK maps to `(1 + i)/√2`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ConstellationOrder {
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl ConstellationOrder {
    pub const ALL: [ConstellationOrder; 4] = [Self::Qpsk, Self::Qam16, Self::Qam64, Self::Qam256];

    pub fn order(self) -> u32 {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
            Self::Qam64 => 64,
            Self::Qam256 => 256,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }

    /// Levels per axis.
    fn side(self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    /// Amplitude scale giving unit mean power over the full alphabet.
    fn scale(self) -> f64 {
        let side = self.side() as f64;
        (2.0 * (side * side - 1.0) / 3.0).sqrt().recip()
    }

    /// Largest constellation magnitude (the corner points).
    pub fn peak_magnitude(self) -> f64 {
        let edge = (self.side() - 1) as f64;
        edge * std::f64::consts::SQRT_2 * self.scale()
    }

    /// All points, indexed by the integer formed from their bits (MSB first).
    pub fn alphabet(self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        (0..self.order() as usize)
            .map(|word| {
                let bits: Vec<u8> = (0..k).rev().map(|b| ((word >> b) & 1) as u8).collect();
                self.point(&bits)
            })
            .collect()
    }

    fn point(self, bits: &[u8]) -> Complex64 {
        let half = bits.len() / 2;
        let (i_bits, q_bits) = bits.split_at(half);
        let s = self.scale();
        Complex64::new(
            pam_level(i_bits, self.side()) * s,
            pam_level(q_bits, self.side()) * s,
        )
    }
}

impl TryFrom<u32> for ConstellationOrder {
    type Error = String;

    fn try_from(v: u32) -> std::result::Result<Self, Self::Error> {
        match v {
            4 => Ok(Self::Qpsk),
            16 => Ok(Self::Qam16),
            64 => Ok(Self::Qam64),
            256 => Ok(Self::Qam256),
            other => Err(format!(
                "unsupported constellation order {other} (expected 4, 16, 64 or 256)"
            )),
        }
    }
}

impl From<ConstellationOrder> for u32 {
    fn from(o: ConstellationOrder) -> u32 {
        o.order()
    }
}

impl fmt::Display for ConstellationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order())
    }
}

fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut shift = g >> 1;
    while shift != 0 {
        g ^= shift;
        shift >>= 1;
    }
    g
}

/// Unscaled odd-integer level; Gray index 0 is the top level `side - 1`.
fn pam_level(bits: &[u8], side: usize) -> f64 {
    let n = gray_to_binary(bits_to_index(bits));
    (side as f64 - 1.0) - 2.0 * n as f64
}

/// Nearest-level Gray bits for one axis, written into `out`.
fn pam_decide(x: f64, side: usize, out: &mut [u8]) {
    let n = (((side as f64 - 1.0) - x) / 2.0)
        .round()
        .clamp(0.0, side as f64 - 1.0) as usize;
    let g = n ^ (n >> 1);
    let k = out.len();
    for (j, o) in out.iter_mut().enumerate() {
        *o = ((g >> (k - 1 - j)) & 1) as u8;
    }
}

pub fn map_symbols(bits: &[u8], order: ConstellationOrder) -> Result<Vec<Complex64>> {
    let k = order.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::InputShape(format!(
            "{} bits is not a multiple of {k} bits per symbol",
            bits.len()
        )));
    }
    Ok(bits.chunks_exact(k).map(|c| order.point(c)).collect())
}

/// Hard-decision demapper, exact inverse of [`map_symbols`] without noise.
pub fn demap_symbols(symbols: &[Complex64], order: ConstellationOrder) -> Vec<u8> {
    let k = order.bits_per_symbol();
    let side = order.side();
    let inv = order.scale().recip();
    let mut bits = vec![0u8; symbols.len() * k];
    for (s, out) in symbols.iter().zip(bits.chunks_exact_mut(k)) {
        let (i_out, q_out) = out.split_at_mut(k / 2);
        pam_decide(s.re * inv, side, i_out);
        pam_decide(s.im * inv, side, q_out);
    }
    bits
}
