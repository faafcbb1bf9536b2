//! CP-OFDM modulation with unitary DFT scaling.
//!
//! Active subcarriers are mapped around DC, which is left empty: grid column
//! `k < active/2` goes to negative bin `k - active/2`, the rest to bins
//! `1, 2, …`. Both transform directions carry a `1/√N` factor, so the
//! waveform power per (CP-free) symbol equals the grid power.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmParams {
    pub fft_size: usize,
    pub cp_len: usize,
    pub active_subcarriers: usize,
    pub symbols_per_subframe: usize,
    pub pilot_spacing: usize,
    pub pss_symbol_index: usize,
    /// Central subcarriers occupied by the PSS; the rest of that symbol is empty.
    pub pss_len: usize,
    /// Zadoff-Chu root of the PSS.
    pub pss_root: u32,
    /// Sub-frames `i` with `i % pss_period == 0` carry the PSS.
    pub pss_period: usize,
    pub sample_rate: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self::desk()
    }
}

impl OfdmParams {
    /// Small numerology for fast simulation.
    pub fn desk() -> Self {
        Self {
            fft_size: 64,
            cp_len: 16,
            active_subcarriers: 48,
            symbols_per_subframe: 14,
            pilot_spacing: 6,
            pss_symbol_index: 0,
            pss_len: 36,
            pss_root: 25,
            pss_period: 5,
            sample_rate: 0.96e6,
        }
    }

    /// 20 MHz LTE-like numerology (normal CP approximated as 144 samples).
    pub fn lte_20mhz() -> Self {
        Self {
            fft_size: 2048,
            cp_len: 144,
            active_subcarriers: 1200,
            symbols_per_subframe: 14,
            pilot_spacing: 6,
            pss_symbol_index: 6,
            pss_len: 62,
            pss_root: 25,
            pss_period: 5,
            sample_rate: 30.72e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.fft_size == 0 || self.symbols_per_subframe == 0 || self.pilot_spacing == 0 {
            return fail(
                "fft_size, symbols_per_subframe and pilot_spacing must be positive".into(),
            );
        }
        if self.active_subcarriers == 0 || self.active_subcarriers >= self.fft_size {
            return fail(format!(
                "active_subcarriers must be in 1..{} (DC bin is unused), got {}",
                self.fft_size, self.active_subcarriers
            ));
        }
        if self.pss_symbol_index >= self.symbols_per_subframe {
            return fail(format!(
                "pss_symbol_index {} outside the {}-symbol sub-frame",
                self.pss_symbol_index, self.symbols_per_subframe
            ));
        }
        if self.pss_len > self.active_subcarriers {
            return fail(format!(
                "pss_len {} exceeds active subcarriers",
                self.pss_len
            ));
        }
        if self.pss_period == 0 {
            return fail("pss_period must be positive".into());
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return fail("sample_rate must be positive".into());
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn frame_len(&self) -> usize {
        self.symbols_per_subframe * self.symbol_len()
    }

    /// FFT bin carrying grid column `k`.
    pub fn bin_of(&self, k: usize) -> usize {
        let neg = self.active_subcarriers / 2;
        if k < neg {
            self.fft_size - neg + k
        } else {
            k - neg + 1
        }
    }

    /// Two-sided fractional band `[lo, hi]` (of the sample rate) spanned by
    /// the active subcarriers, DC excluded.
    pub fn occupied_band(&self) -> (f64, f64) {
        let neg = self.active_subcarriers / 2;
        let pos = self.active_subcarriers - neg;
        let n = self.fft_size as f64;
        (0.5 / n, (neg.max(pos) as f64 + 0.5) / n)
    }
}

/// Complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean `|x|²`; zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.samples.iter().map(|z| z * factor).collect(),
            self.sample_rate,
        )
    }

    /// Elementwise sum; lengths must agree.
    pub fn add(&self, other: &IqBuffer) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::InputShape(format!(
                "cannot add buffers of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::new(samples, self.sample_rate))
    }
}

/// Complex symbols indexed by (OFDM symbol, active subcarrier).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_symbols: usize,
    n_subcarriers: usize,
    data: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize) -> Self {
        Self {
            n_symbols,
            n_subcarriers,
            data: vec![Complex64::new(0.0, 0.0); n_symbols * n_subcarriers],
        }
    }

    pub fn from_vec(n_symbols: usize, n_subcarriers: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n_symbols * n_subcarriers {
            return Err(Error::InputShape(format!(
                "{} values do not fill a {n_symbols}x{n_subcarriers} grid",
                data.len()
            )));
        }
        Ok(Self {
            n_symbols,
            n_subcarriers,
            data,
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_symbols, self.n_subcarriers)
    }

    pub fn get(&self, l: usize, k: usize) -> Complex64 {
        self.data[l * self.n_subcarriers + k]
    }

    pub fn set(&mut self, l: usize, k: usize, v: Complex64) {
        self.data[l * self.n_subcarriers + k] = v;
    }

    pub fn symbol(&self, l: usize) -> &[Complex64] {
        &self.data[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Unitary inverse DFT: `x[n] = N^-1/2 Σ_k X[k] e^{+j2πkn/N}`.
pub fn idft_unitary(bins: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bins.to_vec();
    if buf.is_empty() {
        return buf;
    }
    plan(buf.len(), true).process(&mut buf);
    let s = (buf.len() as f64).sqrt().recip();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Unitary forward DFT: `X[k] = N^-1/2 Σ_n x[n] e^{-j2πkn/N}`.
pub fn dft_unitary(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    if buf.is_empty() {
        return buf;
    }
    plan(buf.len(), false).process(&mut buf);
    let s = (buf.len() as f64).sqrt().recip();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

pub fn ofdm_modulate(grid: &ResourceGrid, params: &OfdmParams) -> Result<IqBuffer> {
    params.validate()?;
    if grid.shape() != (params.symbols_per_subframe, params.active_subcarriers) {
        return Err(Error::InputShape(format!(
            "grid is {:?}, numerology expects {:?}",
            grid.shape(),
            (params.symbols_per_subframe, params.active_subcarriers)
        )));
    }
    let n = params.fft_size;
    let fft = plan(n, true);
    let scale = (n as f64).sqrt().recip();
    let mut out = Vec::with_capacity(params.frame_len());
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..grid.n_symbols() {
        bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (k, &v) in grid.symbol(l).iter().enumerate() {
            bins[params.bin_of(k)] = v;
        }
        fft.process(&mut bins);
        bins.iter_mut().for_each(|z| *z *= scale);
        out.extend_from_slice(&bins[n - params.cp_len..]);
        out.extend_from_slice(&bins);
    }
    Ok(IqBuffer::new(out, params.sample_rate))
}

/// Strips the cyclic prefix of each symbol, applies the unitary forward DFT
/// and returns the active bins.
pub fn ofdm_demodulate(buf: &IqBuffer, params: &OfdmParams) -> Result<ResourceGrid> {
    params.validate()?;
    if buf.len() != params.frame_len() {
        return Err(Error::InputShape(format!(
            "buffer has {} samples, sub-frame needs {}",
            buf.len(),
            params.frame_len()
        )));
    }
    let n = params.fft_size;
    let fft = plan(n, false);
    let scale = (n as f64).sqrt().recip();
    let mut grid = ResourceGrid::zeros(params.symbols_per_subframe, params.active_subcarriers);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (l, chunk) in buf.samples.chunks_exact(params.symbol_len()).enumerate() {
        bins.copy_from_slice(&chunk[params.cp_len..]);
        fft.process(&mut bins);
        for k in 0..params.active_subcarriers {
            grid.set(l, k, bins[params.bin_of(k)] * scale);
        }
    }
    Ok(grid)
}
