//! Traceable SINR, the RMS EVM family, channel power and the `A/√SINR`
//! gradient fit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{dft_unitary, ConstellationOrder, IqBuffer, ResourceGrid};

/// Two-sided fractional band `[lo, hi]` of the sample rate, `0 ≤ lo < hi ≤ 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const FULL: Band = Band { lo: 0.0, hi: 0.5 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi <= 0.5 && lo < hi) {
            return Err(Error::Validation(format!(
                "band [{lo}, {hi}] must satisfy 0 <= lo < hi <= 0.5"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, f: f64) -> bool {
        let a = f.abs();
        a >= self.lo && a <= self.hi
    }

    /// Fraction of the full two-sided spectrum covered.
    pub fn fraction(&self) -> f64 {
        2.0 * (self.hi - self.lo)
    }
}

/// Frequency of DFT bin `b` in cycles per sample, in `[-0.5, 0.5)`.
fn bin_frequency(b: usize, n: usize) -> f64 {
    if 2 * b < n {
        b as f64 / n as f64
    } else {
        (b as f64 - n as f64) / n as f64
    }
}

/// Power inside `band`, integrated from the periodogram of the whole buffer.
/// Over the full band this is the mean sample power.
pub fn channel_power(buf: &IqBuffer, band: Band) -> Result<f64> {
    if buf.is_empty() {
        return Err(Error::Validation("channel power of an empty buffer".into()));
    }
    let n = buf.len();
    if band.lo == 0.0 && band.hi >= 0.5 {
        return Ok(buf.mean_power());
    }
    let spectrum = dft_unitary(&buf.samples);
    let p: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|(b, _)| band.contains(bin_frequency(*b, n)))
        .map(|(_, z)| z.norm_sqr())
        .sum();
    Ok(p / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrPlane {
    Waveform,
    Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub linear: f64,
    pub db: f64,
    pub plane: SinrPlane,
}

impl SinrSample {
    pub fn from_linear(linear: f64, plane: SinrPlane) -> Self {
        Self {
            linear,
            db: 10.0 * linear.log10(),
            plane,
        }
    }

    /// `P_S / (Σ P_I + σ²)`.
    pub fn from_powers(
        signal: f64,
        interference: &[f64],
        noise: f64,
        plane: SinrPlane,
    ) -> Result<Self> {
        let denom = interference.iter().sum::<f64>() + noise;
        if denom <= 0.0 {
            return Err(Error::UndefinedSinr);
        }
        Ok(Self::from_linear(signal / denom, plane))
    }
}

fn mean_power(s: &[Complex64]) -> f64 {
    s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len() as f64
}

/// Symbol-level SINR: mean signal power over the summed mean interferer
/// powers plus the noise floor.
pub fn sinr_from_symbols(
    signal: &[Complex64],
    interferers: &[&[Complex64]],
    noise_power: f64,
) -> Result<SinrSample> {
    if signal.is_empty() {
        return Err(Error::InputShape("no signal symbols".into()));
    }
    if let Some(bad) = interferers.iter().find(|j| j.len() != signal.len()) {
        return Err(Error::InputShape(format!(
            "interferer has {} symbols, signal has {}",
            bad.len(),
            signal.len()
        )));
    }
    let pi: Vec<f64> = interferers.iter().map(|j| mean_power(j)).collect();
    SinrSample::from_powers(mean_power(signal), &pi, noise_power, SinrPlane::Symbol)
}

/// SINR of every resource element, with signal and interference demodulated
/// separately: `|y(k)|² / (Σ_h |i_h(k)|² + σ²)`.
pub fn sinr_per_demod_symbol(
    y_clean: &ResourceGrid,
    interference: &[ResourceGrid],
    noise_power: f64,
) -> Result<Vec<SinrSample>> {
    if interference.iter().any(|g| g.shape() != y_clean.shape()) {
        return Err(Error::InputShape(
            "interference grid shape differs from signal grid".into(),
        ));
    }
    y_clean
        .as_slice()
        .iter()
        .enumerate()
        .map(|(idx, y)| {
            let ip: Vec<f64> = interference
                .iter()
                .map(|g| g.as_slice()[idx].norm_sqr())
                .collect();
            SinrSample::from_powers(y.norm_sqr(), &ip, noise_power, SinrPlane::Symbol)
        })
        .collect()
}

/// Magnitude `|R_i|` used to scale per-symbol EVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceConvention {
    /// Corner magnitude of the reference constellation.
    #[default]
    Peak,
    /// RMS magnitude of the reference constellation (1 for unit-power QAM).
    Rms,
}

impl ReferenceConvention {
    pub fn magnitude(self, order: ConstellationOrder) -> f64 {
        match self {
            Self::Peak => order.peak_magnitude(),
            Self::Rms => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvmReport {
    /// `|s_act - s_ref| / |R_i|`, percent.
    pub evm_per_symbol: Vec<f64>,
    pub mag_err_rms: f64,
    /// Radians.
    pub phase_err_rms: f64,
    /// Un-normalized RMS EVM (includes the `1/N` factor), percent.
    pub evm_rms: f64,
    /// Normalized RMS EVM, percent.
    pub normalized_evm_rms: f64,
    pub n_symbol: usize,
}

impl EvmReport {
    /// RMS of the per-symbol values.
    pub fn per_symbol_rms(&self) -> f64 {
        let n = self.evm_per_symbol.len() as f64;
        (self.evm_per_symbol.iter().map(|e| e * e).sum::<f64>() / n).sqrt()
    }
}

fn wrap_phase(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid maps +π to -π; keep the interval half-open at -π.
    if w == -PI {
        PI
    } else {
        w
    }
}

pub fn evm(s_act: &[Complex64], s_ref: &[Complex64], r_ref: f64) -> Result<EvmReport> {
    if s_act.len() != s_ref.len() || s_act.is_empty() {
        return Err(Error::InputShape(format!(
            "EVM needs equal non-empty sequences, got {} and {}",
            s_act.len(),
            s_ref.len()
        )));
    }
    if !(r_ref.is_finite() && r_ref > 0.0) {
        return Err(Error::Validation(format!(
            "reference magnitude must be positive, got {r_ref}"
        )));
    }
    let ref_energy: f64 = s_ref.iter().map(|z| z.norm_sqr()).sum();
    if ref_energy == 0.0 {
        return Err(Error::Validation("reference symbols carry no power".into()));
    }
    let n = s_act.len() as f64;
    let mut err_energy = 0.0;
    let mut mag_energy = 0.0;
    let mut phase_sq = 0.0;
    let evm_per_symbol = s_act
        .iter()
        .zip(s_ref)
        .map(|(a, r)| {
            let e = (a - r).norm();
            err_energy += e * e;
            mag_energy += (a.norm() - r.norm()).powi(2);
            phase_sq += wrap_phase(a.arg() - r.arg()).powi(2);
            e / r_ref * 100.0
        })
        .collect();
    let normalized = (err_energy / ref_energy).sqrt() * 100.0;
    Ok(EvmReport {
        evm_per_symbol,
        mag_err_rms: (mag_energy / ref_energy).sqrt() * 100.0,
        phase_err_rms: (phase_sq / n).sqrt(),
        evm_rms: (err_energy / (n * ref_energy)).sqrt() * 100.0,
        normalized_evm_rms: normalized,
        n_symbol: s_act.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientFit {
    pub a: f64,
    /// Uncentered coefficient of determination of the through-origin model.
    pub r_squared: f64,
    pub n_points: usize,
    pub sinr_floor_db: f64,
}

/// Least-squares fit of `EVM = A / √SINR` (no intercept) over points
/// `(sinr_linear, evm_percent)` whose SINR exceeds `sinr_floor_db`.
pub fn fit_gradient(points: &[(f64, f64)], sinr_floor_db: f64) -> Result<GradientFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(s, e)| {
            *s > 0.0 && s.is_finite() && e.is_finite() && 10.0 * s.log10() > sinr_floor_db
        })
        .map(|&(s, e)| (s.sqrt().recip(), e))
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable points above {sinr_floor_db} dB, need at least 2",
            used.len()
        )));
    }
    let sxx: f64 = used.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = used.iter().map(|(x, y)| x * y).sum();
    let syy: f64 = used.iter().map(|(_, y)| y * y).sum();
    let a = sxy / sxx;
    let ss_res: f64 = used.iter().map(|(x, y)| (y - a * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(GradientFit {
        a,
        r_squared,
        n_points: used.len(),
        sinr_floor_db,
    })
}
