//! In-band interference sources and SINR calibration.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::seed;
use crate::waveform::{
    build_subframe, data_capacity, ofdm_modulate, random_bits, ConstellationOrder, IqBuffer,
    OfdmParams, ReRole,
};

/// Order of the bandpass FIR applied to Gaussian interference.
pub const FIR_ORDER: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererKind {
    #[default]
    GwnBandpass,
    OfdmLteLike,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSource {
    pub kind: InterfererKind,
    /// Mean received power (linear).
    pub power: f64,
    pub seed: u64,
    /// Circular shift in samples, OFDM sources only.
    pub frame_offset: usize,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Hamming-windowed sinc bandpass taps passing `lo ≤ |f| ≤ hi` (cycles per
/// sample), `order + 1` real taps with linear phase.
pub fn bandpass_taps(lo: f64, hi: f64, order: usize) -> Vec<f64> {
    let mid = order as f64 / 2.0;
    (0..=order)
        .map(|m| {
            let t = m as f64 - mid;
            let ideal = 2.0 * hi * sinc(2.0 * hi * t) - 2.0 * lo * sinc(2.0 * lo * t);
            let w = if order == 0 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * m as f64 / order as f64).cos()
            };
            ideal * w
        })
        .collect()
}

fn rescale_to(samples: &mut [Complex64], power: f64) {
    let p = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64;
    let s = if p > 0.0 { (power / p).sqrt() } else { 0.0 };
    samples.iter_mut().for_each(|z| *z *= s);
}

/// Complex white Gaussian noise through the bandpass `[f_lo, f_hi]`,
/// rescaled to mean power `power` over the returned buffer.
pub fn gen_gwn_interferer(
    length: usize,
    power: f64,
    band: (f64, f64),
    seed: u64,
    sample_rate: f64,
) -> Result<IqBuffer> {
    let (lo, hi) = band;
    if !(lo >= 0.0 && hi <= 0.5 && lo < hi) {
        return Err(Error::Validation(format!(
            "empty or invalid band [{lo}, {hi}]"
        )));
    }
    check_power(power)?;
    if power == 0.0 {
        return Ok(IqBuffer::zeros(length, sample_rate));
    }
    let taps = bandpass_taps(lo, hi, FIR_ORDER);
    let mut rng = seed::rng(seed);
    let raw: Vec<Complex64> = (0..length + FIR_ORDER)
        .map(|_| complex_gaussian(&mut rng, 1.0))
        .collect();
    // Steady-state part of the convolution only.
    let mut out: Vec<Complex64> = (0..length)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(m, &h)| raw[n + FIR_ORDER - m] * h)
                .sum()
        })
        .collect();
    rescale_to(&mut out, power);
    Ok(IqBuffer::new(out, sample_rate))
}

/// Subcarriers per scheduling block of the OFDM interferer.
pub const RESOURCE_BLOCK: usize = 12;

/// One unscaled interferer frame. Like a loaded LTE carrier, pilots and PSS
/// are always transmitted while data is scheduled per block of
/// [`RESOURCE_BLOCK`] subcarriers, each allocated with probability 1/2 (at
/// least one block). Frame power therefore follows the load.
fn ofdm_interferer_frame<R: Rng>(
    params: &OfdmParams,
    order: ConstellationOrder,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let bits = random_bits(rng, data_capacity(params, order, 0)?);
    let mut frame = build_subframe(&bits, order, params, 0)?;
    let n_blocks = params.active_subcarriers.div_ceil(RESOURCE_BLOCK);
    let mut allocated: Vec<bool> = (0..n_blocks).map(|_| rng.random::<bool>()).collect();
    if !allocated.contains(&true) {
        allocated[rng.random_range(0..n_blocks)] = true;
    }
    let idle: Vec<(usize, usize)> = frame
        .roles
        .positions(ReRole::Data)
        .filter(|&(_, k)| !allocated[k / RESOURCE_BLOCK])
        .collect();
    for (l, k) in idle {
        frame.grid.set(l, k, Complex64::new(0.0, 0.0));
    }
    Ok(ofdm_modulate(&frame.grid, params)?.samples)
}

fn check_power(power: f64) -> Result<()> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::Validation(format!(
            "interferer power must be non-negative, got {power}"
        )));
    }
    Ok(())
}

/// Random-payload CP-OFDM sub-frame with partial block allocation,
/// circularly shifted by `frame_offset` samples and rescaled to mean power
/// `power`.
pub fn gen_ofdm_interferer(
    params: &OfdmParams,
    order: ConstellationOrder,
    power: f64,
    frame_offset: usize,
    seed: u64,
) -> Result<IqBuffer> {
    params.validate()?;
    let len = params.frame_len();
    if frame_offset >= len {
        return Err(Error::Validation(format!(
            "frame offset {frame_offset} outside the {len}-sample frame"
        )));
    }
    check_power(power)?;
    let mut samples = ofdm_interferer_frame(params, order, &mut seed::rng(seed))?;
    samples.rotate_right(frame_offset);
    rescale_to(&mut samples, power);
    Ok(IqBuffer::new(samples, params.sample_rate))
}

/// `n_frames` consecutive interferer frames, each with its own payload and
/// block allocation, rescaled to mean power `power` over the whole stream.
pub fn gen_ofdm_interferer_stream(
    params: &OfdmParams,
    order: ConstellationOrder,
    power: f64,
    n_frames: usize,
    seed: u64,
) -> Result<IqBuffer> {
    params.validate()?;
    check_power(power)?;
    let mut rng = seed::rng(seed);
    let mut samples = Vec::with_capacity(n_frames * params.frame_len());
    for _ in 0..n_frames {
        samples.extend(ofdm_interferer_frame(params, order, &mut rng)?);
    }
    rescale_to(&mut samples, power);
    Ok(IqBuffer::new(samples, params.sample_rate))
}

/// The `len` samples of `stream` starting at `offset`.
pub fn window(stream: &IqBuffer, offset: usize, len: usize) -> Result<IqBuffer> {
    if offset + len > stream.len() {
        return Err(Error::InputShape(format!(
            "window [{offset}, {}) outside a {}-sample stream",
            offset + len,
            stream.len()
        )));
    }
    Ok(IqBuffer::new(
        stream.samples[offset..offset + len].to_vec(),
        stream.sample_rate,
    ))
}

/// Draws a frame offset uniformly over one frame.
pub fn random_frame_offset(params: &OfdmParams, seed: u64) -> usize {
    seed::rng(seed).random_range(0..params.frame_len())
}

/// Common amplitude scale `s` with `P_S / (s²·ΣP_I + σ²) = 10^(target/10)`.
pub fn calibrate_powers(
    signal_power: f64,
    interferer_powers: &[f64],
    noise_power: f64,
    target_sinr_db: f64,
) -> Result<f64> {
    if !(signal_power > 0.0 && signal_power.is_finite()) {
        return Err(Error::Validation("signal has no power".into()));
    }
    let total: f64 = interferer_powers.iter().sum();
    if total <= 0.0 && noise_power <= 0.0 {
        return Err(Error::Validation(
            "no interferer power and no noise to calibrate".into(),
        ));
    }
    let budget = signal_power / 10f64.powf(target_sinr_db / 10.0) - noise_power;
    if budget < 0.0 {
        return Err(Error::Infeasible(format!(
            "noise alone limits SINR below {target_sinr_db} dB (needs interference power {budget:.3e})"
        )));
    }
    if total <= 0.0 {
        if budget == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Infeasible(
            "interferers carry no power to scale".into(),
        ));
    }
    Ok((budget / total).sqrt())
}

/// One scale factor per interferer (all equal) reaching `target_sinr_db`
/// when applied to the interferer buffers.
pub fn calibrate_to_sinr(
    signal: &IqBuffer,
    interferers: &[IqBuffer],
    noise_power: f64,
    target_sinr_db: f64,
) -> Result<Vec<f64>> {
    let p: Vec<f64> = interferers.iter().map(IqBuffer::mean_power).collect();
    let s = calibrate_powers(signal.mean_power(), &p, noise_power, target_sinr_db)?;
    Ok(vec![s; interferers.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{channel_power, Band};

    #[test]
    fn zero_power_gwn_is_silent() {
        let b = gen_gwn_interferer(100, 0.0, (0.0, 0.2), 1, 1.0).unwrap();
        assert!(b.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gwn_power_is_exact() {
        for band in [(0.0, 0.5), (0.1, 0.3), (0.0, 0.05)] {
            let b = gen_gwn_interferer(3000, 0.1, band, 2, 1.0).unwrap();
            assert!((b.mean_power() - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn gwn_rejects_empty_band() {
        assert!(matches!(
            gen_gwn_interferer(10, 1.0, (0.2, 0.2), 0, 1.0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            gen_gwn_interferer(10, 1.0, (0.3, 0.6), 0, 1.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn full_band_gwn_is_complex_gaussian() {
        let b = gen_gwn_interferer(100_000, 1.0, (0.0, 0.5), 3, 1.0).unwrap();
        let m2 = b.mean_power();
        let m4 = b.samples.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / b.len() as f64;
        let kurt = m4 / (m2 * m2);
        assert!((kurt - 2.0).abs() < 0.1, "{kurt}");
    }

    #[test]
    fn half_band_gwn_stays_in_band() {
        let b = gen_gwn_interferer(100_000, 1.0, (0.0, 0.25), 4, 1.0).unwrap();
        let inside = channel_power(&b, Band::new(0.0, 0.25).unwrap()).unwrap();
        assert!(inside >= 0.99, "{inside}");
    }

    #[test]
    fn ofdm_interferer_is_seeded_and_scaled() {
        let p = OfdmParams::desk();
        let a = gen_ofdm_interferer(&p, ConstellationOrder::Qam16, 0.3, 0, 5).unwrap();
        let b = gen_ofdm_interferer(&p, ConstellationOrder::Qam16, 0.3, 0, 5).unwrap();
        assert_eq!(a, b);
        for off in [0, 17, p.frame_len() - 1] {
            let c = gen_ofdm_interferer(&p, ConstellationOrder::Qam16, 0.3, off, 6).unwrap();
            assert!((c.mean_power() - 0.3).abs() < 1e-12);
        }
        assert!(gen_ofdm_interferer(&p, ConstellationOrder::Qam16, 0.3, p.frame_len(), 6).is_err());
    }

    #[test]
    fn ofdm_offset_is_a_circular_shift() {
        let p = OfdmParams::desk();
        let a = gen_ofdm_interferer(&p, ConstellationOrder::Qpsk, 1.0, 0, 8).unwrap();
        let b = gen_ofdm_interferer(&p, ConstellationOrder::Qpsk, 1.0, 100, 8).unwrap();
        assert!((b.samples[100] - a.samples[0]).norm() < 1e-12);
    }

    #[test]
    fn stream_frames_follow_their_load() {
        let p = OfdmParams::desk();
        let s = gen_ofdm_interferer_stream(&p, ConstellationOrder::Qam16, 2.0, 4, 9).unwrap();
        assert_eq!(s.len(), 4 * p.frame_len());
        assert!((s.mean_power() - 2.0).abs() < 1e-12);
        let frame_power: Vec<f64> = (0..4)
            .map(|i| {
                window(&s, i * p.frame_len(), p.frame_len())
                    .unwrap()
                    .mean_power()
            })
            .collect();
        let spread = frame_power.iter().copied().fold(0.0, f64::max)
            / frame_power.iter().copied().fold(f64::MAX, f64::min);
        assert!(spread > 1.05, "{frame_power:?}");
        assert!(window(&s, 3 * p.frame_len() + 1, p.frame_len()).is_err());
    }

    #[test]
    fn calibration_arithmetic() {
        let s = calibrate_powers(1.0, &[1.0], 0.0, 10.0).unwrap();
        assert!((s * s - 0.1).abs() < 1e-15);
        assert!(matches!(
            calibrate_powers(1.0, &[1.0], 0.2, 10.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            calibrate_powers(0.0, &[1.0], 0.0, 10.0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            calibrate_powers(1.0, &[], 0.0, 10.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn calibration_reaches_target_on_buffers() {
        let sig = IqBuffer::new(vec![Complex64::new(1.0, 0.0); 1000], 1.0);
        let i1 = gen_gwn_interferer(1000, 0.5, (0.0, 0.5), 1, 1.0).unwrap();
        let i2 = gen_gwn_interferer(1000, 0.5, (0.0, 0.5), 2, 1.0).unwrap();
        let scales = calibrate_to_sinr(&sig, &[i1.clone(), i2.clone()], 0.01, 3.0).unwrap();
        assert_eq!(scales.len(), 2);
        assert!((scales[0] * scales[0] * 1.0 + 0.01 - 1.0 / 10f64.powf(0.3)).abs() < 1e-12);
        let p = i1.scaled(scales[0]).mean_power() + i2.scaled(scales[1]).mean_power();
        let achieved = sig.mean_power() / (p + 0.01);
        assert!((achieved / 10f64.powf(0.3) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scale_decreases_with_target() {
        let a = calibrate_powers(1.0, &[1.0], 0.001, 5.0).unwrap();
        let b = calibrate_powers(1.0, &[1.0], 0.001, 6.0).unwrap();
        assert!(b < a);
    }
}
