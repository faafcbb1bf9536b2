//! End-to-end Alamouti link over CP-OFDM.
//!
//! Pairs sit on one subcarrier in OFDM symbols `(2p, 2p+1)`; pair `q` is
//! subcarrier `q % active` of symbol pair `q / active`. The first
//! `n_pilot_pairs` pairs of every sub-frame are known pilots, the rest carry
//! random payload. The two transmit waveforms go through a flat 1×2 channel;
//! interferers and receiver noise are added at the receive plane.
//!
//! SINR is referenced to the occupied band of the signal: signal,
//! interference and noise channel powers are integrated over the active
//! subcarriers only.
//!
//! Each interferer emits a two-frame stream whose level is set on the whole
//! stream; the receiver sees one frame of it starting at the frame offset.
//! Calibration to a target SINR uses the emitted (nominal) in-band power, and
//! each sub-frame reports the SINR measured in its own window.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{alamouti_combine, alamouti_encode, estimate_channel_pilots, ChannelEstimate, Pair};
use crate::channel::{
    apply_channel, awgn, gen_channel, ChannelKind, ChannelMatrix, NoiseSpec, PrecoderWeights,
};
use crate::error::{Error, Result};
use crate::interference::{
    calibrate_powers, gen_gwn_interferer, gen_ofdm_interferer_stream, random_frame_offset, window,
    InterferenceSource, InterfererKind,
};
use crate::metrics::{
    channel_power, evm, sinr_from_symbols, Band, EvmReport, ReferenceConvention, SinrPlane,
    SinrSample,
};
use crate::seed;
use crate::waveform::{
    map_symbols, ofdm_demodulate, ofdm_modulate, pilot_sequence, random_bits, ConstellationOrder,
    IqBuffer, OfdmParams, ResourceGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMode {
    /// Decode with the true channel.
    #[default]
    KnownH,
    /// Decode with the channel estimated from this sub-frame's pilot pairs.
    RealtimeEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StbcLinkConfig {
    pub params: OfdmParams,
    pub order: ConstellationOrder,
    pub subframes: usize,
    /// 1×2 fixed channel, or Rayleigh redrawn per sub-frame.
    pub channel: ChannelKind,
    pub interference: Vec<InterferenceSource>,
    /// Constellation of OFDM interferers.
    pub interferer_order: ConstellationOrder,
    /// Draw a fresh OFDM frame offset per sub-frame instead of `frame_offset`.
    pub random_offsets: bool,
    pub noise_variance: f64,
    pub estimation: EstimationMode,
    pub n_pilot_pairs: usize,
    /// Expected in-band receive power of the signal (linear).
    pub signal_power: f64,
    /// When set, interference is rescaled per sub-frame so that its nominal
    /// in-band power gives this SINR; otherwise interferer powers are
    /// absolute.
    pub target_sinr_db: Option<f64>,
    pub reference: ReferenceConvention,
    pub seed: u64,
}

impl StbcLinkConfig {
    pub fn new(order: ConstellationOrder, seed: u64) -> Self {
        Self {
            params: OfdmParams::desk(),
            order,
            subframes: 1,
            channel: ChannelKind::RayleighIid { seed },
            interference: Vec::new(),
            interferer_order: ConstellationOrder::Qam16,
            random_offsets: true,
            noise_variance: 0.0,
            estimation: EstimationMode::KnownH,
            n_pilot_pairs: 1,
            signal_power: 1.0,
            target_sinr_db: None,
            reference: ReferenceConvention::Peak,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.params.symbols_per_subframe.is_multiple_of(2) {
            return Err(Error::Validation(
                "STBC pairing needs an even number of symbols per sub-frame".into(),
            ));
        }
        let pairs = self.pairs_per_subframe();
        if self.n_pilot_pairs >= pairs {
            return Err(Error::Validation(format!(
                "{} pilot pairs leave no data in a {pairs}-pair sub-frame",
                self.n_pilot_pairs
            )));
        }
        if self.estimation == EstimationMode::RealtimeEstimate && self.n_pilot_pairs == 0 {
            return Err(Error::Validation(
                "realtime estimation needs at least one pilot pair".into(),
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::Validation(
                "noise variance must be non-negative".into(),
            ));
        }
        if !(self.signal_power.is_finite() && self.signal_power > 0.0) {
            return Err(Error::Validation("signal power must be positive".into()));
        }
        Ok(())
    }

    pub fn pairs_per_subframe(&self) -> usize {
        self.params.symbols_per_subframe / 2 * self.params.active_subcarriers
    }

    pub fn measurement_band(&self) -> Band {
        let (lo, hi) = self.params.occupied_band();
        Band { lo, hi }
    }
}

/// Metrics of one decoded sub-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFrameResult {
    pub subframe_index: u64,
    pub evm: EvmReport,
    /// In-band channel-power SINR measured at the receive plane.
    pub sinr: SinrSample,
    /// SINR the interference level was set for, from nominal powers.
    pub sinr_set: Option<SinrSample>,
    /// Data-symbol SINR from separately demodulated components.
    pub sinr_symbol: Option<SinrSample>,
    pub channel_power_signal: f64,
    pub channel_power_interference: f64,
    pub channel_power_noise: f64,
    pub estimate: ChannelEstimate,
    pub channel: ChannelMatrix,
}

fn pair_position(q: usize, active: usize) -> (usize, usize) {
    (2 * (q / active), q % active)
}

fn stacked(grid: &ResourceGrid, q: usize, active: usize) -> Pair {
    let (l, k) = pair_position(q, active);
    (grid.get(l, k), grid.get(l + 1, k).conj())
}

/// Stream frames emitted per interferer.
const STREAM_FRAMES: usize = 2;

/// The received one-frame window of an interferer and the nominal in-band
/// power of its emitted stream.
fn interferer_waveform(
    cfg: &StbcLinkConfig,
    src: &InterferenceSource,
    subframe: u64,
    band: Band,
) -> Result<(IqBuffer, f64)> {
    let p = &cfg.params;
    let seed = seed::derive(src.seed, &[seed::STREAM_INTERFERER, subframe]);
    let stream = match src.kind {
        // A bin wider than the occupied band keeps the filter flat over it.
        InterfererKind::GwnBandpass => gen_gwn_interferer(
            STREAM_FRAMES * p.frame_len(),
            src.power,
            (0.0, (band.hi + 1.0 / p.fft_size as f64).min(0.5)),
            seed,
            p.sample_rate,
        )?,
        InterfererKind::OfdmLteLike => {
            gen_ofdm_interferer_stream(p, cfg.interferer_order, src.power, STREAM_FRAMES, seed)?
        }
    };
    let offset = if cfg.random_offsets {
        random_frame_offset(p, seed ^ 0x0ff5)
    } else {
        src.frame_offset
    };
    if offset >= p.frame_len() {
        return Err(Error::Validation(format!(
            "frame offset {offset} outside the {}-sample frame",
            p.frame_len()
        )));
    }
    let nominal = channel_power(&stream, band)?;
    Ok((window(&stream, offset, p.frame_len())?, nominal))
}

/// Runs sub-frame `index` of the link.
pub fn run_stbc_subframe(cfg: &StbcLinkConfig, index: u64) -> Result<LinkFrameResult> {
    cfg.validate()?;
    let p = &cfg.params;
    let active = p.active_subcarriers;
    let n_pairs = cfg.pairs_per_subframe();
    let band = cfg.measurement_band();

    let channel = match &cfg.channel {
        ChannelKind::RayleighIid { seed } => ChannelKind::RayleighIid {
            seed: seed::derive(*seed, &[seed::STREAM_CHANNEL, index]),
        },
        fixed => fixed.clone(),
    };
    let mut h = gen_channel(&channel, 1, 2)?;
    h.subframe_index = index;

    // Symbols: pilot pairs first, then payload.
    let pilots = pilot_sequence(index, 2 * cfg.n_pilot_pairs);
    let mut rng = seed::rng(seed::derive(cfg.seed, &[seed::STREAM_PAYLOAD, index]));
    let n_data = n_pairs - cfg.n_pilot_pairs;
    let data = map_symbols(
        &random_bits(&mut rng, 2 * n_data * cfg.order.bits_per_symbol()),
        cfg.order,
    )?;
    let symbols: Vec<Complex64> = pilots.into_iter().chain(data).collect();

    let amplitude = (cfg.signal_power * p.fft_size as f64 / (2.0 * active as f64)).sqrt();
    let mut g1 = ResourceGrid::zeros(p.symbols_per_subframe, active);
    let mut g2 = g1.clone();
    for q in 0..n_pairs {
        let (l, k) = pair_position(q, active);
        let code = alamouti_encode(symbols[2 * q] * amplitude, symbols[2 * q + 1] * amplitude);
        for t in 0..2 {
            g1.set(l + t, k, code.antenna1[t]);
            g2.set(l + t, k, code.antenna2[t]);
        }
    }
    let tx = [ofdm_modulate(&g1, p)?, ofdm_modulate(&g2, p)?];
    let clean =
        apply_channel(&tx, &h, &PrecoderWeights::identity(2), &NoiseSpec::silent())?.remove(0);

    let (raw, nominal): (Vec<IqBuffer>, Vec<f64>) = cfg
        .interference
        .iter()
        .map(|src| interferer_waveform(cfg, src, index, band))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let noise = awgn(
        p.frame_len(),
        cfg.noise_variance,
        seed::derive(cfg.seed, &[seed::STREAM_NOISE, index]),
        p.sample_rate,
    )?;

    let ps = channel_power(&clean, band)?;
    let pi: Vec<f64> = raw
        .iter()
        .map(|b| channel_power(b, band))
        .collect::<Result<_>>()?;
    let pn = channel_power(&noise, band)?;
    let scale = match cfg.target_sinr_db {
        Some(target) => calibrate_powers(ps, &nominal, pn, target)?,
        None => 1.0,
    };
    let sinr_set = cfg.target_sinr_db.map(|_| {
        SinrSample::from_linear(
            ps / (scale * scale * nominal.iter().sum::<f64>() + pn),
            SinrPlane::Waveform,
        )
    });
    let mut interference = IqBuffer::zeros(p.frame_len(), p.sample_rate);
    for b in &raw {
        interference = interference.add(&b.scaled(scale))?;
    }
    // Per-source powers add (cross terms between sources are not counted).
    let pi_total = scale * scale * pi.iter().sum::<f64>();
    let sinr = SinrSample::from_linear(ps / (pi_total + pn), SinrPlane::Waveform);

    // Demodulate the parts separately; the receiver only ever sees their sum.
    let clean_grid = ofdm_demodulate(&clean, p)?;
    let signal_grid = ofdm_demodulate(&clean.add(&noise)?, p)?;
    let interf_grid = ofdm_demodulate(&interference, p)?;

    let estimate = match cfg.estimation {
        EstimationMode::KnownH => ChannelEstimate::known(h.get(0, 0), h.get(0, 1)),
        EstimationMode::RealtimeEstimate => {
            let rx: Vec<Pair> = (0..cfg.n_pilot_pairs)
                .map(|q| stacked(&signal_grid, q, active))
                .collect();
            let known: Vec<Pair> = (0..cfg.n_pilot_pairs)
                .map(|q| (symbols[2 * q] * amplitude, symbols[2 * q + 1] * amplitude))
                .collect();
            if raw.is_empty() {
                estimate_channel_pilots(&rx, &known, None)?
            } else {
                let c: Vec<Pair> = (0..cfg.n_pilot_pairs)
                    .map(|q| stacked(&interf_grid, q, active))
                    .collect();
                estimate_channel_pilots(&rx, &known, Some(&c))?
            }
        }
    };

    let mut s_act = Vec::with_capacity(2 * n_data);
    let mut s_ref = Vec::with_capacity(2 * n_data);
    let mut s_clean = Vec::with_capacity(2 * n_data);
    let mut s_intf = Vec::with_capacity(2 * n_data);
    for q in cfg.n_pilot_pairs..n_pairs {
        let (sy1, sy2) = stacked(&signal_grid, q, active);
        let (iy1, iy2) = stacked(&interf_grid, q, active);
        let (r1, r2, gain) = alamouti_combine((sy1 + iy1, sy2 + iy2), &estimate)?;
        s_act.push(r1 / (gain * amplitude));
        s_act.push(r2 / (gain * amplitude));
        s_ref.push(symbols[2 * q]);
        s_ref.push(symbols[2 * q + 1]);
        let (l, k) = pair_position(q, active);
        s_clean.extend([clean_grid.get(l, k), clean_grid.get(l + 1, k)]);
        s_intf.extend([interf_grid.get(l, k), interf_grid.get(l + 1, k)]);
    }
    let report = evm(&s_act, &s_ref, cfg.reference.magnitude(cfg.order))?;
    let sinr_symbol = sinr_from_symbols(&s_clean, &[&s_intf], cfg.noise_variance).ok();

    Ok(LinkFrameResult {
        subframe_index: index,
        evm: report,
        sinr,
        sinr_set,
        sinr_symbol,
        channel_power_signal: ps,
        channel_power_interference: pi_total,
        channel_power_noise: pn,
        estimate,
        channel: h,
    })
}

/// Runs every sub-frame of the link in order.
pub fn run_stbc_link(cfg: &StbcLinkConfig) -> Result<Vec<LinkFrameResult>> {
    (0..cfg.subframes as u64)
        .map(|i| run_stbc_subframe(cfg, i))
        .collect()
}
