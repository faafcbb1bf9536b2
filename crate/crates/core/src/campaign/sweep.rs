use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SweepConfig, SweepVariable};
use super::dbm_to_watts;
use crate::error::{Error, Result};
use crate::interference::InterferenceSource;
use crate::seed;
use crate::stbc::{run_stbc_subframe, LinkFrameResult, StbcLinkConfig};
use crate::waveform::ConstellationOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The SINR target could not be reached.
    SkippedInfeasible,
    /// Interference plus noise vanished.
    SkippedUndefinedSinr,
    /// The combining gain was zero.
    SkippedDegenerateChannel,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::SkippedInfeasible => "skipped_infeasible",
            Self::SkippedUndefinedSinr => "skipped_undefined_sinr",
            Self::SkippedDegenerateChannel => "skipped_degenerate_channel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Self::Ok,
            Self::SkippedInfeasible,
            Self::SkippedUndefinedSinr,
            Self::SkippedDegenerateChannel,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }

    pub fn is_ok(self) -> bool {
        self == Self::Ok
    }

    fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::Infeasible(_) => Some(Self::SkippedInfeasible),
            Error::UndefinedSinr => Some(Self::SkippedUndefinedSinr),
            Error::DegenerateChannel => Some(Self::SkippedDegenerateChannel),
            _ => None,
        }
    }
}

/// One decoded sub-frame. Powers are linear (W); metrics of skipped rows are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub repeat_index: u32,
    pub subframe_index: u32,
    pub order: u32,
    pub status: RowStatus,
    pub channel_power_signal: f64,
    pub channel_power_interference: f64,
    pub channel_power_noise: f64,
    pub sinr_db: f64,
    pub evm_rms_pct: f64,
    pub normalized_evm_rms_pct: f64,
    pub mag_err_rms_pct: f64,
    pub phase_err_rms_rad: f64,
}

impl SweepRow {
    fn ok(sweep_value: f64, repeat: u32, order: ConstellationOrder, r: &LinkFrameResult) -> Self {
        Self {
            sweep_value,
            repeat_index: repeat,
            subframe_index: r.subframe_index as u32,
            order: order.order(),
            status: RowStatus::Ok,
            channel_power_signal: r.channel_power_signal,
            channel_power_interference: r.channel_power_interference,
            channel_power_noise: r.channel_power_noise,
            sinr_db: r.sinr.db,
            evm_rms_pct: r.evm.evm_rms,
            normalized_evm_rms_pct: r.evm.normalized_evm_rms,
            mag_err_rms_pct: r.evm.mag_err_rms,
            phase_err_rms_rad: r.evm.phase_err_rms,
        }
    }

    fn skipped(
        sweep_value: f64,
        repeat: u32,
        subframe: u32,
        order: ConstellationOrder,
        status: RowStatus,
    ) -> Self {
        Self {
            sweep_value,
            repeat_index: repeat,
            subframe_index: subframe,
            order: order.order(),
            status,
            channel_power_signal: f64::NAN,
            channel_power_interference: f64::NAN,
            channel_power_noise: f64::NAN,
            sinr_db: f64::NAN,
            evm_rms_pct: f64::NAN,
            normalized_evm_rms_pct: f64::NAN,
            mag_err_rms_pct: f64::NAN,
            phase_err_rms_rad: f64::NAN,
        }
    }

    /// Bitwise equality, so NaN metrics of skipped rows compare equal.
    pub fn same_bits(&self, other: &Self) -> bool {
        let a = self.numeric();
        let b = other.numeric();
        self.status == other.status && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// Every numeric field in column order.
    pub fn numeric(&self) -> [f64; 12] {
        [
            self.sweep_value,
            self.repeat_index as f64,
            self.subframe_index as f64,
            self.order as f64,
            self.channel_power_signal,
            self.channel_power_interference,
            self.channel_power_noise,
            self.sinr_db,
            self.evm_rms_pct,
            self.normalized_evm_rms_pct,
            self.mag_err_rms_pct,
            self.phase_err_rms_rad,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub n_ok: usize,
    pub n_skipped: usize,
}

impl SweepOutcome {
    pub fn all_skipped(&self) -> bool {
        self.n_ok == 0 && self.n_skipped > 0
    }
}

/// Seed of one (point, repeat) work unit.
pub fn unit_seed(master_seed: u64, point: usize, repeat: usize) -> u64 {
    seed::derive(master_seed, &[point as u64, repeat as u64])
}

/// Link configuration of one work unit and modulation order.
pub fn link_config(
    cfg: &SweepConfig,
    value: f64,
    unit_seed: u64,
    order: ConstellationOrder,
) -> StbcLinkConfig {
    let (signal_dbm, target) = match cfg.sweep_variable {
        SweepVariable::SignalPowerDbm => (value, None),
        SweepVariable::TargetSinrDb => (cfg.signal_power_dbm, Some(value)),
    };
    let source_power = dbm_to_watts(cfg.per_source_dbm());
    let interference = (0..cfg.n_interferers)
        .map(|i| InterferenceSource {
            kind: cfg.interferer_kind,
            power: source_power,
            seed: seed::derive(unit_seed, &[seed::STREAM_INTERFERER, i as u64]),
            frame_offset: 0,
        })
        .collect();
    StbcLinkConfig {
        params: cfg.ofdm.clone(),
        order,
        subframes: cfg.subframes,
        channel: cfg.channel.kind(unit_seed),
        interference,
        interferer_order: cfg.interferer_order,
        random_offsets: cfg.random_offsets,
        noise_variance: cfg.noise_power_dbm.map_or(0.0, dbm_to_watts),
        estimation: cfg.estimation_mode,
        n_pilot_pairs: cfg.n_pilot_pairs,
        signal_power: dbm_to_watts(signal_dbm),
        target_sinr_db: target,
        reference: cfg.reference,
        seed: unit_seed,
    }
}

fn run_unit(cfg: &SweepConfig, point: usize, value: f64, repeat: usize) -> Result<Vec<SweepRow>> {
    let useed = unit_seed(cfg.master_seed, point, repeat);
    let mut rows = Vec::with_capacity(cfg.modulation_orders.len() * cfg.subframes);
    for &order in &cfg.modulation_orders {
        let link = link_config(cfg, value, useed, order);
        for sf in 0..cfg.subframes {
            let row = match run_stbc_subframe(&link, sf as u64) {
                Ok(r) => SweepRow::ok(value, repeat as u32, order, &r),
                Err(e) => match RowStatus::from_error(&e) {
                    Some(status) => {
                        SweepRow::skipped(value, repeat as u32, sf as u32, order, status)
                    }
                    None => return Err(e),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs every (point × repeat) work unit; rows come out ordered by point,
/// repeat, order, sub-frame regardless of `parallel`.
pub fn run_sweep(cfg: &SweepConfig, parallel: bool) -> Result<SweepOutcome> {
    cfg.validate()?;
    let units: Vec<(usize, f64, usize)> = cfg
        .points()
        .into_iter()
        .enumerate()
        .flat_map(|(i, v)| (0..cfg.repeats).map(move |r| (i, v, r)))
        .collect();
    let chunks: Vec<Vec<SweepRow>> = if parallel {
        units
            .par_iter()
            .map(|&(i, v, r)| run_unit(cfg, i, v, r))
            .collect::<Result<_>>()?
    } else {
        units
            .iter()
            .map(|&(i, v, r)| run_unit(cfg, i, v, r))
            .collect::<Result<_>>()?
    };
    let rows: Vec<SweepRow> = chunks.into_iter().flatten().collect();
    let n_ok = rows.iter().filter(|r| r.status.is_ok()).count();
    Ok(SweepOutcome {
        n_skipped: rows.len() - n_ok,
        n_ok,
        rows,
    })
}
