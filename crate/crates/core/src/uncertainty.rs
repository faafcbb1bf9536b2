//! Channel-power measurement uncertainty budget.
//!
//! `U = 10·log10(1 + 2σ/μ) + U_freq_resp + U_input_att + U_abs + U_rbw + U_input_mixer`,
//! all in dB. The repeatability term uses the sample standard deviation of
//! repeated channel-power readings at coverage factor k = 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{SinrPlane, SinrSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstrumentTerms {
    pub u_fre_resp: f64,
    pub u_input_att: f64,
    pub u_abs: f64,
    pub u_rbw: f64,
    pub u_input_mixer: f64,
}

impl Default for InstrumentTerms {
    /// Spectrum-analyser contributions of the reference setup, dB.
    fn default() -> Self {
        Self {
            u_fre_resp: 0.38,
            u_input_att: 0.2,
            u_abs: 0.24,
            u_rbw: 0.03,
            u_input_mixer: 0.07,
        }
    }
}

impl InstrumentTerms {
    pub fn zero() -> Self {
        Self {
            u_fre_resp: 0.0,
            u_input_att: 0.0,
            u_abs: 0.0,
            u_rbw: 0.0,
            u_input_mixer: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.u_fre_resp,
            self.u_input_att,
            self.u_abs,
            self.u_rbw,
            self.u_input_mixer,
        ]
    }

    pub fn names() -> [&'static str; 5] {
        [
            "u_fre_resp",
            "u_input_att",
            "u_abs",
            "u_rbw",
            "u_input_mixer",
        ]
    }

    fn validate(&self) -> Result<()> {
        if self
            .as_array()
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(Error::Validation(
                "instrument terms must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// Plain sum of dB contributions.
    #[default]
    Sum,
    /// Root-sum-square of dB contributions.
    Rss,
}

impl Combination {
    fn combine(self, terms: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            Self::Sum => compensated_sum(terms),
            Self::Rss => compensated_sum(terms.into_iter().map(|t| t * t)).sqrt(),
        }
    }
}

/// Neumaier summation, so that decimal terms add up to their decimal total.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0_f64, 0.0_f64);
    for t in terms {
        let s = sum + t;
        c += if sum.abs() >= t.abs() {
            (sum - s) + t
        } else {
            (t - s) + sum
        };
        sum = s;
    }
    sum + c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// `2·std`.
    pub expanded_k2: f64,
}

pub fn repeat_stats(samples: &[f64]) -> Result<RepeatStats> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} repeats, need at least 2",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Validation(
            "power readings must be finite and non-negative".into(),
        ));
    }
    Ok(stats_unchecked(samples))
}

/// Mean and n−1 standard deviation of any finite sample; a single sample has
/// zero spread.
pub(crate) fn stats_unchecked(samples: &[f64]) -> RepeatStats {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    RepeatStats {
        mean,
        std,
        n,
        expanded_k2: 2.0 * std,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBudget {
    pub repeatability_db: f64,
    pub terms: InstrumentTerms,
    pub combination: Combination,
    pub total_db: f64,
}

pub fn channel_power_uncertainty(
    stats: &RepeatStats,
    terms: &InstrumentTerms,
) -> Result<UncertaintyBudget> {
    channel_power_uncertainty_with(stats, terms, Combination::Sum)
}

pub fn channel_power_uncertainty_with(
    stats: &RepeatStats,
    terms: &InstrumentTerms,
    combination: Combination,
) -> Result<UncertaintyBudget> {
    if !(stats.mean > 0.0) {
        return Err(Error::Validation(format!(
            "mean channel power must be positive, got {}",
            stats.mean
        )));
    }
    terms.validate()?;
    let repeatability_db = 10.0 * (1.0 + 2.0 * stats.std / stats.mean).log10();
    let total_db = combination.combine(std::iter::once(repeatability_db).chain(terms.as_array()));
    Ok(UncertaintyBudget {
        repeatability_db,
        terms: *terms,
        combination,
        total_db,
    })
}

/// SINR from mean channel powers and its dB uncertainty.
pub fn traceable_sinr(
    signal: &RepeatStats,
    interference: &RepeatStats,
    noise_power: f64,
    signal_budget: &UncertaintyBudget,
    interference_budget: &UncertaintyBudget,
) -> Result<(SinrSample, f64)> {
    traceable_sinr_with(
        signal,
        interference,
        noise_power,
        signal_budget,
        interference_budget,
        Combination::Sum,
    )
}

pub fn traceable_sinr_with(
    signal: &RepeatStats,
    interference: &RepeatStats,
    noise_power: f64,
    signal_budget: &UncertaintyBudget,
    interference_budget: &UncertaintyBudget,
    combination: Combination,
) -> Result<(SinrSample, f64)> {
    if !(signal.mean > 0.0) {
        return Err(Error::Validation(
            "signal mean power must be positive".into(),
        ));
    }
    let sinr = SinrSample::from_powers(
        signal.mean,
        &[interference.mean],
        noise_power,
        SinrPlane::Waveform,
    )?;
    let u = combination.combine([signal_budget.total_db, interference_budget.total_db]);
    Ok((sinr, u))
}
