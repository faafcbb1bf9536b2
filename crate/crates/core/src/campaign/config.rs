use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::interference::InterfererKind;
use crate::metrics::ReferenceConvention;
use crate::stbc::EstimationMode;
use crate::uncertainty::{Combination, InstrumentTerms};
use crate::waveform::{ConstellationOrder, OfdmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Expected in-band signal power at the receive plane; interferers keep
    /// their absolute power.
    SignalPowerDbm,
    /// Interference is rescaled per sub-frame to this in-band SINR.
    TargetSinrDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererPolicy {
    /// `interferer_power_dbm` is the total, split evenly over the sources.
    #[default]
    ConstantTotal,
    /// `interferer_power_dbm` applies to every source.
    ConstantPerSource,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// i.i.d. Rayleigh coefficients, redrawn per sub-frame.
    #[default]
    RayleighIid,
    /// Fixed coefficients given as `[re, im]`.
    Fixed { h11: [f64; 2], h12: [f64; 2] },
}

impl ChannelModel {
    pub(crate) fn kind(&self, seed: u64) -> ChannelKind {
        match self {
            Self::RayleighIid => ChannelKind::RayleighIid { seed },
            Self::Fixed { h11, h12 } => ChannelKind::Fixed(vec![vec![
                Complex64::new(h11[0], h11[1]),
                Complex64::new(h12[0], h12[1]),
            ]]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UncertaintyConfig {
    pub combination: Combination,
    pub terms: InstrumentTerms,
}

fn one() -> usize {
    1
}

fn default_orders() -> Vec<ConstellationOrder> {
    vec![ConstellationOrder::Qpsk]
}

fn default_interferer_power() -> f64 {
    -30.0
}

fn qam16() -> ConstellationOrder {
    ConstellationOrder::Qam16
}

fn yes() -> bool {
    true
}

/// A sweep campaign. Powers are in dBm at the simulated receive plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep_variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default = "one")]
    pub subframes: usize,
    #[serde(default = "default_orders")]
    pub modulation_orders: Vec<ConstellationOrder>,
    #[serde(default)]
    pub interferer_kind: InterfererKind,
    #[serde(default)]
    pub interferer_policy: InterfererPolicy,
    #[serde(default = "one")]
    pub n_interferers: usize,
    #[serde(default = "default_interferer_power")]
    pub interferer_power_dbm: f64,
    #[serde(default = "qam16")]
    pub interferer_order: ConstellationOrder,
    /// Draw a fresh frame offset for OFDM interferers in every sub-frame.
    #[serde(default = "yes")]
    pub random_offsets: bool,
    /// Signal level used when sweeping the target SINR.
    #[serde(default)]
    pub signal_power_dbm: f64,
    /// Receiver noise over the full sample-rate bandwidth; absent means none.
    #[serde(default)]
    pub noise_power_dbm: Option<f64>,
    #[serde(default)]
    pub estimation_mode: EstimationMode,
    #[serde(default = "one")]
    pub n_pilot_pairs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub reference: ReferenceConvention,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub ofdm: OfdmParams,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
}

impl SweepConfig {
    /// A single-point sweep with defaults everywhere else.
    pub fn single(sweep_variable: SweepVariable, value: f64) -> Self {
        Self {
            sweep_variable,
            start: value,
            stop: value,
            step: 1.0,
            repeats: 1,
            subframes: 1,
            modulation_orders: default_orders(),
            interferer_kind: InterfererKind::default(),
            interferer_policy: InterfererPolicy::default(),
            n_interferers: 1,
            interferer_power_dbm: default_interferer_power(),
            interferer_order: qam16(),
            random_offsets: true,
            signal_power_dbm: 0.0,
            noise_power_dbm: None,
            estimation_mode: EstimationMode::default(),
            n_pilot_pairs: 1,
            master_seed: 0,
            reference: ReferenceConvention::default(),
            channel: ChannelModel::default(),
            ofdm: OfdmParams::default(),
            uncertainty: UncertaintyConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("start", self.start),
            ("stop", self.stop),
            ("step", self.step),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.step == 0.0 {
            return bad("step must be non-zero".into());
        }
        if self.stop != self.start && (self.stop - self.start).signum() != self.step.signum() {
            return bad(format!(
                "step {} does not lead from {} to {}",
                self.step, self.start, self.stop
            ));
        }
        if self.repeats == 0 || self.subframes == 0 {
            return bad("repeats and subframes must be at least 1".into());
        }
        if self.modulation_orders.is_empty() {
            return bad("modulation_orders is empty".into());
        }
        if self.sweep_variable == SweepVariable::TargetSinrDb
            && self.n_interferers == 0
            && self.noise_power_dbm.is_none()
        {
            return bad("a target SINR sweep needs interferers or receiver noise".into());
        }
        if self.estimation_mode == EstimationMode::RealtimeEstimate && self.n_pilot_pairs == 0 {
            return bad("realtime estimation needs at least one pilot pair".into());
        }
        self.ofdm
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !self.ofdm.symbols_per_subframe.is_multiple_of(2) {
            return bad("symbols_per_subframe must be even for STBC pairing".into());
        }
        Ok(())
    }

    /// Sweep values `start + i·step` up to and including `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    /// Power of each interferer source in dBm.
    pub fn per_source_dbm(&self) -> f64 {
        match self.interferer_policy {
            InterfererPolicy::ConstantTotal => {
                self.interferer_power_dbm - 10.0 * (self.n_interferers.max(1) as f64).log10()
            }
            InterfererPolicy::ConstantPerSource => self.interferer_power_dbm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "sweep_variable = \"target_sinr_db\"\nstart = 30\nstop = 0\nstep = -5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = SweepConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.points(), vec![30.0, 25.0, 20.0, 15.0, 10.0, 5.0, 0.0]);
        assert_eq!(c.ofdm, OfdmParams::desk());
        assert_eq!(c.channel, ChannelModel::RayleighIid);
        assert_eq!(c.repeats, 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in [
            "colour = 1\n",
            "[ofdm]\nfft = 64\n",
            "[channel]\nmodel = \"fixed\"\nh11 = [1, 0]\nh12 = [0, 0]\nh13 = [0, 0]\n",
        ] {
            let e = SweepConfig::from_toml(&format!("{MINIMAL}{extra}")).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{extra}: {e}");
        }
    }

    #[test]
    fn nested_sections_parse() {
        let text = format!(
            "{MINIMAL}modulation_orders = [4, 256]\nestimation_mode = \"realtime_estimate\"\n\
             [channel]\nmodel = \"fixed\"\nh11 = [1, 0]\nh12 = [0, 0.5]\n\
             [uncertainty]\ncombination = \"rss\"\n[uncertainty.terms]\nu_abs = 0.5\n"
        );
        let c = SweepConfig::from_toml(&text).unwrap();
        assert_eq!(
            c.modulation_orders,
            vec![ConstellationOrder::Qpsk, ConstellationOrder::Qam256]
        );
        assert_eq!(
            c.channel,
            ChannelModel::Fixed {
                h11: [1.0, 0.0],
                h12: [0.0, 0.5]
            }
        );
        assert_eq!(c.uncertainty.combination, Combination::Rss);
        assert_eq!(c.uncertainty.terms.u_abs, 0.5);
        assert_eq!(c.uncertainty.terms.u_rbw, 0.03);
    }

    #[test]
    fn toml_round_trip() {
        let mut c = SweepConfig::single(SweepVariable::SignalPowerDbm, -10.0);
        c.noise_power_dbm = Some(-90.0);
        assert_eq!(SweepConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn inconsistent_step_is_rejected() {
        let text = "sweep_variable = \"signal_power_dbm\"\nstart = 0\nstop = -60\nstep = 1\n";
        assert!(matches!(
            SweepConfig::from_toml(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bad_order_is_rejected() {
        assert!(SweepConfig::from_toml(&format!("{MINIMAL}modulation_orders = [8]\n")).is_err());
    }

    #[test]
    fn point_grid_includes_stop() {
        let mut c = SweepConfig::single(SweepVariable::SignalPowerDbm, 0.0);
        c.stop = -60.0;
        c.step = -1.0;
        let p = c.points();
        assert_eq!(p.len(), 61);
        assert_eq!(p[60], -60.0);
    }

    #[test]
    fn interferer_policy_split() {
        let mut c = SweepConfig::single(SweepVariable::SignalPowerDbm, 0.0);
        c.n_interferers = 2;
        c.interferer_power_dbm = -20.0;
        assert!((c.per_source_dbm() + 20.0 + 10.0 * 2f64.log10()).abs() < 1e-12);
        c.interferer_policy = InterfererPolicy::ConstantPerSource;
        assert_eq!(c.per_source_dbm(), -20.0);
    }
}
