//! Scenario files: JSON with one section per pipeline block.
//!
//! Keys starting with `_` are annotations and are stripped before parsing;
//! every other unknown key is an error.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vsatlink_core::channel::{ImpairmentConfig, LinkGains, SalehParams};
use vsatlink_core::linkbudget::BudgetLeg;
use vsatlink_core::modem::ModemConfig;
use vsatlink_core::receiver::{AgcConfig, DcBlocker, DEFAULT_DC_FORGETTING};

use crate::CliError;

/// Smallest run allowed to report a BER.
pub const MIN_TOTAL_BITS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full dB chain with thermal noise.
    Physical,
    /// Power renormalised after the TWTA; noise set by `target_es_n0_db`.
    Normalized,
}

/// Which receiver stages run on the post-correction branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensationFlags {
    pub dc: bool,
    pub agc: bool,
    pub phase_freq: bool,
}

impl Default for CompensationFlags {
    fn default() -> Self {
        Self {
            dc: true,
            agc: true,
            phase_freq: true,
        }
    }
}

impl CompensationFlags {
    pub fn any(&self) -> bool {
        self.dc || self.agc || self.phase_freq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSettings {
    pub dc_forgetting_factor: f64,
    /// `None` targets the transmitted waveform power.
    pub agc_reference_power: Option<f64>,
    pub agc_step_size: f64,
    pub agc_max_gain_db: f64,
}

impl Default for ReceiverSettings {
    fn default() -> Self {
        let agc = AgcConfig::default();
        Self {
            dc_forgetting_factor: DEFAULT_DC_FORGETTING,
            agc_reference_power: None,
            agc_step_size: agc.step_size,
            agc_max_gain_db: agc.max_gain_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub constellation_points: usize,
    pub psd_segment_len: usize,
    pub psd_overlap: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            constellation_points: 2000,
            psd_segment_len: 1024,
            psd_overlap: 0.5,
        }
    }
}

fn default_saleh() -> Option<SalehParams> {
    Some(SalehParams::default())
}

fn default_total_bits() -> usize {
    100_000
}

fn default_seed() -> u64 {
    1
}

/// A complete simulation scenario. Absent sections take their defaults;
/// `saleh: null` removes the TWTA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub modem: ModemConfig,
    #[serde(default = "default_saleh")]
    pub saleh: Option<SalehParams>,
    #[serde(default)]
    pub gains: LinkGains,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    #[serde(default)]
    pub compensation: CompensationFlags,
    #[serde(default)]
    pub receiver: ReceiverSettings,
    #[serde(default = "physical")]
    pub mode: Mode,
    #[serde(default)]
    pub target_es_n0_db: Option<f64>,
    #[serde(default = "default_total_bits")]
    pub total_bits: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub budget_legs: Vec<BudgetLeg>,
}

fn physical() -> Mode {
    Mode::Physical
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            modem: ModemConfig::default(),
            saleh: default_saleh(),
            gains: LinkGains::default(),
            impairments: ImpairmentConfig::default(),
            compensation: CompensationFlags::default(),
            receiver: ReceiverSettings::default(),
            mode: Mode::Physical,
            target_es_n0_db: None,
            total_bits: default_total_bits(),
            seed: default_seed(),
            analysis: AnalysisSettings::default(),
            budget_legs: Vec::new(),
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{key}: {}", reason.into()))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Parses an already-loaded document, annotations included.
    pub fn from_value(mut value: Value) -> Result<Self, CliError> {
        strip_annotations(&mut value);
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let core = |section: &str, r: vsatlink_core::Result<()>| {
            r.map_err(|e| invalid(section, e.to_string()))
        };
        core("modem", self.modem.validate())?;
        if let Some(p) = &self.saleh {
            core("saleh", p.validate())?;
        }
        core("gains", self.gains.validate())?;
        core("impairments", self.impairments.validate())?;
        if self.impairments.seed != 0 {
            return Err(invalid(
                "impairments.seed",
                "noise seeds derive from the top-level `seed`; leave this unset",
            ));
        }
        core(
            "receiver",
            DcBlocker::new(self.receiver.dc_forgetting_factor).map(drop),
        )?;
        core("receiver", self.agc_config().validate())?;
        match (self.mode, self.target_es_n0_db) {
            (Mode::Normalized, None) => {
                return Err(invalid("target_es_n0_db", "required in normalized mode"))
            }
            (_, Some(v)) if !v.is_finite() => {
                return Err(invalid("target_es_n0_db", "must be finite"))
            }
            _ => {}
        }
        if self.total_bits < MIN_TOTAL_BITS {
            return Err(invalid(
                "total_bits",
                format!(
                    "{} is below the minimum of {MIN_TOTAL_BITS}",
                    self.total_bits
                ),
            ));
        }
        let k = self.modem.bits_per_symbol();
        if !self.total_bits.is_multiple_of(k) {
            return Err(invalid(
                "total_bits",
                format!(
                    "{} is not a multiple of {k} bits per symbol",
                    self.total_bits
                ),
            ));
        }
        let a = &self.analysis;
        if a.constellation_points == 0 {
            return Err(invalid("analysis.constellation_points", "must be positive"));
        }
        if a.psd_segment_len < 2 {
            return Err(invalid("analysis.psd_segment_len", "must be at least 2"));
        }
        if !(0.0..1.0).contains(&a.psd_overlap) {
            return Err(invalid("analysis.psd_overlap", "must be in [0, 1)"));
        }
        for (i, leg) in self.budget_legs.iter().enumerate() {
            core(&format!("budget_legs[{i}]"), leg.validate())?;
        }
        Ok(())
    }

    /// Loop settings with the reference resolved.
    pub fn agc_config(&self) -> AgcConfig {
        AgcConfig {
            reference_power: self
                .receiver
                .agc_reference_power
                .unwrap_or_else(|| self.modem.mean_waveform_power()),
            step_size: self.receiver.agc_step_size,
            max_gain_db: self.receiver.agc_max_gain_db,
        }
    }
}

/// Removes every object key that starts with `_`, recursively.
pub fn strip_annotations(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.retain(|k, _| !k.starts_with('_'));
            map.values_mut().for_each(strip_annotations);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_annotations),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_document_takes_defaults() {
        let cfg = ScenarioConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn annotations_are_ignored_anywhere() {
        let cfg = ScenarioConfig::from_value(json!({
            "_comment": "top",
            "modem": {"_note": "x", "rolloff": 0.25},
            "budget_legs": []
        }))
        .unwrap();
        assert_eq!(cfg.modem.rolloff, 0.25);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::from_value(json!({"gains": {"tx_dish_gain": 50.0}}))
            .unwrap_err()
            .to_string();
        assert!(err.contains("gains"), "{err}");
        assert!(err.contains("tx_dish_gain"), "{err}");
    }

    #[test]
    fn saleh_null_disables_twta() {
        let cfg = ScenarioConfig::from_value(json!({"saleh": null})).unwrap();
        assert!(cfg.saleh.is_none());
    }

    #[test]
    fn invariants_enforced() {
        for (doc, key) in [
            (json!({"total_bits": 9_996}), "total_bits"),
            (json!({"total_bits": 10_001}), "total_bits"),
            (json!({"mode": "normalized"}), "target_es_n0_db"),
            (json!({"impairments": {"seed": 4}}), "impairments.seed"),
            (
                json!({"receiver": {"dc_forgetting_factor": 1.0}}),
                "receiver",
            ),
            (json!({"analysis": {"psd_overlap": 1.0}}), "psd_overlap"),
            (json!({"modem": {"rolloff": 0.0}}), "modem"),
            (json!({"mode": "loud"}), "mode"),
        ] {
            let err = ScenarioConfig::from_value(doc.clone()).unwrap_err();
            assert!(matches!(err, CliError::Config(_)));
            assert!(err.to_string().contains(key), "{doc}: {err}");
        }
    }

    #[test]
    fn agc_reference_defaults_to_waveform_power() {
        let cfg = ScenarioConfig::default();
        assert!((cfg.agc_config().reference_power - 10.0 / 8.0).abs() < 1e-12);
        let cfg =
            ScenarioConfig::from_value(json!({"receiver": {"agc_reference_power": 3.0}})).unwrap();
        assert_eq!(cfg.agc_config().reference_power, 3.0);
    }

    #[test]
    fn serialised_config_round_trips() {
        let cfg = ScenarioConfig::from_value(json!({
            "mode": "normalized", "target_es_n0_db": 12.0, "saleh": null
        }))
        .unwrap();
        let back = ScenarioConfig::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
