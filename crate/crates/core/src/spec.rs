//! TOML run configurations for sweeps, oracle comparisons and load families.
//!
//! Every spec rejects unknown keys, and `validate` reports all offending keys
//! together. `--override key.path=value` edits are applied to the raw TOML
//! table before deserialization, so they go through the same checks.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::admm::DetectorConfig;
use crate::baseline::DEFAULT_ORACLE_GUARD;
use crate::channel::{sample_profile, DelayProfile, SampledProfile, REFERENCE_SAMPLE_PERIOD};
use crate::error::{ConfigError, Result};
use crate::sim::{check_snr_grid, DetectorKind};
use crate::system::SystemConfig;

fn default_profile() -> String {
    "etu".into()
}

fn default_sample_period() -> f64 {
    REFERENCE_SAMPLE_PERIOD
}

fn default_guard() -> u64 {
    DEFAULT_ORACLE_GUARD
}

fn default_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::Admm, DetectorKind::Mmse]
}

/// Power-delay profile selection: a builtin name or a CSV file of
/// `(delay_seconds, power_db)` rows, sampled at `sample_period` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_sample_period")]
    pub sample_period: f64,
    /// Overrides `profile` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            profile: default_profile(),
            sample_period: default_sample_period(),
            csv: None,
        }
    }
}

impl ChannelSpec {
    pub fn delay_profile(&self) -> Result<DelayProfile> {
        match &self.csv {
            Some(path) => DelayProfile::from_csv_path(path),
            None => DelayProfile::builtin(&self.profile, self.sample_period),
        }
    }

    pub fn sampled(&self) -> Result<SampledProfile> {
        sample_profile(&self.delay_profile()?, self.sample_period)
    }

    /// Checks the profile resolves and fits inside the cyclic prefix.
    pub fn validate_for(&self, system: Option<&SystemConfig>) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        let key = if self.csv.is_some() { "csv" } else { "profile" };
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            err.push("sample_period", "sample period must be positive");
            return err.into_result();
        }
        match self.sampled() {
            Err(e) => err.push(key, e.to_string()),
            Ok(p) => {
                if let Some(cfg) = system {
                    if p.taps() > cfg.n_cp + 1 {
                        err.push(
                            key,
                            format!(
                                "sampled profile spans {} taps but n_cp = {} covers at most {}",
                                p.taps(),
                                cfg.n_cp,
                                cfg.n_cp + 1
                            ),
                        );
                    }
                }
            }
        }
        err.into_result()
    }
}

/// Per-SNR stopping rule: stop at `min_errors` bit errors or `max_blocks` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    #[serde(default = "StoppingRule::default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "StoppingRule::default_max_blocks")]
    pub max_blocks: u64,
}

impl StoppingRule {
    fn default_min_errors() -> u64 {
        100
    }

    fn default_max_blocks() -> u64 {
        10_000
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        if self.min_errors == 0 {
            err.push("min_errors", "must be at least 1");
        }
        if self.max_blocks == 0 {
            err.push("max_blocks", "must be at least 1");
        }
        err.into_result()
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_errors: Self::default_min_errors(),
            max_blocks: Self::default_max_blocks(),
        }
    }
}

/// BER-versus-SNR sweep for one link configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    pub snr_db: Vec<f64>,
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub stop: StoppingRule,
    #[serde(default = "default_guard")]
    pub oracle_guard: u64,
}

/// ADMM against exhaustive search on seeded tiny instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub seed: u64,
    pub instances: u64,
    pub snr_db: f64,
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default = "default_guard")]
    pub oracle_guard: u64,
}

/// One configuration in a load family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyMember {
    pub label: String,
    pub system: SystemConfig,
    /// Replaces the family-wide detector settings for this member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
}

/// Required SNR at a target BER across configurations of varying load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub seed: u64,
    pub target_ber: f64,
    pub snr_db: Vec<f64>,
    #[serde(default = "FamilySpec::default_kind")]
    pub detector_kind: DetectorKind,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub stop: StoppingRule,
    #[serde(default = "default_guard")]
    pub oracle_guard: u64,
    #[serde(rename = "member")]
    pub members: Vec<FamilyMember>,
}

/// Spec types that can be checked after deserialization.
pub trait Validate {
    fn validate(&self) -> Result<(), ConfigError>;
}

impl Validate for SweepSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        let system_ok = self.system.validate().map_err(|e| err.merge(e.nested("system"))).is_ok();
        if let Err(e) = self.detector.validate() {
            err.merge(e.nested("detector"));
        }
        if let Err(e) = self.stop.validate() {
            err.merge(e.nested("stop"));
        }
        if let Err(e) = self.channel.validate_for(system_ok.then_some(&self.system)) {
            err.merge(e.nested("channel"));
        }
        check_snr_grid(&self.snr_db, "snr_db", &mut err);
        if self.detectors.is_empty() {
            err.push("detectors", "at least one detector is required");
        }
        let mut seen = HashSet::new();
        if self.detectors.iter().any(|d| !seen.insert(*d)) {
            err.push("detectors", "detectors must not repeat");
        }
        err.into_result()
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        Validate::validate(self)
    }
}

impl Validate for OracleSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        let system_ok = self.system.validate().map_err(|e| err.merge(e.nested("system"))).is_ok();
        if let Err(e) = self.detector.validate() {
            err.merge(e.nested("detector"));
        }
        if let Err(e) = self.channel.validate_for(system_ok.then_some(&self.system)) {
            err.merge(e.nested("channel"));
        }
        if self.instances == 0 {
            err.push("instances", "at least one instance is required");
        }
        if self.snr_db.is_nan() {
            err.push("snr_db", "SNR must be a number");
        }
        err.into_result()
    }
}

impl OracleSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        Validate::validate(self)
    }
}

impl Validate for FamilySpec {
    fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        if !(self.target_ber > 0.0 && self.target_ber < 1.0) {
            err.push("target_ber", "target BER must lie in (0, 1)");
        }
        check_snr_grid(&self.snr_db, "snr_db", &mut err);
        if let Err(e) = self.detector.validate() {
            err.merge(e.nested("detector"));
        }
        if let Err(e) = self.stop.validate() {
            err.merge(e.nested("stop"));
        }
        if let Err(e) = self.channel.validate_for(None) {
            err.merge(e.nested("channel"));
        }
        if self.members.is_empty() {
            err.push("member", "at least one member is required");
        }
        let mut labels = HashSet::new();
        for (i, member) in self.members.iter().enumerate() {
            let prefix = format!("member[{i}]");
            if !labels.insert(member.label.as_str()) {
                err.push(format!("{prefix}.label"), format!("duplicate label {:?}", member.label));
            }
            let system_ok = match member.system.validate() {
                Ok(()) => true,
                Err(e) => {
                    err.merge(e.nested(&format!("{prefix}.system")));
                    false
                }
            };
            if system_ok && self.channel.sampled().is_ok() {
                if let Err(e) = self.channel.validate_for(Some(&member.system)) {
                    err.merge(e.nested(&format!("{prefix}.channel")));
                }
            }
            if let Some(det) = &member.detector {
                if let Err(e) = det.validate() {
                    err.merge(e.nested(&format!("{prefix}.detector")));
                }
            }
        }
        err.into_result()
    }
}

impl FamilySpec {
    fn default_kind() -> DetectorKind {
        DetectorKind::Admm
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Validate::validate(self)
    }

    /// Sweep for one member; its seed depends only on the family seed and label.
    pub fn member_sweep(&self, member: &FamilyMember) -> SweepSpec {
        let label_hash = member
            .label
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        SweepSpec {
            seed: self.seed ^ label_hash,
            detectors: vec![self.detector_kind],
            snr_db: self.snr_db.clone(),
            system: member.system.clone(),
            channel: self.channel.clone(),
            detector: member.detector.clone().unwrap_or_else(|| self.detector.clone()),
            stop: self.stop,
            oracle_guard: self.oracle_guard,
        }
    }
}

/// Sets `key.path = value` in a TOML table. `value` is parsed as a TOML
/// value when possible and taken as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(ConfigError::single(assignment, "override must have the form key=value"));
    };
    let (key, raw) = (key.trim(), raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::single(key, "override key must be a dotted path"));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigError::single(key, format!("{part} is not a table"))),
        };
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses TOML text, applies overrides, deserializes and validates.
pub fn parse_spec<T: DeserializeOwned + Validate>(text: &str, overrides: &[String]) -> Result<T, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::single("config", e.message()))?;
    let mut err = ConfigError::new();
    for o in overrides {
        if let Err(e) = apply_override(&mut table, o) {
            err.merge(e);
        }
    }
    err.into_result()?;
    let spec: T = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::single("config", e.message()))?;
    spec.validate()?;
    Ok(spec)
}

/// Reads a spec file; relative CSV paths stay relative to the working directory.
pub fn load_spec<T: DeserializeOwned + Validate>(path: &Path, overrides: &[String]) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single("config", format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
        seed = 7
        snr_db = [0.0, 5.0]
        [system]
        n = 16
        n_cp = 11
        n_users = 1
        n_tx = 4
        n_active = 2
        n_rx = 4
        modulation = 4
    "#;

    #[test]
    fn parses_with_defaults() {
        let spec: SweepSpec = parse_spec(SWEEP, &[]).unwrap();
        assert_eq!(spec.detectors, default_detectors());
        assert_eq!(spec.detector, DetectorConfig::default());
        assert_eq!(spec.stop.min_errors, 100);
        assert_eq!(spec.channel.profile, "etu");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let spec: SweepSpec = parse_spec(
            SWEEP,
            &["detector.q=50".into(), "system.n_rx=8".into(), "channel.profile=flat".into()],
        )
        .unwrap();
        assert_eq!(spec.detector.max_iterations, 50);
        assert_eq!(spec.system.n_rx, 8);
        assert_eq!(spec.channel.profile, "flat");
    }

    #[test]
    fn reports_every_offending_key() {
        let err = parse_spec::<SweepSpec>(
            SWEEP,
            &[
                "system.n_active=5".into(),
                "system.modulation=8".into(),
                "stop.min_errors=0".into(),
                "snr_db=[5.0, 1.0]".into(),
            ],
        )
        .unwrap_err();
        let keys: Vec<&str> = err.keys().collect();
        for k in ["system.n_active", "system.modulation", "stop.min_errors", "snr_db"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_short_prefix() {
        assert!(parse_spec::<SweepSpec>(SWEEP, &["system.bogus=1".into()]).is_err());
        let err = parse_spec::<SweepSpec>(SWEEP, &["system.n_cp=3".into()]).unwrap_err();
        assert!(err.keys().any(|k| k == "channel.profile"), "{err}");
    }

    #[test]
    fn duplicate_family_labels() {
        let text = r#"
            target_ber = 0.01
            snr_db = [0.0]
            [[member]]
            label = "a"
            system = { n = 8, n_cp = 4, n_users = 1, n_tx = 1, n_active = 1, n_rx = 2, modulation = 4 }
            [[member]]
            label = "a"
            system = { n = 8, n_cp = 4, n_users = 2, n_tx = 1, n_active = 1, n_rx = 2, modulation = 4 }
        "#;
        let err = parse_spec::<FamilySpec>(text, &["channel.profile=flat".into()]).unwrap_err();
        assert_eq!(err.keys().collect::<Vec<_>>(), ["member[1].label"]);
    }
}
