//! Experiment configuration files.
//!
//! A configuration is a TOML document. Top-level keys hold the settings
//! shared by every command; each command reads its own table.
//!
//! ```toml
//! seed = 7
//! shots = 2000
//! x = 0.978
//! chip = "chip.toml"      # or an inline [chip] table
//!
//! [defects]
//! dR6 = 0.01
//! dtheta1 = 0.05
//!
//! [qpt]
//! starts = 8
//! ```
//!
//! Chip files use the keys `R1`…`R13`, `phi1`…`phi8`, `theta1`, `theta2`;
//! missing keys keep their design values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use photon_twin_core::optics::ChipParameters;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Characterize,
    Calibrate,
    Hom,
    Qpt,
    Gates,
    Vqe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Characterize => "characterize",
            Experiment::Calibrate => "calibrate",
            Experiment::Hom => "hom",
            Experiment::Qpt => "qpt",
            Experiment::Gates => "gates",
            Experiment::Vqe => "vqe",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChipSource {
    File(PathBuf),
    Inline(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<f64>,
    /// Single-photon overlap.
    #[serde(default = "one")]
    pub x: f64,
    /// Offset added to every set phase (rad).
    #[serde(default)]
    pub phase_bias: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chip: Option<ChipSource>,
    /// `dR1`…`dR13`, `dtheta1`, `dtheta2`, `ratio_sigma`.
    #[serde(default)]
    pub defects: BTreeMap<String, f64>,
    #[serde(default)]
    pub characterize: CharacterizeSettings,
    #[serde(default)]
    pub calibrate: CalibrateSettings,
    #[serde(default)]
    pub hom: HomSettings,
    #[serde(default)]
    pub qpt: QptSettings,
    #[serde(default)]
    pub gates: GateSettings,
    #[serde(default)]
    pub vqe: VqeSettings,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizeSettings {
    /// Per-port coupling efficiencies are drawn from `[1 − loss_spread, 1]`.
    pub loss_spread: f64,
    /// Relative Gaussian noise on every measured power.
    pub power_noise: f64,
}

impl Default for CharacterizeSettings {
    fn default() -> Self {
        Self {
            loss_spread: 0.0,
            power_noise: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSettings {
    /// Cross-talk model file; the bundled table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosstalk: Option<PathBuf>,
    pub max_current: f64,
    pub step: f64,
    /// Relative noise on swept powers.
    pub noise: f64,
    pub dac_bits: u32,
    pub full_scale: f64,
}

impl Default for CalibrateSettings {
    fn default() -> Self {
        Self {
            crosstalk: None,
            max_current: 20.0,
            step: 0.15,
            noise: 0.01,
            dac_bits: 12,
            full_scale: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomDevice {
    Chip,
    Splitter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomSettings {
    pub device: HomDevice,
    /// Overlap grid size between 0 and `x`.
    pub points: usize,
}

impl Default for HomSettings {
    fn default() -> Self {
        Self {
            device: HomDevice::Chip,
            points: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QptSettings {
    pub starts: usize,
    /// Efficiency correction for C1…C4.
    pub efficiencies: [f64; 4],
    /// Replace `efficiencies` by routing-run estimates (simulation only).
    pub estimate_efficiencies: bool,
    /// Simulated relative detector efficiencies.
    pub detector_efficiency: [f64; 4],
}

impl Default for QptSettings {
    fn default() -> Self {
        Self {
            starts: 4,
            efficiencies: [1.0; 4],
            estimate_efficiencies: false,
            detector_efficiency: [1.0; 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSettings {
    pub samples: usize,
    pub dac_bits: u32,
    pub full_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosstalk: Option<PathBuf>,
}

impl Default for GateSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            dac_bits: 12,
            full_scale: 20.0,
            crosstalk: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VqeModeSetting {
    Exact,
    Shots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerSetting {
    NelderMead,
    Spsa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSettings {
    /// Hamiltonian table; the bundled 0.4 Å row when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<PathBuf>,
    pub mode: VqeModeSetting,
    pub optimizer: OptimizerSetting,
    pub restarts: usize,
    pub max_evaluations: usize,
    pub iterations: usize,
}

impl Default for VqeSettings {
    fn default() -> Self {
        Self {
            hamiltonian: None,
            mode: VqeModeSetting::Exact,
            optimizer: OptimizerSetting::NelderMead,
            restarts: 3,
            max_evaluations: 600,
            iterations: 200,
        }
    }
}

impl ExperimentConfig {
    /// Parses a configuration; relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(ChipSource::File(p)) = &mut cfg.chip {
            rebase(p);
        }
        for p in [
            &mut cfg.calibrate.crosstalk,
            &mut cfg.gates.crosstalk,
            &mut cfg.vqe.hamiltonian,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.x) {
            return Err(CliError::Invalid(format!("x = {} outside [0, 1]", self.x)));
        }
        if let Some(s) = self.shots {
            if !(s > 0.0) || !s.is_finite() {
                return Err(CliError::Invalid(format!("shots = {s} must be positive")));
            }
        }
        if !self.phase_bias.is_finite() {
            return Err(CliError::Invalid("phase_bias must be finite".into()));
        }
        for (key, &v) in &self.defects {
            if !v.is_finite() {
                return Err(CliError::Invalid(format!("defect {key} must be finite")));
            }
            let known = key == "ratio_sigma"
                || index_suffix(key, "dR").is_some_and(|j| (1..=13).contains(&j))
                || index_suffix(key, "dtheta").is_some_and(|j| (1..=2).contains(&j));
            if !known {
                return Err(CliError::Invalid(format!("unknown defect key {key}")));
            }
        }
        if self.defects.get("ratio_sigma").is_some_and(|&s| s < 0.0) {
            return Err(CliError::Invalid("ratio_sigma must be non-negative".into()));
        }
        if self.qpt.starts == 0 {
            return Err(CliError::Invalid("qpt.starts must be at least 1".into()));
        }
        Ok(())
    }

    /// Chip file or inline values, then deterministic defects, then the
    /// optional random ratio spread drawn from `rng`.
    pub fn resolve_chip<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChipParameters> {
        let mut chip = match &self.chip {
            None => ChipParameters::ideal(),
            Some(ChipSource::Inline(values)) => chip_from_map(values, Path::new("[chip]"))?,
            Some(ChipSource::File(path)) => read_chip_file(path)?,
        };
        for (key, &v) in &self.defects {
            if let Some(j) = index_suffix(key, "dR") {
                chip.splitting_ratios[j - 1] += v;
            } else if let Some(j) = index_suffix(key, "dtheta") {
                chip.static_phases[j - 1] += v;
            }
        }
        if let Some(&sigma) = self.defects.get("ratio_sigma") {
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).expect("sigma validated");
                for r in &mut chip.splitting_ratios {
                    *r = (*r + normal.sample(rng)).clamp(0.0, 1.0);
                }
            }
        }
        chip.validate()?;
        Ok(chip)
    }

    /// SHA-256 over the effective configuration and the resolved chip file.
    pub fn hash(&self) -> Result<String> {
        let mut text = self.to_toml();
        if let Some(ChipSource::File(path)) = &self.chip {
            text.push_str(&render_chip(&read_chip_file(path)?));
        }
        Ok(sha256_hex(text.as_bytes()))
    }
}

fn index_suffix(key: &str, prefix: &str) -> Option<usize> {
    key.strip_prefix(prefix)?.parse().ok()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").expect("write to string");
    }
    s
}

pub fn read_chip_file(path: &Path) -> Result<ChipParameters> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let values: BTreeMap<String, f64> = toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    chip_from_map(&values, path)
}

fn chip_from_map(values: &BTreeMap<String, f64>, origin: &Path) -> Result<ChipParameters> {
    let mut chip = ChipParameters::ideal();
    for (key, &v) in values {
        let slot = if let Some(j) = index_suffix(key, "R").filter(|j| (1..=13).contains(j)) {
            &mut chip.splitting_ratios[j - 1]
        } else if let Some(j) = index_suffix(key, "phi").filter(|j| (1..=8).contains(j)) {
            &mut chip.tunable_phases[j - 1]
        } else if let Some(j) = index_suffix(key, "theta").filter(|j| (1..=2).contains(j)) {
            &mut chip.static_phases[j - 1]
        } else {
            return Err(CliError::Config {
                path: origin.to_path_buf(),
                message: format!("unknown chip key {key}"),
            });
        };
        *slot = v;
    }
    chip.validate()?;
    Ok(chip)
}

/// Chip parameters in the key-value file format.
pub fn render_chip(chip: &ChipParameters) -> String {
    let mut s = String::new();
    for (j, r) in chip.splitting_ratios.iter().enumerate() {
        writeln!(s, "R{} = {r:?}", j + 1).unwrap();
    }
    for (j, p) in chip.tunable_phases.iter().enumerate() {
        writeln!(s, "phi{} = {p:?}", j + 1).unwrap();
    }
    for (j, t) in chip.static_phases.iter().enumerate() {
        writeln!(s, "theta{} = {t:?}", j + 1).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use photon_twin_core::seeded_rng;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.x, 1.0);
        assert_eq!(cfg.qpt.starts, 4);
        let chip = cfg.resolve_chip(&mut seeded_rng(0)).unwrap();
        assert_eq!(chip, ChipParameters::ideal());
    }

    #[test]
    fn inline_chip_and_defects() {
        let cfg = ExperimentConfig::from_toml(
            "[chip]\nR1 = 0.4\nphi3 = 1.5\n[defects]\ndR1 = 0.05\ndtheta2 = 0.1\n",
        )
        .unwrap();
        cfg.validate().unwrap();
        let chip = cfg.resolve_chip(&mut seeded_rng(0)).unwrap();
        assert!((chip.ratio(1) - 0.45).abs() < 1e-15);
        assert_eq!(chip.phase(3), 1.5);
        assert_eq!(chip.static_phases[1], 0.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("colour = 1").is_err());
        let cfg = ExperimentConfig::from_toml("[defects]\ndR14 = 0.1").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("[defects]\ndR1 = 0.8").unwrap();
        assert!(cfg.resolve_chip(&mut seeded_rng(0)).is_err());
        let cfg = ExperimentConfig::from_toml("x = 1.5").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("[chip]\nR0 = 0.5").unwrap();
        assert!(cfg.resolve_chip(&mut seeded_rng(0)).is_err());
    }

    #[test]
    fn chip_rendering_round_trips() {
        let mut chip = ChipParameters::ideal();
        chip.tunable_phases[4] = 0.123456789;
        chip.static_phases[0] = -0.3;
        let values: BTreeMap<String, f64> = toml::from_str(&render_chip(&chip)).unwrap();
        assert_eq!(chip_from_map(&values, Path::new("x")).unwrap(), chip);
    }

    #[test]
    fn hash_tracks_settings() {
        let a = ExperimentConfig::from_toml("seed = 1").unwrap();
        let b = ExperimentConfig::from_toml("seed = 2").unwrap();
        assert_eq!(a.hash().unwrap(), a.clone().hash().unwrap());
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
