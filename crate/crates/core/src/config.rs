//! Scenario configuration: TOML files or named presets, with all powers in
//! dBm at this boundary and watts everywhere else.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::Topology;
use crate::error::{Result, WnvError};
use crate::metrics::{dbm_to_watts, noise_power};
use crate::precoders::{Scheme, SpConfig, ZfFallback, DEFAULT_ZF_CONDITION_CAP};
use crate::scenario::Scenario;

pub const DEFAULT_PRESET: &str = "urban-lte-default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Name of the preset this configuration started from.
    pub preset: String,
    pub run: RunSection,
    pub topology: TopologySection,
    pub power: PowerSection,
    pub radio: RadioSection,
    pub sp: SpSection,
    pub algorithm: AlgorithmSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub horizon: usize,
    pub out_dir: PathBuf,
    /// Also run the frequency-division baseline on the same seed.
    #[serde(default)]
    pub baseline: bool,
    /// Write every slot's channel, demand and precoder matrices as CSV.
    #[serde(default)]
    pub dump_matrices: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub cells: usize,
    pub cell_radius_m: f64,
    pub antennas: usize,
    pub sps: usize,
    pub users_per_sp: usize,
    pub shadowing_std_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub p_max_dbm: f64,
    /// Long-term average limit; `inf` disables it.
    pub p_bar_dbm: f64,
    /// Per-SP allocation `P_m^c`; defaults to an equal split of `p_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sp_power_dbm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpSection {
    /// One scheme per SP (applied in every cell), or a single entry for all.
    pub schemes: Vec<Scheme>,
    pub zf_condition_cap: f64,
    pub zf_fallback: ZfFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub theta: f64,
    /// `e_H`, standard deviation of the normalized CSI error.
    pub csi_error: f64,
}

/// Linear-unit values derived from a validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub p_max_w: f64,
    /// `None` when the long-term limit is disabled.
    pub p_bar_w: Option<f64>,
    pub sp_power_w: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub noise_power_w: f64,
}

impl ScenarioConfig {
    /// The urban micro-cell LTE setup: 7 cells of radius 500 m, 32 antennas,
    /// 4 SPs with 2 users each per cell, 60 kHz, 39/37 dBm.
    pub fn urban_lte_default() -> Self {
        ScenarioConfig {
            preset: DEFAULT_PRESET.into(),
            run: RunSection {
                seed: 1,
                horizon: 1000,
                out_dir: PathBuf::from("out"),
                baseline: false,
                dump_matrices: false,
            },
            topology: TopologySection {
                cells: 7,
                cell_radius_m: 500.0,
                antennas: 32,
                sps: 4,
                users_per_sp: 2,
                shadowing_std_db: 8.0,
            },
            power: PowerSection {
                p_max_dbm: 39.0,
                p_bar_dbm: 37.0,
                sp_power_dbm: None,
            },
            radio: RadioSection {
                bandwidth_hz: 60e3,
                noise_psd_dbm_hz: -174.0,
                noise_figure_db: 10.0,
            },
            sp: SpSection {
                schemes: vec![Scheme::Mrt],
                zf_condition_cap: DEFAULT_ZF_CONDITION_CAP,
                zf_fallback: ZfFallback::Abort,
            },
            algorithm: AlgorithmSection {
                theta: 1e-4,
                csi_error: 0.15,
            },
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        (name == DEFAULT_PRESET).then(Self::urban_lte_default)
    }

    /// Uses `scheme` for every SP.
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.sp.schemes = vec![scheme];
        self
    }

    pub fn validate(&self) -> Result<Derived> {
        let t = &self.topology;
        positive_int("topology.cells", t.cells)?;
        positive_int("topology.antennas", t.antennas)?;
        positive_int("topology.sps", t.sps)?;
        positive_int("topology.users_per_sp", t.users_per_sp)?;
        positive("topology.cell_radius_m", t.cell_radius_m)?;
        nonnegative("topology.shadowing_std_db", t.shadowing_std_db)?;
        positive_int("run.horizon", self.run.horizon)?;
        finite("power.p_max_dbm", self.power.p_max_dbm)?;
        if self.power.p_bar_dbm.is_nan() || self.power.p_bar_dbm == f64::NEG_INFINITY {
            return Err(WnvError::invalid("power.p_bar_dbm", "must be a number or inf"));
        }
        if self.power.p_bar_dbm > self.power.p_max_dbm && self.power.p_bar_dbm.is_finite() {
            return Err(WnvError::invalid(
                "power.p_bar_dbm",
                format!(
                    "{} dBm exceeds power.p_max_dbm = {} dBm",
                    self.power.p_bar_dbm, self.power.p_max_dbm
                ),
            ));
        }
        positive("radio.bandwidth_hz", self.radio.bandwidth_hz)?;
        finite("radio.noise_psd_dbm_hz", self.radio.noise_psd_dbm_hz)?;
        finite("radio.noise_figure_db", self.radio.noise_figure_db)?;
        positive("algorithm.theta", self.algorithm.theta)?;
        nonnegative("algorithm.csi_error", self.algorithm.csi_error)?;
        positive("sp.zf_condition_cap", self.sp.zf_condition_cap)?;

        let schemes = match self.sp.schemes.len() {
            1 => vec![self.sp.schemes[0]; t.sps],
            n if n == t.sps => self.sp.schemes.clone(),
            n => {
                return Err(WnvError::invalid(
                    "sp.schemes",
                    format!("has {n} entries; expected 1 or topology.sps = {}", t.sps),
                ))
            }
        };
        if schemes.contains(&Scheme::Zf) && t.users_per_sp > t.antennas {
            return Err(WnvError::invalid("sp.schemes", "ZF needs users_per_sp <= antennas"));
        }

        let p_max_w = dbm_to_watts(self.power.p_max_dbm);
        let sp_power_w = match &self.power.sp_power_dbm {
            None => vec![p_max_w / t.sps as f64; t.sps],
            Some(v) if v.len() == t.sps => {
                for &p in v {
                    finite("power.sp_power_dbm", p)?;
                }
                v.iter().map(|&p| dbm_to_watts(p)).collect()
            }
            Some(v) => {
                return Err(WnvError::invalid(
                    "power.sp_power_dbm",
                    format!("has {} entries; expected topology.sps = {}", v.len(), t.sps),
                ))
            }
        };
        let total: f64 = sp_power_w.iter().sum();
        if total > p_max_w * (1.0 + 1e-12) {
            return Err(WnvError::invalid(
                "power.sp_power_dbm",
                format!("allocations sum to {total:.6} W, above power.p_max_dbm ({p_max_w:.6} W)"),
            ));
        }
        Ok(Derived {
            p_max_w,
            p_bar_w: self.power.p_bar_dbm.is_finite().then(|| dbm_to_watts(self.power.p_bar_dbm)),
            sp_power_w,
            schemes,
            noise_power_w: noise_power(
                self.radio.noise_psd_dbm_hz,
                self.radio.bandwidth_hz,
                self.radio.noise_figure_db,
            ),
        })
    }

    /// Builds the scenario: places users and draws shadowing from the seed.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let d = self.validate()?;
        let t = &self.topology;
        let topology = Topology::hexagonal(t.cells, t.cell_radius_m, t.antennas, t.sps, t.users_per_sp)?;
        let sp = SpConfig {
            schemes: vec![d.schemes.clone(); t.cells],
            power: vec![d.sp_power_w.clone(); t.cells],
            zf_condition_cap: self.sp.zf_condition_cap,
            zf_fallback: self.sp.zf_fallback,
        };
        Scenario::generate(
            topology,
            t.shadowing_std_db,
            sp,
            vec![d.p_max_w; t.cells],
            vec![d.p_bar_w; t.cells],
            self.algorithm.csi_error,
            self.algorithm.theta,
            d.noise_power_w,
            self.run.seed,
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| WnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn positive_int(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(WnvError::invalid(field, "must be at least 1"));
    }
    Ok(())
}

fn finite(field: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(WnvError::invalid(field, "must be finite"));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(WnvError::invalid(field, "must be positive and finite"));
    }
    Ok(())
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(WnvError::invalid(field, "must be nonnegative and finite"));
    }
    Ok(())
}

/// Loads a preset by name or a TOML file by path. A run manifest is accepted
/// too; its embedded configuration is returned.
pub fn load_config(source: &str) -> Result<ScenarioConfig> {
    if let Some(cfg) = ScenarioConfig::preset(source) {
        return Ok(cfg);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(WnvError::Config(format!(
            "`{source}` is neither a known preset nor an existing file"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    if let Ok(manifest) = toml::from_str::<crate::experiment::Manifest>(&text) {
        manifest.config.validate()?;
        return Ok(manifest.config);
    }
    ScenarioConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_preset_constants() {
        let cfg = load_config(DEFAULT_PRESET).unwrap();
        let d = cfg.validate().unwrap();
        assert_eq!(cfg.topology.cells, 7);
        assert_eq!(cfg.topology.antennas, 32);
        assert_eq!((cfg.topology.sps, cfg.topology.users_per_sp), (4, 2));
        assert!((d.p_max_w - 7.943_282_347).abs() < 1e-8);
        assert!((d.p_bar_w.unwrap() - 5.011_872_336).abs() < 1e-8);
        assert!((d.sp_power_w[0] - d.p_max_w / 4.0).abs() < 1e-15);
        assert!((d.noise_power_w / 2.39e-15 - 1.0).abs() < 0.01);
        assert_eq!(cfg.algorithm.theta, 1e-4);
    }

    #[test]
    fn emit_parse_round_trip() {
        let mut cfg = ScenarioConfig::urban_lte_default().with_scheme(Scheme::Zf);
        cfg.power.p_bar_dbm = f64::INFINITY;
        cfg.power.sp_power_dbm = Some(vec![30.0, 31.0, 32.0, 33.0]);
        let text = cfg.to_toml();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
        assert_eq!(back.validate().unwrap().p_bar_w, None);
    }

    #[test]
    fn rejects_long_term_limit_above_peak() {
        let mut cfg = ScenarioConfig::urban_lte_default();
        cfg.power.p_bar_dbm = 40.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("power.p_bar_dbm"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = ScenarioConfig::urban_lte_default().to_toml().replace("theta", "thetta");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("thetta"), "{err}");

        let mut cfg = ScenarioConfig::urban_lte_default();
        cfg.algorithm.theta = 0.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("algorithm.theta"));
        let mut cfg = ScenarioConfig::urban_lte_default();
        cfg.sp.schemes = vec![Scheme::Mrt; 3];
        assert!(cfg.validate().unwrap_err().to_string().contains("sp.schemes"));
        let mut cfg = ScenarioConfig::urban_lte_default();
        cfg.power.sp_power_dbm = Some(vec![39.0; 4]);
        assert!(cfg.validate().unwrap_err().to_string().contains("power.sp_power_dbm"));
    }

    #[test]
    fn unknown_source_is_an_error() {
        assert!(load_config("no-such-preset-or-file").is_err());
    }
}
