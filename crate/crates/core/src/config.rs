//! Experiment configuration: a flat `key = value` text format with dotted
//! keys, `#` comments and defaults for every omitted key.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::protocol::{Cadence, ControllerKind, RegionConfig, RegionId};
use crate::radio::{
    EnergyModelParams, LinkBudgetParams, PowerDbm, PrrParams, RssiLossDbm, TemperatureC,
};
use crate::topology::{load_temperature_trace, TemperatureProcess, TemperatureSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureMode {
    Synthetic,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrrMode {
    /// Record the logistic expectation.
    Expectation,
    /// Draw a Bernoulli outcome per packet from the node's PRR stream.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureConfig {
    pub mode: TemperatureMode,
    pub t_min_c: f64,
    pub t_max_c: f64,
    pub walk_sigma_c: f64,
    pub trace_path: Option<PathBuf>,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            mode: TemperatureMode::Synthetic,
            t_min_c: -10.0,
            t_max_c: 53.0,
            walk_sigma_c: 0.5,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub node_count: usize,
    pub area_side_m: f64,
    pub rounds: usize,
    pub controller: ControllerKind,
    pub level_cap: PowerDbm,
    pub temperature: TemperatureConfig,
    pub link_budget: LinkBudgetParams,
    pub regions: RegionConfig,
    pub cadence: Cadence,
    pub prr: PrrParams,
    pub prr_mode: PrrMode,
    pub energy: EnergyModelParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            node_count: 100,
            area_side_m: 100.0,
            rounds: 1200,
            controller: ControllerKind::East,
            level_cap: PowerDbm(48.7),
            temperature: TemperatureConfig::default(),
            link_budget: LinkBudgetParams::default(),
            regions: RegionConfig::default(),
            cadence: Cadence::default(),
            prr: PrrParams::default(),
            prr_mode: PrrMode::Expectation,
            energy: EnergyModelParams::default(),
        }
    }
}

/// Every recognized key, in canonical (sorted) order.
pub const CONFIG_KEYS: &[&str] = &[
    "area_side_m",
    "cadence.drift_db",
    "cadence.period_rounds",
    "controller",
    "energy.ack_bits",
    "energy.beacon_bits",
    "energy.bitrate_bps",
    "energy.data_bits",
    "energy.e_elec_j_per_bit",
    "energy.initial_battery_j",
    "level_cap_dbm",
    "link_budget.bandwidth_hz",
    "link_budget.eb_n0_db",
    "link_budget.eta",
    "link_budget.frequency_hz",
    "link_budget.margin_m",
    "link_budget.rnf_db",
    "link_budget.snr_db",
    "link_budget.temperature_k",
    "node_count",
    "prr.alpha",
    "prr.beta_db",
    "prr.mode",
    "regions.boundary_high_dbm",
    "regions.boundary_low_dbm",
    "regions.threshold_loss_a_dbm",
    "regions.threshold_loss_b_dbm",
    "regions.threshold_loss_c_dbm",
    "rounds",
    "seed",
    "temperature.mode",
    "temperature.t_max_c",
    "temperature.t_min_c",
    "temperature.trace_path",
    "temperature.walk_sigma_c",
];

/// Keys that identify the controller variant rather than the scenario.
// keys the classical controller never reads, so the two compare variants may differ on them
const VARIANT_KEYS: &[&str] = &["cadence.drift_db", "cadence.period_rounds", "controller"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !v.is_finite() {
        return Err(Error::config(
            key,
            format!("`{value}` is not a finite number"),
        ));
    }
    Ok(v)
}

fn unquote(value: &str) -> &str {
    let v = value.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

impl SimConfig {
    /// Sets one key from its textual value. Unknown keys and type errors are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = unquote(value);
        match key {
            "seed" => self.seed = parse(key, value)?,
            "node_count" => self.node_count = parse(key, value)?,
            "area_side_m" => self.area_side_m = parse_real(key, value)?,
            "rounds" => self.rounds = parse(key, value)?,
            "controller" => self.controller = value.parse()?,
            "level_cap_dbm" => self.level_cap = PowerDbm(parse_real(key, value)?),
            "temperature.mode" => {
                self.temperature.mode = match value {
                    "synthetic" => TemperatureMode::Synthetic,
                    "trace" => TemperatureMode::Trace,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("expected `synthetic` or `trace`, got `{other}`"),
                        ))
                    }
                }
            }
            "temperature.t_min_c" => self.temperature.t_min_c = parse_real(key, value)?,
            "temperature.t_max_c" => self.temperature.t_max_c = parse_real(key, value)?,
            "temperature.walk_sigma_c" => self.temperature.walk_sigma_c = parse_real(key, value)?,
            "temperature.trace_path" => {
                self.temperature.trace_path = (!value.is_empty()).then(|| PathBuf::from(value))
            }
            "link_budget.eta" => self.link_budget.eta = parse_real(key, value)?,
            "link_budget.eb_n0_db" => self.link_budget.eb_n0_db = parse_real(key, value)?,
            "link_budget.snr_db" => self.link_budget.snr_db = parse_real(key, value)?,
            "link_budget.bandwidth_hz" => self.link_budget.bandwidth_hz = parse_real(key, value)?,
            "link_budget.frequency_hz" => self.link_budget.frequency_hz = parse_real(key, value)?,
            "link_budget.rnf_db" => self.link_budget.rnf_db = parse_real(key, value)?,
            "link_budget.temperature_k" => {
                self.link_budget.temperature_kelvin = parse_real(key, value)?
            }
            "link_budget.margin_m" => self.link_budget.margin_m = parse_real(key, value)?,
            "regions.boundary_high_dbm" => {
                self.regions.boundary_high = RssiLossDbm(parse_real(key, value)?)
            }
            "regions.boundary_low_dbm" => {
                self.regions.boundary_low = RssiLossDbm(parse_real(key, value)?)
            }
            "regions.threshold_loss_a_dbm" => {
                self.regions.threshold_loss[RegionId::A] = RssiLossDbm(parse_real(key, value)?)
            }
            "regions.threshold_loss_b_dbm" => {
                self.regions.threshold_loss[RegionId::B] = RssiLossDbm(parse_real(key, value)?)
            }
            "regions.threshold_loss_c_dbm" => {
                self.regions.threshold_loss[RegionId::C] = RssiLossDbm(parse_real(key, value)?)
            }
            "cadence.period_rounds" => self.cadence.period_rounds = parse(key, value)?,
            "cadence.drift_db" => self.cadence.drift_db = parse_real(key, value)?,
            "prr.alpha" => self.prr.alpha = parse_real(key, value)?,
            "prr.beta_db" => self.prr.beta_db = parse_real(key, value)?,
            "prr.mode" => {
                self.prr_mode = match value {
                    "expectation" => PrrMode::Expectation,
                    "bernoulli" => PrrMode::Bernoulli,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("expected `expectation` or `bernoulli`, got `{other}`"),
                        ))
                    }
                }
            }
            "energy.e_elec_j_per_bit" => self.energy.e_elec_j_per_bit = parse_real(key, value)?,
            "energy.bitrate_bps" => self.energy.bitrate_bps = parse_real(key, value)?,
            "energy.beacon_bits" => self.energy.beacon_bits = parse(key, value)?,
            "energy.ack_bits" => self.energy.ack_bits = parse(key, value)?,
            "energy.data_bits" => self.energy.data_bits = parse(key, value)?,
            "energy.initial_battery_j" => self.energy.initial_battery_j = parse_real(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Current value of `key` in canonical textual form.
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "seed" => self.seed.to_string(),
            "node_count" => self.node_count.to_string(),
            "area_side_m" => self.area_side_m.to_string(),
            "rounds" => self.rounds.to_string(),
            "controller" => self.controller.label().to_string(),
            "level_cap_dbm" => self.level_cap.0.to_string(),
            "temperature.mode" => match self.temperature.mode {
                TemperatureMode::Synthetic => "synthetic".into(),
                TemperatureMode::Trace => "trace".into(),
            },
            "temperature.t_min_c" => self.temperature.t_min_c.to_string(),
            "temperature.t_max_c" => self.temperature.t_max_c.to_string(),
            "temperature.walk_sigma_c" => self.temperature.walk_sigma_c.to_string(),
            "temperature.trace_path" => self
                .temperature
                .trace_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "link_budget.eta" => self.link_budget.eta.to_string(),
            "link_budget.eb_n0_db" => self.link_budget.eb_n0_db.to_string(),
            "link_budget.snr_db" => self.link_budget.snr_db.to_string(),
            "link_budget.bandwidth_hz" => self.link_budget.bandwidth_hz.to_string(),
            "link_budget.frequency_hz" => self.link_budget.frequency_hz.to_string(),
            "link_budget.rnf_db" => self.link_budget.rnf_db.to_string(),
            "link_budget.temperature_k" => self.link_budget.temperature_kelvin.to_string(),
            "link_budget.margin_m" => self.link_budget.margin_m.to_string(),
            "regions.boundary_high_dbm" => self.regions.boundary_high.0.to_string(),
            "regions.boundary_low_dbm" => self.regions.boundary_low.0.to_string(),
            "regions.threshold_loss_a_dbm" => {
                self.regions.threshold_loss[RegionId::A].0.to_string()
            }
            "regions.threshold_loss_b_dbm" => {
                self.regions.threshold_loss[RegionId::B].0.to_string()
            }
            "regions.threshold_loss_c_dbm" => {
                self.regions.threshold_loss[RegionId::C].0.to_string()
            }
            "cadence.period_rounds" => self.cadence.period_rounds.to_string(),
            "cadence.drift_db" => self.cadence.drift_db.to_string(),
            "prr.alpha" => self.prr.alpha.to_string(),
            "prr.beta_db" => self.prr.beta_db.to_string(),
            "prr.mode" => match self.prr_mode {
                PrrMode::Expectation => "expectation".into(),
                PrrMode::Bernoulli => "bernoulli".into(),
            },
            "energy.e_elec_j_per_bit" => self.energy.e_elec_j_per_bit.to_string(),
            "energy.bitrate_bps" => self.energy.bitrate_bps.to_string(),
            "energy.beacon_bits" => self.energy.beacon_bits.to_string(),
            "energy.ack_bits" => self.energy.ack_bits.to_string(),
            "energy.data_bits" => self.energy.data_bits.to_string(),
            "energy.initial_battery_j" => self.energy.initial_battery_j.to_string(),
            _ => return None,
        };
        Some(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::config("node_count", "must be >= 1"));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds", "must be >= 1"));
        }
        if !(self.area_side_m.is_finite() && self.area_side_m > 0.0) {
            return Err(Error::config("area_side_m", "must be finite and > 0"));
        }
        self.temperature_process_shape().validate()?;
        // keep the compensation curve defined over the whole temperature range
        crate::radio::power_level_for_temperature(TemperatureC(self.temperature.t_min_c))
            .map_err(|e| Error::config("temperature.t_min_c", e.to_string()))?;
        if self.temperature.mode == TemperatureMode::Trace && self.temperature.trace_path.is_none()
        {
            return Err(Error::config(
                "temperature.trace_path",
                "required when temperature.mode = trace",
            ));
        }
        self.link_budget.validate()?;
        self.regions.validate()?;
        self.cadence.validate()?;
        self.prr.validate()?;
        self.energy.validate()?;
        if !self.level_cap.0.is_finite() || self.level_cap.0 < 0.0 {
            return Err(Error::config("level_cap_dbm", "must be finite and >= 0"));
        }
        for (r, level) in self.regions.threshold_levels().iter() {
            if level.0 > self.level_cap.0 {
                return Err(Error::config(
                    "level_cap_dbm",
                    format!(
                        "{} is below the region {r} threshold level {:.4} dBm",
                        self.level_cap.0, level.0
                    ),
                ));
            }
        }
        Ok(())
    }

    fn temperature_process_shape(&self) -> TemperatureProcess {
        TemperatureProcess {
            t_min: TemperatureC(self.temperature.t_min_c),
            t_max: TemperatureC(self.temperature.t_max_c),
            walk_sigma_c: self.temperature.walk_sigma_c,
            source: TemperatureSource::Synthetic,
        }
    }

    /// Builds the temperature process, loading the trace file in trace mode.
    pub fn temperature_process(&self) -> Result<TemperatureProcess> {
        match self.temperature.mode {
            TemperatureMode::Synthetic => Ok(self.temperature_process_shape()),
            TemperatureMode::Trace => {
                let path = self.temperature.trace_path.as_ref().ok_or_else(|| {
                    Error::config(
                        "temperature.trace_path",
                        "required when temperature.mode = trace",
                    )
                })?;
                load_temperature_trace(
                    path,
                    self.node_count,
                    self.rounds,
                    TemperatureC(self.temperature.t_min_c),
                    TemperatureC(self.temperature.t_max_c),
                )
            }
        }
    }

    /// Applies `key = value` text on top of `self`. Relative trace paths are
    /// resolved against `base_dir`.
    pub fn apply_text(&mut self, text: &str, base_dir: Option<&Path>) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let key = key.trim();
            self.set(key, value)?;
            if key == "temperature.trace_path" {
                if let (Some(dir), Some(p)) = (base_dir, self.temperature.trace_path.as_mut()) {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text, None)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if given), applies `overrides` in order and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = SimConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text, path.parent())?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its value, one `key = value` line each, in canonical order.
    pub fn to_config_text(&self) -> String {
        self.canonical_lines(&[])
    }

    fn canonical_lines(&self, skip: &[&str]) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS.iter().filter(|k| !skip.contains(k)) {
            let value = self.get(key).expect("every canonical key has a value");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical text; independent of key order in the source file.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_config_text().as_bytes()))
    }

    /// Fingerprint of the shared scenario: everything but the controller and its cadence.
    pub fn scenario_fingerprint(&self) -> String {
        hex::encode(Sha256::digest(
            self.canonical_lines(VARIANT_KEYS).as_bytes(),
        ))
    }
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = SimConfig::from_text("# nothing here\n\n").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.node_count, 100);
        assert_eq!(cfg.rounds, 1200);
        assert_eq!(cfg.link_budget.eta, 0.0029);
        assert_eq!(cfg.link_budget.bandwidth_hz, 83.5e6);
        assert_eq!(
            cfg.regions.threshold_loss,
            crate::protocol::PerRegion([RssiLossDbm(3.78), RssiLossDbm(-0.61), RssiLossDbm(-5.17)])
        );
    }

    #[test]
    fn round_trip_defaults() {
        let d = SimConfig::default();
        assert_eq!(SimConfig::from_text(&d.to_config_text()).unwrap(), d);
    }

    #[test]
    fn every_key_is_settable() {
        let d = SimConfig::default();
        for key in CONFIG_KEYS {
            let mut c = d.clone();
            c.set(key, &d.get(key).unwrap()).unwrap();
            assert_eq!(c, d, "{key}");
        }
        let mut sorted = CONFIG_KEYS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, CONFIG_KEYS);
    }

    #[test]
    fn rejects_bad_input() {
        let err = SimConfig::from_text("bogus.key = 1").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "bogus.key"));
        let err = SimConfig::from_text("rounds = many").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "rounds"));
        let err = SimConfig::from_text("rounds = 0").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "rounds"));
        let err =
            SimConfig::from_text("regions.boundary_low_dbm = 1\nregions.boundary_high_dbm = 0")
                .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("boundary_low") && msg.contains("boundary_high"),
            "{msg}"
        );
        assert!(SimConfig::from_text("level_cap_dbm = 40").is_err());
        assert!(SimConfig::from_text("temperature.mode = trace").is_err());
        assert!(SimConfig::from_text("just some words").is_err());
    }

    #[test]
    fn comments_and_quotes() {
        let cfg = SimConfig::from_text("controller = \"classical\"  # baseline\nseed=7").unwrap();
        assert_eq!(cfg.controller, ControllerKind::Classical);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn fingerprint_ignores_key_order() {
        let a = SimConfig::from_text("seed = 3\nrounds = 10\n").unwrap();
        let b = SimConfig::from_text("rounds = 10\nseed = 3\n").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = SimConfig::from_text("rounds = 10\nseed = 4\n").unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn scenario_fingerprint_ignores_controller() {
        let a = SimConfig::default();
        let mut b = a.clone();
        b.controller = ControllerKind::Classical;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.scenario_fingerprint(), b.scenario_fingerprint());
    }
}
