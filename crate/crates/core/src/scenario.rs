//! Scenario configuration as a key-value text file.
//!
//! ```text
//! # training traffic
//! svo_phi = 0.7853981633974483
//! inflow_left = 360
//! inflow_right = 1080
//! uncooperative_fraction = 0.5
//! seed = 42
//! ```
//!
//! Inflows are vehicles per hour and become per-second Bernoulli
//! probabilities `inflow / 3600`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::traffic_sim::SpawnConfig;
use crate::{Error, Result};

pub const SCENARIO_KEYS: [&str; 5] = [
    "svo_phi",
    "inflow_left",
    "inflow_right",
    "uncooperative_fraction",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub svo_phi: f64,
    /// vehicles/hr
    pub inflow_left: f64,
    /// vehicles/hr
    pub inflow_right: f64,
    pub uncooperative_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::training()
    }
}

impl ScenarioConfig {
    /// Training traffic: 0.1 / 0.3 arrivals per second, half the right lane
    /// uncooperative.
    pub fn training() -> Self {
        ScenarioConfig {
            svo_phi: std::f64::consts::FRAC_PI_4,
            inflow_left: 360.0,
            inflow_right: 1080.0,
            uncooperative_fraction: 0.5,
            seed: 0,
        }
    }

    /// Same inflows as training with a quarter of the right lane uncooperative.
    pub fn evaluation() -> Self {
        ScenarioConfig {
            uncooperative_fraction: 0.25,
            ..Self::training()
        }
    }

    pub fn spawn_config(&self) -> SpawnConfig {
        SpawnConfig {
            p_right: self.inflow_right / 3600.0,
            p_left: self.inflow_left / 3600.0,
            uncooperative_fraction: self.uncooperative_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.svo_phi) {
            return Err(Error::Config(format!(
                "svo_phi {} outside [0, pi/2]",
                self.svo_phi
            )));
        }
        for (name, v) in [
            ("inflow_left", self.inflow_left),
            ("inflow_right", self.inflow_right),
        ] {
            if !(0.0..=3600.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} {v} outside [0, 3600] veh/hr"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.uncooperative_fraction) {
            return Err(Error::Config(format!(
                "uncooperative_fraction {} outside [0, 1]",
                self.uncooperative_fraction
            )));
        }
        Ok(())
    }

    /// Overlay `key = value` pairs on `self`.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in pairs {
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{k}: cannot parse '{v}' as a number")))
            };
            match k.as_str() {
                "svo_phi" => self.svo_phi = num()?,
                "inflow_left" => self.inflow_left = num()?,
                "inflow_right" => self.inflow_right = num()?,
                "uncooperative_fraction" => self.uncooperative_fraction = num()?,
                "seed" => {
                    self.seed = v
                        .parse()
                        .map_err(|_| Error::Config(format!("seed: cannot parse '{v}'")))?
                }
                _ => {}
            }
        }
        self.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        if let Some(k) = pairs.keys().find(|k| !SCENARIO_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown scenario key '{k}'")));
        }
        let mut cfg = Self::training();
        cfg.apply(&pairs)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "svo_phi = {}\ninflow_left = {}\ninflow_right = {}\nuncooperative_fraction = {}\nseed = {}\n",
            self.svo_phi, self.inflow_left, self.inflow_right, self.uncooperative_fraction, self.seed
        )
    }
}

/// Parse `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{k}'",
                n + 1
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let cfg = ScenarioConfig {
            svo_phi: 0.3,
            inflow_left: 90.0,
            inflow_right: 405.0,
            uncooperative_fraction: 0.25,
            seed: 17,
        };
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn training_probabilities() {
        let s = ScenarioConfig::training().spawn_config();
        assert!((s.p_right - 0.3).abs() < 1e-15);
        assert!((s.p_left - 0.1).abs() < 1e-15);
        assert_eq!(s.uncooperative_fraction, 0.5);
        assert_eq!(ScenarioConfig::evaluation().uncooperative_fraction, 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScenarioConfig::parse("svo_phi = 2.0").is_err());
        assert!(ScenarioConfig::parse("colour = blue").is_err());
        assert!(ScenarioConfig::parse("seed").is_err());
        assert!(ScenarioConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ScenarioConfig::parse("inflow_left = fast").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ScenarioConfig::parse("# hi\n\nseed = 5 # trailing\n").unwrap();
        assert_eq!(cfg.seed, 5);
    }
}
