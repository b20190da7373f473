//! Scenario configuration: a TOML file with one section per subsystem, plus
//! dotted-key overrides applied after parsing. All randomness flows from the
//! single `sim.seed`; subsystem seeds are derived from it.

use crate::baselines::OverheadProtocol;
use crate::constellation::ShellConfig;
use crate::dabnet::{EvolutionParams, Strategy};
use crate::error::Error;
use crate::failure::FailureConfig;
use crate::rng::derive_seed;
use crate::routing::GeoPolicy;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub shell: ShellConfig,
    pub ground: GroundSection,
    #[serde(default)]
    pub failure: FailureSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub routing: RoutingSection,
    #[serde(default)]
    pub traffic: TrafficSection,
    pub sim: SimSection,
    #[serde(default)]
    pub overhead: OverheadSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundSection {
    /// City table (CSV); relative paths resolve against the config file.
    pub city_file: PathBuf,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
    #[serde(default)]
    pub gs_alt_km: f64,
}

fn default_min_elevation() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FailureSection {
    pub ratio: f64,
    pub period_s: f64,
    pub duty_min: f64,
    pub duty_max: f64,
}

impl Default for FailureSection {
    fn default() -> Self {
        FailureSection {
            ratio: 0.0,
            period_s: 200.0,
            duty_min: 0.3,
            duty_max: 0.7,
        }
    }
}

impl FailureSection {
    pub fn to_failure_config(&self, root_seed: u64) -> FailureConfig {
        FailureConfig {
            failure_ratio: self.ratio,
            period_s: self.period_s,
            duty_min: self.duty_min,
            duty_max: self.duty_max,
            seed: derive_seed(root_seed, "failure", 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub strategy: Strategy,
    pub d_min: u32,
    pub d_max: u32,
    pub n_min: usize,
    pub epsilon: f64,
    pub center_prob: f64,
    pub max_evolution_iters: u32,
    /// Maintenance rounds run at t=0 to initialize the underlay before
    /// traffic starts.
    pub bootstrap_rounds: u32,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            strategy: Strategy::Cqsbe,
            d_min: 1,
            d_max: 3,
            n_min: 2,
            epsilon: 0.3,
            center_prob: 0.1,
            max_evolution_iters: 32,
            bootstrap_rounds: 30,
        }
    }
}

impl EvolutionSection {
    pub fn to_params(&self, root_seed: u64) -> EvolutionParams {
        EvolutionParams {
            d_min: self.d_min,
            d_max: self.d_max,
            n_min: self.n_min,
            epsilon: self.epsilon,
            center_prob: self.center_prob,
            max_evolution_iters: self.max_evolution_iters,
            seed: derive_seed(root_seed, "evolution", 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouterKind {
    /// Hierarchical routing over the block underlay with protection and
    /// source selection.
    Dabr,
    /// Unprotected greedy geographic forwarding.
    Greedy,
    /// Minimum hop-count path.
    Mhp,
    /// Shortest distance path.
    Sdp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSection {
    pub router: RouterKind,
    pub policy: GeoPolicy,
    /// Backward acknowledgment budget per delivery.
    pub n_max: u32,
    /// Uniform protection-stack refresh interval, seconds.
    pub delta_s: f64,
    pub mdv_literal_argmin: bool,
    /// RTT-ranked source selection (otherwise nearest visible).
    pub os3: bool,
    /// Forward-hop budget (time-to-live) of delivery walks, shared by the
    /// protected router and the greedy baseline.
    pub hop_budget: u32,
}

impl Default for RoutingSection {
    fn default() -> Self {
        RoutingSection {
            router: RouterKind::Dabr,
            policy: GeoPolicy::Ctv,
            n_max: 5,
            delta_s: 100.0,
            mdv_literal_argmin: false,
            os3: true,
            hop_budget: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub flows: u64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Weight of the GDP column in the combined city weight (the rest is
    /// population).
    pub gdp_weight_share: f64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            flows: 100,
            min_duration_s: 60.0,
            max_duration_s: 600.0,
            gdp_weight_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub duration_s: f64,
    #[serde(default = "default_timestep")]
    pub timestep_s: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_timestep() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverheadSection {
    pub models: Vec<OverheadProtocol>,
    pub aodv_load_fraction: f64,
}

impl Default for OverheadSection {
    fn default() -> Self {
        OverheadSection {
            models: vec![
                OverheadProtocol::OspfLike,
                OverheadProtocol::AodvLike,
                OverheadProtocol::Dabr,
            ],
            aodv_load_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Per-round partition dump for visual inspection.
    pub dump_partitions: bool,
    /// Step-record audit log and realized failure schedule.
    pub audit: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dump_partitions: false,
            audit: true,
        }
    }
}

impl ScenarioConfig {
    /// Loads a config file and applies `key=value` overrides (dotted keys,
    /// values parsed as TOML literals with a string fallback).
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut value: toml::Value = text
            .parse()
            .map_err(|e: toml::de::Error| Error::parse(path.display().to_string(), e.to_string()))?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        let mut cfg: ScenarioConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::parse(path.display().to_string(), e.to_string()))?;
        if cfg.ground.city_file.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.ground.city_file = dir.join(&cfg.ground.city_file);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.shell.validate()?;
        self.failure
            .to_failure_config(self.sim.seed)
            .validate()?;
        self.evolution.to_params(self.sim.seed).validate()?;
        let mut bad = Vec::new();
        if !(self.sim.duration_s > 0.0) {
            bad.push("sim.duration_s (must be > 0)");
        }
        if !(self.sim.timestep_s > 0.0) {
            bad.push("sim.timestep_s (must be > 0)");
        }
        if !(self.traffic.min_duration_s > 0.0)
            || self.traffic.min_duration_s > self.traffic.max_duration_s
        {
            bad.push("traffic.min_duration_s/max_duration_s (must satisfy 0 < min <= max)");
        }
        if !(0.0..=1.0).contains(&self.traffic.gdp_weight_share) {
            bad.push("traffic.gdp_weight_share (must be in [0, 1])");
        }
        if self.routing.delta_s.is_nan() || self.routing.delta_s < 0.0 {
            bad.push("routing.delta_s (must be >= 0 or inf)");
        }
        if !(self.overhead.aodv_load_fraction > 0.0 && self.overhead.aodv_load_fraction <= 1.0) {
            bad.push("overhead.aodv_load_fraction (must be in (0, 1])");
        }
        if !(-90.0..=90.0).contains(&self.ground.min_elevation_deg) {
            bad.push("ground.min_elevation_deg (must be in [-90, 90])");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join(", ")))
        }
    }
}

/// Sets `key` (dotted path) in a parsed TOML tree, creating tables on the
/// way. The value is parsed as a TOML literal; anything that does not parse
/// becomes a string.
pub fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig(format!("override key {key:?}")));
    }
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::InvalidConfig(format!("override key {key:?}: not a table")))?;
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| Error::InvalidConfig(format!("override key {key:?}: not a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), parse_literal(raw));
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    // wrap as `v = <raw>` and let the TOML parser decide the type
    if let Ok(toml::Value::Table(t)) = format!("v = {raw}").parse::<toml::Value>() {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("scenario.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    fn minimal_body() -> String {
        "
[shell]
planes = 4
sats_per_plane = 4
altitude_km = 550.0
inclination_deg = 53.0

[ground]
city_file = \"cities.csv\"

[sim]
duration_s = 10.0
seed = 1
"
        .to_string()
    }

    #[test]
    fn load_resolves_relative_city_file_and_applies_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), &minimal_body());
        std::fs::write(dir.path().join("cities.csv"), "name,lat_deg,lon_deg,gdp_weight,population_weight\n").unwrap();
        let overrides = vec![
            ("failure.ratio".to_string(), "0.30".to_string()),
            ("routing.policy".to_string(), "\"mta\"".to_string()),
            ("routing.delta_s".to_string(), "inf".to_string()),
        ];
        let cfg = ScenarioConfig::load(&path, &overrides).unwrap();
        assert_eq!(cfg.failure.ratio, 0.30);
        assert_eq!(cfg.routing.policy, GeoPolicy::Mta);
        assert!(cfg.routing.delta_s.is_infinite());
        assert!(cfg.ground.city_file.starts_with(dir.path()));
    }

    #[test]
    fn bad_values_name_offending_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), &minimal_body());
        let overrides = vec![("sim.duration_s".to_string(), "-5".to_string())];
        let err = ScenarioConfig::load(&path, &overrides).unwrap_err();
        assert!(err.to_string().contains("sim.duration_s"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = minimal_body() + "\n[nonsense]\nx = 1\n";
        let path = write_config(dir.path(), &body);
        assert!(ScenarioConfig::load(&path, &[]).is_err());
    }

    #[test]
    fn string_fallback_in_overrides() {
        let mut v: toml::Value = "a = 1".parse().unwrap();
        apply_override(&mut v, "b.c", "hello").unwrap();
        assert_eq!(
            v["b"]["c"],
            toml::Value::String("hello".to_string())
        );
    }
}
