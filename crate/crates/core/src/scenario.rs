//! Scenario configuration: defaults, flat `key=value` files and overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::metagraph::Scheme;
use crate::orbital::{ConstellationSpec, ZoneGrid};
use crate::resources::Capacities;
use crate::traffic::{
    load_connection_index, synth_connection_index, SyntheticIndex, TaskTemplate, TrafficError,
    ZoneIndexMap,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("invalid value '{value}' for '{key}': {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("'{key}' out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("connection index: {0}")]
    Traffic(#[from] TrafficError),
}

/// Where the per-zone connection index comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaSource {
    Uniform,
    Hotspots,
    File(PathBuf),
}

impl FromStr for EtaSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(EtaSource::Uniform),
            "hotspots" => Ok(EtaSource::Hotspots),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(EtaSource::File(PathBuf::from(path))),
                _ => Err("expected uniform, hotspots or file:PATH".into()),
            },
        }
    }
}

impl fmt::Display for EtaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaSource::Uniform => f.write_str("uniform"),
            EtaSource::Hotspots => f.write_str("hotspots"),
            EtaSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DestMode {
    /// Destination drawn from the connection index, never the source zone.
    Eta,
    SameZone,
}

impl FromStr for DestMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eta" => Ok(DestMode::Eta),
            "same_zone" => Ok(DestMode::SameZone),
            _ => Err("expected eta or same_zone".into()),
        }
    }
}

impl fmt::Display for DestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DestMode::Eta => "eta",
            DestMode::SameZone => "same_zone",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_orbits: usize,
    pub sats_per_orbit: usize,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub sat_gflops: f64,
    pub sgl_gbps: f64,
    pub isl_gbps: f64,
    pub channels_per_isl: usize,
    /// Tasks generated per second over the whole grid.
    pub load: f64,
    pub duration_s: f64,
    pub subtasks_per_task: usize,
    pub subtask_gflo: f64,
    pub subtask_gb: f64,
    pub threshold_s: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub result_volume_bits: f64,
    pub polar_mask_deg: f64,
    pub elevation_min_deg: f64,
    pub eta: EtaSource,
    pub hotspot_count: usize,
    pub hotspot_fraction: f64,
    /// Task sources are remote-sensing satellites flying above the zone centre.
    pub source_altitude_km: f64,
    pub max_slant_range_km: f64,
    pub uplink_gbps: f64,
    pub dest_sampler: DestMode,
    pub literal_step16: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_orbits: 8,
            sats_per_orbit: 16,
            altitude_km: 500.0,
            inclination_deg: 90.0,
            sat_gflops: 100.0,
            sgl_gbps: 0.2,
            isl_gbps: 5.0,
            channels_per_isl: 1,
            load: 200.0,
            duration_s: 10.0,
            subtasks_per_task: 2,
            subtask_gflo: 100.0,
            subtask_gb: 0.1,
            threshold_s: 300.0,
            scheme: Scheme::Fusion,
            seed: 1,
            result_volume_bits: 1e6,
            polar_mask_deg: 75.0,
            elevation_min_deg: 5.0,
            eta: EtaSource::Hotspots,
            hotspot_count: 4,
            hotspot_fraction: 0.8,
            source_altitude_km: 600.0,
            max_slant_range_km: 7800.0,
            uplink_gbps: 5.0,
            dest_sampler: DestMode::Eta,
            literal_step16: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "num_orbits",
    "sats_per_orbit",
    "altitude_km",
    "inclination_deg",
    "sat_gflops",
    "sgl_gbps",
    "isl_gbps",
    "channels_per_isl",
    "load",
    "duration_s",
    "subtasks_per_task",
    "subtask_gflo",
    "subtask_gb",
    "threshold_s",
    "scheme",
    "seed",
    "result_volume_bits",
    "polar_mask_deg",
    "elevation_min_deg",
    "eta",
    "hotspot_count",
    "hotspot_fraction",
    "source_altitude_km",
    "max_slant_range_km",
    "uplink_gbps",
    "dest_sampler",
    "literal_step16",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "num_orbits" => self.num_orbits = parse(key, v)?,
            "sats_per_orbit" => self.sats_per_orbit = parse(key, v)?,
            "altitude_km" => self.altitude_km = parse(key, v)?,
            "inclination_deg" => self.inclination_deg = parse(key, v)?,
            "sat_gflops" => self.sat_gflops = parse(key, v)?,
            "sgl_gbps" => self.sgl_gbps = parse(key, v)?,
            "isl_gbps" => self.isl_gbps = parse(key, v)?,
            "channels_per_isl" => self.channels_per_isl = parse(key, v)?,
            "load" => self.load = parse(key, v)?,
            "duration_s" => self.duration_s = parse(key, v)?,
            "subtasks_per_task" => self.subtasks_per_task = parse(key, v)?,
            "subtask_gflo" => self.subtask_gflo = parse(key, v)?,
            "subtask_gb" => self.subtask_gb = parse(key, v)?,
            "threshold_s" => self.threshold_s = parse(key, v)?,
            "scheme" => self.scheme = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "result_volume_bits" => self.result_volume_bits = parse(key, v)?,
            "polar_mask_deg" => self.polar_mask_deg = parse(key, v)?,
            "elevation_min_deg" => self.elevation_min_deg = parse(key, v)?,
            "eta" => self.eta = parse(key, v)?,
            "hotspot_count" => self.hotspot_count = parse(key, v)?,
            "hotspot_fraction" => self.hotspot_fraction = parse(key, v)?,
            "source_altitude_km" => self.source_altitude_km = parse(key, v)?,
            "max_slant_range_km" => self.max_slant_range_km = parse(key, v)?,
            "uplink_gbps" => self.uplink_gbps = parse(key, v)?,
            "dest_sampler" => self.dest_sampler = parse(key, v)?,
            "literal_step16" => self.literal_step16 = parse_bool(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "num_orbits" => self.num_orbits.to_string(),
            "sats_per_orbit" => self.sats_per_orbit.to_string(),
            "altitude_km" => self.altitude_km.to_string(),
            "inclination_deg" => self.inclination_deg.to_string(),
            "sat_gflops" => self.sat_gflops.to_string(),
            "sgl_gbps" => self.sgl_gbps.to_string(),
            "isl_gbps" => self.isl_gbps.to_string(),
            "channels_per_isl" => self.channels_per_isl.to_string(),
            "load" => self.load.to_string(),
            "duration_s" => self.duration_s.to_string(),
            "subtasks_per_task" => self.subtasks_per_task.to_string(),
            "subtask_gflo" => self.subtask_gflo.to_string(),
            "subtask_gb" => self.subtask_gb.to_string(),
            "threshold_s" => self.threshold_s.to_string(),
            "scheme" => self.scheme.to_string(),
            "seed" => self.seed.to_string(),
            "result_volume_bits" => self.result_volume_bits.to_string(),
            "polar_mask_deg" => self.polar_mask_deg.to_string(),
            "elevation_min_deg" => self.elevation_min_deg.to_string(),
            "eta" => self.eta.to_string(),
            "hotspot_count" => self.hotspot_count.to_string(),
            "hotspot_fraction" => self.hotspot_fraction.to_string(),
            "source_altitude_km" => self.source_altitude_km.to_string(),
            "max_slant_range_km" => self.max_slant_range_km.to_string(),
            "uplink_gbps" => self.uplink_gbps.to_string(),
            "dest_sampler" => self.dest_sampler.to_string(),
            "literal_step16" => self.literal_step16.to_string(),
            _ => return None,
        })
    }

    /// Every key with its current value, in a stable order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|k| (*k, self.get(k).expect("listed key")))
            .collect()
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, reason: &str| ConfigError::OutOfRange {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        for (key, v) in [
            ("altitude_km", self.altitude_km),
            ("sat_gflops", self.sat_gflops),
            ("sgl_gbps", self.sgl_gbps),
            ("isl_gbps", self.isl_gbps),
            ("duration_s", self.duration_s),
            ("subtask_gflo", self.subtask_gflo),
            ("subtask_gb", self.subtask_gb),
            ("threshold_s", self.threshold_s),
            ("result_volume_bits", self.result_volume_bits),
            ("source_altitude_km", self.source_altitude_km),
            ("max_slant_range_km", self.max_slant_range_km),
            ("uplink_gbps", self.uplink_gbps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(range(key, "must be positive"));
            }
        }
        if !(self.load >= 0.0 && self.load.is_finite()) {
            return Err(range("load", "must be non-negative"));
        }
        if self.num_orbits < 2 {
            return Err(range("num_orbits", "need at least 2 orbital planes"));
        }
        if self.sats_per_orbit < 4 || !self.sats_per_orbit.is_multiple_of(2) {
            return Err(range("sats_per_orbit", "must be even and at least 4"));
        }
        if self.inclination_deg != 90.0 {
            return Err(range(
                "inclination_deg",
                "only polar (90) Walker-star constellations are supported",
            ));
        }
        if self.channels_per_isl != 1 {
            return Err(range(
                "channels_per_isl",
                "only single-channel links are supported",
            ));
        }
        if self.subtasks_per_task == 0 {
            return Err(range("subtasks_per_task", "must be at least 1"));
        }
        if !(0.0..=90.0).contains(&self.polar_mask_deg) {
            return Err(range("polar_mask_deg", "must be within [0, 90]"));
        }
        if !(-90.0..90.0).contains(&self.elevation_min_deg) {
            return Err(range("elevation_min_deg", "must be within [-90, 90)"));
        }
        if self.eta == EtaSource::Hotspots {
            let zones = self.grid().len();
            if self.hotspot_count == 0 || self.hotspot_count >= zones {
                return Err(range("hotspot_count", &format!("must be in [1, {zones})")));
            }
            if !(self.hotspot_fraction > 0.0 && self.hotspot_fraction < 1.0) {
                return Err(range("hotspot_fraction", "must be in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn constellation(&self) -> ConstellationSpec {
        ConstellationSpec {
            num_orbits: self.num_orbits,
            sats_per_orbit: self.sats_per_orbit,
            altitude_m: self.altitude_km * 1e3,
            inclination_deg: self.inclination_deg,
            polar_mask_deg: self.polar_mask_deg,
            elevation_min_deg: self.elevation_min_deg,
            max_slant_range_m: self.max_slant_range_km * 1e3,
            ..ConstellationSpec::default()
        }
    }

    pub fn grid(&self) -> ZoneGrid {
        ZoneGrid {
            rows: self.sats_per_orbit / 2,
            cols: 2 * self.num_orbits,
        }
    }

    pub fn capacities(&self) -> Capacities {
        Capacities {
            sat_gflops: self.sat_gflops,
            isl_gbps: self.isl_gbps,
            sgl_gbps: self.sgl_gbps,
            uplink_gbps: self.uplink_gbps,
        }
    }

    pub fn template(&self) -> TaskTemplate {
        TaskTemplate {
            subtasks: self.subtasks_per_task,
            flop_g: self.subtask_gflo,
            volume_gb: self.subtask_gb,
            threshold_s: self.threshold_s,
        }
    }

    pub fn connection_index(&self, seed: u64) -> Result<ZoneIndexMap, ConfigError> {
        let grid = self.grid();
        Ok(match &self.eta {
            EtaSource::Uniform => synth_connection_index(SyntheticIndex::Uniform, &grid, seed)?,
            EtaSource::Hotspots => synth_connection_index(
                SyntheticIndex::Hotspots {
                    count: self.hotspot_count,
                    fraction: self.hotspot_fraction,
                },
                &grid,
                seed,
            )?,
            EtaSource::File(path) => load_connection_index(path, &grid)?,
        })
    }
}

/// Defaults, then the file (if any), then `key=value` overrides.
pub fn parse_config<'a>(
    path: Option<&Path>,
    overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    if let Some(p) = path {
        config.apply_file(p)?;
    }
    for (k, v) in overrides {
        config.set(k, v)?;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let mut c = ScenarioConfig::default();
        c.apply_str("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!((c.num_orbits, c.sats_per_orbit), (8, 16));
        assert_eq!((c.altitude_km, c.inclination_deg), (500.0, 90.0));
        assert_eq!((c.sat_gflops, c.sgl_gbps, c.isl_gbps), (100.0, 0.2, 5.0));
        assert_eq!((c.load, c.duration_s, c.threshold_s), (200.0, 10.0, 300.0));
        assert_eq!(
            (c.subtasks_per_task, c.subtask_gflo, c.subtask_gb),
            (2, 100.0, 0.1)
        );
        c.validate().unwrap();
    }

    #[test]
    fn override_and_comments() {
        let mut c = ScenarioConfig::default();
        c.apply_str("# scenario\nload=300\n\n scheme = ground # trailing\n")
            .unwrap();
        assert_eq!(c.load, 300.0);
        assert_eq!(c.scheme, Scheme::Ground);
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = ScenarioConfig::default();
        let e = c.set("scheme", "orbital_dance").unwrap_err().to_string();
        assert!(e.contains("unknown scheme") && e.contains("scheme"));
        let e = c.set("load", "heavy").unwrap_err().to_string();
        assert!(e.contains("'load'"));
        assert!(
            matches!(c.set("warp_factor", "9"), Err(ConfigError::UnknownKey(k)) if k == "warp_factor")
        );
        assert!(matches!(
            c.apply_str("load 300"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        c.sgl_gbps = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("sgl_gbps"));
    }

    #[test]
    fn unsupported_topologies_rejected() {
        let c = ScenarioConfig {
            inclination_deg: 53.0,
            ..Default::default()
        };
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("inclination_deg"));
        let c = ScenarioConfig {
            channels_per_isl: 2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn key_values_round_trip() {
        let mut c = ScenarioConfig {
            load: 123.5,
            eta: EtaSource::File("zones.csv".into()),
            literal_step16: true,
            dest_sampler: DestMode::SameZone,
            ..Default::default()
        };
        c.seed = 99;
        let mut d = ScenarioConfig::default();
        for (k, v) in c.key_values() {
            d.set(k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert_eq!(c.key_values().len(), KEYS.len());
    }

    #[test]
    fn eta_sources() {
        assert_eq!("uniform".parse::<EtaSource>().unwrap(), EtaSource::Uniform);
        assert_eq!(
            "file:a/b.csv".parse::<EtaSource>().unwrap(),
            EtaSource::File("a/b.csv".into())
        );
        assert!("file:".parse::<EtaSource>().is_err());
        let c = ScenarioConfig::default();
        let eta = c.connection_index(7).unwrap();
        assert!((eta.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cfg");
        std::fs::write(&path, "load=50\nsat_gflops=200\n").unwrap();
        let c = parse_config(Some(&path), [("load", "75")]).unwrap();
        assert_eq!((c.load, c.sat_gflops), (75.0, 200.0));
        assert!(matches!(
            parse_config(Some(&dir.path().join("missing.cfg")), []),
            Err(ConfigError::Io { .. })
        ));
    }
}
