//! Flat `section.key = value` configuration files and the typed settings
//! built from them.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Unknown keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{ConfigError, HarnessError};
use crate::linktime::{KinematicsConfig, OppositeSpeed};
use crate::protocols::{AodvConfig, DsrConfig, FsrConfig, ProtocolConfig};
use crate::sim::{Field, Mobility, NodeId, Radio, RadioPreset, SimScenario, Traffic};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "strip.d",
    "strip.n_segments",
    "strip.mu",
    "strip.sigma2",
    "strip.beta",
    "strip.quadrature_steps",
    "strip.horizon",
    "streams.rates",
    "streams.offsets",
    "streams.lengths",
    "kinematics.v_min",
    "kinematics.v_max",
    "kinematics.delta_v",
    "kinematics.t_r",
    "kinematics.spacing",
    "kinematics.horizon",
    "kinematics.opposite_speed",
    "analytic.pmf_terms",
    "mc.samples",
    "mc.seed",
    "mc.batches",
    "mc.grid",
    "mc.population_rate",
    "mc.population_mu",
    "mc.population_length",
    "mc.population_samples",
    "mc.ct_samples",
    "sim.nodes",
    "sim.field",
    "sim.width",
    "sim.height",
    "sim.length",
    "sim.lanes",
    "sim.mobility",
    "sim.positions",
    "sim.v_min",
    "sim.v_max",
    "sim.pause",
    "sim.speeds",
    "sim.radio",
    "sim.range",
    "sim.bitrate",
    "sim.loss_prob",
    "sim.duration",
    "sim.seed",
    "sim.protocol",
    "traffic.flows",
    "traffic.random_flows",
    "traffic.packet_bytes",
    "traffic.interval",
    "traffic.start",
    "traffic.stop",
    "aodv.ttl_start",
    "aodv.ttl_increment",
    "aodv.ttl_threshold",
    "aodv.net_diameter",
    "aodv.hello_interval",
    "aodv.route_lifetime",
    "aodv.local_repair",
    "aodv.gratuitous_rrep",
    "aodv_mod.ttl_start",
    "aodv_mod.ttl_increment",
    "aodv_mod.ttl_threshold",
    "aodv_mod.net_diameter",
    "aodv_mod.hello_interval",
    "aodv_mod.route_lifetime",
    "aodv_mod.local_repair",
    "aodv_mod.gratuitous_rrep",
    "dsr.cache_capacity",
    "dsr.salvaging",
    "dsr.gratuitous_rrep",
    "dsr_mod.cache_capacity",
    "dsr_mod.salvaging",
    "dsr_mod.gratuitous_rrep",
    "fsr.inner_scope_hops",
    "fsr.inner_interval",
    "fsr.outer_interval",
    "fsr_mod.inner_scope_hops",
    "fsr_mod.inner_interval",
    "fsr_mod.outer_interval",
    "sweep.axis",
    "sweep.levels",
    "sweep.protocols",
    "sweep.replications",
    "sweep.base_seed",
    "sweep.output",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed key/value pairs with their line numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    origin: Option<String>,
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(line, format!("expected `section.key = value`, found `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            let well_formed = key
                .split_once('.')
                .is_some_and(|(s, n)| !s.is_empty() && !n.is_empty() && !n.contains('.'));
            if !well_formed {
                return Err(ConfigError::at(line, format!("key `{key}` is not of the form `section.key`")));
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some(first) = entries.get(key) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {}", first.line)));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Ok(Config { entries, origin: None })
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config: Config = text.parse().map_err(|source| HarnessError::Config {
            path: path.display().to_string(),
            source,
        })?;
        config.origin = Some(path.display().to_string());
        Ok(config)
    }

    /// Wraps an error about this config's contents, naming the file it came from.
    pub fn wrap(&self, source: ConfigError) -> HarnessError {
        HarnessError::Config {
            path: self.origin.clone().unwrap_or_else(|| "config".into()),
            source,
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Raw value of `key`.
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Sets `key`, as a command-line override would.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::general(format!("unknown key `{key}`")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                line: 0,
                value: value.into(),
            },
        );
        Ok(())
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let message = format!("`{key}`: {}", message.into());
        match self.entries.get(key) {
            Some(e) if e.line > 0 => ConfigError::at(e.line, message),
            _ => ConfigError::general(message),
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("expected {what}, found `{}`", e.value))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parsed::<f64>(key, "a number")?.unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(key, "must be finite"))
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.parsed(key, "a non-negative integer")?.unwrap_or(default))
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32, ConfigError> {
        Ok(self.parsed(key, "a non-negative integer")?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => parse_bool(s).ok_or_else(|| self.error(key, format!("expected true or false, found `{s}`"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    /// Comma-separated list; `None` when the key is absent.
    pub fn list<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|_| self.error(key, format!("expected a list of {what}, found `{item}`")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// Wraps a validation failure of a built value so it points at `key`.
    pub fn invalid(&self, key: &str, err: impl std::fmt::Display) -> ConfigError {
        self.error(key, err.to_string())
    }
}

/// Strip geometry, motion and stream settings for the analytic model.
#[derive(Debug, Clone, PartialEq)]
pub struct StripSettings {
    pub d: f64,
    pub n_segments: u32,
    pub mu: f64,
    pub sigma2: f64,
    pub beta: f64,
    pub quadrature_steps: usize,
    /// Starting horizon of the steady-state search (s).
    pub horizon: f64,
    /// `(rate, offset, length)` per stream.
    pub streams: Vec<(f64, f64, f64)>,
}

impl StripSettings {
    pub fn from_config(c: &Config) -> Result<Self, ConfigError> {
        let d = c.f64_or("strip.d", 250.0)?;
        let n_segments = c.u32_or("strip.n_segments", 4)?;
        let mu = c.f64_or("strip.mu", 20.0)?;
        let length = d * n_segments as f64;
        let horizon = c.f64_or("strip.horizon", if mu > 0.0 { 2.0 * length / mu } else { 100.0 })?;
        let rates: Vec<f64> = c.list("streams.rates", "numbers")?.unwrap_or_else(|| vec![1.0]);
        let offsets: Vec<f64> = c.list("streams.offsets", "numbers")?.unwrap_or_else(|| vec![0.0; rates.len()]);
        let lengths: Vec<f64> = c.list("streams.lengths", "numbers")?.unwrap_or_else(|| vec![length; rates.len()]);
        if offsets.len() != rates.len() {
            return Err(c.invalid("streams.offsets", format!("{} offsets for {} rates", offsets.len(), rates.len())));
        }
        if lengths.len() != rates.len() {
            return Err(c.invalid("streams.lengths", format!("{} lengths for {} rates", lengths.len(), rates.len())));
        }
        if !(horizon > 0.0) {
            return Err(c.invalid("strip.horizon", "must be positive"));
        }
        Ok(StripSettings {
            d,
            n_segments,
            mu,
            sigma2: c.f64_or("strip.sigma2", 4.0)?,
            beta: c.f64_or("strip.beta", 0.01)?,
            quadrature_steps: c.u64_or("strip.quadrature_steps", 200)? as usize,
            horizon,
            streams: rates.into_iter().zip(offsets).zip(lengths).map(|((r, o), l)| (r, o, l)).collect(),
        })
    }
}

pub fn kinematics(c: &Config) -> Result<(KinematicsConfig, OppositeSpeed), ConfigError> {
    let cfg = KinematicsConfig {
        v_min: c.f64_or("kinematics.v_min", 10.0)?,
        v_max: c.f64_or("kinematics.v_max", 20.0)?,
        delta_v: c.f64_or("kinematics.delta_v", 5.0)?,
        t_r: c.f64_or("kinematics.t_r", 100.0)?,
        spacing: c.f64_or("kinematics.spacing", 50.0)?,
        horizon: c.f64_or("kinematics.horizon", 900.0)?,
    };
    cfg.speed_levels().map_err(|e| c.invalid("kinematics.delta_v", e))?;
    let mode = match c.str_or("kinematics.opposite_speed", "closing") {
        "closing" => OppositeSpeed::Closing,
        "literal" => OppositeSpeed::Literal,
        other => {
            return Err(c.invalid(
                "kinematics.opposite_speed",
                format!("expected closing or literal, found `{other}`"),
            ))
        }
    };
    Ok((cfg, mode))
}

/// The fixed regression grid of `(m, d, i)` checked by the Monte Carlo command.
pub const DEFAULT_GRID: [(f64, f64, u32); 10] = [
    (0.0, 1.0, 1),
    (1.0, 1.0, 1),
    (3.0, 2.0, 4),
    (-0.7, 5.0, 2),
    (0.5, 3.0, 1),
    (2.0, 1.0, 3),
    (0.01, 250.0, 4),
    (1.0, 0.5, 10),
    (-2.0, 1.0, 2),
    (5.0, 0.3, 7),
];

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    pub batches: u32,
    pub grid: Vec<(f64, f64, u32)>,
    pub population_rate: f64,
    pub population_mu: f64,
    pub population_length: f64,
    pub population_samples: u64,
    pub ct_samples: u64,
}

impl McSettings {
    pub fn from_config(c: &Config) -> Result<Self, ConfigError> {
        let grid = match c.raw("mc.grid") {
            None => DEFAULT_GRID.to_vec(),
            Some(raw) => raw
                .split(';')
                .map(|cell| {
                    let parts: Vec<&str> = cell.split(':').map(str::trim).collect();
                    match parts.as_slice() {
                        [m, d, i] => match (m.parse(), d.parse(), i.parse()) {
                            (Ok(m), Ok(d), Ok(i)) => Ok((m, d, i)),
                            _ => Err(c.invalid("mc.grid", format!("cannot read `{}` as m:d:i", cell.trim()))),
                        },
                        _ => Err(c.invalid("mc.grid", format!("cannot read `{}` as m:d:i", cell.trim()))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(McSettings {
            samples: c.u64_or("mc.samples", 1_000_000)?,
            seed: c.u64_or("mc.seed", 1)?,
            batches: c.u32_or("mc.batches", 100)?,
            grid,
            population_rate: c.f64_or("mc.population_rate", 2.0)?,
            population_mu: c.f64_or("mc.population_mu", 1.0)?,
            population_length: c.f64_or("mc.population_length", 10.0)?,
            population_samples: c.u64_or("mc.population_samples", 20_000)?,
            ct_samples: c.u64_or("mc.ct_samples", 100_000)?,
        })
    }
}

fn parse_flows(c: &Config) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    let Some(raw) = c.raw("traffic.flows") else {
        return Ok(Vec::new());
    };
    raw.split(',')
        .map(|f| {
            let f = f.trim();
            f.split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| c.invalid("traffic.flows", format!("expected `src-dst`, found `{f}`")))
        })
        .collect()
}

fn parse_positions(c: &Config) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
    let Some(raw) = c.raw("sim.positions") else {
        return Ok(None);
    };
    raw.split(';')
        .map(|p| {
            let p = p.trim();
            p.split_once(':')
                .and_then(|(x, y)| Some((x.trim().parse().ok()?, y.trim().parse().ok()?)))
                .ok_or_else(|| c.invalid("sim.positions", format!("expected `x:y`, found `{p}`")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// The simulation scenario described by the `sim.*` and `traffic.*` keys.
pub fn scenario(c: &Config) -> Result<SimScenario, ConfigError> {
    let field = match c.str_or("sim.field", "rect") {
        "rect" => Field::Rect {
            width: c.f64_or("sim.width", 1000.0)?,
            height: c.f64_or("sim.height", 1000.0)?,
        },
        "strip" => Field::Strip {
            length: c.f64_or("sim.length", 3000.0)?,
            lanes: c.u32_or("sim.lanes", 2)?,
        },
        other => return Err(c.invalid("sim.field", format!("expected rect or strip, found `{other}`"))),
    };
    let mobility = match c.str_or("sim.mobility", "waypoint") {
        "static" => Mobility::Static {
            positions: parse_positions(c)?,
        },
        "waypoint" => Mobility::RandomWaypoint {
            v_min: c.f64_or("sim.v_min", 1.0)?,
            v_max: c.f64_or("sim.v_max", 15.0)?,
            pause: c.f64_or("sim.pause", 0.0)?,
        },
        "highway" => Mobility::Highway {
            speeds: c.list("sim.speeds", "numbers")?.unwrap_or_else(|| vec![15.0]),
        },
        other => {
            return Err(c.invalid(
                "sim.mobility",
                format!("expected static, waypoint or highway, found `{other}`"),
            ))
        }
    };
    let preset: RadioPreset = c
        .str_or("sim.radio", "mac80211")
        .parse()
        .map_err(|e: String| c.invalid("sim.radio", e))?;
    let base = Radio::preset(preset);
    let radio = Radio {
        preset,
        range: c.f64_or("sim.range", base.range)?,
        bitrate: c.f64_or("sim.bitrate", base.bitrate)?,
        loss_prob: c.f64_or("sim.loss_prob", 0.0)?,
    };
    let defaults = Traffic::default();
    let traffic = Traffic {
        flows: parse_flows(c)?,
        random_flows: c.u32_or("traffic.random_flows", 10)?,
        packet_bytes: c.u32_or("traffic.packet_bytes", defaults.packet_bytes)?,
        interval: c.f64_or("traffic.interval", defaults.interval)?,
        start: c.f64_or("traffic.start", defaults.start)?,
        stop: c.parsed("traffic.stop", "a number")?,
    };
    let s = SimScenario {
        node_count: c.u32_or("sim.nodes", 50)?,
        field,
        mobility,
        radio,
        traffic,
        duration: c.f64_or("sim.duration", 900.0)?,
        seed: c.u64_or("sim.seed", 1)?,
    };
    s.validate().map_err(|e| match e {
        crate::SimError::InvalidScenario { field, reason } => c.invalid(&scenario_key(field), reason),
        other => c.invalid("sim.nodes", other),
    })?;
    Ok(s)
}

/// Config key behind a scenario validation field.
fn scenario_key(field: &str) -> String {
    match field {
        "node_count" => "sim.nodes".into(),
        "duration" => "sim.duration".into(),
        "field" => "sim.field".into(),
        "mobility.positions" => "sim.positions".into(),
        "mobility.model" => "sim.mobility".into(),
        "mobility.v_max" => "sim.v_max".into(),
        "mobility.pause" => "sim.pause".into(),
        "mobility.speeds" => "sim.speeds".into(),
        f if f.starts_with("radio.") => format!("sim.{}", &f[6..]),
        f => f.to_string(),
    }
}

/// Named protocol preset with the overrides of its own section applied.
pub fn protocol(c: &Config, name: &str) -> Result<Option<ProtocolConfig>, ConfigError> {
    let Some(preset) = ProtocolConfig::named(name) else {
        return Ok(None);
    };
    let key = |k: &str| format!("{name}.{k}");
    let out = match preset {
        ProtocolConfig::Aodv(d) => ProtocolConfig::Aodv(AodvConfig {
            ttl_start: c.u32_or(&key("ttl_start"), d.ttl_start)?,
            ttl_increment: c.u32_or(&key("ttl_increment"), d.ttl_increment)?,
            ttl_threshold: c.u32_or(&key("ttl_threshold"), d.ttl_threshold)?,
            net_diameter: c.u32_or(&key("net_diameter"), d.net_diameter)?,
            hello_interval: c.f64_or(&key("hello_interval"), d.hello_interval)?,
            route_lifetime: c.f64_or(&key("route_lifetime"), d.route_lifetime)?,
            local_repair: c.bool_or(&key("local_repair"), d.local_repair)?,
            gratuitous_rrep: c.bool_or(&key("gratuitous_rrep"), d.gratuitous_rrep)?,
        }),
        ProtocolConfig::Dsr(d) => ProtocolConfig::Dsr(DsrConfig {
            cache_capacity: c.u64_or(&key("cache_capacity"), d.cache_capacity as u64)? as usize,
            salvaging: c.bool_or(&key("salvaging"), d.salvaging)?,
            gratuitous_rrep: c.bool_or(&key("gratuitous_rrep"), d.gratuitous_rrep)?,
        }),
        ProtocolConfig::Fsr(d) => ProtocolConfig::Fsr(FsrConfig {
            inner_scope_hops: c.u32_or(&key("inner_scope_hops"), d.inner_scope_hops)?,
            inner_interval: c.f64_or(&key("inner_interval"), d.inner_interval)?,
            outer_interval: c.f64_or(&key("outer_interval"), d.outer_interval)?,
        }),
    };
    out.validate().map_err(|e| {
        let field = match &e {
            crate::SimError::InvalidScenario { field, .. } => field.split('.').nth(1).unwrap_or("").to_string(),
            _ => String::new(),
        };
        c.invalid(&key(&field), e)
    })?;
    Ok(Some(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Levels are node counts.
    Scalability,
    /// Levels are node speeds (m/s).
    Mobility,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Scalability => "scalability",
            Axis::Mobility => "mobility",
        }
    }
}

/// A grid of simulations: every level, protocol and replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub axis: Axis,
    pub levels: Vec<f64>,
    pub protocols: Vec<(String, ProtocolConfig)>,
    pub replications: u32,
    pub base_seed: u64,
    pub base_scenario: SimScenario,
    pub output: Option<String>,
}

impl ExperimentPlan {
    pub fn from_config(c: &Config) -> Result<Self, ConfigError> {
        let axis = match c.str_or("sweep.axis", "scalability") {
            "scalability" => Axis::Scalability,
            "mobility" => Axis::Mobility,
            other => {
                return Err(c.invalid(
                    "sweep.axis",
                    format!("expected scalability or mobility, found `{other}`"),
                ))
            }
        };
        let default_levels = match axis {
            Axis::Scalability => vec![25.0, 50.0, 75.0, 100.0],
            Axis::Mobility => vec![2.0, 7.0, 15.0, 30.0],
        };
        let levels: Vec<f64> = c.list("sweep.levels", "numbers")?.unwrap_or(default_levels);
        if levels.is_empty() {
            return Err(c.invalid("sweep.levels", "needs at least one level"));
        }
        for &l in &levels {
            let ok = match axis {
                Axis::Scalability => l >= 2.0 && l.fract() == 0.0 && l <= u32::MAX as f64,
                Axis::Mobility => l > 0.0 && l.is_finite(),
            };
            if !ok {
                return Err(c.invalid("sweep.levels", format!("`{l}` is not a valid {} level", axis.name())));
            }
        }
        let names: Vec<String> = c.list("sweep.protocols", "protocol names")?.unwrap_or_else(|| {
            crate::protocols::PROTOCOL_NAMES.iter().map(|s| s.to_string()).collect()
        });
        let mut protocols = Vec::new();
        for name in names {
            match protocol(c, &name)? {
                Some(p) => protocols.push((name, p)),
                None => return Err(c.invalid("sweep.protocols", format!("unknown protocol `{name}`"))),
            }
        }
        if protocols.is_empty() {
            return Err(c.invalid("sweep.protocols", "needs at least one protocol"));
        }
        let replications = c.u32_or("sweep.replications", 5)?;
        if replications == 0 {
            return Err(c.invalid("sweep.replications", "must be at least 1"));
        }
        Ok(ExperimentPlan {
            axis,
            levels,
            protocols,
            replications,
            base_seed: c.u64_or("sweep.base_seed", 1)?,
            base_scenario: scenario(c)?,
            output: c.raw("sweep.output").map(str::to_string),
        })
    }

    /// `base_scenario` at one level of the axis.
    pub fn scenario_at(&self, level: f64, seed: u64) -> SimScenario {
        let mut s = self.base_scenario.clone();
        s.seed = seed;
        match self.axis {
            Axis::Scalability => {
                s.node_count = level as u32;
                if let Mobility::Static { positions: Some(_) } = s.mobility {
                    s.mobility = Mobility::Static { positions: None };
                }
            }
            Axis::Mobility => match &mut s.mobility {
                Mobility::RandomWaypoint { v_min, v_max, .. } => {
                    *v_min = level;
                    *v_max = level;
                }
                Mobility::Highway { speeds } => *speeds = vec![level],
                Mobility::Static { .. } => {}
            },
        }
        s
    }

    pub fn run_count(&self) -> usize {
        self.levels.len() * self.protocols.len() * self.replications as usize
    }
}

/// 64-bit finalizer of splitmix64.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one sweep run. Protocols share the seed of their level and
/// replication, so every protocol sees the same mobility and traffic and
/// adding a protocol leaves other rows untouched.
pub fn run_seed(base: u64, level_index: usize, replication: u32) -> u64 {
    mix64(mix64(mix64(base) ^ level_index as u64) ^ replication as u64)
}
