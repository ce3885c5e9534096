//! Scenario configuration: flat `key = value` text with `#` comments,
//! plus command-line overrides.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::aodv::AodvConfig;
use crate::channel::RadioConfig;
use crate::dsdv::DsdvConfig;
use crate::engine::SimTime;
use crate::packet::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Aodv,
    Dsdv,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Aodv => "aodv",
            Protocol::Dsdv => "dsdv",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "aodv" => Ok(Protocol::Aodv),
            "dsdv" => Ok(Protocol::Dsdv),
            _ => Err(format!("expected `aodv` or `dsdv`, got `{s}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl ConfigError {
    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) | ConfigError::InvalidValue { key: k, .. } => Some(k),
            ConfigError::Syntax { .. } => None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Every parameter of one run. Durations are seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub nodes: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub range: f64,
    pub bandwidth: f64,
    pub horizon: f64,
    pub pause_time: f64,
    pub speed: f64,
    pub flows: usize,
    pub rate: f64,
    pub packet_size: u32,
    pub flow_start: f64,
    /// Explicit (source, sink) pairs; replaces the random draw when set.
    pub flow_pairs: Option<Vec<(NodeId, NodeId)>>,
    pub seed: u64,
    pub broadcast_jitter: f64,
    pub collisions: bool,
    pub ifq_capacity: usize,
    pub propagation_delay: f64,
    pub ttl: u8,
    pub dsdv_update_interval: f64,
    pub dsdv_update_jitter: f64,
    pub dsdv_trigger_interval: f64,
    pub dsdv_trigger_jitter: f64,
    pub aodv_active_route_timeout: f64,
    pub aodv_rreq_retries: u32,
    pub aodv_retry_wait: f64,
    pub aodv_reverse_route_lifetime: f64,
    pub aodv_my_route_timeout: f64,
    pub aodv_pending_capacity: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            protocol: Protocol::Aodv,
            nodes: 50,
            area_width: 500.0,
            area_height: 500.0,
            range: 250.0,
            bandwidth: 2_000_000.0,
            horizon: 200.0,
            pause_time: 0.0,
            speed: 25.0,
            flows: 10,
            rate: 4.0,
            packet_size: 512,
            flow_start: 10.0,
            flow_pairs: None,
            seed: 1,
            broadcast_jitter: 0.01,
            collisions: false,
            ifq_capacity: 50,
            propagation_delay: 0.000_001,
            ttl: 32,
            dsdv_update_interval: 15.0,
            dsdv_update_jitter: 1.0,
            dsdv_trigger_interval: 1.0,
            dsdv_trigger_jitter: 0.1,
            aodv_active_route_timeout: 3.0,
            aodv_rreq_retries: 2,
            aodv_retry_wait: 1.0,
            aodv_reverse_route_lifetime: 3.0,
            aodv_my_route_timeout: 6.0,
            aodv_pending_capacity: 64,
        }
    }
}

/// Every recognised key, in documentation order.
pub const KEYS: &[&str] = &[
    "protocol",
    "nodes",
    "area_width",
    "area_height",
    "range",
    "bandwidth",
    "horizon",
    "pause_time",
    "speed",
    "flows",
    "rate",
    "packet_size",
    "flow_start",
    "flow_pairs",
    "seed",
    "broadcast_jitter",
    "collisions",
    "ifq_capacity",
    "propagation_delay",
    "ttl",
    "dsdv_update_interval",
    "dsdv_update_jitter",
    "dsdv_trigger_interval",
    "dsdv_trigger_jitter",
    "aodv_active_route_timeout",
    "aodv_rreq_retries",
    "aodv_retry_wait",
    "aodv_reverse_route_lifetime",
    "aodv_my_route_timeout",
    "aodv_pending_capacity",
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(key, v)?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn pairs(key: &str, v: &str) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|p| {
            let (a, b) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| invalid(key, format!("expected `src:dst`, got `{p}`")))?;
            Ok((NodeId(num(key, a.trim())?), NodeId(num(key, b.trim())?)))
        })
        .collect()
}

impl ScenarioConfig {
    /// Sets one key from its textual value. Invariants are checked later by
    /// [`ScenarioConfig::validate`].
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let v = v.trim();
        match key {
            "protocol" => self.protocol = v.parse().map_err(|m: String| invalid(key, m))?,
            "nodes" => self.nodes = num(key, v)?,
            "area_width" => self.area_width = real(key, v)?,
            "area_height" => self.area_height = real(key, v)?,
            "range" => self.range = real(key, v)?,
            "bandwidth" => self.bandwidth = real(key, v)?,
            "horizon" => self.horizon = real(key, v)?,
            "pause_time" => self.pause_time = real(key, v)?,
            "speed" => self.speed = real(key, v)?,
            "flows" => self.flows = num(key, v)?,
            "rate" => self.rate = real(key, v)?,
            "packet_size" => self.packet_size = num(key, v)?,
            "flow_start" => self.flow_start = real(key, v)?,
            "flow_pairs" => self.flow_pairs = Some(pairs(key, v)?),
            "seed" => self.seed = num(key, v)?,
            "broadcast_jitter" => self.broadcast_jitter = real(key, v)?,
            "collisions" => self.collisions = boolean(key, v)?,
            "ifq_capacity" => self.ifq_capacity = num(key, v)?,
            "propagation_delay" => self.propagation_delay = real(key, v)?,
            "ttl" => self.ttl = num(key, v)?,
            "dsdv_update_interval" => self.dsdv_update_interval = real(key, v)?,
            "dsdv_update_jitter" => self.dsdv_update_jitter = real(key, v)?,
            "dsdv_trigger_interval" => self.dsdv_trigger_interval = real(key, v)?,
            "dsdv_trigger_jitter" => self.dsdv_trigger_jitter = real(key, v)?,
            "aodv_active_route_timeout" => self.aodv_active_route_timeout = real(key, v)?,
            "aodv_rreq_retries" => self.aodv_rreq_retries = num(key, v)?,
            "aodv_retry_wait" => self.aodv_retry_wait = real(key, v)?,
            "aodv_reverse_route_lifetime" => self.aodv_reverse_route_lifetime = real(key, v)?,
            "aodv_my_route_timeout" => self.aodv_my_route_timeout = real(key, v)?,
            "aodv_pending_capacity" => self.aodv_pending_capacity = num(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("range", self.range),
            ("bandwidth", self.bandwidth),
            ("horizon", self.horizon),
            ("speed", self.speed),
            ("rate", self.rate),
            ("dsdv_update_interval", self.dsdv_update_interval),
            ("aodv_retry_wait", self.aodv_retry_wait),
            ("aodv_active_route_timeout", self.aodv_active_route_timeout),
        ];
        for (k, x) in positive {
            if x <= 0.0 {
                return Err(invalid(k, "must be positive"));
            }
        }
        let non_negative = [
            ("pause_time", self.pause_time),
            ("flow_start", self.flow_start),
            ("broadcast_jitter", self.broadcast_jitter),
            ("propagation_delay", self.propagation_delay),
            ("dsdv_update_jitter", self.dsdv_update_jitter),
            ("dsdv_trigger_interval", self.dsdv_trigger_interval),
            ("dsdv_trigger_jitter", self.dsdv_trigger_jitter),
            ("aodv_reverse_route_lifetime", self.aodv_reverse_route_lifetime),
            ("aodv_my_route_timeout", self.aodv_my_route_timeout),
        ];
        for (k, x) in non_negative {
            if x < 0.0 {
                return Err(invalid(k, "must not be negative"));
            }
        }
        let at_least_one = [
            ("nodes", self.nodes),
            ("packet_size", self.packet_size as usize),
            ("ifq_capacity", self.ifq_capacity),
            ("ttl", self.ttl as usize),
            ("aodv_pending_capacity", self.aodv_pending_capacity),
        ];
        for (k, x) in at_least_one {
            if x < 1 {
                return Err(invalid(k, "must be at least 1"));
            }
        }
        if u32::try_from(self.nodes).is_err() {
            return Err(invalid("nodes", "too many nodes"));
        }
        let flow_count = self.flow_pairs.as_ref().map_or(self.flows, Vec::len);
        if flow_count > 0 && self.flow_start >= self.horizon {
            return Err(invalid("flow_start", "must be before the horizon"));
        }
        match &self.flow_pairs {
            None => {
                if self.flows > self.nodes.saturating_mul(self.nodes.saturating_sub(1)) {
                    return Err(invalid("flows", "more flows than distinct node pairs"));
                }
            }
            Some(list) => {
                let mut seen = std::collections::HashSet::new();
                for &(a, b) in list {
                    if a.index() >= self.nodes || b.index() >= self.nodes {
                        return Err(invalid("flow_pairs", format!("node out of range in {a}:{b}")));
                    }
                    if a == b {
                        return Err(invalid("flow_pairs", format!("source equals sink in {a}:{b}")));
                    }
                    if !seen.insert((a, b)) {
                        return Err(invalid("flow_pairs", format!("duplicate pair {a}:{b}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn horizon_time(&self) -> SimTime {
        SimTime::from_secs_f64(self.horizon)
    }

    pub fn radio(&self) -> RadioConfig {
        RadioConfig {
            range: self.range,
            bandwidth: self.bandwidth,
            broadcast_jitter_max: SimTime::from_secs_f64(self.broadcast_jitter),
            collisions_enabled: self.collisions,
            propagation: SimTime::from_secs_f64(self.propagation_delay),
            queue_capacity: self.ifq_capacity,
        }
    }

    pub fn dsdv(&self) -> DsdvConfig {
        DsdvConfig {
            update_interval: SimTime::from_secs_f64(self.dsdv_update_interval),
            update_jitter: SimTime::from_secs_f64(self.dsdv_update_jitter),
            trigger_min_interval: SimTime::from_secs_f64(self.dsdv_trigger_interval),
            trigger_jitter: SimTime::from_secs_f64(self.dsdv_trigger_jitter),
        }
    }

    pub fn aodv(&self) -> AodvConfig {
        AodvConfig {
            active_route_timeout: SimTime::from_secs_f64(self.aodv_active_route_timeout),
            rreq_retries: self.aodv_rreq_retries,
            retry_wait: SimTime::from_secs_f64(self.aodv_retry_wait),
            reverse_route_lifetime: SimTime::from_secs_f64(self.aodv_reverse_route_lifetime),
            my_route_timeout: SimTime::from_secs_f64(self.aodv_my_route_timeout),
            pending_capacity: self.aodv_pending_capacity,
        }
    }

    /// Defaults, then the file's settings, then the overrides; validated.
    pub fn from_sources(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut c = ScenarioConfig::default();
        if let Some(text) = file {
            for (k, v) in parse_config_text(text)? {
                c.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Accepts `--key value`, `--key=value` and `key=value` words.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        if let Some(flag) = arg.strip_prefix("--") {
            if let Some((k, v)) = flag.split_once('=') {
                out.push((k.to_string(), v.to_string()));
            } else {
                let v = it.next().ok_or_else(|| invalid(flag, "missing value"))?;
                out.push((flag.to_string(), v.clone()));
            }
        } else if let Some((k, v)) = arg.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            return Err(ConfigError::Syntax {
                line: 0,
                message: format!("unexpected argument `{arg}`"),
            });
        }
    }
    Ok(out)
}
