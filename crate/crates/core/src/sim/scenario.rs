use std::fmt;
use std::str::FromStr;

use super::NodeId;
use crate::error::{check_scenario, SimError};

/// Lateral distance between highway lanes (m).
pub const LANE_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Rect { width: f64, height: f64 },
    /// A straight road of `lanes` parallel lanes, wrapping at both ends.
    Strip { length: f64, lanes: u32 },
}

impl Field {
    pub fn extent(&self) -> (f64, f64) {
        match *self {
            Field::Rect { width, height } => (width, height),
            Field::Strip { length, lanes } => (length, (lanes.max(1) - 1) as f64 * LANE_WIDTH),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mobility {
    /// Fixed positions; `None` scatters nodes uniformly over the field.
    Static { positions: Option<Vec<(f64, f64)>> },
    RandomWaypoint { v_min: f64, v_max: f64, pause: f64 },
    /// Each node keeps one speed drawn from `speeds`; lane `k` runs east
    /// when `k` is even and west otherwise.
    Highway { speeds: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioPreset {
    Mac80211,
    Mac80211p,
}

impl RadioPreset {
    pub fn name(self) -> &'static str {
        match self {
            RadioPreset::Mac80211 => "mac80211",
            RadioPreset::Mac80211p => "mac80211p",
        }
    }
}

impl fmt::Display for RadioPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RadioPreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mac80211" => Ok(RadioPreset::Mac80211),
            "mac80211p" => Ok(RadioPreset::Mac80211p),
            other => Err(format!("unknown radio preset `{other}` (expected mac80211 or mac80211p)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radio {
    pub preset: RadioPreset,
    /// Range (m).
    pub range: f64,
    /// Bit rate (bit/s).
    pub bitrate: f64,
    /// Independent per-receiver loss probability.
    pub loss_prob: f64,
}

impl Radio {
    pub fn preset(preset: RadioPreset) -> Radio {
        let (range, bitrate) = match preset {
            RadioPreset::Mac80211 => (250.0, 2e6),
            RadioPreset::Mac80211p => (300.0, 6e6),
        };
        Radio {
            preset,
            range,
            bitrate,
            loss_prob: 0.0,
        }
    }
}

impl Default for Radio {
    fn default() -> Self {
        Radio::preset(RadioPreset::Mac80211)
    }
}

/// Constant-bit-rate flows.
#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub flows: Vec<(NodeId, NodeId)>,
    /// Extra source/destination pairs drawn at random from the traffic stream.
    pub random_flows: u32,
    pub packet_bytes: u32,
    /// Gap between packets of one flow (s).
    pub interval: f64,
    /// First packet time (s).
    pub start: f64,
    /// No packets are generated at or after this time; defaults to the run duration.
    pub stop: Option<f64>,
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic {
            flows: Vec::new(),
            random_flows: 0,
            packet_bytes: 512,
            interval: 0.03,
            start: 0.0,
            stop: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub node_count: u32,
    pub field: Field,
    pub mobility: Mobility,
    pub radio: Radio,
    pub traffic: Traffic,
    /// Simulated time (s).
    pub duration: f64,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.node_count;
        check_scenario("node_count", n >= 2, format!("need at least 2 nodes, got {n}"))?;
        check_scenario(
            "duration",
            self.duration > 0.0 && self.duration.is_finite(),
            format!("must be positive, got {}", self.duration),
        )?;
        match self.field {
            Field::Rect { width, height } => check_scenario(
                "field",
                width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite(),
                "rectangle sides must be positive",
            )?,
            Field::Strip { length, lanes } => check_scenario(
                "field",
                length > 0.0 && length.is_finite() && lanes >= 1,
                "strip needs a positive length and at least one lane",
            )?,
        }
        match &self.mobility {
            Mobility::Static { positions: Some(p) } => {
                check_scenario(
                    "mobility.positions",
                    p.len() == n as usize,
                    format!("{} positions for {n} nodes", p.len()),
                )?;
                check_scenario(
                    "mobility.positions",
                    p.iter().all(|&(x, y)| x.is_finite() && y.is_finite()),
                    "positions must be finite",
                )?;
            }
            Mobility::Static { positions: None } => {}
            Mobility::RandomWaypoint { v_min, v_max, pause } => {
                check_scenario("mobility.model", matches!(self.field, Field::Rect { .. }), "random waypoint needs a rectangular field")?;
                check_scenario(
                    "mobility.v_max",
                    *v_min >= 0.0 && v_max >= v_min && *v_max > 0.0 && v_max.is_finite(),
                    "need 0 <= v_min <= v_max and v_max > 0",
                )?;
                check_scenario("mobility.pause", *pause >= 0.0 && pause.is_finite(), "must be non-negative")?;
            }
            Mobility::Highway { speeds } => {
                check_scenario("mobility.model", matches!(self.field, Field::Strip { .. }), "highway mobility needs a strip field")?;
                check_scenario(
                    "mobility.speeds",
                    !speeds.is_empty() && speeds.iter().all(|v| *v >= 0.0 && v.is_finite()),
                    "need at least one non-negative speed",
                )?;
            }
        }
        let r = &self.radio;
        check_scenario("radio.range", r.range > 0.0 && r.range.is_finite(), "must be positive")?;
        check_scenario("radio.bitrate", r.bitrate > 0.0 && r.bitrate.is_finite(), "must be positive")?;
        check_scenario("radio.loss_prob", (0.0..=1.0).contains(&r.loss_prob), "must lie in [0, 1]")?;
        let t = &self.traffic;
        check_scenario("traffic.packet_bytes", t.packet_bytes > 0, "must be positive")?;
        check_scenario("traffic.interval", t.interval > 0.0 && t.interval.is_finite(), "must be positive")?;
        check_scenario("traffic.start", t.start >= 0.0 && t.start.is_finite(), "must be non-negative")?;
        if let Some(stop) = t.stop {
            check_scenario("traffic.stop", stop >= t.start, "must not precede traffic.start")?;
        }
        for &(s, d) in &t.flows {
            check_scenario("traffic.flows", s < n && d < n, format!("flow {s}->{d} names a node outside 0..{n}"))?;
            check_scenario("traffic.flows", s != d, format!("flow {s}->{d} loops back to its source"))?;
        }
        check_scenario(
            "traffic.random_flows",
            (t.random_flows as u64) <= n as u64 * (n as u64 - 1),
            "more flows than ordered node pairs",
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimScenario {
        SimScenario {
            node_count: 2,
            field: Field::Rect {
                width: 100.0,
                height: 100.0,
            },
            mobility: Mobility::Static { positions: None },
            radio: Radio::default(),
            traffic: Traffic::default(),
            duration: 10.0,
            seed: 1,
        }
    }

    #[test]
    fn presets() {
        let r = Radio::preset(RadioPreset::Mac80211p);
        assert_eq!((r.range, r.bitrate), (300.0, 6e6));
        assert_eq!("mac80211".parse::<RadioPreset>().unwrap(), RadioPreset::Mac80211);
        assert!("wifi".parse::<RadioPreset>().is_err());
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(base().validate().is_ok());
        let mut s = base();
        s.node_count = 1;
        assert!(s.validate().is_err());
        let mut s = base();
        s.radio.loss_prob = 1.5;
        assert!(s.validate().is_err());
        let mut s = base();
        s.traffic.flows = vec![(0, 0)];
        assert!(s.validate().is_err());
        let mut s = base();
        s.traffic.flows = vec![(0, 5)];
        assert!(s.validate().is_err());
        let mut s = base();
        s.mobility = Mobility::Highway { speeds: vec![30.0] };
        assert!(s.validate().is_err());
        let mut s = base();
        s.traffic.interval = 0.0;
        assert!(s.validate().is_err());
    }
}
