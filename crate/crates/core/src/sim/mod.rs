//! Deterministic discrete-event simulation of a wireless ad hoc network.
//!
//! Time is kept in integer nanoseconds. A run is a pure function of the
//! scenario, the protocol configuration and the seed.

pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod scenario;
pub mod trace;

use std::fmt;
use std::ops::{Add, Sub};

pub use engine::{run, Agent, Ctx, Dest, DropReason, Message, Packet, PacketKind, RunOptions, SimOutput, Simulator};
pub use metrics::SimMetrics;
pub use mobility::MobilityState;
pub use scenario::{Field, Mobility, Radio, RadioPreset, SimScenario, Traffic};
pub use trace::{read_trace, write_trace, TraceEvent, TraceRecord};

pub type NodeId = u32;

/// Simulated time in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(s: f64) -> SimTime {
        SimTime((s * 1e9).round().max(0.0) as u64)
    }

    pub fn from_millis(ms: u64) -> SimTime {
        SimTime(ms * 1_000_000)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn nanos(self) -> u64 {
        self.0
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_formats_with_nanosecond_precision() {
        assert_eq!(SimTime(2_048_000).to_string(), "0.002048000");
        assert_eq!(SimTime::from_secs(90.5).to_string(), "90.500000000");
        assert_eq!(SimTime::from_secs(0.03).0, 30_000_000);
    }
}
