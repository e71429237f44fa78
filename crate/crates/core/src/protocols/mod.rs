//! Routing agents for the simulator and a name-based front door to them.

pub mod aodv;
pub mod dsr;
pub mod fsr;

use std::collections::BTreeMap;
use std::fmt;

pub use aodv::{ers_ttl_schedule, Aodv, AodvConfig};
pub use dsr::{Dsr, DsrConfig, RouteCache};
pub use fsr::{Fsr, FsrConfig};

use crate::error::SimError;
use crate::sim::{run, NodeId, RunOptions, SimMetrics, SimScenario, TraceRecord};

/// Names accepted on the command line and in plans.
pub const PROTOCOL_NAMES: [&str; 6] = ["aodv", "aodv_mod", "dsr", "dsr_mod", "fsr", "fsr_mod"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolConfig {
    Aodv(AodvConfig),
    Dsr(DsrConfig),
    Fsr(FsrConfig),
}

impl ProtocolConfig {
    /// Default or modified parameter set for one of [`PROTOCOL_NAMES`].
    pub fn named(name: &str) -> Option<ProtocolConfig> {
        Some(match name {
            "aodv" => ProtocolConfig::Aodv(AodvConfig::default()),
            "aodv_mod" => ProtocolConfig::Aodv(AodvConfig::modified()),
            "dsr" => ProtocolConfig::Dsr(DsrConfig::default()),
            "dsr_mod" => ProtocolConfig::Dsr(DsrConfig::modified()),
            "fsr" => ProtocolConfig::Fsr(FsrConfig::default()),
            "fsr_mod" => ProtocolConfig::Fsr(FsrConfig::modified()),
            _ => return None,
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ProtocolConfig::Aodv(_) => "aodv",
            ProtocolConfig::Dsr(_) => "dsr",
            ProtocolConfig::Fsr(_) => "fsr",
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            ProtocolConfig::Aodv(c) => c.validate(),
            ProtocolConfig::Dsr(c) => c.validate(),
            ProtocolConfig::Fsr(c) => c.validate(),
        }
    }
}

/// Protocol-specific counters gathered over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolStats {
    Aodv {
        rreq_originated: u64,
        local_repairs: u64,
    },
    Dsr {
        /// Largest cache seen at any node at any time.
        max_cache_occupancy: usize,
        evictions: u64,
        salvaged: u64,
        /// Most discoveries any node started for a single target.
        max_discoveries_per_target: u32,
    },
    Fsr,
}

impl fmt::Display for ProtocolStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolStats::Aodv {
                rreq_originated,
                local_repairs,
            } => write!(f, "rreq_originated={rreq_originated} local_repairs={local_repairs}"),
            ProtocolStats::Dsr {
                max_cache_occupancy,
                evictions,
                salvaged,
                max_discoveries_per_target,
            } => write!(
                f,
                "max_cache_occupancy={max_cache_occupancy} evictions={evictions} salvaged={salvaged} max_discoveries_per_target={max_discoveries_per_target}"
            ),
            ProtocolStats::Fsr => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub metrics: SimMetrics,
    pub trace: Vec<TraceRecord>,
    pub flows: Vec<(NodeId, NodeId)>,
    pub data_in_flight: u64,
    pub stats: ProtocolStats,
}

/// Runs `scenario` with every node running the configured protocol.
pub fn simulate(scenario: &SimScenario, protocol: &ProtocolConfig, opts: RunOptions) -> Result<ProtocolRun, SimError> {
    protocol.validate()?;
    let n = scenario.node_count;
    match *protocol {
        ProtocolConfig::Aodv(cfg) => {
            let out = run(scenario, (0..n).map(|id| Aodv::new(id, cfg)).collect(), opts)?;
            let stats = ProtocolStats::Aodv {
                rreq_originated: out.agents.iter().map(|a| a.stats.rreq_originated).sum(),
                local_repairs: out.agents.iter().map(|a| a.stats.local_repairs).sum(),
            };
            Ok(ProtocolRun {
                metrics: out.metrics,
                trace: out.trace,
                flows: out.flows,
                data_in_flight: out.data_in_flight,
                stats,
            })
        }
        ProtocolConfig::Dsr(cfg) => {
            let out = run(scenario, (0..n).map(|id| Dsr::new(id, cfg)).collect(), opts)?;
            let stats = ProtocolStats::Dsr {
                max_cache_occupancy: out.agents.iter().map(|a| a.cache().max_occupancy).max().unwrap_or(0),
                evictions: out.agents.iter().map(|a| a.cache().evictions).sum(),
                salvaged: out.agents.iter().map(|a| a.stats.salvaged).sum(),
                max_discoveries_per_target: out
                    .agents
                    .iter()
                    .flat_map(|a| a.stats.discoveries.values().copied())
                    .max()
                    .unwrap_or(0),
            };
            Ok(ProtocolRun {
                metrics: out.metrics,
                trace: out.trace,
                flows: out.flows,
                data_in_flight: out.data_in_flight,
                stats,
            })
        }
        ProtocolConfig::Fsr(cfg) => {
            let out = run(scenario, (0..n).map(|id| Fsr::new(id, cfg)).collect(), opts)?;
            Ok(ProtocolRun {
                metrics: out.metrics,
                trace: out.trace,
                flows: out.flows,
                data_in_flight: out.data_in_flight,
                stats: ProtocolStats::Fsr,
            })
        }
    }
}

/// Counts of control transmissions by subtype, handy for inspecting traces.
pub fn control_subtypes(trace: &[TraceRecord]) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for r in trace {
        if r.event == crate::sim::TraceEvent::Tx && r.kind == crate::sim::PacketKind::Control {
            *out.entry(r.subtype.clone()).or_default() += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in PROTOCOL_NAMES {
            let cfg = ProtocolConfig::named(name).unwrap();
            assert!(name.starts_with(cfg.family()));
            cfg.validate().unwrap();
        }
        assert!(ProtocolConfig::named("olsr").is_none());
    }
}
