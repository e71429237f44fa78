mod common;

use std::collections::BTreeSet;

use common::*;
use stripnet_core::protocols::{
    control_subtypes, ers_ttl_schedule, simulate, Aodv, AodvConfig, DsrConfig, Fsr, FsrConfig, ProtocolConfig,
    ProtocolStats, PROTOCOL_NAMES,
};
use stripnet_core::sim::{
    run, Field, Mobility, NodeId, PacketKind, RunOptions, SimScenario, SimTime, Simulator, TraceEvent, TraceRecord,
};

const TRACE: RunOptions = RunOptions { trace: true };

fn mobile(nodes: u32, v_max: f64, flows: u32, duration: f64, seed: u64) -> SimScenario {
    let mut s = static_scenario(vec![(0.0, 0.0); nodes as usize], Vec::new(), 0.25, duration);
    s.field = Field::Rect {
        width: 1000.0,
        height: 1000.0,
    };
    s.mobility = Mobility::RandomWaypoint {
        v_min: 1.0,
        v_max,
        pause: 0.0,
    };
    s.traffic.random_flows = flows;
    s.seed = seed;
    s
}

fn quiet_aodv(cfg: AodvConfig) -> ProtocolConfig {
    ProtocolConfig::Aodv(AodvConfig {
        hello_interval: 0.0,
        ..cfg
    })
}

fn tx_by(trace: &[TraceRecord], node: NodeId, prefix: &str) -> Vec<String> {
    trace
        .iter()
        .filter(|r| r.event == TraceEvent::Tx && r.node == node && r.subtype.starts_with(prefix))
        .map(|r| r.subtype.clone())
        .collect()
}

#[test]
fn aodv_three_node_discovery_costs_four_transmissions() {
    let s = static_scenario(line(3, 200.0), vec![(0, 2)], 1.0, 10.0);
    let out = simulate(&s, &quiet_aodv(AodvConfig::modified()), TRACE).unwrap();
    assert_eq!(out.metrics.data_sent, 10);
    assert_eq!(out.metrics.data_delivered, 10);
    assert_eq!(out.metrics.control_transmissions, 4);
    assert_eq!(out.metrics.nrl, Some(0.4));
    let control: Vec<(NodeId, &str)> = out
        .trace
        .iter()
        .filter(|r| r.event == TraceEvent::Tx && r.kind == PacketKind::Control)
        .map(|r| (r.node, r.subtype.as_str()))
        .collect();
    assert_eq!(control, [(0, "rreq:ttl=2"), (1, "rreq:ttl=1"), (2, "rrep"), (1, "rrep")]);
    assert!(audit(&out).is_empty(), "{:?}", audit(&out));
}

#[test]
fn aodv_duplicate_requests_are_not_reflooded() {
    // Diamond: 0 reaches 3 through both 1 and 2.
    let pos = vec![(0.0, 150.0), (200.0, 10.0), (200.0, 290.0), (400.0, 150.0)];
    let s = static_scenario(pos, vec![(0, 3)], 1.0, 1.0);
    let cfg = AodvConfig {
        hello_interval: 0.0,
        ..AodvConfig::modified()
    };
    let out = run(&s, (0..4).map(|i| Aodv::new(i, cfg)).collect(), TRACE).unwrap();
    let rreq_tx: Vec<NodeId> = out
        .trace
        .iter()
        .filter(|r| r.event == TraceEvent::Tx && r.subtype.starts_with("rreq"))
        .map(|r| r.node)
        .collect();
    assert_eq!(rreq_tx, [0, 1, 2]);
    assert_eq!(out.agents[0].stats.duplicate_rreqs, 2);
    assert_eq!(out.agents[3].stats.duplicate_rreqs, 1);
    assert_eq!(out.agents[3].stats.rrep_sent, 1);
    assert_eq!(out.metrics.data_delivered, 1);
}

#[test]
fn aodv_request_reaches_exactly_the_ring() {
    // Eight nodes in a line plus an unreachable destination.
    let mut pos = line(8, 200.0);
    pos.push((5000.0, 0.0));
    for ttl in 1..=6u32 {
        let cfg = AodvConfig {
            ttl_start: ttl,
            ttl_threshold: ttl,
            ..AodvConfig::default()
        };
        let s = static_scenario(pos.clone(), vec![(0, 8)], 10.0, cfg.ring_timeout(ttl).as_secs() - 0.01);
        let out = simulate(&s, &quiet_aodv(cfg), TRACE).unwrap();
        let reached: BTreeSet<NodeId> = out
            .trace
            .iter()
            .filter(|r| r.event == TraceEvent::Rx && r.subtype.starts_with("rreq") && r.node != 0)
            .map(|r| r.node)
            .collect();
        let senders: BTreeSet<NodeId> = out
            .trace
            .iter()
            .filter(|r| r.event == TraceEvent::Tx && r.subtype.starts_with("rreq"))
            .map(|r| r.node)
            .collect();
        assert_eq!(reached, (1..=ttl).collect(), "ttl {ttl}");
        assert_eq!(senders, (0..ttl).collect(), "ttl {ttl}");
    }
}

#[test]
fn aodv_schedules_appear_in_trace() {
    let mut pos = line(3, 200.0);
    pos.push((5000.0, 0.0));
    let s = static_scenario(pos, vec![(0, 3)], 100.0, 40.0);
    for (name, want) in [("aodv_mod", vec![2, 6, 35]), ("aodv", vec![1, 3, 5, 7, 35])] {
        let cfg = ProtocolConfig::named(name).unwrap();
        let ProtocolConfig::Aodv(a) = cfg else { unreachable!() };
        assert_eq!(ers_ttl_schedule(&a), want);
        let out = simulate(&s, &cfg, TRACE).unwrap();
        let mut seen: Vec<u32> = tx_by(&out.trace, 0, "rreq:ttl=")
            .iter()
            .map(|t| t["rreq:ttl=".len()..].parse().unwrap())
            .collect();
        // Two retries of the network-wide ring follow the schedule.
        assert_eq!(seen.split_off(want.len()), [35, 35], "{name}");
        assert_eq!(seen, want, "{name}");
        let drops = out
            .trace
            .iter()
            .filter(|r| r.kind == PacketKind::Data && r.event.to_string() == "drop-noroute")
            .count();
        assert_eq!(drops, 1);
        assert!(audit(&out).is_empty(), "{:?}", audit(&out));
    }
}

#[test]
fn aodv_hello_keeps_neighbors_and_counts_as_control() {
    let s = static_scenario(line(3, 200.0), vec![(0, 2)], 1.0, 10.0);
    let out = simulate(&s, &ProtocolConfig::named("aodv_mod").unwrap(), TRACE).unwrap();
    assert_eq!(out.metrics.data_delivered, 10);
    let subtypes = control_subtypes(&out.trace);
    assert_eq!(subtypes["hello"], 30);
    assert!(audit(&out).is_empty(), "{:?}", audit(&out));
}

#[test]
fn aodv_ers_floods_less_than_full_flooding_for_a_near_pair() {
    let pos = random_connected(30, 1000.0, 5);
    let adj = unit_disk(&pos, RANGE);
    let near = *adj[&0].iter().next().unwrap();
    let s = static_scenario(pos, vec![(0, near)], 1.0, 5.0);
    let ers = simulate(&s, &quiet_aodv(AodvConfig::default()), TRACE).unwrap();
    let flood = simulate(&s, &quiet_aodv(AodvConfig::flooding()), TRACE).unwrap();
    let count = |run: &stripnet_core::protocols::ProtocolRun| {
        run.trace
            .iter()
            .filter(|r| r.event == TraceEvent::Tx && r.subtype.starts_with("rreq"))
            .count()
    };
    assert!(count(&ers) < count(&flood), "{} vs {}", count(&ers), count(&flood));
    assert_eq!(ers.metrics.data_delivered, 5);
    assert_eq!(flood.metrics.data_delivered, 5);
}

#[test]
fn dsr_cache_never_exceeds_capacity() {
    let s = mobile(30, 15.0, 10, 60.0, 3);
    let cfg = ProtocolConfig::Dsr(DsrConfig {
        cache_capacity: 8,
        ..DsrConfig::default()
    });
    let out = simulate(&s, &cfg, TRACE).unwrap();
    let ProtocolStats::Dsr {
        max_cache_occupancy,
        evictions,
        ..
    } = out.stats
    else {
        unreachable!()
    };
    assert_eq!(max_cache_occupancy, 8);
    assert!(evictions > 0);
    assert!(audit(&out).is_empty(), "{:?}", audit(&out));
}

#[test]
fn dsr_unbounded_cache_discovers_once_on_static_topology() {
    let pos = random_connected(12, 700.0, 11);
    let flows = vec![(0, 11), (3, 7), (5, 0), (11, 0), (8, 2)];
    let s = static_scenario(pos, flows, 0.5, 60.0);
    let cfg = ProtocolConfig::Dsr(DsrConfig {
        cache_capacity: usize::MAX,
        ..DsrConfig::default()
    });
    let out = simulate(&s, &cfg, TRACE).unwrap();
    let ProtocolStats::Dsr {
        max_discoveries_per_target,
        evictions,
        ..
    } = out.stats
    else {
        unreachable!()
    };
    assert!(max_discoveries_per_target <= 1);
    assert_eq!(evictions, 0);
    assert_eq!(out.metrics.data_delivered, out.metrics.data_sent - out.data_in_flight);
    assert!(looping_packets(&out.trace).is_empty());
}

#[test]
fn dsr_salvaging_reroutes_packets() {
    let s = mobile(40, 20.0, 10, 120.0, 8);
    let salvaged = |on: bool| {
        let cfg = ProtocolConfig::Dsr(DsrConfig {
            salvaging: on,
            ..DsrConfig::default()
        });
        let out = simulate(&s, &cfg, TRACE).unwrap();
        assert!(audit(&out).is_empty(), "{:?}", audit(&out));
        match out.stats {
            ProtocolStats::Dsr { salvaged, .. } => salvaged,
            _ => unreachable!(),
        }
    };
    assert!(salvaged(true) > 0);
    assert_eq!(salvaged(false), 0);
}

/// Runs FSR on a static layout and compares every node's table with the
/// offline oracle at `at`.
fn fsr_tables_match(pos: Vec<(f64, f64)>, cfg: FsrConfig, at: f64) -> Result<(), String> {
    let n = pos.len() as u32;
    let adj = unit_disk(&pos, RANGE);
    let s = static_scenario(pos, Vec::new(), 1.0, at + 1.0);
    let mut sim = Simulator::new(&s, (0..n).map(|i| Fsr::new(i, cfg)).collect(), TRACE).unwrap();
    sim.init().unwrap();
    sim.run_until(SimTime::from_secs(at)).unwrap();
    let now = sim.now();
    for (i, agent) in sim.agents().iter().enumerate() {
        let mut agent = agent.clone();
        let got = agent.routes(now).clone();
        let want = expected_table(i as NodeId, &adj);
        if got != want {
            return Err(format!("node {i}: got {got:?}, want {want:?}"));
        }
    }
    Ok(())
}

#[test]
fn fsr_matches_shortest_paths_on_random_graph() {
    let pos = random_connected(8, 600.0, 42);
    for cfg in [FsrConfig::default(), FsrConfig::modified()] {
        fsr_tables_match(pos.clone(), cfg, 2.0 * cfg.outer_interval + 0.1).unwrap();
    }
}

#[test]
fn fsr_ring_converges_within_two_outer_rounds() {
    let ring = vec![(0.0, 0.0), (200.0, 0.0), (200.0, 200.0), (0.0, 200.0)];
    let adj = unit_disk(&ring, RANGE);
    assert!(adj.values().all(|n| n.len() == 2));
    for cfg in [FsrConfig::default(), FsrConfig::modified()] {
        fsr_tables_match(ring.clone(), cfg, 2.0 * cfg.outer_interval + 0.1).unwrap();
    }
    // Opposite corners are two hops apart and tie on the first hop.
    assert_eq!(expected_table(0, &adj)[&2], (1, 2));
}

#[test]
fn fsr_delivers_once_converged() {
    let pos = random_connected(10, 600.0, 9);
    let mut s = static_scenario(pos, vec![(0, 9), (9, 0), (4, 6)], 0.5, 60.0);
    s.traffic.start = 31.0;
    let out = simulate(&s, &ProtocolConfig::named("fsr").unwrap(), TRACE).unwrap();
    assert!(out.metrics.data_sent > 0);
    assert_eq!(out.metrics.data_delivered, out.metrics.data_sent - out.data_in_flight);
    assert!(out.data_in_flight <= 3);
    assert!(looping_packets(&out.trace).is_empty());
    assert!(audit(&out).is_empty(), "{:?}", audit(&out));
}

#[test]
fn modified_fsr_sends_more_control() {
    let s = mobile(20, 10.0, 4, 90.0, 21);
    let default = simulate(&s, &ProtocolConfig::named("fsr").unwrap(), TRACE).unwrap();
    let modified = simulate(&s, &ProtocolConfig::named("fsr_mod").unwrap(), TRACE).unwrap();
    assert!(modified.metrics.control_transmissions > default.metrics.control_transmissions);
    let subtypes = control_subtypes(&modified.trace);
    assert!(subtypes.contains_key("lsu:inner") && subtypes.contains_key("lsu:outer"));
}

#[test]
fn static_runs_are_loop_free() {
    let pos = random_connected(15, 800.0, 77);
    let mut s = static_scenario(pos, vec![(0, 14), (14, 1), (7, 3), (2, 12)], 0.2, 80.0);
    s.traffic.start = 31.0;
    for name in PROTOCOL_NAMES {
        let out = simulate(&s, &ProtocolConfig::named(name).unwrap(), TRACE).unwrap();
        assert!(out.metrics.data_delivered > 0, "{name}");
        assert!(looping_packets(&out.trace).is_empty(), "{name}");
        assert!(audit(&out).is_empty(), "{name}: {:?}", audit(&out));
    }
}

#[test]
fn mobile_runs_conserve_packets_and_reproduce_metrics() {
    let s = mobile(25, 15.0, 6, 60.0, 4);
    for name in PROTOCOL_NAMES {
        let cfg = ProtocolConfig::named(name).unwrap();
        let a = simulate(&s, &cfg, TRACE).unwrap();
        assert!(a.metrics.data_sent > 0, "{name}");
        assert!(audit(&a).is_empty(), "{name}: {:?}", audit(&a));
        let b = simulate(&s, &cfg, TRACE).unwrap();
        assert_eq!(a.trace, b.trace, "{name}");
        assert_eq!(a.metrics, b.metrics, "{name}");
    }
}

#[test]
fn lossy_radio_still_reconciles() {
    let mut s = mobile(20, 5.0, 5, 40.0, 6);
    s.radio.loss_prob = 0.2;
    for name in PROTOCOL_NAMES {
        let out = simulate(&s, &ProtocolConfig::named(name).unwrap(), TRACE).unwrap();
        assert!(audit(&out).is_empty(), "{name}: {:?}", audit(&out));
    }
}

#[test]
fn invalid_protocol_config_is_rejected() {
    let s = static_scenario(line(3, 200.0), vec![(0, 2)], 1.0, 1.0);
    let bad = ProtocolConfig::Aodv(AodvConfig {
        ttl_start: 9,
        ttl_threshold: 3,
        ..AodvConfig::default()
    });
    assert!(simulate(&s, &bad, TRACE).is_err());
    let bad = ProtocolConfig::Fsr(FsrConfig {
        inner_interval: 4.0,
        outer_interval: 2.0,
        ..FsrConfig::default()
    });
    assert!(simulate(&s, &bad, TRACE).is_err());
}
