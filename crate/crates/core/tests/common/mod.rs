#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stripnet_core::protocols::ProtocolRun;
use stripnet_core::sim::{
    Field, Mobility, NodeId, PacketKind, Radio, SimMetrics, SimScenario, TraceEvent, TraceRecord, Traffic,
};

pub const RANGE: f64 = 250.0;

pub fn static_scenario(positions: Vec<(f64, f64)>, flows: Vec<(NodeId, NodeId)>, interval: f64, duration: f64) -> SimScenario {
    let width = positions.iter().map(|p| p.0).fold(1.0, f64::max);
    let height = positions.iter().map(|p| p.1).fold(1.0, f64::max);
    SimScenario {
        node_count: positions.len() as u32,
        field: Field::Rect { width, height },
        mobility: Mobility::Static { positions: Some(positions) },
        radio: Radio::default(),
        traffic: Traffic {
            flows,
            interval,
            ..Traffic::default()
        },
        duration,
        seed: 1,
    }
}

pub fn line(n: u32, spacing: f64) -> Vec<(f64, f64)> {
    (0..n).map(|i| (i as f64 * spacing, 0.0)).collect()
}

pub fn unit_disk(positions: &[(f64, f64)], range: f64) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut adj = BTreeMap::new();
    for (i, a) in positions.iter().enumerate() {
        let nbrs = positions
            .iter()
            .enumerate()
            .filter(|&(j, b)| j != i && (a.0 - b.0).hypot(a.1 - b.1) <= range)
            .map(|(j, _)| j as NodeId)
            .collect();
        adj.insert(i as NodeId, nbrs);
    }
    adj
}

/// All-pairs hop distances by Floyd-Warshall; `u32::MAX` marks unreachable.
pub fn hop_distances(adj: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> Vec<Vec<u32>> {
    let n = adj.len();
    let mut d = vec![vec![u32::MAX; n]; n];
    for (&u, nbrs) in adj {
        d[u as usize][u as usize] = 0;
        for &v in nbrs {
            d[u as usize][v as usize] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Expected forwarding table of `root`: destination -> (lowest-id neighbor on
/// a shortest path, hops).
pub fn expected_table(root: NodeId, adj: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeMap<NodeId, (NodeId, u32)> {
    let d = hop_distances(adj);
    let r = root as usize;
    let mut out = BTreeMap::new();
    for dest in 0..adj.len() {
        if dest == r || d[r][dest] == u32::MAX {
            continue;
        }
        let next = adj[&root]
            .iter()
            .copied()
            .filter(|&v| d[v as usize][dest] == d[r][dest] - 1)
            .min()
            .expect("shortest path has a first hop");
        out.insert(dest as NodeId, (next, d[r][dest]));
    }
    out
}

pub fn connected(adj: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> bool {
    hop_distances(adj).iter().all(|row| row.iter().all(|&x| x != u32::MAX))
}

/// Uniform positions in a `side` square, redrawn until the unit-disk graph
/// is connected.
pub fn random_connected(n: u32, side: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pos: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side)))
            .collect();
        if connected(&unit_disk(&pos, RANGE)) {
            return pos;
        }
    }
}

pub fn control_tx(trace: &[TraceRecord]) -> u64 {
    trace
        .iter()
        .filter(|r| r.event == TraceEvent::Tx && r.kind == PacketKind::Control)
        .count() as u64
}

/// Problems with a run: conservation of data packets, control counting and
/// metric recomputation from the trace.
pub fn audit(run: &ProtocolRun) -> Vec<String> {
    let mut issues = Vec::new();
    let m = &run.metrics;
    let mut generated = BTreeSet::new();
    let mut terminal: BTreeMap<u64, u32> = BTreeMap::new();
    for r in run.trace.iter().filter(|r| r.kind == PacketKind::Data) {
        match r.event {
            TraceEvent::Gen => {
                generated.insert(r.packet_id);
            }
            TraceEvent::Recv | TraceEvent::Drop(_) => *terminal.entry(r.packet_id).or_default() += 1,
            _ => {}
        }
    }
    if let Some((id, k)) = terminal.iter().find(|(_, &k)| k > 1) {
        issues.push(format!("data packet {id} ended {k} times"));
    }
    if let Some(id) = terminal.keys().find(|id| !generated.contains(id)) {
        issues.push(format!("data packet {id} ended without being generated"));
    }
    let open = generated.iter().filter(|id| !terminal.contains_key(id)).count() as u64;
    if open != run.data_in_flight {
        issues.push(format!("{open} packets open in the trace, {} reported in flight", run.data_in_flight));
    }
    if generated.len() as u64 != m.data_sent {
        issues.push(format!("{} generated in trace, {} sent", generated.len(), m.data_sent));
    }
    if m.data_delivered > m.data_sent {
        issues.push("more delivered than sent".into());
    }
    if control_tx(&run.trace) != m.control_transmissions {
        issues.push(format!(
            "{} control tx records, {} counted",
            control_tx(&run.trace),
            m.control_transmissions
        ));
    }
    let again = SimMetrics::from_trace(m.duration, &run.trace);
    if again != *m {
        issues.push(format!("metrics from trace {again:?} differ from {m:?}"));
    }
    issues
}

/// Delivered data packets whose transmissions revisit a node.
pub fn looping_packets(trace: &[TraceRecord]) -> Vec<u64> {
    let delivered: BTreeSet<u64> = trace
        .iter()
        .filter(|r| r.kind == PacketKind::Data && r.event == TraceEvent::Recv)
        .map(|r| r.packet_id)
        .collect();
    let mut senders: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for r in trace {
        if r.kind == PacketKind::Data && r.event == TraceEvent::Tx && delivered.contains(&r.packet_id) {
            senders.entry(r.packet_id).or_default().push(r.node);
        }
    }
    senders
        .into_iter()
        .filter(|(_, nodes)| {
            let set: BTreeSet<_> = nodes.iter().collect();
            set.len() != nodes.len()
        })
        .map(|(id, _)| id)
        .collect()
}
