//! Fisheye State Routing: periodic link-state exchange where rows for
//! nearby nodes travel every inner interval and the full table every outer
//! interval. There are no triggered updates.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{check_scenario, SimError};
use crate::sim::engine::{Agent, Ctx, Dest, DropReason, Message, Packet, PacketKind, BROADCAST};
use crate::sim::{NodeId, SimTime};

/// Neighbors silent for this many inner intervals leave the own row.
pub const NEIGHBOR_TIMEOUT_INTERVALS: u64 = 3;
pub const MAX_HOPS: u32 = 64;
/// Per-node phase of the periodic timers.
const STAGGER: SimTime = SimTime(1_000_000);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsrConfig {
    pub inner_scope_hops: u32,
    /// Period of scoped updates (s).
    pub inner_interval: f64,
    /// Period of full-table updates (s).
    pub outer_interval: f64,
}

impl Default for FsrConfig {
    fn default() -> Self {
        FsrConfig {
            inner_scope_hops: 2,
            inner_interval: 5.0,
            outer_interval: 15.0,
        }
    }
}

impl FsrConfig {
    pub fn modified() -> Self {
        FsrConfig {
            inner_interval: 1.0,
            outer_interval: 3.0,
            ..FsrConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_scenario("fsr.inner_scope_hops", self.inner_scope_hops >= 1, "must be at least 1")?;
        check_scenario(
            "fsr.inner_interval",
            self.inner_interval > 0.0 && self.inner_interval.is_finite(),
            "must be positive",
        )?;
        check_scenario(
            "fsr.outer_interval",
            self.outer_interval >= self.inner_interval && self.outer_interval.is_finite(),
            "must be at least the inner interval",
        )
    }
}

/// Link-state row as advertised by its origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyEntry {
    pub seq: u32,
    pub neighbors: BTreeSet<NodeId>,
    pub last_update: SimTime,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum FsrMsg {
    #[default]
    Data,
    Update {
        scope: Scope,
        rows: Vec<(NodeId, u32, Vec<NodeId>)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    Inner,
    Outer,
}

impl Message for FsrMsg {
    fn subtype(&self) -> Cow<'static, str> {
        Cow::Borrowed(match self {
            FsrMsg::Data => "data",
            FsrMsg::Update { scope: Scope::Inner, .. } => "lsu:inner",
            FsrMsg::Update { scope: Scope::Outer, .. } => "lsu:outer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsrTimer {
    Inner,
    Outer,
}

#[derive(Debug, Clone)]
pub struct Fsr {
    id: NodeId,
    cfg: FsrConfig,
    seq: u32,
    heard: BTreeMap<NodeId, SimTime>,
    topology: BTreeMap<NodeId, TopologyEntry>,
    /// Destination -> (next hop, distance), rebuilt lazily.
    table: Option<BTreeMap<NodeId, (NodeId, u32)>>,
    last_outer: Option<SimTime>,
}

type FsrCtx<'a> = Ctx<'a, FsrMsg, FsrTimer>;

/// Hop distances and next hops from `root`: among equally short paths the
/// one with the lowest first hop wins.
pub fn shortest_paths(root: NodeId, adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeMap<NodeId, (NodeId, u32)> {
    let mut dist: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut levels: Vec<Vec<NodeId>> = vec![vec![root]];
    dist.insert(root, 0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for &v in adjacency.get(&u).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                if levels.len() <= d as usize + 1 {
                    levels.push(Vec::new());
                }
                levels[d as usize + 1].push(v);
                queue.push_back(v);
            }
        }
    }
    let mut first: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (d, level) in levels.iter().enumerate().skip(1) {
        for &v in level {
            let hop = if d == 1 {
                v
            } else {
                adjacency
                    .iter()
                    .filter(|(u, nbrs)| dist.get(u) == Some(&(d as u32 - 1)) && nbrs.contains(&v))
                    .map(|(u, _)| first[u])
                    .min()
                    .expect("a predecessor exists")
            };
            first.insert(v, hop);
            out.insert(v, (hop, d as u32));
        }
    }
    out
}

impl Fsr {
    pub fn new(id: NodeId, cfg: FsrConfig) -> Fsr {
        Fsr {
            id,
            cfg,
            seq: 0,
            heard: BTreeMap::new(),
            topology: BTreeMap::new(),
            table: None,
            last_outer: None,
        }
    }

    fn neighbor_timeout(&self) -> SimTime {
        SimTime(NEIGHBOR_TIMEOUT_INTERVALS * SimTime::from_secs(self.cfg.inner_interval).0)
    }

    fn live_neighbors(&self, now: SimTime) -> BTreeSet<NodeId> {
        let timeout = self.neighbor_timeout();
        self.heard
            .iter()
            .filter(|(_, &t)| now.0 <= t.0 + timeout.0)
            .map(|(&n, _)| n)
            .collect()
    }

    fn adjacency(&self, now: SimTime) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = self
            .topology
            .iter()
            .filter(|(&o, _)| o != self.id)
            .map(|(&o, e)| (o, e.neighbors.clone()))
            .collect();
        adj.insert(self.id, self.live_neighbors(now));
        adj
    }

    /// Current forwarding table: destination -> (next hop, hops).
    pub fn routes(&mut self, now: SimTime) -> &BTreeMap<NodeId, (NodeId, u32)> {
        if self.table.is_none() {
            self.table = Some(shortest_paths(self.id, &self.adjacency(now)));
        }
        self.table.as_ref().expect("just built")
    }

    pub fn topology(&self) -> &BTreeMap<NodeId, TopologyEntry> {
        &self.topology
    }

    fn broadcast(&mut self, ctx: &mut FsrCtx<'_>, scope: Scope) {
        let now = ctx.now();
        self.seq += 1;
        let own = TopologyEntry {
            seq: self.seq,
            neighbors: self.live_neighbors(now),
            last_update: now,
        };
        self.topology.insert(self.id, own);
        self.table = None;
        let in_scope: Option<BTreeSet<NodeId>> = match scope {
            Scope::Outer => None,
            Scope::Inner => {
                let limit = self.cfg.inner_scope_hops;
                let mut near: BTreeSet<NodeId> = self
                    .routes(now)
                    .iter()
                    .filter(|(_, &(_, d))| d <= limit)
                    .map(|(&n, _)| n)
                    .collect();
                near.insert(self.id);
                Some(near)
            }
        };
        let rows: Vec<(NodeId, u32, Vec<NodeId>)> = self
            .topology
            .iter()
            .filter(|(o, _)| in_scope.as_ref().is_none_or(|s| s.contains(o)))
            .map(|(&o, e)| (o, e.seq, e.neighbors.iter().copied().collect()))
            .collect();
        let bytes = 8 + rows.iter().map(|r| 8 + 4 * r.2.len() as u32).sum::<u32>();
        let pkt = ctx.control(BROADCAST, bytes, FsrMsg::Update { scope, rows });
        ctx.send(pkt, Dest::Broadcast);
    }

    fn merge(&mut self, now: SimTime, rows: Vec<(NodeId, u32, Vec<NodeId>)>) {
        for (origin, seq, nbrs) in rows {
            if origin == self.id {
                continue;
            }
            let newer = self.topology.get(&origin).is_none_or(|e| seq > e.seq);
            if newer {
                self.topology.insert(
                    origin,
                    TopologyEntry {
                        seq,
                        neighbors: nbrs.into_iter().collect(),
                        last_update: now,
                    },
                );
                self.table = None;
            }
        }
    }

    fn forward(&mut self, ctx: &mut FsrCtx<'_>, packet: Packet<FsrMsg>) {
        let now = ctx.now();
        if packet.hop_count > MAX_HOPS {
            ctx.drop(packet, DropReason::Ttl);
            return;
        }
        match self.routes(now).get(&packet.dst) {
            Some(&(next, _)) => ctx.send(packet, Dest::Unicast(next)),
            None => ctx.drop(packet, DropReason::NoRoute),
        }
    }
}

impl Agent for Fsr {
    type Msg = FsrMsg;
    type Timer = FsrTimer;

    fn init(&mut self, ctx: &mut FsrCtx<'_>) {
        let phase = SimTime(STAGGER.0 * self.id as u64);
        ctx.set_timer(phase, FsrTimer::Outer);
        ctx.set_timer(phase, FsrTimer::Inner);
    }

    fn on_app_data(&mut self, ctx: &mut FsrCtx<'_>, packet: Packet<FsrMsg>) {
        self.forward(ctx, packet);
    }

    fn on_receive(&mut self, ctx: &mut FsrCtx<'_>, from: NodeId, packet: Packet<FsrMsg>) {
        let now = ctx.now();
        if self.heard.insert(from, now).is_none() {
            self.table = None;
        }
        if packet.kind == PacketKind::Data {
            if packet.dst == self.id {
                ctx.deliver(packet);
            } else {
                self.forward(ctx, packet);
            }
            return;
        }
        match packet.msg {
            FsrMsg::Update { rows, .. } => self.merge(now, rows),
            FsrMsg::Data => ctx.drop(packet, DropReason::Malformed),
        }
    }

    fn on_timer(&mut self, ctx: &mut FsrCtx<'_>, timer: FsrTimer) {
        let now = ctx.now();
        match timer {
            FsrTimer::Outer => {
                self.last_outer = Some(now);
                self.broadcast(ctx, Scope::Outer);
                ctx.set_timer(SimTime::from_secs(self.cfg.outer_interval), FsrTimer::Outer);
            }
            FsrTimer::Inner => {
                // A full update at this instant already covers the inner scope.
                if self.last_outer != Some(now) {
                    self.broadcast(ctx, Scope::Inner);
                }
                ctx.set_timer(SimTime::from_secs(self.cfg.inner_interval), FsrTimer::Inner);
            }
        }
    }

    fn on_link_failure(&mut self, ctx: &mut FsrCtx<'_>, next_hop: NodeId, packet: Packet<FsrMsg>) {
        self.heard.remove(&next_hop);
        self.table = None;
        self.forward(ctx, packet);
    }
}
