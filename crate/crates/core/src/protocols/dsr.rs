//! Dynamic Source Routing with an LRU path cache, replies from cache and
//! packet salvaging.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{check_scenario, SimError};
use crate::sim::engine::{Agent, Ctx, Dest, DropReason, Message, Packet, PacketKind, BROADCAST};
use crate::sim::{NodeId, SimTime};

/// Wait for answers to a one-hop request.
pub const NONPROP_TIMEOUT: SimTime = SimTime(30_000_000);
/// First wait for a network-wide request; doubles on each retry.
pub const REQUEST_PERIOD: SimTime = SimTime(500_000_000);
/// Network-wide requests before giving up.
pub const MAX_REQUEST_REXMT: u32 = 3;
pub const MAX_SALVAGE: u32 = 15;
pub const FLOOD_TTL: u32 = 35;
const PENDING_CAPACITY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsrConfig {
    /// Route cache entries per node.
    pub cache_capacity: usize,
    pub salvaging: bool,
    /// Intermediate nodes answer requests from their cache.
    pub gratuitous_rrep: bool,
}

impl Default for DsrConfig {
    fn default() -> Self {
        DsrConfig {
            cache_capacity: 1024,
            salvaging: true,
            gratuitous_rrep: true,
        }
    }
}

impl DsrConfig {
    /// Quarter-size cache.
    pub fn modified() -> Self {
        DsrConfig {
            cache_capacity: 256,
            ..DsrConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_scenario("dsr.cache_capacity", self.cache_capacity >= 1, "must be at least 1")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedRoute {
    pub path: Vec<NodeId>,
    pub insertion_time: SimTime,
    last_used: u64,
}

/// A found route and the cache key it came from.
type Lookup = Option<(Vec<NodeId>, Vec<NodeId>)>;

/// Full paths starting at the owning node, evicted least recently used first.
#[derive(Debug, Clone)]
pub struct RouteCache {
    capacity: usize,
    entries: BTreeMap<Vec<NodeId>, CachedRoute>,
    clock: u64,
    /// Memoized answers of `find` as (route, cache key).
    lookups: BTreeMap<NodeId, Lookup>,
    pub max_occupancy: usize,
    pub evictions: u64,
}

fn loop_free(path: &[NodeId]) -> bool {
    let mut seen = BTreeSet::new();
    path.iter().all(|n| seen.insert(*n))
}

impl RouteCache {
    pub fn new(capacity: usize) -> RouteCache {
        RouteCache {
            capacity: capacity.max(1),
            entries: BTreeMap::new(),
            clock: 0,
            lookups: BTreeMap::new(),
            max_occupancy: 0,
            evictions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, path: &[NodeId]) -> bool {
        self.entries.contains_key(path)
    }

    pub fn routes(&self) -> impl Iterator<Item = &CachedRoute> {
        self.entries.values()
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Adds `path` or marks it used; returns true when it was new.
    pub fn insert(&mut self, path: &[NodeId], now: SimTime) -> bool {
        if path.len() < 2 || !loop_free(path) {
            return false;
        }
        let t = self.tick();
        if let Some(e) = self.entries.get_mut(path) {
            e.last_used = t;
            return false;
        }
        if self.entries.len() >= self.capacity {
            let victim = self
                .entries
                .iter()
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| k.clone())
                .expect("cache is full");
            self.entries.remove(&victim);
            self.evictions += 1;
        }
        self.entries.insert(
            path.to_vec(),
            CachedRoute {
                path: path.to_vec(),
                insertion_time: now,
                last_used: t,
            },
        );
        self.lookups.clear();
        self.max_occupancy = self.max_occupancy.max(self.entries.len());
        true
    }

    /// Shortest cached route to `dest` (ties broken by the lowest node
    /// sequence); the entry it came from counts as used.
    pub fn find(&mut self, dest: NodeId) -> Option<Vec<NodeId>> {
        let hit = match self.lookups.get(&dest) {
            Some(hit) => hit.clone(),
            None => {
                let best = self
                    .entries
                    .keys()
                    .filter_map(|p| {
                        let i = p.iter().position(|&n| n == dest).filter(|&i| i > 0)?;
                        Some((&p[..=i], p))
                    })
                    .min_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)))
                    .map(|(prefix, key)| (prefix.to_vec(), key.clone()));
                self.lookups.insert(dest, best.clone());
                best
            }
        };
        let (prefix, key) = hit?;
        let t = self.tick();
        if let Some(e) = self.entries.get_mut(&key) {
            e.last_used = t;
        }
        Some(prefix)
    }

    /// Cuts every cached path at the link `a -> b`.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) {
        let broken: Vec<Vec<NodeId>> = self
            .entries
            .keys()
            .filter(|p| p.windows(2).any(|w| w[0] == a && w[1] == b))
            .cloned()
            .collect();
        if broken.is_empty() {
            return;
        }
        for p in broken {
            let e = self.entries.remove(&p).expect("listed");
            let cut = p.windows(2).position(|w| w[0] == a && w[1] == b).expect("listed") + 1;
            let head = p[..cut].to_vec();
            if head.len() >= 2 {
                let slot = self.entries.entry(head.clone()).or_insert(CachedRoute {
                    path: head,
                    insertion_time: e.insertion_time,
                    last_used: e.last_used,
                });
                slot.last_used = slot.last_used.max(e.last_used);
            }
        }
        self.lookups.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceRoute {
    pub route: Vec<NodeId>,
    /// Index in `route` of the node the packet is sent to next.
    pub pos: usize,
    pub salvaged: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsrMsg {
    Data(SourceRoute),
    /// `path` runs from the originator to the last node that sent it.
    Rreq { id: u32, target: NodeId, path: Vec<NodeId>, ttl: u32 },
    /// `path` runs from the originator to the target; `pos` indexes the receiver.
    Rrep { path: Vec<NodeId>, pos: usize },
    /// Broken link reported back along `path` (detecting node first).
    Rerr { from: NodeId, to: NodeId, path: Vec<NodeId>, pos: usize },
}

impl Default for DsrMsg {
    fn default() -> Self {
        DsrMsg::Data(SourceRoute::default())
    }
}

impl Message for DsrMsg {
    fn subtype(&self) -> Cow<'static, str> {
        match self {
            DsrMsg::Data(_) => Cow::Borrowed("data"),
            DsrMsg::Rreq { ttl, .. } => Cow::Owned(format!("rreq:ttl={ttl}")),
            DsrMsg::Rrep { .. } => Cow::Borrowed("rrep"),
            DsrMsg::Rerr { .. } => Cow::Borrowed("rerr"),
        }
    }

    fn header_bytes(&self) -> u32 {
        match self {
            DsrMsg::Data(h) => 4 + 4 * h.route.len() as u32,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsrTimer {
    Discovery { target: NodeId, generation: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Discovery {
    attempt: u32,
    generation: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DsrStats {
    /// Route discoveries started, per target.
    pub discoveries: BTreeMap<NodeId, u32>,
    pub salvaged: u64,
    pub cache_replies: u64,
}

#[derive(Debug, Clone)]
pub struct Dsr {
    id: NodeId,
    cfg: DsrConfig,
    cache: RouteCache,
    request_id: u32,
    seen: BTreeSet<(NodeId, u32)>,
    pending: BTreeMap<NodeId, VecDeque<Packet<DsrMsg>>>,
    discoveries: BTreeMap<NodeId, Discovery>,
    generation: u64,
    pub stats: DsrStats,
}

type DsrCtx<'a> = Ctx<'a, DsrMsg, DsrTimer>;

impl Dsr {
    pub fn new(id: NodeId, cfg: DsrConfig) -> Dsr {
        Dsr {
            id,
            cfg,
            cache: RouteCache::new(cfg.cache_capacity),
            request_id: 0,
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            discoveries: BTreeMap::new(),
            generation: 0,
            stats: DsrStats::default(),
        }
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    /// Caches both directions of `path` as seen from this node.
    fn learn(&mut self, path: &[NodeId], now: SimTime) {
        let Some(k) = path.iter().position(|&n| n == self.id) else {
            return;
        };
        if path.len() - k >= 2 {
            self.cache.insert(&path[k..], now);
        }
        if k >= 1 {
            let back: Vec<NodeId> = path[..=k].iter().rev().copied().collect();
            self.cache.insert(&back, now);
        }
    }

    fn send_along(&mut self, ctx: &mut DsrCtx<'_>, mut packet: Packet<DsrMsg>, route: Vec<NodeId>, salvaged: u32) {
        let next = route[1];
        packet.msg = DsrMsg::Data(SourceRoute { route, pos: 1, salvaged });
        ctx.send(packet, Dest::Unicast(next));
    }

    fn originate(&mut self, ctx: &mut DsrCtx<'_>, packet: Packet<DsrMsg>) {
        match self.cache.find(packet.dst) {
            Some(route) => self.send_along(ctx, packet, route, 0),
            None => {
                let dst = packet.dst;
                let queue = self.pending.entry(dst).or_default();
                if queue.len() >= PENDING_CAPACITY {
                    ctx.drop(packet, DropReason::Ifq);
                } else {
                    queue.push_back(packet);
                }
                self.start_discovery(ctx, dst);
            }
        }
    }

    fn flush(&mut self, ctx: &mut DsrCtx<'_>) {
        let targets: BTreeSet<NodeId> = self.pending.keys().chain(self.discoveries.keys()).copied().collect();
        for t in targets {
            if let Some(route) = self.cache.find(t) {
                self.discoveries.remove(&t);
                for p in self.pending.remove(&t).unwrap_or_default() {
                    self.send_along(ctx, p, route.clone(), 0);
                }
            }
        }
    }

    fn start_discovery(&mut self, ctx: &mut DsrCtx<'_>, target: NodeId) {
        if self.discoveries.contains_key(&target) {
            return;
        }
        *self.stats.discoveries.entry(target).or_default() += 1;
        self.generation += 1;
        self.discoveries.insert(
            target,
            Discovery {
                attempt: 0,
                generation: self.generation,
            },
        );
        self.emit_rreq(ctx, target);
    }

    fn emit_rreq(&mut self, ctx: &mut DsrCtx<'_>, target: NodeId) {
        let d = self.discoveries[&target];
        let (ttl, wait) = if d.attempt == 0 {
            (1, NONPROP_TIMEOUT)
        } else {
            (FLOOD_TTL, SimTime(REQUEST_PERIOD.0 << (d.attempt - 1)))
        };
        self.request_id += 1;
        self.seen.insert((self.id, self.request_id));
        let msg = DsrMsg::Rreq {
            id: self.request_id,
            target,
            path: vec![self.id],
            ttl,
        };
        let pkt = ctx.control(BROADCAST, 20, msg);
        ctx.send(pkt, Dest::Broadcast);
        ctx.set_timer(
            wait,
            DsrTimer::Discovery {
                target,
                generation: d.generation,
            },
        );
    }

    fn on_rreq(&mut self, ctx: &mut DsrCtx<'_>, id: u32, target: NodeId, path: Vec<NodeId>, ttl: u32) {
        let now = ctx.now();
        if path.contains(&self.id) {
            return;
        }
        let mut full = path;
        full.push(self.id);
        // Duplicate copies still carry usable reverse routes.
        self.learn(&full, now);
        self.flush(ctx);
        let origin = full[0];
        if !self.seen.insert((origin, id)) {
            return;
        }
        if target == self.id {
            self.reply(ctx, origin, full);
            return;
        }
        if self.cfg.gratuitous_rrep {
            if let Some(cached) = self.cache.find(target) {
                let mut answer = full.clone();
                answer.extend_from_slice(&cached[1..]);
                if loop_free(&answer) {
                    self.stats.cache_replies += 1;
                    let pos = full.len() - 2;
                    self.send_reply(ctx, origin, answer, pos);
                    return;
                }
            }
        }
        if ttl > 1 {
            let bytes = 16 + 4 * full.len() as u32;
            let mut pkt = ctx.control(BROADCAST, bytes, DsrMsg::Rreq { id, target, path: full, ttl: ttl - 1 });
            // Forwarded copies keep the originator.
            pkt.src = origin;
            ctx.send(pkt, Dest::Broadcast);
        }
    }

    fn reply(&mut self, ctx: &mut DsrCtx<'_>, origin: NodeId, path: Vec<NodeId>) {
        let pos = path.len() - 2;
        self.send_reply(ctx, origin, path, pos);
    }

    fn send_reply(&mut self, ctx: &mut DsrCtx<'_>, origin: NodeId, path: Vec<NodeId>, pos: usize) {
        let next = path[pos];
        let bytes = 12 + 4 * path.len() as u32;
        let pkt = ctx.control(origin, bytes, DsrMsg::Rrep { path, pos });
        ctx.send(pkt, Dest::Unicast(next));
    }

    fn report_break(&mut self, ctx: &mut DsrCtx<'_>, to: NodeId, back: Vec<NodeId>) {
        if back.len() < 2 {
            return;
        }
        let origin = *back.last().expect("non-empty");
        let next = back[1];
        let bytes = 16 + 4 * back.len() as u32;
        let pkt = ctx.control(
            origin,
            bytes,
            DsrMsg::Rerr {
                from: self.id,
                to,
                path: back,
                pos: 1,
            },
        );
        ctx.send(pkt, Dest::Unicast(next));
    }

    fn on_data(&mut self, ctx: &mut DsrCtx<'_>, mut packet: Packet<DsrMsg>) {
        let DsrMsg::Data(mut header) = std::mem::take(&mut packet.msg) else {
            ctx.drop(packet, DropReason::Malformed);
            return;
        };
        if header.route.get(header.pos) != Some(&self.id) {
            ctx.drop(packet, DropReason::Malformed);
            return;
        }
        self.learn(&header.route, ctx.now());
        if packet.dst == self.id {
            packet.msg = DsrMsg::Data(header);
            ctx.deliver(packet);
            return;
        }
        header.pos += 1;
        let Some(&next) = header.route.get(header.pos) else {
            ctx.drop(packet, DropReason::NoRoute);
            return;
        };
        packet.msg = DsrMsg::Data(header);
        ctx.send(packet, Dest::Unicast(next));
    }
}

impl Agent for Dsr {
    type Msg = DsrMsg;
    type Timer = DsrTimer;

    fn on_app_data(&mut self, ctx: &mut DsrCtx<'_>, packet: Packet<DsrMsg>) {
        self.originate(ctx, packet);
    }

    fn on_receive(&mut self, ctx: &mut DsrCtx<'_>, _from: NodeId, packet: Packet<DsrMsg>) {
        let now = ctx.now();
        if packet.kind == PacketKind::Data {
            self.on_data(ctx, packet);
            return;
        }
        match packet.msg.clone() {
            DsrMsg::Rreq { id, target, path, ttl } => {
                if path.is_empty() {
                    ctx.drop(packet, DropReason::Malformed);
                } else {
                    self.on_rreq(ctx, id, target, path, ttl);
                }
            }
            DsrMsg::Rrep { path, pos } => {
                if path.get(pos) != Some(&self.id) {
                    ctx.drop(packet, DropReason::Malformed);
                    return;
                }
                self.learn(&path, now);
                if pos == 0 {
                    self.flush(ctx);
                } else {
                    let mut out = packet;
                    out.msg = DsrMsg::Rrep { path: path.clone(), pos: pos - 1 };
                    ctx.send(out, Dest::Unicast(path[pos - 1]));
                }
            }
            DsrMsg::Rerr { from, to, path, pos } => {
                if path.get(pos) != Some(&self.id) {
                    ctx.drop(packet, DropReason::Malformed);
                    return;
                }
                self.cache.remove_link(from, to);
                if pos + 1 < path.len() {
                    let mut out = packet;
                    out.msg = DsrMsg::Rerr {
                        from,
                        to,
                        path: path.clone(),
                        pos: pos + 1,
                    };
                    ctx.send(out, Dest::Unicast(path[pos + 1]));
                }
            }
            DsrMsg::Data(_) => ctx.drop(packet, DropReason::Malformed),
        }
    }

    fn on_timer(&mut self, ctx: &mut DsrCtx<'_>, timer: DsrTimer) {
        let DsrTimer::Discovery { target, generation } = timer;
        let Some(d) = self.discoveries.get_mut(&target) else {
            return;
        };
        if d.generation != generation {
            return;
        }
        if self.cache.find(target).is_some() {
            self.flush(ctx);
            return;
        }
        let d = self.discoveries.get_mut(&target).expect("present");
        if d.attempt < MAX_REQUEST_REXMT {
            d.attempt += 1;
            self.emit_rreq(ctx, target);
        } else {
            self.discoveries.remove(&target);
            for p in self.pending.remove(&target).unwrap_or_default() {
                ctx.drop(p, DropReason::NoRoute);
            }
        }
    }

    fn on_link_failure(&mut self, ctx: &mut DsrCtx<'_>, next_hop: NodeId, mut packet: Packet<DsrMsg>) {
        self.cache.remove_link(self.id, next_hop);
        if packet.kind != PacketKind::Data {
            ctx.drop(packet, DropReason::NoRoute);
            return;
        }
        let DsrMsg::Data(header) = std::mem::take(&mut packet.msg) else {
            ctx.drop(packet, DropReason::Malformed);
            return;
        };
        if packet.src == self.id {
            self.originate(ctx, packet);
            return;
        }
        let here = header.pos.saturating_sub(1);
        let back: Vec<NodeId> = header.route[..=here].iter().rev().copied().collect();
        self.report_break(ctx, next_hop, back);
        if self.cfg.salvaging && header.salvaged < MAX_SALVAGE {
            if let Some(route) = self.cache.find(packet.dst) {
                self.stats.salvaged += 1;
                self.send_along(ctx, packet, route, header.salvaged + 1);
                return;
            }
        }
        ctx.drop(packet, DropReason::NoRoute);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lru_evicts_exactly_at_capacity() {
        let mut c = RouteCache::new(2);
        let t = SimTime::ZERO;
        assert!(c.insert(&[0, 1], t));
        assert!(c.insert(&[0, 2], t));
        assert_eq!(c.evictions, 0);
        // Touch [0, 1] so [0, 2] becomes least recently used.
        assert_eq!(c.find(1), Some(vec![0, 1]));
        assert!(c.insert(&[0, 3], t));
        assert_eq!(c.evictions, 1);
        assert!(c.contains(&[0, 1]) && c.contains(&[0, 3]) && !c.contains(&[0, 2]));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn smaller_cache_evicts_first() {
        let mut small = RouteCache::new(DsrConfig::modified().cache_capacity);
        let mut large = RouteCache::new(DsrConfig::default().cache_capacity);
        let mut first = (None, None);
        for k in 0..300u32 {
            let path = [0, 1 + k];
            small.insert(&path, SimTime::ZERO);
            large.insert(&path, SimTime::ZERO);
            if small.evictions > 0 && first.0.is_none() {
                first.0 = Some(k);
            }
            if large.evictions > 0 && first.1.is_none() {
                first.1 = Some(k);
            }
        }
        assert_eq!(first, (Some(256), None));
        assert_eq!(small.len(), 256);
        assert_eq!(small.max_occupancy, 256);
        assert_eq!(large.len(), 300);
    }

    #[test]
    fn lookup_prefers_shortest_prefix() {
        let mut c = RouteCache::new(10);
        c.insert(&[0, 4, 5, 6], SimTime::ZERO);
        c.insert(&[0, 2, 6], SimTime::ZERO);
        assert_eq!(c.find(6), Some(vec![0, 2, 6]));
        assert_eq!(c.find(5), Some(vec![0, 4, 5]));
        assert_eq!(c.find(9), None);
        assert!(!c.insert(&[0, 3, 0], SimTime::ZERO));
    }

    #[test]
    fn broken_links_truncate_paths() {
        let mut c = RouteCache::new(10);
        c.insert(&[0, 1, 2, 3], SimTime::ZERO);
        c.insert(&[0, 1, 4], SimTime::ZERO);
        c.remove_link(1, 2);
        assert!(c.contains(&[0, 1]) && c.contains(&[0, 1, 4]));
        assert_eq!(c.find(3), None);
        c.remove_link(0, 1);
        assert!(c.is_empty());
    }
}
