//! Ad hoc On-demand Distance Vector routing with expanding ring search,
//! HELLO-based neighbor liveness, local repair and gratuitous replies.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{check_scenario, SimError};
use crate::sim::engine::{Agent, Ctx, Dest, DropReason, Message, Packet, PacketKind, BROADCAST};
use crate::sim::{NodeId, SimTime};

pub const NODE_TRAVERSAL: SimTime = SimTime(40_000_000);
pub const RREQ_RETRIES: u32 = 2;
pub const ALLOWED_HELLO_LOSS: u64 = 2;
/// Extra rings of slack in the ring traversal timeout.
const TIMEOUT_BUFFER: u64 = 2;
const PENDING_CAPACITY: usize = 64;
const RREQ_BYTES: u32 = 24;
const RREP_BYTES: u32 = 20;
const HELLO_BYTES: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AodvConfig {
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
    pub net_diameter: u32,
    /// HELLO period (s); 0 disables HELLO.
    pub hello_interval: f64,
    /// Active route timeout (s).
    pub route_lifetime: f64,
    pub local_repair: bool,
    pub gratuitous_rrep: bool,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            ttl_start: 1,
            ttl_increment: 2,
            ttl_threshold: 7,
            net_diameter: 35,
            hello_interval: 1.0,
            route_lifetime: 10.0,
            local_repair: true,
            gratuitous_rrep: true,
        }
    }
}

impl AodvConfig {
    /// Wider first ring and coarser steps.
    pub fn modified() -> Self {
        AodvConfig {
            ttl_start: 2,
            ttl_increment: 4,
            ttl_threshold: 9,
            ..AodvConfig::default()
        }
    }

    /// Every request floods the whole network.
    pub fn flooding() -> Self {
        let d = AodvConfig::default();
        AodvConfig {
            ttl_start: d.net_diameter,
            ttl_threshold: d.net_diameter,
            ..d
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_scenario(
            "aodv.ttl_start",
            1 <= self.ttl_start && self.ttl_start <= self.ttl_threshold && self.ttl_threshold <= self.net_diameter,
            format!(
                "need 1 <= ttl_start ({}) <= ttl_threshold ({}) <= net_diameter ({})",
                self.ttl_start, self.ttl_threshold, self.net_diameter
            ),
        )?;
        check_scenario("aodv.ttl_increment", self.ttl_increment >= 1, "must be at least 1")?;
        check_scenario(
            "aodv.hello_interval",
            self.hello_interval >= 0.0 && self.hello_interval.is_finite(),
            "must be non-negative",
        )?;
        check_scenario(
            "aodv.route_lifetime",
            self.route_lifetime > 0.0 && self.route_lifetime.is_finite(),
            "must be positive",
        )
    }

    pub fn net_traversal_time(&self) -> SimTime {
        SimTime(2 * NODE_TRAVERSAL.0 * self.net_diameter as u64)
    }

    /// Time to wait for a reply to a request sent with `ttl`.
    pub fn ring_timeout(&self, ttl: u32) -> SimTime {
        if ttl >= self.net_diameter {
            self.net_traversal_time()
        } else {
            SimTime(2 * NODE_TRAVERSAL.0 * (ttl as u64 + TIMEOUT_BUFFER))
        }
    }

    fn max_repair_ttl(&self) -> u32 {
        (self.net_diameter * 3).div_ceil(10)
    }
}

/// TTLs of successive route requests: `ttl_start` growing by
/// `ttl_increment` while within `ttl_threshold`, then one network-wide ring.
pub fn ers_ttl_schedule(cfg: &AodvConfig) -> Vec<u32> {
    let mut out = Vec::new();
    let mut ttl = cfg.ttl_start;
    while ttl <= cfg.ttl_threshold {
        out.push(ttl);
        ttl += cfg.ttl_increment.max(1);
    }
    out.push(cfg.net_diameter);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rreq {
    pub id: u32,
    pub origin: NodeId,
    pub origin_seq: u32,
    pub dest: NodeId,
    pub dest_seq: Option<u32>,
    pub hops: u32,
    pub ttl: u32,
}

/// Reply travelling toward `origin` that advertises a route to `dest`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rrep {
    pub origin: NodeId,
    pub dest: NodeId,
    pub dest_seq: u32,
    pub hops: u32,
    pub lifetime: SimTime,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum AodvMsg {
    #[default]
    Data,
    Rreq(Rreq),
    Rrep(Rrep),
    /// Destinations now unreachable, with their invalidated sequence numbers.
    Rerr(Vec<(NodeId, u32)>),
    Hello { seq: u32 },
}

impl Message for AodvMsg {
    fn subtype(&self) -> Cow<'static, str> {
        match self {
            AodvMsg::Data => Cow::Borrowed("data"),
            AodvMsg::Rreq(r) => Cow::Owned(format!("rreq:ttl={}", r.ttl)),
            AodvMsg::Rrep(_) => Cow::Borrowed("rrep"),
            AodvMsg::Rerr(_) => Cow::Borrowed("rerr"),
            AodvMsg::Hello { .. } => Cow::Borrowed("hello"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub next_hop: NodeId,
    pub hops: u32,
    pub seq: Option<u32>,
    pub expiry: SimTime,
    pub valid: bool,
    pub precursors: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AodvTimer {
    Hello,
    Discovery { dest: NodeId, generation: u64 },
}

#[derive(Debug, Clone)]
struct Discovery {
    schedule: Vec<u32>,
    index: usize,
    retries: u32,
    generation: u64,
    repair: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AodvStats {
    pub rreq_originated: u64,
    pub rreq_forwarded: u64,
    pub duplicate_rreqs: u64,
    pub rrep_sent: u64,
    pub local_repairs: u64,
    pub failed_discoveries: u64,
}

#[derive(Debug, Clone)]
pub struct Aodv {
    id: NodeId,
    cfg: AodvConfig,
    own_seq: u32,
    rreq_id: u32,
    seen: BTreeMap<(NodeId, u32), SimTime>,
    routes: BTreeMap<NodeId, Route>,
    pending: BTreeMap<NodeId, VecDeque<Packet<AodvMsg>>>,
    discoveries: BTreeMap<NodeId, Discovery>,
    neighbors: BTreeMap<NodeId, SimTime>,
    generation: u64,
    pub stats: AodvStats,
}

type AodvCtx<'a> = Ctx<'a, AodvMsg, AodvTimer>;

impl Aodv {
    pub fn new(id: NodeId, cfg: AodvConfig) -> Aodv {
        Aodv {
            id,
            cfg,
            own_seq: 0,
            rreq_id: 0,
            seen: BTreeMap::new(),
            routes: BTreeMap::new(),
            pending: BTreeMap::new(),
            discoveries: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            generation: 0,
            stats: AodvStats::default(),
        }
    }

    pub fn config(&self) -> &AodvConfig {
        &self.cfg
    }

    pub fn route(&self, dest: NodeId) -> Option<&Route> {
        self.routes.get(&dest)
    }

    pub fn active_route(&self, dest: NodeId, now: SimTime) -> Option<&Route> {
        self.routes.get(&dest).filter(|r| r.valid && r.expiry > now)
    }

    fn lifetime(&self) -> SimTime {
        SimTime::from_secs(self.cfg.route_lifetime)
    }

    /// Installs or refreshes a route when the offer is fresher than what is
    /// held: higher sequence number, or the same one with fewer hops.
    fn offer_route(&mut self, now: SimTime, dest: NodeId, next_hop: NodeId, hops: u32, seq: Option<u32>, until: SimTime) -> bool {
        let accept = match self.routes.get(&dest) {
            None => true,
            Some(r) => {
                let live = r.valid && r.expiry > now;
                match (seq, r.seq) {
                    (Some(n), Some(o)) => n > o || (n == o && (hops < r.hops || !live)),
                    (Some(_), None) => true,
                    (None, _) => !live || hops < r.hops,
                }
            }
        };
        if accept {
            let old = self.routes.remove(&dest);
            let (precursors, keep_expiry, old_seq) = match old {
                Some(r) => {
                    let same = r.valid && r.next_hop == next_hop;
                    (r.precursors, if same { r.expiry } else { SimTime::ZERO }, r.seq)
                }
                None => (BTreeSet::new(), SimTime::ZERO, None),
            };
            self.routes.insert(
                dest,
                Route {
                    next_hop,
                    hops,
                    seq: seq.or(old_seq),
                    expiry: until.max(keep_expiry),
                    valid: true,
                    precursors,
                },
            );
        } else if let Some(r) = self.routes.get_mut(&dest) {
            if r.valid && r.next_hop == next_hop && r.hops == hops {
                r.expiry = r.expiry.max(until);
            }
        }
        accept
    }

    fn refresh(&mut self, dest: NodeId, now: SimTime) {
        let until = now + self.lifetime();
        if let Some(r) = self.routes.get_mut(&dest) {
            if r.valid {
                r.expiry = r.expiry.max(until);
            }
        }
    }

    fn heard(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId) {
        let now = ctx.now();
        self.neighbors.insert(from, now);
        let until = now + self.lifetime();
        self.offer_route(now, from, from, 1, None, until);
    }

    /// Sends a locally generated or buffered data packet, discovering a
    /// route first when none is active.
    fn route_data(&mut self, ctx: &mut AodvCtx<'_>, packet: Packet<AodvMsg>) {
        let now = ctx.now();
        let dst = packet.dst;
        if let Some(next) = self.active_route(dst, now).map(|r| r.next_hop) {
            self.refresh(dst, now);
            self.refresh(next, now);
            ctx.send(packet, Dest::Unicast(next));
            return;
        }
        self.buffer(ctx, packet);
        self.start_discovery(ctx, dst, None);
    }

    fn buffer(&mut self, ctx: &mut AodvCtx<'_>, packet: Packet<AodvMsg>) {
        let queue = self.pending.entry(packet.dst).or_default();
        if queue.len() >= PENDING_CAPACITY {
            ctx.drop(packet, DropReason::Ifq);
        } else {
            queue.push_back(packet);
        }
    }

    fn flush(&mut self, ctx: &mut AodvCtx<'_>, dest: NodeId) {
        let now = ctx.now();
        let Some(next) = self.active_route(dest, now).map(|r| r.next_hop) else {
            return;
        };
        if let Some(queue) = self.pending.remove(&dest) {
            for p in queue {
                self.refresh(dest, now);
                ctx.send(p, Dest::Unicast(next));
            }
            self.refresh(next, now);
        }
    }

    fn start_discovery(&mut self, ctx: &mut AodvCtx<'_>, dest: NodeId, repair_ttl: Option<u32>) {
        if self.discoveries.contains_key(&dest) {
            return;
        }
        self.generation += 1;
        let schedule = match repair_ttl {
            Some(ttl) => vec![ttl.min(self.cfg.net_diameter)],
            None => ers_ttl_schedule(&self.cfg),
        };
        self.discoveries.insert(
            dest,
            Discovery {
                schedule,
                index: 0,
                retries: 0,
                generation: self.generation,
                repair: repair_ttl.is_some(),
            },
        );
        self.emit_rreq(ctx, dest);
    }

    fn emit_rreq(&mut self, ctx: &mut AodvCtx<'_>, dest: NodeId) {
        let d = &self.discoveries[&dest];
        let ttl = d.schedule[d.index];
        let generation = d.generation;
        let mut wait = self.cfg.ring_timeout(ttl);
        if d.retries > 0 {
            wait = SimTime(wait.0 << d.retries);
        }
        self.own_seq += 1;
        self.rreq_id += 1;
        self.seen.insert((self.id, self.rreq_id), ctx.now());
        let rreq = Rreq {
            id: self.rreq_id,
            origin: self.id,
            origin_seq: self.own_seq,
            dest,
            dest_seq: self.routes.get(&dest).and_then(|r| r.seq),
            hops: 0,
            ttl,
        };
        let pkt = ctx.control(BROADCAST, RREQ_BYTES, AodvMsg::Rreq(rreq));
        ctx.send(pkt, Dest::Broadcast);
        self.stats.rreq_originated += 1;
        ctx.set_timer(wait, AodvTimer::Discovery { dest, generation });
    }

    fn discovery_timeout(&mut self, ctx: &mut AodvCtx<'_>, dest: NodeId, generation: u64) {
        let Some(d) = self.discoveries.get_mut(&dest) else {
            return;
        };
        if d.generation != generation {
            return;
        }
        if self.active_route(dest, ctx.now()).is_some() {
            self.discoveries.remove(&dest);
            self.flush(ctx, dest);
            return;
        }
        let d = self.discoveries.get_mut(&dest).expect("present");
        if d.index + 1 < d.schedule.len() {
            d.index += 1;
        } else if !d.repair && d.retries < RREQ_RETRIES {
            d.retries += 1;
        } else {
            let repair = d.repair;
            self.discoveries.remove(&dest);
            self.stats.failed_discoveries += 1;
            if let Some(queue) = self.pending.remove(&dest) {
                for p in queue {
                    ctx.drop(p, DropReason::NoRoute);
                }
            }
            if repair {
                let seq = self.routes.get(&dest).and_then(|r| r.seq).unwrap_or(0);
                self.send_rerr(ctx, vec![(dest, seq)]);
            }
            return;
        }
        self.emit_rreq(ctx, dest);
    }

    /// Invalidates every route through `neighbor` and returns the lost
    /// destinations that other nodes were using.
    fn link_broken(&mut self, neighbor: NodeId) -> Vec<(NodeId, u32)> {
        self.neighbors.remove(&neighbor);
        let mut lost = Vec::new();
        for (&dest, r) in self.routes.iter_mut() {
            if r.valid && r.next_hop == neighbor {
                r.valid = false;
                let seq = r.seq.map_or(0, |s| s.wrapping_add(1));
                r.seq = Some(seq);
                if !r.precursors.is_empty() {
                    lost.push((dest, seq));
                }
            }
        }
        lost
    }

    fn send_rerr(&mut self, ctx: &mut AodvCtx<'_>, lost: Vec<(NodeId, u32)>) {
        if lost.is_empty() {
            return;
        }
        let bytes = 4 + 8 * lost.len() as u32;
        let pkt = ctx.control(BROADCAST, bytes, AodvMsg::Rerr(lost));
        ctx.send(pkt, Dest::Broadcast);
    }

    fn prune_seen(&mut self, now: SimTime) {
        if self.seen.len() > 4096 {
            let horizon = SimTime(2 * self.cfg.net_traversal_time().0);
            self.seen.retain(|_, t| now.0 < t.0 + horizon.0);
        }
    }

    fn on_rreq(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId, pkt: Packet<AodvMsg>, rreq: Rreq) {
        let now = ctx.now();
        if rreq.origin == self.id || self.seen.contains_key(&(rreq.origin, rreq.id)) {
            self.stats.duplicate_rreqs += 1;
            return;
        }
        self.prune_seen(now);
        self.seen.insert((rreq.origin, rreq.id), now);
        let hops = rreq.hops + 1;
        let until = now + self.lifetime();
        self.offer_route(now, rreq.origin, from, hops, Some(rreq.origin_seq), until);
        self.flush(ctx, rreq.origin);

        if rreq.dest == self.id {
            if let Some(s) = rreq.dest_seq {
                self.own_seq = self.own_seq.max(s);
            }
            let rrep = Rrep {
                origin: rreq.origin,
                dest: self.id,
                dest_seq: self.own_seq,
                hops: 0,
                lifetime: SimTime(2 * self.lifetime().0),
            };
            let reply = ctx.control(rreq.origin, RREP_BYTES, AodvMsg::Rrep(rrep));
            ctx.send(reply, Dest::Unicast(from));
            self.stats.rrep_sent += 1;
            return;
        }

        let cached = self
            .active_route(rreq.dest, now)
            .filter(|r| r.seq.is_some_and(|s| rreq.dest_seq.is_none_or(|want| s >= want)))
            .cloned();
        if let Some(route) = cached {
            if route.next_hop != from {
                if let Some(r) = self.routes.get_mut(&rreq.dest) {
                    r.precursors.insert(from);
                }
                if let Some(r) = self.routes.get_mut(&rreq.origin) {
                    r.precursors.insert(route.next_hop);
                }
                let rrep = Rrep {
                    origin: rreq.origin,
                    dest: rreq.dest,
                    dest_seq: route.seq.expect("filtered"),
                    hops: route.hops,
                    lifetime: route.expiry - now,
                };
                let reply = ctx.control(rreq.origin, RREP_BYTES, AodvMsg::Rrep(rrep));
                ctx.send(reply, Dest::Unicast(from));
                self.stats.rrep_sent += 1;
                if self.cfg.gratuitous_rrep {
                    let grat = Rrep {
                        origin: rreq.dest,
                        dest: rreq.origin,
                        dest_seq: rreq.origin_seq,
                        hops,
                        lifetime: self.lifetime(),
                    };
                    let g = ctx.control(rreq.dest, RREP_BYTES, AodvMsg::Rrep(grat));
                    ctx.send(g, Dest::Unicast(route.next_hop));
                    self.stats.rrep_sent += 1;
                }
                return;
            }
        }

        if rreq.ttl > 1 {
            let fwd = Rreq {
                hops,
                ttl: rreq.ttl - 1,
                ..rreq
            };
            let mut out = pkt;
            out.msg = AodvMsg::Rreq(fwd);
            ctx.send(out, Dest::Broadcast);
            self.stats.rreq_forwarded += 1;
        }
    }

    fn on_rrep(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId, pkt: Packet<AodvMsg>, rrep: Rrep) {
        let now = ctx.now();
        let hops = rrep.hops + 1;
        let updated = self.offer_route(now, rrep.dest, from, hops, Some(rrep.dest_seq), now + rrep.lifetime);
        if rrep.origin == self.id {
            if self.active_route(rrep.dest, now).is_some() {
                self.discoveries.remove(&rrep.dest);
                self.flush(ctx, rrep.dest);
            }
            return;
        }
        if !updated {
            return;
        }
        let Some(back) = self.active_route(rrep.origin, now).map(|r| r.next_hop) else {
            ctx.drop(pkt, DropReason::NoRoute);
            return;
        };
        if let Some(r) = self.routes.get_mut(&rrep.dest) {
            r.precursors.insert(back);
        }
        if let Some(r) = self.routes.get_mut(&rrep.origin) {
            r.precursors.insert(from);
        }
        self.refresh(rrep.origin, now);
        let mut out = pkt;
        out.msg = AodvMsg::Rrep(Rrep { hops, ..rrep });
        ctx.send(out, Dest::Unicast(back));
        self.flush(ctx, rrep.dest);
    }

    fn on_rerr(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId, lost: Vec<(NodeId, u32)>) {
        let mut forward = Vec::new();
        for (dest, seq) in lost {
            if let Some(r) = self.routes.get_mut(&dest) {
                if r.valid && r.next_hop == from {
                    r.valid = false;
                    r.seq = Some(r.seq.map_or(seq, |s| s.max(seq)));
                    if !r.precursors.is_empty() {
                        forward.push((dest, seq));
                    }
                }
            }
        }
        self.send_rerr(ctx, forward);
    }

    fn forward_data(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId, packet: Packet<AodvMsg>) {
        let now = ctx.now();
        if packet.dst == self.id {
            self.refresh(packet.src, now);
            ctx.deliver(packet);
            return;
        }
        if packet.hop_count > self.cfg.net_diameter {
            ctx.drop(packet, DropReason::Ttl);
            return;
        }
        let dst = packet.dst;
        let Some(next) = self.active_route(dst, now).map(|r| r.next_hop) else {
            let seq = self.routes.get(&dst).and_then(|r| r.seq).unwrap_or(0);
            ctx.drop(packet, DropReason::NoRoute);
            self.send_rerr(ctx, vec![(dst, seq)]);
            return;
        };
        if let Some(r) = self.routes.get_mut(&dst) {
            r.precursors.insert(from);
        }
        self.refresh(dst, now);
        self.refresh(next, now);
        self.refresh(packet.src, now);
        ctx.send(packet, Dest::Unicast(next));
    }
}

impl Agent for Aodv {
    type Msg = AodvMsg;
    type Timer = AodvTimer;

    fn init(&mut self, ctx: &mut AodvCtx<'_>) {
        if self.cfg.hello_interval > 0.0 {
            let interval = SimTime::from_secs(self.cfg.hello_interval).0.max(1);
            let offset = SimTime((self.id as u64 * 1_000_000) % interval);
            ctx.set_timer(offset, AodvTimer::Hello);
        }
    }

    fn on_app_data(&mut self, ctx: &mut AodvCtx<'_>, packet: Packet<AodvMsg>) {
        self.route_data(ctx, packet);
    }

    fn on_receive(&mut self, ctx: &mut AodvCtx<'_>, from: NodeId, packet: Packet<AodvMsg>) {
        self.heard(ctx, from);
        if packet.kind == PacketKind::Data {
            self.forward_data(ctx, from, packet);
            return;
        }
        match packet.msg.clone() {
            AodvMsg::Rreq(r) => self.on_rreq(ctx, from, packet, r),
            AodvMsg::Rrep(r) => self.on_rrep(ctx, from, packet, r),
            AodvMsg::Rerr(lost) => self.on_rerr(ctx, from, lost),
            AodvMsg::Hello { seq } => {
                let now = ctx.now();
                let until = now + SimTime(ALLOWED_HELLO_LOSS * SimTime::from_secs(self.cfg.hello_interval).0);
                self.offer_route(now, from, from, 1, Some(seq), until);
            }
            AodvMsg::Data => ctx.drop(packet, DropReason::Malformed),
        }
    }

    fn on_timer(&mut self, ctx: &mut AodvCtx<'_>, timer: AodvTimer) {
        match timer {
            AodvTimer::Hello => {
                let now = ctx.now();
                let interval = SimTime::from_secs(self.cfg.hello_interval);
                let hello = ctx.control(BROADCAST, HELLO_BYTES, AodvMsg::Hello { seq: self.own_seq });
                ctx.send(hello, Dest::Broadcast);
                let deadline = ALLOWED_HELLO_LOSS * interval.0;
                let silent: Vec<NodeId> = self
                    .neighbors
                    .iter()
                    .filter(|(_, &t)| now.0 > t.0 + deadline)
                    .map(|(&n, _)| n)
                    .collect();
                for n in silent {
                    let lost = self.link_broken(n);
                    self.send_rerr(ctx, lost);
                }
                ctx.set_timer(interval, AodvTimer::Hello);
            }
            AodvTimer::Discovery { dest, generation } => self.discovery_timeout(ctx, dest, generation),
        }
    }

    fn on_link_failure(&mut self, ctx: &mut AodvCtx<'_>, next_hop: NodeId, packet: Packet<AodvMsg>) {
        let dst = packet.dst;
        let hops = self.routes.get(&dst).map_or(u32::MAX, |r| r.hops);
        let mut lost = self.link_broken(next_hop);
        if packet.kind != PacketKind::Data {
            ctx.drop(packet, DropReason::NoRoute);
            self.send_rerr(ctx, lost);
            return;
        }
        if packet.src == self.id {
            self.send_rerr(ctx, lost);
            self.route_data(ctx, packet);
            return;
        }
        if self.cfg.local_repair && hops <= self.cfg.max_repair_ttl() {
            lost.retain(|&(d, _)| d != dst);
            self.send_rerr(ctx, lost);
            self.stats.local_repairs += 1;
            self.buffer(ctx, packet);
            self.start_discovery(ctx, dst, Some(hops + 2));
        } else {
            ctx.drop(packet, DropReason::NoRoute);
            self.send_rerr(ctx, lost);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_schedules() {
        assert_eq!(ers_ttl_schedule(&AodvConfig::modified()), vec![2, 6, 35]);
        assert_eq!(ers_ttl_schedule(&AodvConfig::default()), vec![1, 3, 5, 7, 35]);
        let single = AodvConfig {
            ttl_start: 4,
            ttl_threshold: 4,
            ..AodvConfig::default()
        };
        assert_eq!(ers_ttl_schedule(&single), vec![4, 35]);
    }

    #[test]
    fn config_validation() {
        assert!(AodvConfig::default().validate().is_ok());
        assert!(AodvConfig::flooding().validate().is_ok());
        let bad = AodvConfig {
            ttl_start: 8,
            ..AodvConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AodvConfig {
            ttl_start: 0,
            ..AodvConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn timeouts() {
        let c = AodvConfig::default();
        assert_eq!(c.net_traversal_time(), SimTime::from_millis(2800));
        assert_eq!(c.ring_timeout(1), SimTime::from_millis(240));
        assert_eq!(c.ring_timeout(35), SimTime::from_millis(2800));
    }

    #[test]
    fn stale_sequence_numbers_do_not_replace_routes() {
        let mut a = Aodv::new(0, AodvConfig::default());
        let now = SimTime::from_secs(1.0);
        let until = SimTime::from_secs(20.0);
        assert!(a.offer_route(now, 5, 1, 3, Some(10), until));
        assert!(!a.offer_route(now, 5, 2, 1, Some(9), until));
        assert_eq!(a.route(5).unwrap().next_hop, 1);
        // Same sequence number, fewer hops wins.
        assert!(a.offer_route(now, 5, 2, 2, Some(10), until));
        assert_eq!(a.route(5).unwrap().next_hop, 2);
        assert!(a.offer_route(now, 5, 3, 4, Some(11), until));
        assert_eq!(a.route(5).unwrap().hops, 4);
    }
}
