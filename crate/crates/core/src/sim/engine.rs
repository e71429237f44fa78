use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::SimMetrics;
use super::mobility::{MobilityState, TICK_SECS};
use super::scenario::SimScenario;
use super::trace::{TraceEvent, TraceRecord};
use super::{NodeId, SimTime};
use crate::error::SimError;

/// Interface queue length per node, control and data together.
pub const IFQ_CAPACITY: usize = 50;
/// Propagation and processing delay added to every reception.
pub const RX_DELAY: SimTime = SimTime(1_000);
/// Destination of broadcast control packets.
pub const BROADCAST: NodeId = NodeId::MAX;

const STREAM_MOBILITY: u64 = 0;
const STREAM_LOSS: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    Control,
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PacketKind::Data => "data",
            PacketKind::Control => "control",
        })
    }
}

impl FromStr for PacketKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "data" => Ok(PacketKind::Data),
            "control" => Ok(PacketKind::Control),
            other => Err(format!("unknown packet kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// Lost on the air.
    Loss,
    /// Interface queue full.
    Ifq,
    /// No route and none could be found.
    NoRoute,
    /// Hop limit exhausted.
    Ttl,
    /// Payload the protocol could not interpret.
    Malformed,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Loss => "loss",
            DropReason::Ifq => "ifq",
            DropReason::NoRoute => "noroute",
            DropReason::Ttl => "ttl",
            DropReason::Malformed => "malformed",
        })
    }
}

impl FromStr for DropReason {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "loss" => DropReason::Loss,
            "ifq" => DropReason::Ifq,
            "noroute" => DropReason::NoRoute,
            "ttl" => DropReason::Ttl,
            "malformed" => DropReason::Malformed,
            other => return Err(format!("unknown drop reason `{other}`")),
        })
    }
}

/// Protocol payload carried by every packet.
pub trait Message: Clone + fmt::Debug + Default {
    /// Tag written to the trace for control packets.
    fn subtype(&self) -> Cow<'static, str>;
    /// Protocol header added to the on-air size.
    fn header_bytes(&self) -> u32 {
        0
    }
}

impl Message for () {
    fn subtype(&self) -> Cow<'static, str> {
        Cow::Borrowed("none")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet<M> {
    pub id: u64,
    pub kind: PacketKind,
    /// Originator.
    pub src: NodeId,
    /// Final destination, or [`BROADCAST`].
    pub dst: NodeId,
    /// Payload size (B).
    pub bytes: u32,
    pub origin_time: SimTime,
    /// Hops travelled so far.
    pub hop_count: u32,
    pub msg: M,
}

impl<M: Message> Packet<M> {
    pub fn subtype(&self) -> Cow<'static, str> {
        match self.kind {
            PacketKind::Data => Cow::Borrowed("cbr"),
            PacketKind::Control => self.msg.subtype(),
        }
    }

    pub fn air_bytes(&self) -> u32 {
        self.bytes + self.msg.header_bytes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug)]
enum Action<M, T> {
    Send(Packet<M>, Dest),
    Deliver(Packet<M>),
    Drop(Packet<M>, DropReason),
    Timer(SimTime, T),
}

/// Handle through which an agent acts on the network during a callback.
/// Actions take effect in the order they were requested once the callback
/// returns.
pub struct Ctx<'a, M, T> {
    node: NodeId,
    now: SimTime,
    node_count: u32,
    next_id: &'a mut u64,
    actions: &'a mut Vec<Action<M, T>>,
}

impl<M: Message, T> Ctx<'_, M, T> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    /// A fresh control packet originated by this node.
    pub fn control(&mut self, dst: NodeId, bytes: u32, msg: M) -> Packet<M> {
        let id = *self.next_id;
        *self.next_id += 1;
        Packet {
            id,
            kind: PacketKind::Control,
            src: self.node,
            dst,
            bytes,
            origin_time: self.now,
            hop_count: 0,
            msg,
        }
    }

    pub fn send(&mut self, packet: Packet<M>, to: Dest) {
        self.actions.push(Action::Send(packet, to));
    }

    /// Hands a data packet to the application at its destination.
    pub fn deliver(&mut self, packet: Packet<M>) {
        self.actions.push(Action::Deliver(packet));
    }

    pub fn drop(&mut self, packet: Packet<M>, reason: DropReason) {
        self.actions.push(Action::Drop(packet, reason));
    }

    pub fn set_timer(&mut self, after: SimTime, timer: T) {
        self.actions.push(Action::Timer(self.now + after, timer));
    }
}

/// Per-node routing logic.
pub trait Agent {
    type Msg: Message;
    type Timer: Clone + fmt::Debug;

    fn init(&mut self, _ctx: &mut Ctx<'_, Self::Msg, Self::Timer>) {}
    /// A data packet generated locally.
    fn on_app_data(&mut self, ctx: &mut Ctx<'_, Self::Msg, Self::Timer>, packet: Packet<Self::Msg>);
    fn on_receive(&mut self, ctx: &mut Ctx<'_, Self::Msg, Self::Timer>, from: NodeId, packet: Packet<Self::Msg>);
    fn on_timer(&mut self, ctx: &mut Ctx<'_, Self::Msg, Self::Timer>, timer: Self::Timer);
    /// A unicast to `next_hop` found it out of range; the packet comes back.
    fn on_link_failure(
        &mut self,
        ctx: &mut Ctx<'_, Self::Msg, Self::Timer>,
        next_hop: NodeId,
        packet: Packet<Self::Msg>,
    );
}

#[derive(Debug)]
enum Event<M, T> {
    AppSend { flow: usize, k: u64 },
    Deliver { to: NodeId, from: NodeId, packet: Packet<M> },
    TxDone { node: NodeId },
    LinkFail { node: NodeId, next: NodeId, packet: Packet<M> },
    Timer { node: NodeId, timer: T },
}

struct Scheduled<E> {
    time: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Transmitter<M> {
    busy: bool,
    control: VecDeque<(Packet<M>, Dest)>,
    data: VecDeque<(Packet<M>, Dest)>,
}

impl<M> Transmitter<M> {
    fn len(&self) -> usize {
        self.control.len() + self.data.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Flow {
    src: NodeId,
    dst: NodeId,
    start: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep every trace record in memory.
    pub trace: bool,
}

#[derive(Debug)]
pub struct SimOutput<A> {
    pub metrics: SimMetrics,
    pub trace: Vec<TraceRecord>,
    pub agents: Vec<A>,
    pub flows: Vec<(NodeId, NodeId)>,
    /// Data packets neither delivered nor dropped when the run ended.
    pub data_in_flight: u64,
}

/// Event loop of one run.
pub struct Simulator<A: Agent> {
    scenario: SimScenario,
    agents: Vec<A>,
    now: SimTime,
    end_of_traffic: SimTime,
    interval: SimTime,
    queue: BinaryHeap<Scheduled<Event<A::Msg, A::Timer>>>,
    seq: u64,
    next_id: u64,
    mobility: MobilityState,
    rng_mobility: ChaCha8Rng,
    rng_loss: ChaCha8Rng,
    flows: Vec<Flow>,
    tx: Vec<Transmitter<A::Msg>>,
    trace: Option<Vec<TraceRecord>>,
    actions: Vec<Action<A::Msg, A::Timer>>,
    initialized: bool,
    data_sent: u64,
    data_delivered: u64,
    data_dropped: u64,
    bytes_delivered: u64,
    control_tx: u64,
    sum_delay_ns: u128,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl<A: Agent> Simulator<A> {
    pub fn new(scenario: &SimScenario, agents: Vec<A>, opts: RunOptions) -> Result<Self, SimError> {
        scenario.validate()?;
        if agents.len() != scenario.node_count as usize {
            return Err(SimError::InvalidScenario {
                field: "node_count",
                reason: format!("{} agents for {} nodes", agents.len(), scenario.node_count),
            });
        }
        let mut rng_mobility = stream_rng(scenario.seed, STREAM_MOBILITY);
        let mobility = MobilityState::new(scenario, &mut rng_mobility);
        let mut rng_traffic = stream_rng(scenario.seed, STREAM_TRAFFIC);
        let t = &scenario.traffic;
        let interval = SimTime::from_secs(t.interval).max(SimTime(1));
        let start = SimTime::from_secs(t.start);
        let mut flows: Vec<Flow> = t.flows.iter().map(|&(src, dst)| Flow { src, dst, start }).collect();
        let n = scenario.node_count;
        let mut added = 0;
        while added < t.random_flows {
            let src = rng_traffic.random_range(0..n);
            let mut dst = rng_traffic.random_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            if flows.iter().any(|f| f.src == src && f.dst == dst) {
                continue;
            }
            let offset = SimTime(rng_traffic.random_range(0..interval.0));
            flows.push(Flow {
                src,
                dst,
                start: start + offset,
            });
            added += 1;
        }
        let end_of_traffic = SimTime::from_secs(t.stop.unwrap_or(scenario.duration).min(scenario.duration));
        Ok(Simulator {
            scenario: scenario.clone(),
            agents,
            now: SimTime::ZERO,
            end_of_traffic,
            interval,
            queue: BinaryHeap::new(),
            seq: 0,
            next_id: 0,
            mobility,
            rng_mobility,
            rng_loss: stream_rng(scenario.seed, STREAM_LOSS),
            flows,
            tx: (0..n)
                .map(|_| Transmitter {
                    busy: false,
                    control: VecDeque::new(),
                    data: VecDeque::new(),
                })
                .collect(),
            trace: opts.trace.then(Vec::new),
            actions: Vec::new(),
            initialized: false,
            data_sent: 0,
            data_delivered: 0,
            data_dropped: 0,
            bytes_delivered: 0,
            control_tx: 0,
            sum_delay_ns: 0,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn agents(&self) -> &[A] {
        &self.agents
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        self.mobility.positions()
    }

    pub fn flows(&self) -> Vec<(NodeId, NodeId)> {
        self.flows.iter().map(|f| (f.src, f.dst)).collect()
    }

    /// Runs every agent's `init` in node order and schedules the traffic.
    pub fn init(&mut self) -> Result<(), SimError> {
        if self.initialized {
            return Err(SimError::ProtocolMisuse("simulator initialized twice"));
        }
        self.initialized = true;
        for node in 0..self.agents.len() as NodeId {
            self.call(node, |a, ctx| a.init(ctx));
        }
        for (flow, f) in self.flows.clone().into_iter().enumerate() {
            if f.start < self.end_of_traffic {
                self.schedule(f.start, Event::AppSend { flow, k: 0 });
            }
        }
        Ok(())
    }

    /// Originates one data packet at `src` for `dst` at the current time.
    pub fn send_data(&mut self, src: NodeId, dst: NodeId) -> Result<u64, SimError> {
        if !self.initialized {
            return Err(SimError::ProtocolMisuse("data sent before the protocol was initialized"));
        }
        let n = self.scenario.node_count;
        if src >= n || dst >= n || src == dst {
            return Err(SimError::ProtocolMisuse("data endpoints must be distinct existing nodes"));
        }
        Ok(self.originate(src, dst))
    }

    fn originate(&mut self, src: NodeId, dst: NodeId) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let packet = Packet {
            id,
            kind: PacketKind::Data,
            src,
            dst,
            bytes: self.scenario.traffic.packet_bytes,
            origin_time: self.now,
            hop_count: 0,
            msg: A::Msg::default(),
        };
        self.data_sent += 1;
        self.record(TraceEvent::Gen, src, &packet, Some(dst));
        self.call(src, |a, ctx| a.on_app_data(ctx, packet));
        id
    }

    /// Processes every event due at or before `end`.
    pub fn run_until(&mut self, end: SimTime) -> Result<(), SimError> {
        if !self.initialized {
            return Err(SimError::ProtocolMisuse("run before the protocol was initialized"));
        }
        while self.queue.peek().is_some_and(|e| e.time <= end) {
            let Scheduled { time, event, .. } = self.queue.pop().expect("peeked");
            if time < self.now {
                return Err(SimError::TimeRegression {
                    now: self.now.0,
                    event: time.0,
                });
            }
            self.now = time;
            self.dispatch(event);
        }
        self.now = self.now.max(end);
        Ok(())
    }

    pub fn finish(self) -> SimOutput<A> {
        let metrics = SimMetrics::from_counts(
            self.scenario.duration,
            self.data_sent,
            self.data_delivered,
            self.bytes_delivered,
            self.control_tx,
            self.sum_delay_ns,
        );
        SimOutput {
            metrics,
            flows: self.flows.iter().map(|f| (f.src, f.dst)).collect(),
            data_in_flight: self.data_sent - self.data_delivered - self.data_dropped,
            trace: self.trace.unwrap_or_default(),
            agents: self.agents,
        }
    }

    /// Runs one agent callback, then applies the actions it requested.
    fn call<F>(&mut self, node: NodeId, f: F)
    where
        F: FnOnce(&mut A, &mut Ctx<'_, A::Msg, A::Timer>),
    {
        let mut ctx = Ctx {
            node,
            now: self.now,
            node_count: self.scenario.node_count,
            next_id: &mut self.next_id,
            actions: &mut self.actions,
        };
        f(&mut self.agents[node as usize], &mut ctx);
        self.apply(node);
    }

    fn schedule(&mut self, time: SimTime, event: Event<A::Msg, A::Timer>) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn record(&mut self, event: TraceEvent, node: NodeId, packet: &Packet<A::Msg>, peer: Option<NodeId>) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord {
                time: self.now,
                event,
                node,
                packet_id: packet.id,
                kind: packet.kind,
                subtype: packet.subtype().into_owned(),
                bytes: packet.bytes,
                peer,
            });
        }
    }

    fn dispatch(&mut self, event: Event<A::Msg, A::Timer>) {
        match event {
            Event::AppSend { flow, k } => {
                let f = self.flows[flow];
                self.originate(f.src, f.dst);
                let next = SimTime(f.start.0 + (k + 1) * self.interval.0);
                if next < self.end_of_traffic {
                    self.schedule(next, Event::AppSend { flow, k: k + 1 });
                }
            }
            Event::Deliver { to, from, mut packet } => {
                self.record(TraceEvent::Rx, to, &packet, Some(from));
                packet.hop_count += 1;
                self.call(to, |a, ctx| a.on_receive(ctx, from, packet));
            }
            Event::TxDone { node } => {
                self.tx[node as usize].busy = false;
                self.start_tx(node);
            }
            Event::LinkFail { node, next, packet } => {
                self.record(TraceEvent::LinkFail, node, &packet, Some(next));
                self.call(node, |a, ctx| a.on_link_failure(ctx, next, packet));
            }
            Event::Timer { node, timer } => {
                self.call(node, |a, ctx| a.on_timer(ctx, timer));
            }
        }
    }

    fn apply(&mut self, node: NodeId) {
        let actions = std::mem::take(&mut self.actions);
        for action in actions {
            match action {
                Action::Send(packet, to) => self.enqueue(node, packet, to),
                Action::Deliver(packet) => {
                    self.record(TraceEvent::Recv, node, &packet, Some(packet.src));
                    self.data_delivered += 1;
                    self.bytes_delivered += packet.bytes as u64;
                    self.sum_delay_ns += (self.now.0 - packet.origin_time.0) as u128;
                }
                Action::Drop(packet, reason) => self.drop_packet(node, packet, reason, None),
                Action::Timer(at, timer) => self.schedule(at, Event::Timer { node, timer }),
            }
        }
    }

    fn drop_packet(&mut self, node: NodeId, packet: Packet<A::Msg>, reason: DropReason, peer: Option<NodeId>) {
        self.record(TraceEvent::Drop(reason), node, &packet, peer);
        if packet.kind == PacketKind::Data {
            self.data_dropped += 1;
        }
    }

    fn enqueue(&mut self, node: NodeId, packet: Packet<A::Msg>, to: Dest) {
        let tx = &mut self.tx[node as usize];
        if tx.len() >= IFQ_CAPACITY {
            self.drop_packet(node, packet, DropReason::Ifq, None);
            return;
        }
        match packet.kind {
            PacketKind::Control => tx.control.push_back((packet, to)),
            PacketKind::Data => tx.data.push_back((packet, to)),
        }
        if !tx.busy {
            self.start_tx(node);
        }
    }

    fn tx_time(&self, bytes: u32) -> SimTime {
        let bits = bytes as f64 * 8.0;
        SimTime((bits * 1e9 / self.scenario.radio.bitrate).ceil() as u64)
    }

    fn lost(&mut self) -> bool {
        let p = self.scenario.radio.loss_prob;
        p > 0.0 && self.rng_loss.random::<f64>() < p
    }

    fn start_tx(&mut self, node: NodeId) {
        let tx = &mut self.tx[node as usize];
        let Some((packet, to)) = tx.control.pop_front().or_else(|| tx.data.pop_front()) else {
            return;
        };
        tx.busy = true;
        let ticks = (self.now.as_secs() / TICK_SECS).floor() as u64;
        self.mobility.advance_to(ticks, &mut self.rng_mobility);

        let peer = match to {
            Dest::Broadcast => None,
            Dest::Unicast(n) => Some(n),
        };
        self.record(TraceEvent::Tx, node, &packet, peer);
        if packet.kind == PacketKind::Control {
            self.control_tx += 1;
        }
        let delay = self.tx_time(packet.air_bytes());
        self.schedule(self.now + delay, Event::TxDone { node });
        let range = self.scenario.radio.range;
        match to {
            Dest::Broadcast => {
                for other in 0..self.scenario.node_count {
                    if other == node || self.mobility.distance(node, other) > range {
                        continue;
                    }
                    if self.lost() {
                        self.record(TraceEvent::Drop(DropReason::Loss), other, &packet, Some(node));
                    } else {
                        self.schedule(
                            self.now + delay + RX_DELAY,
                            Event::Deliver {
                                to: other,
                                from: node,
                                packet: packet.clone(),
                            },
                        );
                    }
                }
            }
            Dest::Unicast(next) => {
                if next < self.scenario.node_count && next != node && self.mobility.distance(node, next) <= range {
                    if self.lost() {
                        self.drop_packet(next, packet, DropReason::Loss, Some(node));
                    } else {
                        self.schedule(
                            self.now + delay + RX_DELAY,
                            Event::Deliver {
                                to: next,
                                from: node,
                                packet,
                            },
                        );
                    }
                } else {
                    self.schedule(self.now + delay, Event::LinkFail { node, next, packet });
                }
            }
        }
    }
}

/// Initializes and runs a scenario to its duration.
pub fn run<A: Agent>(scenario: &SimScenario, agents: Vec<A>, opts: RunOptions) -> Result<SimOutput<A>, SimError> {
    let mut sim = Simulator::new(scenario, agents, opts)?;
    sim.init()?;
    // The run covers [0, duration).
    let end = SimTime::from_secs(scenario.duration);
    sim.run_until(SimTime(end.0.saturating_sub(1)))?;
    Ok(sim.finish())
}
