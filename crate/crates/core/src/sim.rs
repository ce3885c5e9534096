//! The event loop of one run: wires mobility, channel, routers, traffic,
//! metrics and trace together.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::aodv::AodvNode;
use crate::channel::{Channel, Transmission};
use crate::config::{Protocol, ScenarioConfig};
use crate::dsdv::DsdvNode;
use crate::engine::{EventHandle, RngStream, Scheduler, SimTime, StreamLabel};
use crate::metrics::{Metrics, MetricsReport};
use crate::mobility::{initial_placement, Arena, Point, Trajectory};
use crate::packet::{Address, DataPacket, DropReason, Frame, FrameMode, NodeId, Packet, Payload};
use crate::routing::{Action, Ctx, Router, TimerKey};
use crate::trace::{Layer, TraceOp, TraceRecord, TraceWriter};
use crate::traffic::{random_pairs, Flow};

#[derive(Debug, Clone)]
pub enum RouterKind {
    Dsdv(DsdvNode),
    Aodv(AodvNode),
}

impl RouterKind {
    pub fn as_dsdv(&self) -> Option<&DsdvNode> {
        match self {
            RouterKind::Dsdv(n) => Some(n),
            RouterKind::Aodv(_) => None,
        }
    }

    pub fn as_aodv(&self) -> Option<&AodvNode> {
        match self {
            RouterKind::Aodv(n) => Some(n),
            RouterKind::Dsdv(_) => None,
        }
    }
}

impl Router for RouterKind {
    fn start(&mut self, ctx: &mut Ctx) {
        match self {
            RouterKind::Dsdv(n) => n.start(ctx),
            RouterKind::Aodv(n) => n.start(ctx),
        }
    }

    fn route_data(&mut self, packet: Packet, from: Option<NodeId>, ctx: &mut Ctx) {
        match self {
            RouterKind::Dsdv(n) => n.route_data(packet, from, ctx),
            RouterKind::Aodv(n) => n.route_data(packet, from, ctx),
        }
    }

    fn handle_control(&mut self, packet: Packet, from: NodeId, ctx: &mut Ctx) {
        match self {
            RouterKind::Dsdv(n) => n.handle_control(packet, from, ctx),
            RouterKind::Aodv(n) => n.handle_control(packet, from, ctx),
        }
    }

    fn link_failed(&mut self, next_hop: NodeId, packet: Packet, ctx: &mut Ctx) {
        match self {
            RouterKind::Dsdv(n) => n.link_failed(next_hop, packet, ctx),
            RouterKind::Aodv(n) => n.link_failed(next_hop, packet, ctx),
        }
    }

    fn timer(&mut self, key: TimerKey, ctx: &mut Ctx) {
        match self {
            RouterKind::Dsdv(n) => n.timer(key, ctx),
            RouterKind::Aodv(n) => n.timer(key, ctx),
        }
    }
}

#[derive(Debug, Clone)]
enum Event {
    Emit { flow: usize, k: u64 },
    /// A jittered broadcast reaching the interface queue.
    Enqueue(Frame),
    TxDone(NodeId),
    Deliver { to: NodeId, frame: Frame, reception: u64 },
    Timer { node: NodeId, key: TimerKey },
}

/// What a finished run hands back.
pub struct RunOutput<W> {
    pub report: MetricsReport,
    pub metrics: Metrics,
    /// Data packets still travelling at the horizon, as `(holder, packet)`.
    pub in_flight: Vec<(NodeId, Packet)>,
    pub trace: Option<W>,
}

pub struct Simulation<W: Write = io::Sink> {
    horizon: SimTime,
    ttl: u8,
    scheduler: Scheduler<Event>,
    channel: Channel,
    trajectories: Vec<Trajectory>,
    positions: Vec<Point>,
    positions_at: Option<SimTime>,
    routers: Vec<RouterKind>,
    flows: Vec<Flow>,
    metrics: Metrics,
    trace: TraceWriter<W>,
    protocol_rng: RngStream,
    jitter_rng: RngStream,
    next_uid: u64,
    timers: HashMap<(NodeId, TimerKey), EventHandle>,
}

impl<W: Write> Simulation<W> {
    /// Random-waypoint run exactly as configured.
    pub fn new(config: &ScenarioConfig, trace: TraceWriter<W>) -> Self {
        let arena = Arena::new(config.area_width, config.area_height);
        let mut rng = RngStream::new(config.seed, StreamLabel::Mobility);
        let start = initial_placement(config.nodes, &arena, &mut rng);
        let trajectories = start
            .into_iter()
            .map(|p| Trajectory::generate(p, &arena, config.speed, config.pause_time, config.horizon, &mut rng))
            .collect();
        Self::build(config, trajectories, trace)
    }

    /// Static run on the given placement; the mobility keys are ignored.
    pub fn with_positions(config: &ScenarioConfig, positions: &[Point], trace: TraceWriter<W>) -> Self {
        assert_eq!(positions.len(), config.nodes, "one position per node");
        let trajectories = positions.iter().map(|&p| Trajectory::stationary(p)).collect();
        Self::build(config, trajectories, trace)
    }

    fn build(config: &ScenarioConfig, trajectories: Vec<Trajectory>, trace: TraceWriter<W>) -> Self {
        let n = config.nodes;
        let horizon = config.horizon_time();
        let pairs = match &config.flow_pairs {
            Some(p) => p.clone(),
            None => {
                let mut rng = RngStream::new(config.seed, StreamLabel::Traffic);
                random_pairs(config.flows, n, &mut rng)
            }
        };
        let start_at = SimTime::from_secs_f64(config.flow_start);
        let flows: Vec<Flow> = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (source, sink))| Flow {
                id,
                source,
                sink,
                rate: config.rate,
                packet_size: config.packet_size,
                start_at,
                stop_at: horizon,
            })
            .collect();
        let routers = (0..n)
            .map(|i| {
                let id = NodeId(i as u32);
                match config.protocol {
                    Protocol::Dsdv => RouterKind::Dsdv(DsdvNode::new(id, config.dsdv())),
                    Protocol::Aodv => RouterKind::Aodv(AodvNode::new(id, config.aodv())),
                }
            })
            .collect();

        let mut sim = Simulation {
            horizon,
            ttl: config.ttl,
            scheduler: Scheduler::new(config.seed),
            channel: Channel::new(config.radio(), n),
            trajectories,
            positions: Vec::with_capacity(n),
            positions_at: None,
            routers,
            flows,
            metrics: Metrics::new(),
            trace,
            protocol_rng: RngStream::new(config.seed, StreamLabel::Protocol),
            jitter_rng: RngStream::new(config.seed, StreamLabel::ChannelJitter),
            next_uid: 0,
            timers: HashMap::new(),
        };
        for (i, f) in sim.flows.iter().enumerate() {
            if f.emits(0) {
                sim.scheduler.schedule(f.emission_time(0), Event::Emit { flow: i, k: 0 });
            }
        }
        for i in 0..n {
            let node = NodeId(i as u32);
            sim.dispatch(node, |r, ctx| r.start(ctx));
            sim.kick(node);
        }
        sim
    }

    pub fn now(&self) -> SimTime {
        self.scheduler.now()
    }

    pub fn horizon(&self) -> SimTime {
        self.horizon
    }

    pub fn router(&self, node: NodeId) -> &RouterKind {
        &self.routers[node.index()]
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn position(&self, node: NodeId, t: SimTime) -> Point {
        self.trajectories[node.index()].position_at(t)
    }

    /// Dispatches every event up to `t` (capped at the horizon).
    pub fn run_until(&mut self, t: SimTime) -> io::Result<()> {
        let t = t.min(self.horizon);
        while let Some((_, ev)) = self.scheduler.pop_until(t) {
            self.handle(ev);
            if self.trace.failed() {
                return Err(io::Error::other("trace sink failed"));
            }
        }
        Ok(())
    }

    /// Data packets currently held anywhere: interface queues, discovery
    /// buffers, frames on the air or waiting out their jitter.
    pub fn in_flight(&self) -> Vec<(NodeId, Packet)> {
        let mut out: Vec<(NodeId, Packet)> = Vec::new();
        for f in self.channel.queued() {
            out.push((f.sender, f.packet.clone()));
        }
        for (i, r) in self.routers.iter().enumerate() {
            if let RouterKind::Aodv(a) = r {
                out.extend(a.pending_packets().map(|p| (NodeId(i as u32), p.clone())));
            }
        }
        for ev in self.scheduler.pending() {
            match ev {
                Event::Deliver { to, frame, .. } => out.push((*to, frame.packet.clone())),
                Event::Enqueue(frame) => out.push((frame.sender, frame.packet.clone())),
                _ => {}
            }
        }
        out.retain(|(_, p)| p.data().is_some());
        out.sort_by_key(|(_, p)| p.uid);
        out
    }

    /// Runs to the horizon, writes off what is still in flight as `END`,
    /// and closes the trace.
    pub fn finish(mut self) -> io::Result<RunOutput<W>> {
        let run = self.run_until(self.horizon);
        if run.is_ok() {
            let in_flight = self.in_flight();
            for (node, p) in &in_flight {
                self.record_drop(self.horizon, *node, Layer::Rtr, p, DropReason::EndOfRun);
            }
            let report = self.metrics.report(self.horizon);
            let trace = self.trace.finish()?;
            return Ok(RunOutput {
                report,
                metrics: self.metrics,
                in_flight,
                trace,
            });
        }
        self.trace.finish()?;
        Err(run.unwrap_err())
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::Emit { flow, k } => self.emit(flow, k),
            Event::Enqueue(frame) => {
                let node = frame.sender;
                self.enqueue(frame);
                self.kick(node);
            }
            Event::TxDone(node) => {
                self.channel.finish_transmission(node);
                self.kick(node);
            }
            Event::Deliver { to, frame, reception } => self.deliver(to, frame, reception),
            Event::Timer { node, key } => {
                self.timers.remove(&(node, key));
                self.dispatch(node, |r, ctx| r.timer(key, ctx));
                self.kick(node);
            }
        }
    }

    fn emit(&mut self, flow: usize, k: u64) {
        let now = self.scheduler.now();
        let f = &self.flows[flow];
        let (source, sink, size) = (f.source, f.sink, f.packet_size);
        if f.emits(k + 1) {
            let at = f.emission_time(k + 1);
            if at <= self.horizon {
                self.scheduler.schedule(at, Event::Emit { flow, k: k + 1 });
            }
        }
        let uid = self.next_uid;
        self.next_uid += 1;
        let packet = Packet {
            uid,
            src: source,
            dst: Address::Node(sink),
            size,
            payload: Payload::Data(DataPacket {
                flow,
                seq: k,
                source,
                sink,
                created_at: now,
                ttl: self.ttl,
            }),
        };
        self.log(TraceOp::Send, now, source, Layer::Agt, &packet, None);
        self.metrics.record_send(uid, flow, k, now, size);
        self.dispatch(source, |r, ctx| r.route_data(packet, None, ctx));
        self.kick(source);
    }

    fn deliver(&mut self, to: NodeId, frame: Frame, reception: u64) {
        let now = self.scheduler.now();
        if self.channel.take_collision(reception) {
            self.record_drop(now, to, Layer::Mac, &frame.packet, DropReason::Collision);
            return;
        }
        let from = frame.sender;
        let mut packet = frame.packet;
        match &mut packet.payload {
            Payload::Data(d) if d.sink == to => {
                self.log(TraceOp::Receive, now, to, Layer::Agt, &packet, None);
                self.metrics.record_receive(packet.uid, now);
                return;
            }
            Payload::Data(d) => {
                if d.ttl <= 1 {
                    self.record_drop(now, to, Layer::Rtr, &packet, DropReason::Ttl);
                    return;
                }
                d.ttl -= 1;
                self.dispatch(to, |r, ctx| r.route_data(packet, Some(from), ctx));
            }
            _ => self.dispatch(to, |r, ctx| r.handle_control(packet, from, ctx)),
        }
        self.kick(to);
    }

    fn dispatch<F>(&mut self, node: NodeId, f: F)
    where
        F: FnOnce(&mut RouterKind, &mut Ctx),
    {
        let now = self.scheduler.now();
        let actions = {
            let mut ctx = Ctx::new(now, node, &mut self.protocol_rng, &mut self.next_uid);
            f(&mut self.routers[node.index()], &mut ctx);
            ctx.into_actions()
        };
        for a in actions {
            self.apply(node, a);
        }
    }

    fn apply(&mut self, node: NodeId, action: Action) {
        let now = self.scheduler.now();
        match action {
            Action::Broadcast(packet) => {
                let frame = Frame {
                    packet,
                    sender: node,
                    mode: FrameMode::Broadcast,
                };
                let max = self.channel.config().broadcast_jitter_max;
                if max == SimTime::ZERO {
                    self.enqueue(frame);
                } else {
                    let d = self.jitter_rng.duration_upto(max);
                    self.scheduler.schedule_in(d, Event::Enqueue(frame));
                }
            }
            Action::Unicast(hop, packet) => self.enqueue(Frame {
                packet,
                sender: node,
                mode: FrameMode::Unicast(hop),
            }),
            Action::SetTimer(key, at) => {
                if let Some(h) = self.timers.remove(&(node, key)) {
                    self.scheduler.cancel(h);
                }
                let h = self.scheduler.schedule(at.max(now), Event::Timer { node, key });
                self.timers.insert((node, key), h);
            }
            Action::CancelTimer(key) => {
                if let Some(h) = self.timers.remove(&(node, key)) {
                    self.scheduler.cancel(h);
                }
            }
            Action::Drop(packet, reason) => self.record_drop(now, node, Layer::Rtr, &packet, reason),
        }
    }

    fn enqueue(&mut self, frame: Frame) {
        if let Err(f) = self.channel.enqueue(frame) {
            let now = self.scheduler.now();
            self.record_drop(now, f.sender, Layer::Mac, &f.packet, DropReason::QueueFull);
        }
    }

    /// Starts transmissions at `node` until the radio is busy or the queue
    /// is empty. Link failures cost no airtime, so the next frame follows
    /// immediately.
    fn kick(&mut self, node: NodeId) {
        while let Some(frame) = self.channel.next_frame(node) {
            let now = self.scheduler.now();
            self.refresh_positions(now);
            match self.channel.transmit(&frame, now, &self.positions) {
                Transmission::Sent { tx_end, deliveries } => {
                    let op = if frame.packet.data().is_none() && frame.packet.src == node {
                        TraceOp::Send
                    } else {
                        TraceOp::Forward
                    };
                    self.log(op, now, node, Layer::Rtr, &frame.packet, None);
                    self.metrics.record_transmission(frame.packet.ptype(), frame.size());
                    self.scheduler.schedule(tx_end, Event::TxDone(node));
                    for d in deliveries {
                        self.scheduler.schedule(
                            d.at,
                            Event::Deliver {
                                to: d.to,
                                frame: frame.clone(),
                                reception: d.reception,
                            },
                        );
                    }
                    return;
                }
                Transmission::LinkFailure => {
                    let FrameMode::Unicast(hop) = frame.mode else {
                        unreachable!("broadcasts cannot fail")
                    };
                    self.dispatch(node, |r, ctx| r.link_failed(hop, frame.packet, ctx));
                }
            }
        }
    }

    fn refresh_positions(&mut self, now: SimTime) {
        if self.positions_at == Some(now) {
            return;
        }
        self.positions.clear();
        self.positions.extend(self.trajectories.iter().map(|t| t.position_at(now)));
        self.positions_at = Some(now);
    }

    fn record_drop(&mut self, at: SimTime, node: NodeId, layer: Layer, packet: &Packet, reason: DropReason) {
        self.log(TraceOp::Drop, at, node, layer, packet, Some(reason));
        self.metrics.record_drop(packet, reason);
    }

    fn log(&mut self, op: TraceOp, time: SimTime, node: NodeId, layer: Layer, p: &Packet, reason: Option<DropReason>) {
        self.trace.write(&TraceRecord {
            op,
            time,
            node,
            layer,
            ptype: p.ptype(),
            uid: p.uid,
            size: p.size,
            src: p.src,
            dst: p.dst,
            reason,
        });
    }
}
