//! Ad hoc On-Demand Distance Vector routing.
//!
//! Routes exist only while traffic needs them. A source without a route
//! buffers its packets and floods a route request; the destination (or a
//! node holding a fresh enough route) answers with a route reply that
//! travels back along the reverse path. Broken next hops are reported
//! upstream with route errors.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::engine::SimTime;
use crate::packet::{
    rerr_size, Address, DropReason, NodeId, Packet, Payload, Rerr, Rrep, Rreq, RREP_SIZE,
    RREQ_SIZE,
};
use crate::routing::{Ctx, Router, TimerKey};

#[derive(Debug, Clone, PartialEq)]
pub struct AodvConfig {
    pub active_route_timeout: SimTime,
    /// Retries after the first request, so attempts = retries + 1.
    pub rreq_retries: u32,
    /// Wait after the first request; doubles on every retry.
    pub retry_wait: SimTime,
    pub reverse_route_lifetime: SimTime,
    /// Lifetime the destination grants in its own replies.
    pub my_route_timeout: SimTime,
    pub pending_capacity: usize,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            active_route_timeout: SimTime::from_secs(3),
            rreq_retries: 2,
            retry_wait: SimTime::from_secs(1),
            reverse_route_lifetime: SimTime::from_secs(3),
            my_route_timeout: SimTime::from_secs(6),
            pending_capacity: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AodvEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_sequence: u32,
    pub expires_at: SimTime,
    pub valid: bool,
}

impl AodvEntry {
    pub fn usable(&self, now: SimTime) -> bool {
        self.valid && self.expires_at > now
    }
}

/// Packets waiting for a route to one destination.
#[derive(Debug, Clone, Default)]
pub struct PendingBuffer {
    pub queue: VecDeque<Packet>,
    pub retries_remaining: u32,
    attempt: u32,
}

#[derive(Debug, Clone)]
pub struct AodvNode {
    id: NodeId,
    config: AodvConfig,
    own_sequence: u32,
    rreq_id: u32,
    routes: BTreeMap<NodeId, AodvEntry>,
    seen: HashSet<(NodeId, u32)>,
    pending: BTreeMap<NodeId, PendingBuffer>,
}

impl AodvNode {
    pub fn new(id: NodeId, config: AodvConfig) -> Self {
        AodvNode {
            id,
            config,
            own_sequence: 0,
            rreq_id: 0,
            routes: BTreeMap::new(),
            seen: HashSet::new(),
            pending: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn own_sequence(&self) -> u32 {
        self.own_sequence
    }

    pub fn route(&self, destination: NodeId) -> Option<&AodvEntry> {
        self.routes.get(&destination)
    }

    pub fn routes(&self) -> &BTreeMap<NodeId, AodvEntry> {
        &self.routes
    }

    pub fn usable_route(&self, destination: NodeId, now: SimTime) -> Option<&AodvEntry> {
        self.routes.get(&destination).filter(|e| e.usable(now))
    }

    pub fn pending(&self, destination: NodeId) -> Option<&PendingBuffer> {
        self.pending.get(&destination)
    }

    pub fn pending_packets(&self) -> impl Iterator<Item = &Packet> {
        self.pending.values().flat_map(|b| b.queue.iter())
    }

    /// Installs or refreshes a route if the offer is fresher, or equally
    /// fresh and shorter, or the current entry is unusable. A stored
    /// sequence number is never lowered. Returns whether it was adopted.
    fn offer_route(
        &mut self,
        destination: NodeId,
        next_hop: NodeId,
        hop_count: u32,
        sequence: u32,
        lifetime: SimTime,
        now: SimTime,
    ) -> bool {
        let adopt = match self.routes.get(&destination) {
            None => true,
            Some(cur) => {
                sequence > cur.dest_sequence
                    || (sequence == cur.dest_sequence
                        && (hop_count < cur.hop_count || !cur.usable(now)))
            }
        };
        if adopt {
            let expires_at = match self.routes.get(&destination) {
                Some(cur) if cur.usable(now) && cur.next_hop == next_hop => {
                    cur.expires_at.max(now + lifetime)
                }
                _ => now + lifetime,
            };
            self.routes.insert(
                destination,
                AodvEntry {
                    destination,
                    next_hop,
                    hop_count,
                    dest_sequence: sequence,
                    expires_at,
                    valid: true,
                },
            );
        }
        adopt
    }

    fn refresh(&mut self, destination: NodeId, until: SimTime) {
        if let Some(e) = self.routes.get_mut(&destination) {
            e.expires_at = e.expires_at.max(until);
        }
    }

    /// Starts (or retries) discovery toward `destination`.
    pub fn originate_rreq(&mut self, destination: NodeId, ctx: &mut Ctx) {
        self.own_sequence += 1;
        self.rreq_id += 1;
        self.seen.insert((self.id, self.rreq_id));
        let rreq = Rreq {
            origin: self.id,
            origin_sequence: self.own_sequence,
            rreq_id: self.rreq_id,
            destination,
            dest_sequence_known: self.routes.get(&destination).map_or(0, |e| e.dest_sequence),
            hop_count: 0,
        };
        let attempt = self.pending.get(&destination).map_or(0, |b| b.attempt);
        let wait = self
            .config
            .retry_wait
            .checked_mul(1u64 << attempt.min(32))
            .unwrap_or(SimTime::MAX);
        let p = ctx.packet(Address::Node(destination), RREQ_SIZE, Payload::Rreq(rreq));
        ctx.broadcast(p);
        ctx.set_timer(TimerKey::RreqRetry(destination), ctx.now + wait);
    }

    fn buffer(&mut self, destination: NodeId, packet: Packet, ctx: &mut Ctx) -> bool {
        let capacity = self.config.pending_capacity;
        let retries = self.config.rreq_retries;
        let fresh = !self.pending.contains_key(&destination);
        let buf = self.pending.entry(destination).or_insert_with(|| PendingBuffer {
            queue: VecDeque::new(),
            retries_remaining: retries,
            attempt: 0,
        });
        if buf.queue.len() >= capacity {
            if let Some(old) = buf.queue.pop_front() {
                ctx.drop_packet(old, DropReason::NoRoute);
            }
        }
        buf.queue.push_back(packet);
        fresh
    }

    fn send_rerr(&mut self, unreachable: Vec<(NodeId, u32)>, ctx: &mut Ctx) {
        if unreachable.is_empty() {
            return;
        }
        let size = rerr_size(unreachable.len());
        let rerr = Rerr {
            reporter: self.id,
            unreachable,
        };
        let p = ctx.packet(Address::Broadcast, size, Payload::Rerr(rerr));
        ctx.broadcast(p);
    }

    fn flush(&mut self, destination: NodeId, ctx: &mut Ctx) {
        let Some(hop) = self.usable_route(destination, ctx.now).map(|e| e.next_hop) else {
            return;
        };
        if let Some(buf) = self.pending.remove(&destination) {
            ctx.cancel_timer(TimerKey::RreqRetry(destination));
            let until = ctx.now + self.config.active_route_timeout;
            self.refresh(destination, until);
            for p in buf.queue {
                ctx.unicast(hop, p);
            }
        }
    }

    pub fn handle_rreq(&mut self, packet: Packet, r: &Rreq, from: NodeId, ctx: &mut Ctx) {
        if r.origin == self.id || !self.seen.insert((r.origin, r.rreq_id)) {
            return;
        }
        let now = ctx.now;
        self.offer_route(
            r.origin,
            from,
            r.hop_count + 1,
            r.origin_sequence,
            self.config.reverse_route_lifetime,
            now,
        );

        if r.destination == self.id {
            self.own_sequence = self.own_sequence.max(r.dest_sequence_known);
            let rrep = Rrep {
                destination: self.id,
                dest_sequence: self.own_sequence,
                hop_count: 0,
                origin: r.origin,
                lifetime: self.config.my_route_timeout,
            };
            let p = ctx.packet(Address::Node(r.origin), RREP_SIZE, Payload::Rrep(rrep));
            ctx.unicast(from, p);
            return;
        }

        if let Some(e) = self.usable_route(r.destination, now) {
            if e.dest_sequence >= r.dest_sequence_known {
                let rrep = Rrep {
                    destination: r.destination,
                    dest_sequence: e.dest_sequence,
                    hop_count: e.hop_count,
                    origin: r.origin,
                    lifetime: e.expires_at - now,
                };
                let p = ctx.packet(Address::Node(r.origin), RREP_SIZE, Payload::Rrep(rrep));
                ctx.unicast(from, p);
                return;
            }
        }

        let known = self
            .routes
            .get(&r.destination)
            .map_or(r.dest_sequence_known, |e| e.dest_sequence.max(r.dest_sequence_known));
        let forwarded = Rreq {
            hop_count: r.hop_count + 1,
            dest_sequence_known: known,
            ..r.clone()
        };
        ctx.broadcast(Packet {
            payload: Payload::Rreq(forwarded),
            ..packet
        });
    }

    pub fn handle_rrep(&mut self, packet: Packet, r: &Rrep, from: NodeId, ctx: &mut Ctx) {
        let now = ctx.now;
        let hops = r.hop_count + 1;
        self.offer_route(r.destination, from, hops, r.dest_sequence, r.lifetime, now);

        if r.origin == self.id {
            self.flush(r.destination, ctx);
            return;
        }
        match self.usable_route(r.origin, now).map(|e| e.next_hop) {
            Some(hop) => {
                let until = now + self.config.active_route_timeout;
                self.refresh(r.origin, until);
                let forwarded = Rrep {
                    hop_count: hops,
                    ..r.clone()
                };
                ctx.unicast(
                    hop,
                    Packet {
                        payload: Payload::Rrep(forwarded),
                        ..packet
                    },
                );
            }
            None => ctx.drop_packet(packet, DropReason::NoRoute),
        }
    }

    pub fn handle_rerr(&mut self, r: &Rerr, from: NodeId, ctx: &mut Ctx) {
        let now = ctx.now;
        let mut lost = Vec::new();
        for &(dest, seq) in &r.unreachable {
            if let Some(e) = self.routes.get_mut(&dest) {
                if e.valid && e.next_hop == from {
                    let was_usable = e.usable(now);
                    e.valid = false;
                    e.dest_sequence = e.dest_sequence.max(seq);
                    if was_usable {
                        lost.push((dest, e.dest_sequence));
                    }
                }
            }
        }
        self.send_rerr(lost, ctx);
    }

    /// Invalidates every route through `dead`, bumping each sequence number.
    /// Returns the destinations listed in the resulting route error.
    pub fn handle_link_break(&mut self, dead: NodeId, ctx: &mut Ctx) -> Vec<(NodeId, u32)> {
        let now = ctx.now;
        let mut lost = Vec::new();
        for (dest, e) in self.routes.iter_mut() {
            if e.valid && e.next_hop == dead {
                let was_usable = e.usable(now);
                e.valid = false;
                e.dest_sequence += 1;
                if was_usable {
                    lost.push((*dest, e.dest_sequence));
                }
            }
        }
        self.send_rerr(lost.clone(), ctx);
        lost
    }
}

impl Router for AodvNode {
    fn start(&mut self, _ctx: &mut Ctx) {}

    fn route_data(&mut self, packet: Packet, from: Option<NodeId>, ctx: &mut Ctx) {
        let Some(data) = packet.data() else { return };
        let sink = data.sink;
        let now = ctx.now;
        if let Some(hop) = self.usable_route(sink, now).map(|e| e.next_hop) {
            let until = now + self.config.active_route_timeout;
            self.refresh(sink, until);
            ctx.unicast(hop, packet);
            return;
        }
        if data.source == self.id && from.is_none() {
            if self.buffer(sink, packet, ctx) {
                self.originate_rreq(sink, ctx);
            }
            return;
        }
        let seq = self.routes.get(&sink).map_or(0, |e| e.dest_sequence);
        ctx.drop_packet(packet, DropReason::NoRoute);
        self.send_rerr(vec![(sink, seq)], ctx);
    }

    fn handle_control(&mut self, packet: Packet, from: NodeId, ctx: &mut Ctx) {
        match packet.payload.clone() {
            Payload::Rreq(r) => self.handle_rreq(packet, &r, from, ctx),
            Payload::Rrep(r) => self.handle_rrep(packet, &r, from, ctx),
            Payload::Rerr(r) => self.handle_rerr(&r, from, ctx),
            _ => {}
        }
    }

    fn link_failed(&mut self, next_hop: NodeId, packet: Packet, ctx: &mut Ctx) {
        self.handle_link_break(next_hop, ctx);
        match packet.data() {
            // the source keeps its own packets and rediscovers
            Some(d) if d.source == self.id => self.route_data(packet, None, ctx),
            _ => ctx.drop_packet(packet, DropReason::NoRoute),
        }
    }

    fn timer(&mut self, key: TimerKey, ctx: &mut Ctx) {
        let TimerKey::RreqRetry(dest) = key else { return };
        if self.usable_route(dest, ctx.now).is_some() {
            self.flush(dest, ctx);
            return;
        }
        let Some(buf) = self.pending.get_mut(&dest) else { return };
        if buf.retries_remaining > 0 {
            buf.retries_remaining -= 1;
            buf.attempt += 1;
            self.originate_rreq(dest, ctx);
        } else if let Some(buf) = self.pending.remove(&dest) {
            for p in buf.queue {
                ctx.drop_packet(p, DropReason::NoRoute);
            }
        }
    }
}
