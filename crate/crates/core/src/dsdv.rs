//! Destination-Sequenced Distance Vector routing.
//!
//! Every node keeps a route to every destination it has heard of and
//! advertises the whole table each update interval, plus incremental
//! triggered adverts when entries change. A route with a higher destination
//! sequence number always wins; among equal sequence numbers the smaller hop
//! count wins. Even sequence numbers are issued by the destination itself,
//! odd ones mark a broken route (metric infinity).

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::SimTime;
use crate::packet::{
    dsdv_size, Address, AdvertEntry, DropReason, DsdvAdvert, HopCount, NodeId, Packet, Payload,
};
use crate::routing::{Ctx, Router, TimerKey};

#[derive(Debug, Clone, PartialEq)]
pub struct DsdvConfig {
    pub update_interval: SimTime,
    /// Each periodic advert is delayed by a uniform draw in `[0, update_jitter]`.
    pub update_jitter: SimTime,
    /// Minimum spacing between a node's triggered adverts.
    pub trigger_min_interval: SimTime,
    pub trigger_jitter: SimTime,
}

impl Default for DsdvConfig {
    fn default() -> Self {
        DsdvConfig {
            update_interval: SimTime::from_secs(15),
            update_jitter: SimTime::from_secs(1),
            trigger_min_interval: SimTime::from_secs(1),
            trigger_jitter: SimTime::from_micros(100_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DsdvEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    /// `None` is infinity.
    pub metric: HopCount,
    pub sequence: u32,
    pub installed_at: SimTime,
}

/// `None` sorts after every finite metric.
fn metric_less(a: HopCount, b: HopCount) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

#[derive(Debug, Clone)]
pub struct DsdvNode {
    id: NodeId,
    config: DsdvConfig,
    own_sequence: u32,
    table: BTreeMap<NodeId, DsdvEntry>,
    changed: BTreeSet<NodeId>,
    last_advert: Option<SimTime>,
    trigger_pending: bool,
    cycle: u64,
    periodic_sent: u64,
    triggered_sent: u64,
}

impl DsdvNode {
    pub fn new(id: NodeId, config: DsdvConfig) -> Self {
        let mut table = BTreeMap::new();
        table.insert(
            id,
            DsdvEntry {
                destination: id,
                next_hop: id,
                metric: Some(0),
                sequence: 0,
                installed_at: SimTime::ZERO,
            },
        );
        DsdvNode {
            id,
            config,
            own_sequence: 0,
            table,
            changed: BTreeSet::new(),
            last_advert: None,
            trigger_pending: false,
            cycle: 0,
            periodic_sent: 0,
            triggered_sent: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn own_sequence(&self) -> u32 {
        self.own_sequence
    }

    pub fn table(&self) -> &BTreeMap<NodeId, DsdvEntry> {
        &self.table
    }

    pub fn entry(&self, destination: NodeId) -> Option<&DsdvEntry> {
        self.table.get(&destination)
    }

    pub fn periodic_sent(&self) -> u64 {
        self.periodic_sent
    }

    pub fn triggered_sent(&self) -> u64 {
        self.triggered_sent
    }

    pub fn has_pending_changes(&self) -> bool {
        !self.changed.is_empty()
    }

    /// Next hop toward `destination`, if the route is finite.
    pub fn next_hop(&self, destination: NodeId) -> Option<NodeId> {
        self.table
            .get(&destination)
            .filter(|e| e.metric.is_some())
            .map(|e| e.next_hop)
    }

    fn advert_of<'a>(&self, destinations: impl Iterator<Item = &'a NodeId>) -> DsdvAdvert {
        DsdvAdvert {
            origin: self.id,
            entries: destinations
                .filter_map(|d| self.table.get(d))
                .map(|e| AdvertEntry {
                    destination: e.destination,
                    metric: e.metric,
                    sequence: e.sequence,
                })
                .collect(),
        }
    }

    /// Bumps the own sequence number by two and returns a full-table advert.
    pub fn periodic_update(&mut self, now: SimTime) -> DsdvAdvert {
        self.own_sequence += 2;
        let seq = self.own_sequence;
        if let Some(me) = self.table.get_mut(&self.id) {
            me.sequence = seq;
        }
        self.changed.clear();
        self.last_advert = Some(now);
        self.periodic_sent += 1;
        self.advert_of(self.table.keys())
    }

    /// Incremental advert of the flagged entries; `None` if nothing changed.
    pub fn triggered_update(&mut self, now: SimTime) -> Option<DsdvAdvert> {
        if self.changed.is_empty() {
            return None;
        }
        let advert = self.advert_of(self.changed.iter());
        self.changed.clear();
        self.last_advert = Some(now);
        self.triggered_sent += 1;
        Some(advert)
    }

    /// Applies the preference rules to every advertised route. Returns the
    /// destinations whose entries changed, which are also flagged for the
    /// next triggered advert.
    pub fn handle_advert(&mut self, advert: &DsdvAdvert, from: NodeId, now: SimTime) -> Vec<NodeId> {
        let mut delta = Vec::new();
        for adv in &advert.entries {
            if adv.destination == self.id {
                // someone reports us broken: answer with a fresher even number
                if adv.sequence > self.own_sequence {
                    self.own_sequence = if adv.sequence % 2 == 1 {
                        adv.sequence + 1
                    } else {
                        adv.sequence + 2
                    };
                    let seq = self.own_sequence;
                    if let Some(me) = self.table.get_mut(&self.id) {
                        me.sequence = seq;
                    }
                    delta.push(self.id);
                }
                continue;
            }
            let candidate = DsdvEntry {
                destination: adv.destination,
                next_hop: from,
                metric: adv.metric.map(|m| m + 1),
                sequence: adv.sequence,
                installed_at: now,
            };
            let adopt = match self.table.get(&adv.destination) {
                None => candidate.metric.is_some(),
                Some(cur) => {
                    candidate.sequence > cur.sequence
                        || (candidate.sequence == cur.sequence
                            && metric_less(candidate.metric, cur.metric))
                }
            };
            if adopt {
                let old = self.table.insert(adv.destination, candidate.clone());
                let same = old.is_some_and(|o| {
                    o.next_hop == candidate.next_hop
                        && o.metric == candidate.metric
                        && o.sequence == candidate.sequence
                });
                if !same {
                    delta.push(adv.destination);
                }
            }
        }
        self.changed.extend(delta.iter().copied());
        delta
    }

    /// Marks every finite route through `dead` as broken with an odd
    /// sequence number. Returns the affected destinations.
    pub fn handle_link_break(&mut self, dead: NodeId) -> Vec<NodeId> {
        let mut delta = Vec::new();
        for (dest, e) in self.table.iter_mut() {
            if *dest != self.id && e.next_hop == dead && e.metric.is_some() {
                e.metric = None;
                e.sequence += 1;
                delta.push(*dest);
            }
        }
        self.changed.extend(delta.iter().copied());
        delta
    }

    fn advert_packet(&self, advert: DsdvAdvert, ctx: &mut Ctx) -> Packet {
        let size = dsdv_size(advert.entries.len());
        ctx.packet(Address::Broadcast, size, Payload::Dsdv(advert))
    }

    fn schedule_periodic(&mut self, ctx: &mut Ctx) {
        let base = self
            .config
            .update_interval
            .checked_mul(self.cycle)
            .unwrap_or(SimTime::MAX);
        let jitter = ctx.rng().duration_upto(self.config.update_jitter);
        ctx.set_timer(TimerKey::DsdvPeriodic, (base + jitter).max(ctx.now));
    }

    fn schedule_trigger(&mut self, ctx: &mut Ctx) {
        if self.trigger_pending || self.changed.is_empty() {
            return;
        }
        let earliest = match self.last_advert {
            Some(t) => (t + self.config.trigger_min_interval).max(ctx.now),
            None => ctx.now,
        };
        let jitter = ctx.rng().duration_upto(self.config.trigger_jitter);
        ctx.set_timer(TimerKey::DsdvTriggered, earliest + jitter);
        self.trigger_pending = true;
    }
}

impl Router for DsdvNode {
    fn start(&mut self, ctx: &mut Ctx) {
        self.cycle = 0;
        self.schedule_periodic(ctx);
    }

    fn route_data(&mut self, packet: Packet, _from: Option<NodeId>, ctx: &mut Ctx) {
        let sink = match &packet.payload {
            Payload::Data(d) => d.sink,
            _ => return,
        };
        match self.next_hop(sink) {
            Some(hop) => ctx.unicast(hop, packet),
            None => ctx.drop_packet(packet, DropReason::NoRoute),
        }
    }

    fn handle_control(&mut self, packet: Packet, from: NodeId, ctx: &mut Ctx) {
        if let Payload::Dsdv(advert) = &packet.payload {
            if !self.handle_advert(advert, from, ctx.now).is_empty() {
                self.schedule_trigger(ctx);
            }
        }
    }

    fn link_failed(&mut self, next_hop: NodeId, packet: Packet, ctx: &mut Ctx) {
        if !self.handle_link_break(next_hop).is_empty() {
            self.schedule_trigger(ctx);
        }
        ctx.drop_packet(packet, DropReason::NoRoute);
    }

    fn timer(&mut self, key: TimerKey, ctx: &mut Ctx) {
        match key {
            TimerKey::DsdvPeriodic => {
                let advert = self.periodic_update(ctx.now);
                let p = self.advert_packet(advert, ctx);
                ctx.broadcast(p);
                if self.trigger_pending {
                    ctx.cancel_timer(TimerKey::DsdvTriggered);
                    self.trigger_pending = false;
                }
                self.cycle += 1;
                self.schedule_periodic(ctx);
            }
            TimerKey::DsdvTriggered => {
                self.trigger_pending = false;
                if let Some(advert) = self.triggered_update(ctx.now) {
                    let p = self.advert_packet(advert, ctx);
                    ctx.broadcast(p);
                }
            }
            TimerKey::RreqRetry(_) => {}
        }
    }
}
