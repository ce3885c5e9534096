//! Unit-disc radio: per-node FIFO interface queues, serialization delay at
//! the configured bandwidth, broadcast to every node in range, and an
//! optional pairwise-overlap collision model.

use std::collections::{HashSet, VecDeque};

use crate::engine::SimTime;
use crate::mobility::Point;
use crate::packet::{Frame, FrameMode, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    /// Meters.
    pub range: f64,
    /// Bits per second.
    pub bandwidth: f64,
    pub broadcast_jitter_max: SimTime,
    pub collisions_enabled: bool,
    pub propagation: SimTime,
    pub queue_capacity: usize,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            range: 250.0,
            bandwidth: 2_000_000.0,
            broadcast_jitter_max: SimTime::from_micros(10_000),
            collisions_enabled: false,
            propagation: SimTime::from_micros(1),
            queue_capacity: 50,
        }
    }
}

impl RadioConfig {
    /// `size * 8 / bandwidth`, rounded up to the next microsecond.
    pub fn serialization_delay(&self, size: u32) -> SimTime {
        SimTime::from_secs_f64_ceil(size as f64 * 8.0 / self.bandwidth)
    }

    pub fn in_range(&self, a: &Point, b: &Point) -> bool {
        a.distance_sq(b) <= self.range * self.range
    }
}

/// Every other node within `range` of `node`, ascending by id.
pub fn neighbors(node: NodeId, positions: &[Point], range: f64) -> Vec<NodeId> {
    let me = positions[node.index()];
    let r2 = range * range;
    positions
        .iter()
        .enumerate()
        .filter(|&(i, p)| i != node.index() && me.distance_sq(p) <= r2)
        .map(|(i, _)| NodeId(i as u32))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub to: NodeId,
    pub at: SimTime,
    pub reception: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transmission {
    Sent {
        tx_end: SimTime,
        deliveries: Vec<Delivery>,
    },
    /// Unicast next hop was out of range; nothing went on the air.
    LinkFailure,
}

#[derive(Debug, Default)]
struct Interface {
    queue: VecDeque<Frame>,
    busy: bool,
}

#[derive(Debug, Clone, Copy)]
struct Reception {
    id: u64,
    start: SimTime,
    end: SimTime,
    expected: bool,
}

pub struct Channel {
    config: RadioConfig,
    interfaces: Vec<Interface>,
    receptions: Vec<Vec<Reception>>,
    collided: HashSet<u64>,
    next_reception: u64,
}

impl Channel {
    pub fn new(config: RadioConfig, nodes: usize) -> Self {
        Channel {
            config,
            interfaces: (0..nodes).map(|_| Interface::default()).collect(),
            receptions: vec![Vec::new(); nodes],
            collided: HashSet::new(),
            next_reception: 0,
        }
    }

    pub fn config(&self) -> &RadioConfig {
        &self.config
    }

    /// Tail-drop: hands the frame back when the queue is full.
    pub fn enqueue(&mut self, frame: Frame) -> Result<(), Frame> {
        let capacity = self.config.queue_capacity;
        let iface = &mut self.interfaces[frame.sender.index()];
        if iface.queue.len() >= capacity {
            return Err(frame);
        }
        iface.queue.push_back(frame);
        Ok(())
    }

    pub fn is_busy(&self, node: NodeId) -> bool {
        self.interfaces[node.index()].busy
    }

    pub fn queue_len(&self, node: NodeId) -> usize {
        self.interfaces[node.index()].queue.len()
    }

    /// Next frame to put on the air, if the transmitter is idle.
    pub fn next_frame(&mut self, node: NodeId) -> Option<Frame> {
        let iface = &mut self.interfaces[node.index()];
        if iface.busy {
            None
        } else {
            iface.queue.pop_front()
        }
    }

    pub fn finish_transmission(&mut self, node: NodeId) {
        self.interfaces[node.index()].busy = false;
    }

    /// Starts sending `frame` at `now` using the positions at `now`.
    /// Broadcasts reach every neighbor; a unicast reaches only its next hop
    /// and fails if that hop is out of range.
    pub fn transmit(&mut self, frame: &Frame, now: SimTime, positions: &[Point]) -> Transmission {
        let sender = frame.sender;
        let in_range = neighbors(sender, positions, self.config.range);
        let targets: Vec<NodeId> = match frame.mode {
            FrameMode::Broadcast => in_range.clone(),
            FrameMode::Unicast(hop) => {
                if !in_range.contains(&hop) {
                    return Transmission::LinkFailure;
                }
                vec![hop]
            }
        };
        let tx_end = now + self.config.serialization_delay(frame.size());
        let start = now + self.config.propagation;
        let at = tx_end + self.config.propagation;
        self.interfaces[sender.index()].busy = true;

        let mut deliveries = Vec::with_capacity(targets.len());
        if self.config.collisions_enabled {
            for &n in &in_range {
                let expected = targets.contains(&n);
                let id = self.register(n, start, at, expected);
                if expected {
                    deliveries.push(Delivery { to: n, at, reception: id });
                }
            }
        } else {
            for n in targets {
                let id = self.next_reception;
                self.next_reception += 1;
                deliveries.push(Delivery { to: n, at, reception: id });
            }
        }
        Transmission::Sent { tx_end, deliveries }
    }

    fn register(&mut self, node: NodeId, start: SimTime, end: SimTime, expected: bool) -> u64 {
        let id = self.next_reception;
        self.next_reception += 1;
        let list = &mut self.receptions[node.index()];
        list.retain(|r| r.end > start);
        let mut hit = false;
        for r in list.iter() {
            if r.start < end && start < r.end {
                hit = true;
                if r.expected {
                    self.collided.insert(r.id);
                }
            }
        }
        if hit && expected {
            self.collided.insert(id);
        }
        list.push(Reception { id, start, end, expected });
        id
    }

    /// True if the reception overlapped another one at its receiver.
    pub fn take_collision(&mut self, reception: u64) -> bool {
        self.collided.remove(&reception)
    }

    /// Frames still waiting in interface queues, by sender id.
    pub fn queued(&self) -> impl Iterator<Item = &Frame> {
        self.interfaces.iter().flat_map(|i| i.queue.iter())
    }
}
