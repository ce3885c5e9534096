//! Interface between the simulation driver and a node's routing protocol.
//!
//! Protocol handlers never touch the scheduler or the channel directly.
//! They push [`Action`]s onto a [`Ctx`], and the driver applies them after the
//! handler returns.

use crate::engine::{RngStream, SimTime};
use crate::packet::{Address, DropReason, NodeId, Packet, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimerKey {
    DsdvPeriodic,
    DsdvTriggered,
    RreqRetry(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Broadcast(Packet),
    Unicast(NodeId, Packet),
    /// Replaces any pending timer with the same key.
    SetTimer(TimerKey, SimTime),
    CancelTimer(TimerKey),
    Drop(Packet, DropReason),
}

pub struct Ctx<'a> {
    pub now: SimTime,
    pub node: NodeId,
    rng: &'a mut RngStream,
    next_uid: &'a mut u64,
    actions: Vec<Action>,
}

impl<'a> Ctx<'a> {
    pub fn new(now: SimTime, node: NodeId, rng: &'a mut RngStream, next_uid: &'a mut u64) -> Self {
        Ctx {
            now,
            node,
            rng,
            next_uid,
            actions: Vec::new(),
        }
    }

    pub fn rng(&mut self) -> &mut RngStream {
        self.rng
    }

    /// Builds a packet originated by this node with a fresh uid.
    pub fn packet(&mut self, dst: Address, size: u32, payload: Payload) -> Packet {
        let uid = *self.next_uid;
        *self.next_uid += 1;
        Packet {
            uid,
            src: self.node,
            dst,
            size,
            payload,
        }
    }

    pub fn broadcast(&mut self, p: Packet) {
        self.actions.push(Action::Broadcast(p));
    }

    pub fn unicast(&mut self, next_hop: NodeId, p: Packet) {
        self.actions.push(Action::Unicast(next_hop, p));
    }

    pub fn set_timer(&mut self, key: TimerKey, at: SimTime) {
        self.actions.push(Action::SetTimer(key, at));
    }

    pub fn cancel_timer(&mut self, key: TimerKey) {
        self.actions.push(Action::CancelTimer(key));
    }

    pub fn drop_packet(&mut self, p: Packet, reason: DropReason) {
        self.actions.push(Action::Drop(p, reason));
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }
}

/// Per-node routing behaviour.
pub trait Router {
    fn start(&mut self, ctx: &mut Ctx);

    /// A data packet to forward: `from` is `None` when the local application
    /// produced it. Packets addressed to this node never reach the router.
    fn route_data(&mut self, packet: Packet, from: Option<NodeId>, ctx: &mut Ctx);

    fn handle_control(&mut self, packet: Packet, from: NodeId, ctx: &mut Ctx);

    /// The channel could not reach `next_hop`; `packet` is the frame that failed.
    fn link_failed(&mut self, next_hop: NodeId, packet: Packet, ctx: &mut Ctx);

    fn timer(&mut self, key: TimerKey, ctx: &mut Ctx);
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::engine::StreamLabel;

    /// Runs one handler against a throwaway context and returns what it did.
    pub fn with_ctx<F>(now: SimTime, node: u32, f: F) -> Vec<Action>
    where
        F: FnOnce(&mut Ctx),
    {
        let mut rng = RngStream::new(0, StreamLabel::Protocol);
        let mut uid = 1000;
        let mut ctx = Ctx::new(now, NodeId(node), &mut rng, &mut uid);
        f(&mut ctx);
        ctx.into_actions()
    }
}
