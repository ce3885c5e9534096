//! Packets, frames and the identifiers shared by every layer.

use std::fmt;
use std::str::FromStr;

use crate::engine::SimTime;

/// Network address of a node (layer 3; node ids double as addresses).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Packet-level destination; broadcast prints as `-1` in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Address {
    Node(NodeId),
    Broadcast,
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Node(n) => n.fmt(f),
            Address::Broadcast => f.write_str("-1"),
        }
    }
}

/// Common header size added to every control packet.
pub const HEADER_BYTES: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketType {
    Cbr,
    Rreq,
    Rrep,
    Rerr,
    Dsdv,
}

impl PacketType {
    pub const ALL: [PacketType; 5] = [
        PacketType::Cbr,
        PacketType::Rreq,
        PacketType::Rrep,
        PacketType::Rerr,
        PacketType::Dsdv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PacketType::Cbr => "cbr",
            PacketType::Rreq => "rreq",
            PacketType::Rrep => "rrep",
            PacketType::Rerr => "rerr",
            PacketType::Dsdv => "dsdv",
        }
    }

    pub fn is_control(self) -> bool {
        self != PacketType::Cbr
    }
}

impl FromStr for PacketType {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        PacketType::ALL.into_iter().find(|p| p.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// No route to the destination.
    NoRoute,
    /// Interface queue overflow.
    QueueFull,
    Ttl,
    Collision,
    /// Still in flight when the run ended.
    EndOfRun,
}

impl DropReason {
    pub const ALL: [DropReason; 5] = [
        DropReason::NoRoute,
        DropReason::QueueFull,
        DropReason::Ttl,
        DropReason::Collision,
        DropReason::EndOfRun,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "NRTE",
            DropReason::QueueFull => "IFQ",
            DropReason::Ttl => "TTL",
            DropReason::Collision => "COL",
            DropReason::EndOfRun => "END",
        }
    }
}

impl FromStr for DropReason {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        DropReason::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

/// Application datagram of one CBR flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub flow: usize,
    /// Monotone per flow.
    pub seq: u64,
    pub source: NodeId,
    pub sink: NodeId,
    pub created_at: SimTime,
    pub ttl: u8,
}

/// Routing metric; `None` is an unreachable (infinite) metric.
pub type HopCount = Option<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdvertEntry {
    pub destination: NodeId,
    pub metric: HopCount,
    pub sequence: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DsdvAdvert {
    pub origin: NodeId,
    pub entries: Vec<AdvertEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rreq {
    pub origin: NodeId,
    pub origin_sequence: u32,
    pub rreq_id: u32,
    pub destination: NodeId,
    /// 0 when unknown.
    pub dest_sequence_known: u32,
    pub hop_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rrep {
    pub destination: NodeId,
    pub dest_sequence: u32,
    pub hop_count: u32,
    pub origin: NodeId,
    pub lifetime: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rerr {
    pub reporter: NodeId,
    pub unreachable: Vec<(NodeId, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Data(DataPacket),
    Dsdv(DsdvAdvert),
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Unique per run; hop-wise copies of one packet share it.
    pub uid: u64,
    pub src: NodeId,
    pub dst: Address,
    pub size: u32,
    pub payload: Payload,
}

impl Packet {
    pub fn ptype(&self) -> PacketType {
        match self.payload {
            Payload::Data(_) => PacketType::Cbr,
            Payload::Dsdv(_) => PacketType::Dsdv,
            Payload::Rreq(_) => PacketType::Rreq,
            Payload::Rrep(_) => PacketType::Rrep,
            Payload::Rerr(_) => PacketType::Rerr,
        }
    }

    pub fn data(&self) -> Option<&DataPacket> {
        match &self.payload {
            Payload::Data(d) => Some(d),
            _ => None,
        }
    }
}

/// Wire size of a DSDV advert: 12 bytes per entry plus the header.
pub fn dsdv_size(entries: usize) -> u32 {
    HEADER_BYTES + 12 * entries as u32
}

pub const RREQ_SIZE: u32 = HEADER_BYTES + 24;
pub const RREP_SIZE: u32 = HEADER_BYTES + 20;

pub fn rerr_size(entries: usize) -> u32 {
    HEADER_BYTES + 8 + 8 * entries as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    Broadcast,
    Unicast(NodeId),
}

/// A packet handed to the channel by `sender`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub packet: Packet,
    pub sender: NodeId,
    pub mode: FrameMode,
}

impl Frame {
    pub fn size(&self) -> u32 {
        self.packet.size
    }
}
