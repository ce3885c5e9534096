//! Packet accounting and the four evaluation metrics: packet delivery
//! fraction, average end-to-end delay, throughput and routing overhead.

use std::collections::{BTreeMap, HashMap};

use crate::engine::SimTime;
use crate::packet::{DropReason, Packet, PacketType};

/// `100 * received / sent`; `None` when nothing was sent.
pub fn pdf(sent: u64, received: u64) -> Option<f64> {
    if sent == 0 {
        None
    } else {
        Some(100.0 * received as f64 / sent as f64)
    }
}

/// Mean delay in seconds from a total in microseconds; `None` with no
/// deliveries.
pub fn mean_delay(total_delay_us: u128, delivered: u64) -> Option<f64> {
    if delivered == 0 {
        None
    } else {
        Some(total_delay_us as f64 / delivered as f64 / 1e6)
    }
}

/// Mean of `received_at - sent_at` over delivered packets only.
pub fn avg_delay(records: &[PacketRecord]) -> Option<f64> {
    let (total, n) = records
        .iter()
        .filter_map(|r| r.received_at.map(|at| (at - r.sent_at).as_micros() as u128))
        .fold((0u128, 0u64), |(s, n), d| (s + d, n + 1));
    mean_delay(total, n)
}

/// Delivered application kilobits per second over the whole horizon.
pub fn throughput_kbps(data_bytes_delivered: u64, horizon: SimTime) -> f64 {
    assert!(horizon > SimTime::ZERO, "horizon must be positive");
    data_bytes_delivered as f64 * 8.0 / horizon.as_secs_f64() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub flow: usize,
    pub packet: u64,
    pub sent_at: SimTime,
    pub received_at: Option<SimTime>,
    pub size: u32,
}

/// Raw counts both the live collector and the trace re-parser reduce to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Totals {
    pub sent: u64,
    pub received: u64,
    pub total_delay_us: u128,
    pub data_bytes_delivered: u64,
    pub routing_packets: u64,
    pub routing_bytes: u64,
    pub data_packets_transmitted: u64,
    pub data_bytes_transmitted: u64,
    pub drops: BTreeMap<DropReason, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub sent: u64,
    pub received: u64,
    /// Percent; `None` marks a run without traffic.
    pub pdf: Option<f64>,
    /// Seconds; `None` marks a run without deliveries.
    pub avg_delay: Option<f64>,
    pub throughput_kbps: f64,
    pub routing_packets: u64,
    pub routing_bytes: u64,
    pub data_bytes_delivered: u64,
    pub data_packets_transmitted: u64,
    pub data_bytes_transmitted: u64,
    pub drops: BTreeMap<DropReason, u64>,
}

impl MetricsReport {
    pub fn from_totals(t: &Totals, horizon: SimTime) -> Self {
        let mut drops = t.drops.clone();
        for r in DropReason::ALL {
            drops.entry(r).or_insert(0);
        }
        MetricsReport {
            sent: t.sent,
            received: t.received,
            pdf: pdf(t.sent, t.received),
            avg_delay: mean_delay(t.total_delay_us, t.received),
            throughput_kbps: throughput_kbps(t.data_bytes_delivered, horizon),
            routing_packets: t.routing_packets,
            routing_bytes: t.routing_bytes,
            data_bytes_delivered: t.data_bytes_delivered,
            data_packets_transmitted: t.data_packets_transmitted,
            data_bytes_transmitted: t.data_bytes_transmitted,
            drops,
        }
    }

    pub fn drop_count(&self, reason: DropReason) -> u64 {
        self.drops.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.values().sum()
    }

    /// Routing bytes as a share of all bytes put on the air.
    pub fn routing_byte_fraction(&self) -> f64 {
        let total = self.routing_bytes + self.data_bytes_transmitted;
        if total == 0 {
            0.0
        } else {
            self.routing_bytes as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowStats {
    pub sent: u64,
    pub delivered: u64,
    pub drops: BTreeMap<DropReason, u64>,
}

impl FlowStats {
    pub fn dropped(&self) -> u64 {
        self.drops.values().sum()
    }
}

/// Live accounting for one run.
#[derive(Debug, Default)]
pub struct Metrics {
    records: Vec<PacketRecord>,
    by_uid: HashMap<u64, usize>,
    flows: BTreeMap<usize, FlowStats>,
    totals: Totals,
}

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_send(&mut self, uid: u64, flow: usize, packet: u64, at: SimTime, size: u32) {
        self.by_uid.insert(uid, self.records.len());
        self.records.push(PacketRecord {
            flow,
            packet,
            sent_at: at,
            received_at: None,
            size,
        });
        self.flows.entry(flow).or_default().sent += 1;
        self.totals.sent += 1;
    }

    /// Returns false for duplicates, which do not count.
    pub fn record_receive(&mut self, uid: u64, at: SimTime) -> bool {
        let Some(&i) = self.by_uid.get(&uid) else {
            return false;
        };
        let r = &mut self.records[i];
        if r.received_at.is_some() {
            return false;
        }
        r.received_at = Some(at);
        self.totals.received += 1;
        self.totals.total_delay_us += (at - r.sent_at).as_micros() as u128;
        self.totals.data_bytes_delivered += r.size as u64;
        self.flows.entry(r.flow).or_default().delivered += 1;
        true
    }

    /// One hop-wise transmission.
    pub fn record_transmission(&mut self, ptype: PacketType, size: u32) {
        if ptype.is_control() {
            self.totals.routing_packets += 1;
            self.totals.routing_bytes += size as u64;
        } else {
            self.totals.data_packets_transmitted += 1;
            self.totals.data_bytes_transmitted += size as u64;
        }
    }

    /// Only data drops enter the drop counters.
    pub fn record_drop(&mut self, packet: &Packet, reason: DropReason) {
        if let Some(d) = packet.data() {
            *self.totals.drops.entry(reason).or_insert(0) += 1;
            *self
                .flows
                .entry(d.flow)
                .or_default()
                .drops
                .entry(reason)
                .or_insert(0) += 1;
        }
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn flows(&self) -> &BTreeMap<usize, FlowStats> {
        &self.flows
    }

    pub fn totals(&self) -> &Totals {
        &self.totals
    }

    pub fn report(&self, horizon: SimTime) -> MetricsReport {
        MetricsReport::from_totals(&self.totals, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(sent: f64, recv: Option<f64>) -> PacketRecord {
        PacketRecord {
            flow: 0,
            packet: 0,
            sent_at: SimTime::from_secs_f64(sent),
            received_at: recv.map(SimTime::from_secs_f64),
            size: 512,
        }
    }

    #[test]
    fn pdf_formula() {
        assert_eq!(pdf(100, 95), Some(95.0));
        assert_eq!(pdf(100, 100), Some(100.0));
        assert_eq!(pdf(100, 0), Some(0.0));
        assert_eq!(pdf(0, 0), None);
    }

    #[test]
    fn delay_is_mean_over_delivered() {
        let d = avg_delay(&[rec(1.0, Some(1.5)), rec(2.0, Some(2.7))]).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
        assert_eq!(avg_delay(&[rec(0.0, Some(0.1))]), Some(0.1));
        let d = avg_delay(&[rec(1.0, Some(1.5)), rec(3.0, None), rec(2.0, Some(2.7))]).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
        assert_eq!(avg_delay(&[rec(1.0, None)]), None);
    }

    #[test]
    fn throughput_formula() {
        let h = SimTime::from_secs(200);
        assert!((throughput_kbps(1000 * 512, h) - 20.48).abs() < 1e-12);
        assert_eq!(throughput_kbps(0, h), 0.0);
        assert_eq!(throughput_kbps(2000 * 512, h), 2.0 * throughput_kbps(1000 * 512, h));
    }

    #[test]
    fn duplicate_receipt_ignored() {
        let mut m = Metrics::new();
        m.record_send(7, 1, 7, SimTime::from_secs(1), 512);
        assert!(m.record_receive(7, SimTime::from_secs(2)));
        assert!(!m.record_receive(7, SimTime::from_secs(3)));
        let r = m.report(SimTime::from_secs(10));
        assert_eq!((r.sent, r.received), (1, 1));
        assert_eq!(r.avg_delay, Some(1.0));
    }

    proptest::proptest! {
        #[test]
        fn pdf_scale_invariant(s in 1u64..10_000, frac in 0.0f64..=1.0, k in 1u64..50) {
            let r = (s as f64 * frac) as u64;
            let a = pdf(s, r).unwrap();
            let b = pdf(k * s, k * r).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9);
            proptest::prop_assert!((0.0..=100.0).contains(&a));
        }
    }
}
