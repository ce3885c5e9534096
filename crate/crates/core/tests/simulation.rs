//! End-to-end properties of whole runs.

use std::collections::HashMap;

use manet_sim::engine::SimTime;
use manet_sim::mobility::Point;
use manet_sim::packet::DropReason;
use manet_sim::runner::{csv_row, run_scenario, run_with_trace, SweepRow};
use manet_sim::sim::{RunOutput, Simulation};
use manet_sim::trace::{parse_line, summarize, TraceWriter};
use manet_sim::{NodeId, Protocol, ScenarioConfig};
use proptest::prelude::*;

fn traced(cfg: &ScenarioConfig) -> (RunOutput<Vec<u8>>, Vec<u8>) {
    let mut out = run_with_trace(cfg, Vec::new()).unwrap();
    let bytes = out.trace.take().unwrap();
    (out, bytes)
}

fn check_conservation(out: &RunOutput<Vec<u8>>) -> Result<(), String> {
    let mut left: HashMap<usize, u64> = HashMap::new();
    for (_, p) in &out.in_flight {
        *left.entry(p.data().unwrap().flow).or_default() += 1;
    }
    for (flow, s) in out.metrics.flows() {
        let end = s.drops.get(&DropReason::EndOfRun).copied().unwrap_or(0);
        let l = left.get(flow).copied().unwrap_or(0);
        if s.sent != s.delivered + (s.dropped() - end) + l || end != l {
            return Err(format!("flow {flow}: {s:?}, in flight {l}"));
        }
    }
    let r = &out.report;
    if r.sent != r.received + r.total_drops() {
        return Err(format!("totals: {r:?}"));
    }
    Ok(())
}

fn small(protocol: Protocol) -> ScenarioConfig {
    ScenarioConfig {
        protocol,
        nodes: 15,
        horizon: 40.0,
        flows: 4,
        ..ScenarioConfig::default()
    }
}

#[test]
fn aodv_without_flows_sends_no_control_traffic() {
    let cfg = ScenarioConfig {
        protocol: Protocol::Aodv,
        flows: 0,
        ..ScenarioConfig::default()
    };
    let r = run_scenario(&cfg);
    assert_eq!(r.routing_packets, 0);
    assert_eq!(r.routing_bytes, 0);
    assert_eq!(r.pdf, None);
    assert_eq!(r.avg_delay, None);
}

#[test]
fn dsdv_periodic_count_over_default_horizon() {
    let cfg = ScenarioConfig {
        protocol: Protocol::Dsdv,
        flows: 0,
        ..ScenarioConfig::default()
    };
    let mut sim: Simulation = Simulation::new(&cfg, TraceWriter::disabled());
    sim.run_until(cfg.horizon_time()).unwrap();
    for i in 0..cfg.nodes {
        let n = sim.router(NodeId(i as u32)).as_dsdv().unwrap();
        // slots at 0, 15, ..., 195
        assert_eq!(n.periodic_sent(), 14, "node {i}");
    }
    let r = sim.finish().unwrap().report;
    assert!(r.routing_packets >= 50 * 14);
}

#[test]
fn dsdv_overhead_positive_after_one_interval() {
    let cfg = ScenarioConfig {
        protocol: Protocol::Dsdv,
        flows: 0,
        nodes: 5,
        horizon: 16.0,
        ..ScenarioConfig::default()
    };
    assert!(run_scenario(&cfg).routing_packets > 0);
}

#[test]
fn trace_lines_follow_the_format() {
    let (_, bytes) = traced(&small(Protocol::Aodv));
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.lines().count() > 100);
    let mut last = SimTime::ZERO;
    for line in text.lines() {
        let rec = parse_line(line).unwrap_or_else(|e| panic!("{line}: {e}"));
        assert_eq!(rec.to_string(), line);
        assert!(rec.time >= last, "out of order: {line}");
        last = rec.time;
    }
}

#[test]
fn static_network_delivers_everything() {
    for p in [Protocol::Aodv, Protocol::Dsdv] {
        let cfg = ScenarioConfig {
            pause_time: 1000.0,
            ..small(p)
        };
        let (out, _) = traced(&cfg);
        assert!(out.report.pdf.unwrap() >= 99.0, "{p}: {:?}", out.report);
    }
}

#[test]
fn queue_overflow_is_recorded() {
    let cfg = ScenarioConfig {
        protocol: Protocol::Dsdv,
        nodes: 2,
        flow_pairs: Some(vec![(NodeId(0), NodeId(1))]),
        rate: 2000.0,
        packet_size: 512,
        horizon: 12.0,
        ..ScenarioConfig::default()
    };
    let positions = [Point::new(0.0, 0.0), Point::new(100.0, 0.0)];
    let out = Simulation::with_positions(&cfg, &positions, TraceWriter::new(Vec::new()))
        .finish()
        .unwrap();
    assert!(out.report.drop_count(DropReason::QueueFull) > 0);
    assert!(check_conservation(&out).is_ok());
}

#[test]
fn collisions_are_recorded() {
    let cfg = ScenarioConfig {
        collisions: true,
        nodes: 30,
        flows: 10,
        rate: 20.0,
        horizon: 30.0,
        ..small(Protocol::Aodv)
    };
    let (out, bytes) = traced(&cfg);
    assert!(out.report.drop_count(DropReason::Collision) > 0);
    check_conservation(&out).unwrap();
    let s = summarize(bytes.as_slice()).unwrap();
    assert_eq!(s.report(cfg.horizon_time()), out.report);
}

#[test]
fn end_of_run_drops_cover_in_flight() {
    // the horizon falls inside the RREQ's broadcast jitter, so the first
    // packet is still waiting in the discovery buffer
    let cfg = ScenarioConfig {
        protocol: Protocol::Aodv,
        nodes: 3,
        flow_pairs: Some(vec![(NodeId(0), NodeId(2))]),
        flow_start: 10.0,
        horizon: 10.000_01,
        ..ScenarioConfig::default()
    };
    let line = [Point::new(0.0, 0.0), Point::new(200.0, 0.0), Point::new(400.0, 0.0)];
    let out = Simulation::with_positions(&cfg, &line, TraceWriter::new(Vec::new()))
        .finish()
        .unwrap();
    assert_eq!(out.in_flight.len(), 1);
    assert_eq!(out.report.drop_count(DropReason::EndOfRun), 1);
    let text = String::from_utf8(out.trace.clone().unwrap()).unwrap();
    assert!(text.ends_with("d 10.000010 0 RTR cbr 0 512 0 2 END\n"), "{text}");
    check_conservation(&out).unwrap();
}

#[test]
fn seeds_change_the_run() {
    let a = run_scenario(&ScenarioConfig { seed: 1, ..small(Protocol::Aodv) });
    let b = run_scenario(&ScenarioConfig { seed: 2, ..small(Protocol::Aodv) });
    assert_ne!(a, b);
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop_oneof![Just(Protocol::Aodv), Just(Protocol::Dsdv)],
        2usize..12,
        5.0f64..40.0,
        prop_oneof![Just(0.0), Just(3.0), Just(1000.0)],
        0usize..4,
        1.0f64..20.0,
        any::<bool>(),
        any::<u64>(),
        100.0f64..600.0,
    )
        .prop_map(|(protocol, nodes, horizon, pause_time, flows, rate, collisions, seed, side)| {
            ScenarioConfig {
                protocol,
                nodes,
                horizon,
                pause_time,
                flows: flows.min(nodes * (nodes - 1)),
                rate,
                collisions,
                seed,
                area_width: side,
                area_height: side,
                flow_start: horizon / 4.0,
                ..ScenarioConfig::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn runs_conserve_packets_and_reparse_exactly(cfg in arb_config()) {
        cfg.validate().unwrap();
        let (out, bytes) = traced(&cfg);
        prop_assert!(check_conservation(&out).is_ok(), "{:?}", check_conservation(&out));
        let s = summarize(bytes.as_slice()).unwrap();
        let from_trace = s.report(cfg.horizon_time());
        prop_assert_eq!(&from_trace, &out.report);
        let row = |report| csv_row(&SweepRow { protocol: cfg.protocol, pause_time: cfg.pause_time, seed: cfg.seed, report });
        prop_assert_eq!(row(from_trace), row(out.report.clone()));
        if let Some(pdf) = out.report.pdf {
            prop_assert!((0.0..=100.0).contains(&pdf));
        }
        for rec in out.metrics.records() {
            if let Some(at) = rec.received_at {
                prop_assert!(at >= rec.sent_at);
            }
        }
    }

    #[test]
    fn identical_configs_give_identical_bytes(cfg in arb_config()) {
        let (a, ta) = traced(&cfg);
        let (b, tb) = traced(&cfg);
        prop_assert_eq!(ta, tb);
        prop_assert_eq!(a.report, b.report);
    }
}
