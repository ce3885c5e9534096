//! Static topologies and an all-pairs BFS oracle, written without any of
//! the simulator's routing code.

#![allow(clippy::needless_range_loop)]

#![allow(dead_code)]

use std::collections::VecDeque;

use manet_sim::engine::{RngStream, SimTime, StreamLabel};
use manet_sim::mobility::Point;
use manet_sim::sim::Simulation;
use manet_sim::trace::TraceWriter;
use manet_sim::{NodeId, Protocol, ScenarioConfig};

pub const RANGE: f64 = 250.0;

pub fn adjacency(positions: &[Point], range: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let dx = positions[i].x - positions[j].x;
            let dy = positions[i].y - positions[j].y;
            if i != j && dx * dx + dy * dy <= range * range {
                adj[i].push(j);
            }
        }
    }
    adj
}

/// `dist[i][j]` in hops, `None` when unreachable.
pub fn bfs_all_pairs(positions: &[Point], range: f64) -> Vec<Vec<Option<u32>>> {
    let adj = adjacency(positions, range);
    let n = positions.len();
    (0..n)
        .map(|src| {
            let mut dist = vec![None; n];
            dist[src] = Some(0);
            let mut q = VecDeque::from([src]);
            while let Some(u) = q.pop_front() {
                let du = dist[u].unwrap();
                for &v in &adj[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        q.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

pub fn diameter(dist: &[Vec<Option<u32>>]) -> Option<u32> {
    let mut d = 0;
    for row in dist {
        for x in row {
            d = d.max((*x)?);
        }
    }
    Some(d)
}

/// `count` connected placements of 2..=20 nodes on squares of varying side,
/// so that diameters range from one hop to many.
pub fn random_connected_topologies(count: usize, seed: u64) -> Vec<Vec<Point>> {
    let mut rng = RngStream::new(seed, StreamLabel::Mobility);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = 2 + rng.index(19);
        let side = rng.uniform(150.0, 1000.0);
        let ps: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.uniform(0.0, side), rng.uniform(0.0, side)))
            .collect();
        if diameter(&bfs_all_pairs(&ps, RANGE)).is_some() {
            out.push(ps);
        }
    }
    out
}

fn static_config(protocol: Protocol, n: usize) -> ScenarioConfig {
    ScenarioConfig {
        protocol,
        nodes: n,
        flows: 0,
        range: RANGE,
        ..ScenarioConfig::default()
    }
}

/// DSDV tables after 2·diameter update intervals against the oracle.
pub fn dsdv_matches_oracle(ps: &[Point]) -> Result<(), String> {
    let dist = bfs_all_pairs(ps, RANGE);
    let diam = diameter(&dist).ok_or("disconnected")? as u64;
    let mut cfg = static_config(Protocol::Dsdv, ps.len());
    let at = SimTime::from_secs_f64(2.0 * diam as f64 * cfg.dsdv_update_interval);
    cfg.horizon = at.as_secs_f64() + 1.0;
    let mut sim: Simulation = Simulation::with_positions(&cfg, ps, TraceWriter::disabled());
    sim.run_until(at).map_err(|e| e.to_string())?;
    for i in 0..ps.len() {
        let node = sim.router(NodeId(i as u32)).as_dsdv().unwrap();
        for j in 0..ps.len() {
            let got = node.entry(NodeId(j as u32)).and_then(|e| e.metric);
            if got != dist[i][j] {
                return Err(format!(
                    "n={} diam={diam}: node {i} -> {j}: table {got:?}, oracle {:?}",
                    ps.len(),
                    dist[i][j]
                ));
            }
        }
    }
    Ok(())
}

/// One fresh run per ordered pair, jitter off; the origin's route after
/// discovery must be exactly as long as the shortest path.
pub fn aodv_matches_oracle(ps: &[Point]) -> Result<usize, String> {
    let dist = bfs_all_pairs(ps, RANGE);
    let mut checked = 0;
    for s in 0..ps.len() {
        for d in 0..ps.len() {
            if s == d {
                continue;
            }
            let cfg = ScenarioConfig {
                flow_pairs: Some(vec![(NodeId(s as u32), NodeId(d as u32))]),
                flow_start: 1.0,
                horizon: 2.0,
                broadcast_jitter: 0.0,
                ..static_config(Protocol::Aodv, ps.len())
            };
            let mut sim: Simulation = Simulation::with_positions(&cfg, ps, TraceWriter::disabled());
            let at = SimTime::from_secs_f64(1.5);
            sim.run_until(at).map_err(|e| e.to_string())?;
            let route = sim
                .router(NodeId(s as u32))
                .as_aodv()
                .unwrap()
                .usable_route(NodeId(d as u32), at)
                .map(|e| e.hop_count);
            if route != dist[s][d] {
                return Err(format!(
                    "n={}: {s} -> {d}: discovered {route:?}, oracle {:?}",
                    ps.len(),
                    dist[s][d]
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
