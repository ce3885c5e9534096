//! Random waypoint motion with a fixed speed.
//!
//! Each node's full trajectory is drawn up front from the mobility stream,
//! so node motion never depends on what the routing protocol does.

use crate::engine::{RngStream, SimTime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn new(width: f64, height: f64) -> Self {
        assert!(width > 0.0 && height > 0.0, "arena must have positive extent");
        Arena { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn random_point(&self, rng: &mut RngStream) -> Point {
        Point::new(rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))
    }
}

/// One straight-line leg: wait at `origin` until `depart_at`, then travel to
/// `waypoint` at `speed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMotion {
    pub origin: Point,
    pub waypoint: Point,
    /// Seconds.
    pub depart_at: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionState {
    Paused,
    Moving,
}

impl NodeMotion {
    pub fn arrive_at(&self) -> f64 {
        self.depart_at + self.origin.distance(&self.waypoint) / self.speed
    }

    pub fn state_at(&self, t: f64) -> MotionState {
        if t >= self.depart_at && t < self.arrive_at() {
            MotionState::Moving
        } else {
            MotionState::Paused
        }
    }

    /// Linear interpolation, clamped at both ends.
    pub fn position_at(&self, t: f64) -> Point {
        if t <= self.depart_at {
            return self.origin;
        }
        let length = self.origin.distance(&self.waypoint);
        if length == 0.0 {
            return self.waypoint;
        }
        let frac = ((t - self.depart_at) * self.speed / length).min(1.0);
        if frac >= 1.0 {
            return self.waypoint;
        }
        Point::new(
            self.origin.x + frac * (self.waypoint.x - self.origin.x),
            self.origin.y + frac * (self.waypoint.y - self.origin.y),
        )
    }

    /// Leg that follows this one: pause `pause` seconds at the waypoint,
    /// then head for a fresh uniform waypoint.
    pub fn next_leg(&self, arena: &Arena, pause: f64, rng: &mut RngStream) -> NodeMotion {
        NodeMotion {
            origin: self.waypoint,
            waypoint: arena.random_point(rng),
            depart_at: self.arrive_at() + pause,
            speed: self.speed,
        }
    }
}

pub fn initial_placement(n: usize, arena: &Arena, rng: &mut RngStream) -> Vec<Point> {
    (0..n).map(|_| arena.random_point(rng)).collect()
}

/// All legs of one node up to the horizon.
#[derive(Debug, Clone)]
pub struct Trajectory {
    legs: Vec<NodeMotion>,
}

impl Trajectory {
    /// The node sits at `start` until `t = pause`, then alternates legs and
    /// pauses. Legs departing at or after `horizon` are not generated.
    pub fn generate(
        start: Point,
        arena: &Arena,
        speed: f64,
        pause: f64,
        horizon: f64,
        rng: &mut RngStream,
    ) -> Self {
        assert!(speed > 0.0, "speed must be positive");
        let mut legs = Vec::new();
        if pause < horizon {
            let mut leg = NodeMotion {
                origin: start,
                waypoint: arena.random_point(rng),
                depart_at: pause,
                speed,
            };
            loop {
                legs.push(leg);
                let next = leg.next_leg(arena, pause, rng);
                if next.depart_at >= horizon {
                    break;
                }
                leg = next;
            }
        }
        if legs.is_empty() {
            legs.push(NodeMotion {
                origin: start,
                waypoint: start,
                depart_at: f64::INFINITY,
                speed,
            });
        }
        Trajectory { legs }
    }

    pub fn stationary(at: Point) -> Self {
        Trajectory {
            legs: vec![NodeMotion {
                origin: at,
                waypoint: at,
                depart_at: f64::INFINITY,
                speed: 1.0,
            }],
        }
    }

    pub fn legs(&self) -> &[NodeMotion] {
        &self.legs
    }

    pub fn position_at(&self, t: SimTime) -> Point {
        let t = t.as_secs_f64();
        let idx = self.legs.partition_point(|l| l.depart_at <= t);
        if idx == 0 {
            self.legs[0].origin
        } else {
            self.legs[idx - 1].position_at(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StreamLabel;

    fn arena() -> Arena {
        Arena::new(500.0, 500.0)
    }

    #[test]
    fn placement_contained_and_deterministic() {
        let mut a = RngStream::new(9, StreamLabel::Mobility);
        let mut b = RngStream::new(9, StreamLabel::Mobility);
        let pa = initial_placement(50, &arena(), &mut a);
        let pb = initial_placement(50, &arena(), &mut b);
        assert_eq!(pa.len(), 50);
        assert!(pa.iter().all(|p| arena().contains(*p)));
        assert_eq!(pa, pb);
        assert_eq!(initial_placement(1, &arena(), &mut a).len(), 1);
    }

    #[test]
    fn interpolation() {
        let leg = NodeMotion {
            origin: Point::new(0.0, 0.0),
            waypoint: Point::new(300.0, 400.0),
            depart_at: 5.0,
            speed: 25.0,
        };
        assert_eq!(leg.arrive_at(), 25.0);
        assert_eq!(leg.position_at(15.0), Point::new(150.0, 200.0));
        assert_eq!(leg.position_at(4.0), leg.origin);
        assert_eq!(leg.position_at(100.0), leg.waypoint);
        assert_eq!(leg.state_at(4.0), MotionState::Paused);
        assert_eq!(leg.state_at(6.0), MotionState::Moving);
    }

    #[test]
    fn zero_pause_is_continuous() {
        let mut rng = RngStream::new(1, StreamLabel::Mobility);
        let tr = Trajectory::generate(Point::new(10.0, 10.0), &arena(), 25.0, 0.0, 200.0, &mut rng);
        assert_eq!(tr.legs()[0].depart_at, 0.0);
        for w in tr.legs().windows(2) {
            assert_eq!(w[1].depart_at, w[0].arrive_at());
            assert_eq!(w[1].origin, w[0].waypoint);
        }
    }

    #[test]
    fn long_pause_is_static() {
        let mut rng = RngStream::new(1, StreamLabel::Mobility);
        let p = Point::new(10.0, 20.0);
        let tr = Trajectory::generate(p, &arena(), 25.0, 200.0, 200.0, &mut rng);
        for s in [0u64, 50, 199, 200] {
            assert_eq!(tr.position_at(SimTime::from_secs(s)), p);
        }
    }

    #[test]
    fn pauses_between_legs() {
        let mut rng = RngStream::new(4, StreamLabel::Mobility);
        let tr = Trajectory::generate(Point::new(0.0, 0.0), &arena(), 25.0, 20.0, 200.0, &mut rng);
        assert_eq!(tr.legs()[0].depart_at, 20.0);
        for w in tr.legs().windows(2) {
            assert!((w[1].depart_at - w[0].arrive_at() - 20.0).abs() < 1e-9);
        }
        assert!(tr.legs().last().unwrap().depart_at < 200.0);
    }

    #[test]
    fn replay_waypoints() {
        let gen = || {
            let mut rng = RngStream::new(77, StreamLabel::Mobility);
            Trajectory::generate(Point::new(1.0, 1.0), &arena(), 25.0, 0.0, 200.0, &mut rng)
        };
        assert_eq!(gen().legs(), gen().legs());
    }

    proptest::proptest! {
        #[test]
        fn positions_stay_inside(seed in 0u64..500, pause in 0.0f64..100.0, t in 0.0f64..200.0) {
            let mut rng = RngStream::new(seed, StreamLabel::Mobility);
            let a = arena();
            let start = a.random_point(&mut rng);
            let tr = Trajectory::generate(start, &a, 25.0, pause, 200.0, &mut rng);
            let p = tr.position_at(SimTime::from_secs_f64(t));
            proptest::prop_assert!(a.contains(p));
        }

        #[test]
        fn speed_is_fixed_while_moving(seed in 0u64..500, t in 0.0f64..190.0) {
            let mut rng = RngStream::new(seed, StreamLabel::Mobility);
            let a = arena();
            let start = a.random_point(&mut rng);
            let tr = Trajectory::generate(start, &a, 25.0, 0.0, 200.0, &mut rng);
            let leg = tr.legs().iter().find(|l| l.depart_at <= t && t < l.arrive_at());
            if let Some(leg) = leg {
                let dt = 1e-3f64.min(leg.arrive_at() - t);
                if dt > 1e-6 {
                    let d = leg.position_at(t).distance(&leg.position_at(t + dt));
                    proptest::prop_assert!((d / dt - 25.0).abs() < 1e-3);
                }
            }
        }
    }
}
