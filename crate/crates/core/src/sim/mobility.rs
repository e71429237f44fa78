use rand::Rng;

use super::scenario::{Field, Mobility, SimScenario, LANE_WIDTH};

/// Mobility update period (s).
pub const TICK_SECS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
enum Motion {
    Fixed,
    Waypoint {
        dest: (f64, f64),
        speed: f64,
        pause_left: f64,
    },
    Lane {
        velocity: f64,
    },
}

/// Node positions plus whatever each mobility model needs to move them.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    field: Field,
    model: Mobility,
    positions: Vec<(f64, f64)>,
    motion: Vec<Motion>,
    ticks: u64,
}

fn uniform_point<R: Rng + ?Sized>(field: &Field, rng: &mut R, lane: u32) -> (f64, f64) {
    match *field {
        Field::Rect { width, height } => (rng.random::<f64>() * width, rng.random::<f64>() * height),
        Field::Strip { length, lanes } => (rng.random::<f64>() * length, (lane % lanes) as f64 * LANE_WIDTH),
    }
}

fn waypoint_leg<R: Rng + ?Sized>(field: &Field, v_min: f64, v_max: f64, rng: &mut R) -> Motion {
    let dest = uniform_point(field, rng, 0);
    let speed = v_min + rng.random::<f64>() * (v_max - v_min);
    Motion::Waypoint {
        dest,
        speed,
        pause_left: 0.0,
    }
}

impl MobilityState {
    /// Initial placement. The scenario is assumed valid.
    pub fn new<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> MobilityState {
        let field = scenario.field.clone();
        let n = scenario.node_count;
        let mut positions = Vec::with_capacity(n as usize);
        let mut motion = Vec::with_capacity(n as usize);
        match &scenario.mobility {
            Mobility::Static { positions: Some(p) } => {
                positions.extend_from_slice(p);
                motion.resize(n as usize, Motion::Fixed);
            }
            Mobility::Static { positions: None } => {
                for id in 0..n {
                    positions.push(uniform_point(&field, rng, id));
                    motion.push(Motion::Fixed);
                }
            }
            Mobility::RandomWaypoint { v_min, v_max, .. } => {
                for id in 0..n {
                    positions.push(uniform_point(&field, rng, id));
                    motion.push(waypoint_leg(&field, *v_min, *v_max, rng));
                }
            }
            Mobility::Highway { speeds } => {
                let lanes = match field {
                    Field::Strip { lanes, .. } => lanes,
                    Field::Rect { .. } => 1,
                };
                for id in 0..n {
                    positions.push(uniform_point(&field, rng, id));
                    let speed = speeds[rng.random_range(0..speeds.len())];
                    let sign = if (id % lanes) % 2 == 0 { 1.0 } else { -1.0 };
                    motion.push(Motion::Lane { velocity: sign * speed });
                }
            }
        }
        MobilityState {
            field,
            model: scenario.mobility.clone(),
            positions,
            motion,
            ticks: 0,
        }
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn distance(&self, a: u32, b: u32) -> f64 {
        let (p, q) = (self.positions[a as usize], self.positions[b as usize]);
        (p.0 - q.0).hypot(p.1 - q.1)
    }

    pub fn is_static(&self) -> bool {
        self.motion.iter().all(|m| *m == Motion::Fixed)
    }

    /// Applies whole ticks until `ticks` have elapsed since the start.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, ticks: u64, rng: &mut R) {
        if self.is_static() {
            self.ticks = self.ticks.max(ticks);
            return;
        }
        while self.ticks < ticks {
            self.step(TICK_SECS, rng);
        }
    }

    /// Moves every node forward by `dt` seconds.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        let (v_min, v_max, pause) = match self.model {
            Mobility::RandomWaypoint { v_min, v_max, pause } => (v_min, v_max, pause),
            _ => (0.0, 0.0, 0.0),
        };
        for (pos, motion) in self.positions.iter_mut().zip(self.motion.iter_mut()) {
            match motion {
                Motion::Fixed => {}
                Motion::Lane { velocity } => {
                    if let Field::Strip { length, .. } = self.field {
                        pos.0 = (pos.0 + *velocity * dt).rem_euclid(length);
                    }
                }
                Motion::Waypoint { .. } => {
                    let mut left = dt;
                    while left > 0.0 {
                        let Motion::Waypoint { dest, speed, pause_left } = motion else {
                            unreachable!()
                        };
                        if *pause_left > 0.0 {
                            let p = pause_left.min(left);
                            *pause_left -= p;
                            left -= p;
                            if *pause_left <= 0.0 {
                                *motion = waypoint_leg(&self.field, v_min, v_max, rng);
                            }
                            continue;
                        }
                        if *speed <= 0.0 {
                            break;
                        }
                        let (dx, dy) = (dest.0 - pos.0, dest.1 - pos.1);
                        let dist = dx.hypot(dy);
                        let travel = *speed * left;
                        if travel >= dist {
                            *pos = *dest;
                            left -= dist / *speed;
                            if pause > 0.0 {
                                *pause_left = pause;
                            } else {
                                *motion = waypoint_leg(&self.field, v_min, v_max, rng);
                            }
                        } else {
                            pos.0 += dx / dist * travel;
                            pos.1 += dy / dist * travel;
                            left = 0.0;
                        }
                    }
                }
            }
        }
        self.ticks += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::{Radio, Traffic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(field: Field, mobility: Mobility, n: u32) -> SimScenario {
        SimScenario {
            node_count: n,
            field,
            mobility,
            radio: Radio::default(),
            traffic: Traffic::default(),
            duration: 100.0,
            seed: 1,
        }
    }

    #[test]
    fn zero_speed_highway_node_stays_put() {
        let s = scenario(Field::Strip { length: 1000.0, lanes: 2 }, Mobility::Highway { speeds: vec![0.0] }, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = MobilityState::new(&s, &mut rng);
        let before = m.positions().to_vec();
        m.advance_to(500, &mut rng);
        assert_eq!(m.positions(), &before[..]);
    }

    #[test]
    fn highway_node_covers_speed_times_time() {
        let s = scenario(Field::Strip { length: 1000.0, lanes: 2 }, Mobility::Highway { speeds: vec![30.0] }, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = MobilityState::new(&s, &mut rng);
        let start = m.positions().to_vec();
        m.advance_to(100, &mut rng);
        let east = (m.positions()[0].0 - start[0].0).rem_euclid(1000.0);
        let west = (start[1].0 - m.positions()[1].0).rem_euclid(1000.0);
        assert!((east - 300.0).abs() < 1e-6, "{east}");
        assert!((west - 300.0).abs() < 1e-6, "{west}");
        assert_eq!(m.positions()[1].1, LANE_WIDTH);
    }

    #[test]
    fn waypoint_nodes_stay_in_field_and_pause() {
        let field = Field::Rect { width: 200.0, height: 100.0 };
        let s = scenario(field, Mobility::RandomWaypoint { v_min: 5.0, v_max: 5.0, pause: 2.0 }, 1 + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = MobilityState::new(&s, &mut rng);
        let dt = 0.01;
        let mut still = 0u32;
        let mut pauses = Vec::new();
        let mut prev = m.positions()[0];
        for _ in 0..20_000 {
            m.step(dt, &mut rng);
            let p = m.positions()[0];
            assert!((0.0..=200.0).contains(&p.0) && (0.0..=100.0).contains(&p.1));
            if p == prev {
                still += 1;
            } else if still > 0 {
                pauses.push(still);
                still = 0;
            }
            prev = p;
        }
        assert!(!pauses.is_empty());
        // The arrival tick itself moves the node, so a 2 s pause spans 199 or 200 still steps.
        for p in pauses {
            assert!((199..=200).contains(&p), "paused {p} steps");
        }
    }
}
