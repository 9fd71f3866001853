//! Seeded generator of planar scenarios whose obstacle scripts pass load-time
//! validation.

use super::scenario::{DeformationSpec, MotionSpec, ObstacleSpec, PlannerSettings, Scenario, ShapeSpec, Spin};
use crate::kinematics::RobotCaps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Draws scenarios until one compiles; the result is a pure function of `seed`.
pub fn random_scenario2d(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = draw(&mut rng, seed);
        if s.compile().is_ok() {
            return s;
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, seed: u64) -> Scenario {
    let (start, goal) = ([0.0, 0.0], [10.0, 10.0]);
    let count = rng.random_range(1..=4);
    let mut placed: Vec<([f64; 2], f64)> = Vec::new();
    let mut obstacles = Vec::new();
    while obstacles.len() < count {
        let along = rng.random_range(2.5..7.5);
        let across = rng.random_range(-3.0..3.0);
        // `along` runs on the diagonal, `across` is the signed offset from it
        let center = [along - across * 0.5f64.sqrt(), along + across * 0.5f64.sqrt()];
        let size = rng.random_range(0.3..0.8);
        // keep start and goal free, and obstacles apart at the first step
        let far = |p: [f64; 2], r: f64| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() > r;
        if !far(start, size + 1.5) || !far(goal, size + 1.5) || !placed.iter().all(|(c, r)| far(*c, r + size + 0.5)) {
            continue;
        }
        placed.push((center, size));
        let shape = if rng.random_bool(0.5) {
            ShapeSpec::Regular { center, radius: size, sides: rng.random_range(5..=10), phase: rng.random_range(0.0..PI) }
        } else {
            ShapeSpec::Ellipse {
                center,
                a: size,
                b: size * rng.random_range(0.5..1.0),
                angle: rng.random_range(0.0..PI),
                points: 48,
            }
        };
        let speed = rng.random_range(0.05..0.3);
        let heading = rng.random_range(-PI..PI);
        let motion = MotionSpec::Constant {
            velocity: vec![speed * heading.cos(), speed * heading.sin()],
            angular_velocity: Spin::Planar(rng.random_range(-0.1..0.1)),
        };
        let deformation = if rng.random_bool(0.3) {
            DeformationSpec::Pulse { amplitude: rng.random_range(0.01..0.05), period: rng.random_range(20.0..80.0), axis: 0.0 }
        } else {
            DeformationSpec::None
        };
        obstacles.push(ObstacleSpec { shape, motion, deformation });
    }
    Scenario {
        name: format!("random2d_{seed}"),
        description: "seeded random planar scenario".into(),
        dimension: 2,
        planner: Default::default(),
        start: start.to_vec(),
        goal: goal.to_vec(),
        heading: None,
        caps: RobotCaps::new(0.707, 1.414),
        dt: 0.1,
        horizon: None,
        obstacles,
        planner_config: PlannerSettings::default(),
        seed,
    }
}
