#![allow(dead_code)]

use std::f64::consts::TAU;

use halu_core::simulator::{Obstacle, Scene, Segment, Vec2, DEFAULT_ROBOT_HEIGHT};
use rand::Rng;

pub const MARCH_STEP: f64 = 1e-3;
pub const MARCH_TOL: f64 = 2e-3;
pub const FULL: [f64; 2] = [0.0, DEFAULT_ROBOT_HEIGHT];

pub fn random_scene(rng: &mut impl Rng, n_segments: usize) -> Scene {
    let obstacles = (0..n_segments)
        .map(|_| {
            let a = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let len = rng.random_range(0.2..6.0);
            let b = a + Vec2::from_angle(rng.random_range(0.0..TAU)) * len;
            Obstacle::wall("w", a, b, FULL, true)
        })
        .collect();
    Scene::new(obstacles)
}

/// Walks the ray in fixed steps and reports the first sample at or beyond
/// which a segment's supporting line changes side within the segment's extent.
/// The side value is advanced incrementally, which is exact for a straight ray.
pub fn march(scene: &Scene, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
    let segments: Vec<Segment> = scene
        .obstacles
        .iter()
        .flat_map(|o| o.footprint.iter().copied())
        .collect();
    let mut side: Vec<f64> = segments
        .iter()
        .map(|s| (s.b - s.a).cross(origin - s.a))
        .collect();
    let delta: Vec<f64> = segments
        .iter()
        .map(|s| (s.b - s.a).cross(dir) * MARCH_STEP)
        .collect();
    let steps = (max_range / MARCH_STEP).ceil() as usize;
    for k in 1..=steps {
        let t = k as f64 * MARCH_STEP;
        for (i, s) in segments.iter().enumerate() {
            let prev = side[i];
            let now = prev + delta[i];
            side[i] = now;
            if prev == 0.0 || (prev < 0.0) != (now < 0.0) || now == 0.0 {
                let frac = if prev == now {
                    0.0
                } else {
                    prev / (prev - now)
                };
                let q = origin + dir * (t - MARCH_STEP * (1.0 - frac));
                let e = s.b - s.a;
                let u = (q - s.a).dot(e) / e.dot(e);
                if (0.0..=1.0).contains(&u) {
                    return t.min(max_range);
                }
            }
        }
    }
    max_range
}
