use std::f64::consts::{PI, TAU};
use std::time::Instant;

use halu_core::simulator::{
    cast_ray, generate_dataset, generate_layout, generate_scene, ground_truth_scan, laser_scan,
    LaserSpec, Obstacle, Pose, Rigid, Scene, SceneKind, Vec2,
};
use proptest::prelude::*;

mod common;
use common::{march, random_scene, FULL, MARCH_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn analytic_raycast_matches_marching_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    let mut rays = 0;
    for _ in 0..100 {
        let scene = random_scene(&mut rng, 20);
        for _ in 0..100 {
            let origin = Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
            let dir = Vec2::from_angle(rng.random_range(0.0..TAU));
            let analytic = cast_ray(&scene, origin, dir, 30.0, |_| true);
            let marched = march(&scene, origin, dir, 30.0);
            worst = worst.max((analytic - marched).abs());
            rays += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(rays, 10_000);
    assert!(worst <= MARCH_TOL, "worst deviation {worst} m");
    assert!(secs < 30.0, "took {secs:.1} s");
}

fn table_scene() -> Scene {
    let mut obstacles = vec![Obstacle::wall(
        "wall",
        Vec2::new(8.0, -10.0),
        Vec2::new(8.0, 10.0),
        FULL,
        true,
    )];
    obstacles.push(Obstacle::rect(
        "tabletop",
        Vec2::new(3.0, 0.0),
        Vec2::new(0.5, 1.0),
        0.0,
        [0.70, 0.75],
        true,
    ));
    for (x, y) in [(2.57, -0.93), (3.43, -0.93), (3.43, 0.93), (2.57, 0.93)] {
        obstacles.push(Obstacle::rect(
            "leg",
            Vec2::new(x, y),
            Vec2::new(0.02, 0.02),
            0.0,
            [0.0, 0.75],
            true,
        ));
    }
    Scene::new(obstacles)
}

#[test]
fn table_legs_are_narrow_dips_in_the_laser_scan() {
    let scene = table_scene();
    let spec = LaserSpec {
        n_rays: 2000,
        ..LaserSpec::default()
    };
    let x = laser_scan(&scene, &spec);
    let y = ground_truth_scan(&scene, &spec);
    // Contiguous runs of rays that stop short of the back wall.
    let mut runs = Vec::new();
    let mut len = 0;
    for &d in &x {
        if d < 7.9 {
            len += 1;
        } else if len > 0 {
            runs.push(len);
            len = 0;
        }
    }
    let step_deg = 90.0 / (spec.n_rays - 1) as f64;
    assert_eq!(runs.len(), 4, "runs {runs:?}");
    assert!(
        runs.iter().all(|&r| r as f64 * step_deg < 1.5),
        "runs {runs:?}"
    );
    let blocked_y = y.iter().filter(|&&d| d < 7.9).count();
    assert!(blocked_y > 200, "tabletop covers only {blocked_y} rays");
    let front = y.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((2.5..2.5 + 1e-3).contains(&front), "front edge at {front}");
}

#[test]
fn tabletop_alone_appears_only_in_ground_truth() {
    let scene = Scene::new(vec![Obstacle::rect(
        "tabletop",
        Vec2::new(3.0, 0.0),
        Vec2::new(0.5, 1.0),
        0.0,
        [0.70, 0.75],
        true,
    )]);
    let spec = LaserSpec::default();
    let x = laser_scan(&scene, &spec);
    let y = ground_truth_scan(&scene, &spec);
    assert!(x.iter().all(|&d| d == 30.0));
    assert!((y[64] - 2.5).abs() < 1e-3);
    assert!(y.iter().filter(|&&d| d < 30.0).count() > 30);
}

#[test]
fn visible_scenes_give_identical_scans() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let scene = random_scene(&mut rng, 15);
        let spec = LaserSpec::default().with_pose(Pose::new(0.3, -0.2, rng.random_range(0.0..TAU)));
        assert_eq!(laser_scan(&scene, &spec), ground_truth_scan(&scene, &spec));
    }
}

#[test]
fn generated_scenes_are_valid_over_many_seeds() {
    for seed in 0..1000u64 {
        let kind = SceneKind::ALL[seed as usize % SceneKind::ALL.len()];
        let layout = generate_layout(kind, seed);
        layout
            .scene
            .validate()
            .unwrap_or_else(|e| panic!("{kind} seed {seed}: {e}"));
        let [lo, hi] = layout.free;
        assert!(
            lo.x < hi.x && lo.y < hi.y,
            "{kind} seed {seed}: empty free region"
        );
    }
}

#[test]
fn generated_pairs_respect_fusion_order_and_contain_hallucination_targets() {
    let pairs = generate_dataset(1000, &SceneKind::ALL, &LaserSpec::default(), 11).unwrap();
    assert_eq!(pairs.len(), 1000);
    let mut with_target = 0;
    for p in &pairs {
        assert_eq!(p.len(), 128);
        assert!(p.x.iter().zip(&p.y).all(|(x, y)| y <= x));
        if p.x.iter().zip(&p.y).any(|(x, y)| *y < x - 0.1) {
            with_target += 1;
        }
    }
    let frac = with_target as f64 / pairs.len() as f64;
    println!("pairs with a hallucination target: {:.1}%", frac * 100.0);
    assert!(frac > 0.30, "only {:.1}%", frac * 100.0);
}

#[test]
fn dataset_generation_is_deterministic() {
    let spec = LaserSpec::default();
    let a = generate_dataset(30, &[SceneKind::Mixed], &spec, 99).unwrap();
    let b = generate_dataset(30, &[SceneKind::Mixed], &spec, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        generate_scene(SceneKind::Corridor, 5),
        generate_scene(SceneKind::Corridor, 5)
    );
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn raycast_is_rigid_motion_equivariant(
        seed in any::<u64>(),
        angle in -PI..PI,
        tx in -50.0..50.0f64,
        ty in -50.0..50.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene = random_scene(&mut rng, 12);
        let pose = Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.0..TAU));
        let spec = LaserSpec { n_rays: 64, fov: TAU, ..LaserSpec::default() }.with_pose(pose);
        let t = Rigid::new(angle, Vec2::new(tx, ty));
        let moved = scene.transformed(&t);
        let moved_spec = spec.with_pose(pose.transformed(&t));
        let a = laser_scan(&scene, &spec);
        let b = laser_scan(&moved, &moved_spec);
        for (i, (u, v)) in a.iter().zip(&b).enumerate() {
            prop_assert!((u - v).abs() <= 1e-9, "ray {}: {} vs {}", i, u, v);
        }
    }

    #[test]
    fn scans_are_pure(seed in any::<u64>()) {
        let scene = generate_scene(SceneKind::Mixed, seed);
        let spec = LaserSpec::default().with_pose(Pose::new(0.0, 0.0, 1.0));
        prop_assert_eq!(laser_scan(&scene, &spec), laser_scan(&scene, &spec));
        prop_assert_eq!(ground_truth_scan(&scene, &spec), ground_truth_scan(&scene, &spec));
    }
}
