use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Rigid, Vec2};
use super::scene::{ground_truth_scan, laser_scan, LaserSpec, Obstacle, Pose, Scene};
use crate::dataset::{fuse, ScanPair};
use crate::{Error, Result};

pub const LEG_WIDTH: f64 = 0.04;
pub const TABLE_HEIGHT: f64 = 0.75;
pub const TABLETOP_THICKNESS: f64 = 0.05;
/// Minimum distance between a sampled pose and any obstacle segment.
pub const POSE_CLEARANCE: f64 = 0.35;
pub const POSES_PER_SCENE: usize = 4;
/// Probability that a pose is turned towards a table, glass panel or low box.
pub const AIM_PROBABILITY: f64 = 0.6;

const POSE_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Room,
    Corridor,
    GlassRoom,
    TableRoom,
    Mixed,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::Room,
        SceneKind::Corridor,
        SceneKind::GlassRoom,
        SceneKind::TableRoom,
        SceneKind::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Room => "room",
            SceneKind::Corridor => "corridor",
            SceneKind::GlassRoom => "glass_room",
            SceneKind::TableRoom => "table_room",
            SceneKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown scene kind '{s}' (expected one of room, corridor, glass_room, table_room, mixed)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TablePlacement {
    Parallel,
    Perpendicular,
    FreeStanding,
}

/// A generated scene together with what is needed to place a robot in it.
#[derive(Debug, Clone)]
pub struct Layout {
    pub kind: SceneKind,
    pub scene: Scene,
    /// Maps the room's local frame, where the floor is axis aligned, to the world.
    pub frame: Rigid,
    /// Local-frame rectangle `[min, max]` poses are drawn from.
    pub free: [Vec2; 2],
    /// World positions of obstacles the laser misrepresents.
    pub targets: Vec<Vec2>,
    pub tables: Vec<TablePlacement>,
}

impl Layout {
    /// Rejection-samples a pose clear of every obstacle. Returns `None` if no
    /// admissible position was found.
    pub fn sample_pose<R: Rng + ?Sized>(&self, rng: &mut R, fov: f64) -> Option<Pose> {
        let [lo, hi] = self.free;
        for _ in 0..POSE_ATTEMPTS {
            let local = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            let p = self.frame.apply(local);
            if !self.is_clear(p) {
                continue;
            }
            let heading = if !self.targets.is_empty() && rng.random_bool(AIM_PROBABILITY) {
                let t = self.targets[rng.random_range(0..self.targets.len())];
                let d = t - p;
                d.y.atan2(d.x) + rng.random_range(-fov / 4.0..=fov / 4.0)
            } else {
                rng.random_range(0.0..TAU)
            };
            return Some(Pose::new(p.x, p.y, heading));
        }
        None
    }

    pub fn is_clear(&self, p: Vec2) -> bool {
        self.scene.obstacles.iter().all(|o| {
            !o.contains(p)
                && o.footprint
                    .iter()
                    .all(|s| s.distance_to(p) >= POSE_CLEARANCE)
        })
    }
}

struct Builder<'a> {
    rng: &'a mut ChaCha8Rng,
    robot_height: f64,
    laser_height: f64,
    width: f64,
    depth: f64,
    obstacles: Vec<Obstacle>,
    targets: Vec<Vec2>,
    tables: Vec<TablePlacement>,
}

impl Builder<'_> {
    fn full(&self) -> [f64; 2] {
        [0.0, self.robot_height]
    }

    fn walls(&mut self, corners: &[Vec2]) {
        let full = self.full();
        for i in 0..corners.len() {
            let (a, b) = (corners[i], corners[(i + 1) % corners.len()]);
            self.obstacles
                .push(Obstacle::wall("wall", a, b, full, true));
        }
    }

    fn room(&mut self) {
        let (w, d) = (self.width, self.depth);
        self.walls(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(w, 0.0),
            Vec2::new(w, d),
            Vec2::new(0.0, d),
        ]);
    }

    /// Room whose far wall (`y = depth`) is glass, with an opaque wall some
    /// distance behind it.
    fn glass_wall_room(&mut self) {
        let (w, d) = (self.width, self.depth);
        let beyond = d + self.rng.random_range(1.5..5.0);
        self.walls(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(w, 0.0),
            Vec2::new(w, beyond),
            Vec2::new(0.0, beyond),
        ]);
        let full = self.full();
        self.obstacles.push(Obstacle::wall(
            "glass",
            Vec2::new(0.0, d),
            Vec2::new(w, d),
            full,
            false,
        ));
        self.targets.push(Vec2::new(w / 2.0, d));
    }

    fn stub_wall(&mut self) {
        let (w, d) = (self.width, self.depth);
        let x = self.rng.random_range(0.3 * w..0.7 * w);
        let len = self.rng.random_range(0.5..(d / 3.0).max(0.6));
        let full = self.full();
        self.obstacles.push(Obstacle::wall(
            "wall",
            Vec2::new(x, 0.0),
            Vec2::new(x, len),
            full,
            true,
        ));
    }

    fn interior_point(&mut self, margin: f64) -> Vec2 {
        let mx = margin.min(self.width / 2.0 - 0.05);
        let my = margin.min(self.depth / 2.0 - 0.05);
        Vec2::new(
            self.rng.random_range(mx..self.width - mx),
            self.rng.random_range(my..self.depth - my),
        )
    }

    fn table(&mut self, placement: TablePlacement) {
        let max_len = if self.depth < 3.0 {
            0.45 * self.depth
        } else {
            1.8
        };
        let length = self.rng.random_range(0.7..max_len.max(0.75));
        let width = self.rng.random_range(0.5..0.9_f64.min(length));
        let gap = self.rng.random_range(0.02..0.3);
        // Wall sides: 0 bottom (y=0), 1 top (y=depth), 2 left (x=0), 3 right (x=width).
        let side = if self.depth < 3.0 {
            self.rng.random_range(0..2)
        } else {
            self.rng.random_range(0..4)
        };
        let (center, angle) = match placement {
            TablePlacement::FreeStanding => {
                let c = self.interior_point(1.2);
                (c, self.rng.random_range(0.0..PI))
            }
            TablePlacement::Parallel | TablePlacement::Perpendicular => {
                let along_wall_x = side < 2;
                let (extent_along, extent_out) = if placement == TablePlacement::Parallel {
                    (length, width)
                } else {
                    (width, length)
                };
                let wall_len = if along_wall_x { self.width } else { self.depth };
                let half = extent_along / 2.0 + 0.1;
                let t = if wall_len > 2.0 * half {
                    self.rng.random_range(half..wall_len - half)
                } else {
                    wall_len / 2.0
                };
                let out = gap + extent_out / 2.0;
                let c = match side {
                    0 => Vec2::new(t, out),
                    1 => Vec2::new(t, self.depth - out),
                    2 => Vec2::new(out, t),
                    _ => Vec2::new(self.width - out, t),
                };
                // Long axis along x when it should run along a horizontal wall.
                let long_along_x = along_wall_x == (placement == TablePlacement::Parallel);
                (c, if long_along_x { 0.0 } else { PI / 2.0 })
            }
        };
        let top = [TABLE_HEIGHT - TABLETOP_THICKNESS, TABLE_HEIGHT];
        let half = Vec2::new(length / 2.0, width / 2.0);
        self.obstacles
            .push(Obstacle::rect("tabletop", center, half, angle, top, true));
        let inset = 0.05 + LEG_WIDTH / 2.0;
        let leg_half = Vec2::new(LEG_WIDTH / 2.0, LEG_WIDTH / 2.0);
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let offset = Vec2::new(sx * (half.x - inset), sy * (half.y - inset)).rotate(angle);
            self.obstacles.push(Obstacle::rect(
                "table_leg",
                center + offset,
                leg_half,
                angle,
                [0.0, TABLE_HEIGHT],
                true,
            ));
        }
        self.targets.push(center);
        self.tables.push(placement);
    }

    fn random_table(&mut self) {
        let placement = match self.rng.random_range(0..3) {
            0 => TablePlacement::Parallel,
            1 => TablePlacement::Perpendicular,
            _ => TablePlacement::FreeStanding,
        };
        self.table(placement);
    }

    fn glass_panel(&mut self) {
        let c = self.interior_point(1.0);
        let len = self
            .rng
            .random_range(1.0..3.0_f64.min(self.width.max(self.depth) * 0.6).max(1.1));
        let dir = Vec2::from_angle(self.rng.random_range(0.0..PI)) * (len / 2.0);
        let full = self.full();
        self.obstacles
            .push(Obstacle::wall("glass", c - dir, c + dir, full, false));
        self.targets.push(c);
    }

    fn boxes(&mut self, n: usize) {
        for _ in 0..n {
            let c = self.interior_point(0.6);
            let half = Vec2::new(
                self.rng.random_range(0.15..0.5),
                self.rng.random_range(0.15..0.5),
            );
            let top = self.rng.random_range(0.1..1.2);
            let angle = self.rng.random_range(0.0..PI);
            self.obstacles
                .push(Obstacle::rect("box", c, half, angle, [0.0, top], true));
            if top < self.laser_height {
                self.targets.push(c);
            }
        }
    }

    fn floor_clutter(&mut self) {
        if !self.rng.random_bool(0.3) {
            return;
        }
        for _ in 0..self.rng.random_range(1..=3) {
            let c = self.interior_point(0.5);
            let half = Vec2::new(
                self.rng.random_range(0.05..0.3),
                self.rng.random_range(0.05..0.3),
            );
            let angle = self.rng.random_range(0.0..PI);
            self.obstacles
                .push(Obstacle::rect("clutter", c, half, angle, [0.0, 0.03], true));
        }
    }
}

/// Deterministically builds a randomized scene of the given kind.
pub fn generate_layout(kind: SceneKind, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (width, depth) = match kind {
        SceneKind::Corridor => (rng.random_range(10.0..25.0), rng.random_range(1.8..3.0)),
        _ => (rng.random_range(4.0..12.0), rng.random_range(3.5..10.0)),
    };
    let defaults = Scene::default();
    let mut b = Builder {
        rng: &mut rng,
        robot_height: defaults.robot_height,
        laser_height: defaults.laser_height,
        width,
        depth,
        obstacles: Vec::new(),
        targets: Vec::new(),
        tables: Vec::new(),
    };
    match kind {
        SceneKind::GlassRoom => b.glass_wall_room(),
        _ => b.room(),
    }
    let (tables, glass, boxes) = match kind {
        SceneKind::Room => {
            if b.rng.random_bool(0.5) {
                b.stub_wall();
            }
            (b.rng.random_range(0..=1), 0, b.rng.random_range(1..=4))
        }
        SceneKind::Corridor => (
            b.rng.random_range(1..=3),
            b.rng.random_range(0..=1),
            b.rng.random_range(0..=2),
        ),
        SceneKind::GlassRoom => (
            b.rng.random_range(0..=1),
            b.rng.random_range(0..=1),
            b.rng.random_range(0..=2),
        ),
        SceneKind::TableRoom => (b.rng.random_range(1..=3), 0, b.rng.random_range(0..=2)),
        SceneKind::Mixed => (
            b.rng.random_range(0..=3),
            b.rng.random_range(0..=2),
            b.rng.random_range(0..=4),
        ),
    };
    for _ in 0..tables {
        b.random_table();
    }
    for _ in 0..glass {
        b.glass_panel();
    }
    b.boxes(boxes);
    b.floor_clutter();

    let Builder {
        obstacles,
        targets: local_targets,
        tables,
        ..
    } = b;
    let frame = Rigid::new(
        rng.random_range(0.0..TAU),
        Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
    );
    let margin = 0.4;
    let free = [
        Vec2::new(margin, margin),
        Vec2::new(width - margin, depth - margin),
    ];
    let local = Scene {
        obstacles,
        ..defaults
    };
    Layout {
        kind,
        scene: local.transformed(&frame),
        frame,
        free,
        targets: local_targets.iter().map(|&t| frame.apply(t)).collect(),
        tables,
    }
}

pub fn generate_scene(kind: SceneKind, seed: u64) -> Scene {
    generate_layout(kind, seed).scene
}

/// Laser scan and fused ground truth from random scenes of `kinds` and random
/// poses, [`POSES_PER_SCENE`] poses per scene.
pub fn generate_dataset(
    n_pairs: usize,
    kinds: &[SceneKind],
    spec: &LaserSpec,
    seed: u64,
) -> Result<Vec<ScanPair>> {
    spec.validate()?;
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no scene kinds given".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let layout = generate_layout(kind, rng.random());
        for _ in 0..POSES_PER_SCENE {
            if pairs.len() == n_pairs {
                break;
            }
            let Some(pose) = layout.sample_pose(&mut rng, spec.fov) else {
                break;
            };
            let spec = spec.with_pose(pose);
            let x = laser_scan(&layout.scene, &spec);
            let y = fuse(&x, &ground_truth_scan(&layout.scene, &spec))?;
            pairs.push(ScanPair { x, y });
        }
    }
    Ok(pairs)
}
