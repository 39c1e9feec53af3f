use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{ray_segment, Rigid, Segment, Vec2};
use crate::{Error, Result};

pub const DEFAULT_ROBOT_HEIGHT: f64 = 1.5;
pub const DEFAULT_LASER_HEIGHT: f64 = 0.25;
pub const DEFAULT_EPSILON_FLOOR: f64 = 0.05;
pub const SCENE_FORMAT_VERSION: u32 = 1;

/// A prism: a planar footprint extruded over `height = [lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub footprint: Vec<Segment>,
    pub height: [f64; 2],
    /// `false` for materials the laser passes through, such as glass.
    pub laser_visible: bool,
}

impl Obstacle {
    pub fn new(
        label: &str,
        footprint: Vec<Segment>,
        height: [f64; 2],
        laser_visible: bool,
    ) -> Self {
        Obstacle {
            label: label.to_string(),
            footprint,
            height,
            laser_visible,
        }
    }

    /// Single straight wall or panel.
    pub fn wall(label: &str, a: Vec2, b: Vec2, height: [f64; 2], laser_visible: bool) -> Self {
        Self::new(label, vec![Segment::new(a, b)], height, laser_visible)
    }

    /// Closed polygon through `corners` in order.
    pub fn polygon(label: &str, corners: &[Vec2], height: [f64; 2], laser_visible: bool) -> Self {
        let n = corners.len();
        let footprint = (0..n)
            .map(|i| Segment::new(corners[i], corners[(i + 1) % n]))
            .collect();
        Self::new(label, footprint, height, laser_visible)
    }

    /// Rectangle of half extents `half` centred at `center`, rotated by `angle`.
    pub fn rect(
        label: &str,
        center: Vec2,
        half: Vec2,
        angle: f64,
        height: [f64; 2],
        laser_visible: bool,
    ) -> Self {
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .map(|(sx, sy)| center + Vec2::new(sx * half.x, sy * half.y).rotate(angle));
        Self::polygon(label, &corners, height, laser_visible)
    }

    pub fn validate(&self, robot_height: f64) -> Result<()> {
        let [lo, hi] = self.height;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!(
                "obstacle '{}': height interval [{lo}, {hi}] is empty",
                self.label
            )));
        }
        if lo < 0.0 || hi > robot_height {
            return Err(Error::Domain(format!(
                "obstacle '{}': height interval [{lo}, {hi}] leaves [0, {robot_height}]",
                self.label
            )));
        }
        if self.footprint.is_empty() {
            return Err(Error::Domain(format!(
                "obstacle '{}' has no segments",
                self.label
            )));
        }
        for (i, s) in self.footprint.iter().enumerate() {
            if !(s.a.is_finite() && s.b.is_finite()) || !(s.length() > 0.0) {
                return Err(Error::Domain(format!(
                    "obstacle '{}': segment {i} is degenerate or non-finite",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// Whether the footprint is a single closed loop of consecutive segments.
    pub fn is_closed(&self) -> bool {
        let n = self.footprint.len();
        n >= 3 && (0..n).all(|i| self.footprint[i].b == self.footprint[(i + 1) % n].a)
    }

    /// Point-in-polygon by crossing count; always `false` for open footprints.
    pub fn contains(&self, p: Vec2) -> bool {
        if !self.is_closed() {
            return false;
        }
        let mut inside = false;
        for s in &self.footprint {
            let (a, b) = (s.a, s.b);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the obstacle occupies height `h`.
    pub fn spans(&self, h: f64) -> bool {
        self.height[0] <= h && h <= self.height[1]
    }

    /// Whether the height interval meets `[lo, hi]`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.height[0] <= hi && self.height[1] >= lo
    }

    pub fn transformed(&self, t: &Rigid) -> Obstacle {
        Obstacle {
            footprint: self.footprint.iter().map(|s| t.apply_segment(s)).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub obstacles: Vec<Obstacle>,
    /// Robot height `H`.
    pub robot_height: f64,
    /// Scanner height `h*`.
    pub laser_height: f64,
    /// Obstacles entirely below this height are ignored by the ground truth.
    pub epsilon_floor: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            obstacles: Vec::new(),
            robot_height: DEFAULT_ROBOT_HEIGHT,
            laser_height: DEFAULT_LASER_HEIGHT,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    robot_height: f64,
    laser_height: f64,
    epsilon_floor: f64,
    obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn new(obstacles: Vec<Obstacle>) -> Self {
        Scene {
            obstacles,
            ..Scene::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.robot_height;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!("robot height {h} must be positive")));
        }
        if !(self.laser_height > 0.0 && self.laser_height < h) {
            return Err(Error::Domain(format!(
                "laser height {} outside (0, {h})",
                self.laser_height
            )));
        }
        if !(self.epsilon_floor >= 0.0 && self.epsilon_floor < h) {
            return Err(Error::Domain(format!(
                "floor band {} outside [0, {h})",
                self.epsilon_floor
            )));
        }
        self.obstacles.iter().try_for_each(|o| o.validate(h))
    }

    /// Obstacles the scanner sees: opaque and present at `h*`.
    pub fn laser_filter(&self) -> impl Fn(&Obstacle) -> bool + '_ {
        move |o| o.laser_visible && o.spans(self.laser_height)
    }

    /// Obstacles the robot can collide with: any part inside `[ε, H]`.
    pub fn collision_filter(&self) -> impl Fn(&Obstacle) -> bool + '_ {
        move |o| o.overlaps(self.epsilon_floor, self.robot_height)
    }

    pub fn transformed(&self, t: &Rigid) -> Scene {
        Scene {
            obstacles: self.obstacles.iter().map(|o| o.transformed(t)).collect(),
            ..self.clone()
        }
    }

    pub fn segment_count(&self) -> usize {
        self.obstacles.iter().map(|o| o.footprint.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let file = SceneFile {
            version: SCENE_FORMAT_VERSION,
            robot_height: self.robot_height,
            laser_height: self.laser_height,
            epsilon_floor: self.epsilon_floor,
            obstacles: self.obstacles.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scene serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Scene> {
        let file: SceneFile =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        if file.version != SCENE_FORMAT_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported scene version {}", file.version),
            ));
        }
        let scene = Scene {
            obstacles: file.obstacles,
            robot_height: file.robot_height,
            laser_height: file.laser_height,
            epsilon_floor: file.epsilon_floor,
        };
        scene
            .validate()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(scene)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scene::from_json(&text, path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn transformed(&self, t: &Rigid) -> Pose {
        let p = t.apply(self.position());
        Pose::new(p.x, p.y, self.heading + t.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserSpec {
    pub n_rays: usize,
    /// Field of view in radians.
    pub fov: f64,
    pub max_range: f64,
    pub pose: Pose,
}

impl Default for LaserSpec {
    fn default() -> Self {
        LaserSpec {
            n_rays: 128,
            fov: PI / 2.0,
            max_range: 30.0,
            pose: Pose::default(),
        }
    }
}

impl LaserSpec {
    pub fn with_pose(self, pose: Pose) -> Self {
        LaserSpec { pose, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rays < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_rays = {} (need ≥ 2)",
                self.n_rays
            )));
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(Error::InvalidConfig(format!(
                "fov = {} outside (0, 2π]",
                self.fov
            )));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "max range = {}",
                self.max_range
            )));
        }
        let p = self.pose;
        if !(p.x.is_finite() && p.y.is_finite() && p.heading.is_finite()) {
            return Err(Error::InvalidConfig("pose must be finite".into()));
        }
        Ok(())
    }

    /// Ray directions in counter-clockwise order, centred on the heading. A
    /// full circle is split into `n` equal steps so no direction repeats.
    pub fn ray_angles(&self) -> Vec<f64> {
        let n = self.n_rays;
        let heading = self.pose.heading;
        if self.fov >= TAU {
            let step = TAU / n as f64;
            (0..n).map(|i| heading - PI + i as f64 * step).collect()
        } else {
            let step = self.fov / (n - 1) as f64;
            (0..n)
                .map(|i| heading - self.fov / 2.0 + i as f64 * step)
                .collect()
        }
    }
}

/// Distance to the nearest segment of an obstacle accepted by `filter`,
/// capped at `max_range`.
pub fn cast_ray(
    scene: &Scene,
    origin: Vec2,
    direction: Vec2,
    max_range: f64,
    filter: impl Fn(&Obstacle) -> bool,
) -> f64 {
    debug_assert!(
        (direction.norm() - 1.0).abs() < 1e-9,
        "direction must be unit length"
    );
    let mut best = max_range;
    for o in scene.obstacles.iter().filter(|o| filter(o)) {
        for s in &o.footprint {
            if let Some(t) = ray_segment(origin, direction, s) {
                best = best.min(t);
            }
        }
    }
    best
}

fn scan(scene: &Scene, spec: &LaserSpec, filter: impl Fn(&Obstacle) -> bool) -> Vec<f64> {
    let origin = spec.pose.position();
    spec.ray_angles()
        .into_iter()
        .map(|a| cast_ray(scene, origin, Vec2::from_angle(a), spec.max_range, &filter))
        .collect()
}

/// What the planar scanner at `h*` reports.
pub fn laser_scan(scene: &Scene, spec: &LaserSpec) -> Vec<f64> {
    scan(scene, spec, scene.laser_filter())
}

/// Per-ray distance to the nearest obstacle anywhere within the robot's
/// height band, regardless of whether the laser can see it.
pub fn ground_truth_scan(scene: &Scene, spec: &LaserSpec) -> Vec<f64> {
    scan(scene, spec, scene.collision_filter())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: [f64; 2] = [0.0, DEFAULT_ROBOT_HEIGHT];

    fn facing_x(n_rays: usize, fov: f64) -> LaserSpec {
        LaserSpec {
            n_rays,
            fov,
            ..LaserSpec::default()
        }
    }

    #[test]
    fn empty_scene_reads_max_range() {
        let s = Scene::default();
        let spec = LaserSpec::default();
        assert!(laser_scan(&s, &spec).iter().all(|&d| d == 30.0));
        assert_eq!(
            cast_ray(&s, Vec2::default(), Vec2::new(1.0, 0.0), 30.0, |_| true),
            30.0
        );
    }

    #[test]
    fn wall_at_five() {
        let s = Scene::new(vec![Obstacle::wall(
            "w",
            Vec2::new(5.0, -10.0),
            Vec2::new(5.0, 10.0),
            FULL,
            true,
        )]);
        assert_eq!(
            cast_ray(&s, Vec2::default(), Vec2::new(1.0, 0.0), 30.0, |_| true),
            5.0
        );
        let x = laser_scan(&s, &facing_x(3, PI / 2.0));
        assert_eq!(x[1], 5.0);
        assert!((x[0] - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(ground_truth_scan(&s, &facing_x(3, PI / 2.0)), x);
    }

    #[test]
    fn glass_is_transparent_to_laser_only() {
        let s = Scene::new(vec![
            Obstacle::wall(
                "glass",
                Vec2::new(2.0, -5.0),
                Vec2::new(2.0, 5.0),
                FULL,
                false,
            ),
            Obstacle::wall(
                "wall",
                Vec2::new(6.0, -5.0),
                Vec2::new(6.0, 5.0),
                FULL,
                true,
            ),
        ]);
        let spec = facing_x(5, 0.2);
        let x = laser_scan(&s, &spec);
        let y = ground_truth_scan(&s, &spec);
        assert!(x.iter().all(|&d| d > 5.9));
        assert!(y.iter().all(|&d| d < 2.1));
    }

    #[test]
    fn floor_clutter_is_ignored_by_ground_truth() {
        let s = Scene::new(vec![Obstacle::rect(
            "clutter",
            Vec2::new(3.0, 0.0),
            Vec2::new(0.2, 0.2),
            0.0,
            [0.0, 0.03],
            true,
        )]);
        let spec = facing_x(3, 0.1);
        assert!(ground_truth_scan(&s, &spec).iter().all(|&d| d == 30.0));
    }

    #[test]
    fn ray_angles_cover_fov() {
        let a = facing_x(128, PI / 2.0).ray_angles();
        assert!((a[0] + PI / 4.0).abs() < 1e-15);
        assert!((a[127] - PI / 4.0).abs() < 1e-15);
        let full = facing_x(4, TAU).ray_angles();
        assert_eq!(full, vec![-PI, -PI / 2.0, 0.0, PI / 2.0]);
    }

    #[test]
    fn polygon_contains() {
        let o = Obstacle::rect(
            "r",
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.5),
            0.3,
            FULL,
            true,
        );
        assert!(o.is_closed());
        assert!(o.contains(Vec2::new(1.0, 1.0)));
        assert!(!o.contains(Vec2::new(3.0, 1.0)));
        let w = Obstacle::wall("w", Vec2::default(), Vec2::new(1.0, 0.0), FULL, true);
        assert!(!w.is_closed());
    }

    #[test]
    fn validation() {
        let bad = Obstacle::wall("w", Vec2::default(), Vec2::default(), FULL, true);
        assert!(bad.validate(1.5).is_err());
        let inverted = Obstacle::wall("w", Vec2::default(), Vec2::new(1.0, 0.0), [1.0, 0.5], true);
        assert!(inverted.validate(1.5).is_err());
        let s = Scene {
            laser_height: 2.0,
            ..Scene::default()
        };
        assert!(s.validate().is_err());
        assert!(facing_x(1, 1.0).validate().is_err());
        assert!(facing_x(8, 7.0).validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = Scene::new(vec![
            Obstacle::wall(
                "glass",
                Vec2::new(2.0, -5.0),
                Vec2::new(2.0, 5.0),
                FULL,
                false,
            ),
            Obstacle::rect(
                "box",
                Vec2::new(1.0, 1.0),
                Vec2::new(0.3, 0.2),
                0.1,
                [0.0, 0.4],
                true,
            ),
        ]);
        let p = Path::new("scene.json");
        let back = Scene::from_json(&s.to_json(), p).unwrap();
        assert_eq!(back, s);
        let wrong = s.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(Scene::from_json(&wrong, p).is_err());
    }
}
