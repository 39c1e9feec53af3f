//! 2.5D scenes of prism obstacles, an analytic raycaster, and generators for
//! paired laser / ground-truth scans.
//!
//! Every obstacle has a constant cross-section over its height interval, so
//! the closest obstacle over the robot's height band is the closest obstacle
//! whose interval meets the band.

mod generate;
mod geometry;
mod scene;

pub use generate::{
    generate_dataset, generate_layout, generate_scene, Layout, SceneKind, TablePlacement,
    AIM_PROBABILITY, LEG_WIDTH, POSES_PER_SCENE, POSE_CLEARANCE, TABLETOP_THICKNESS, TABLE_HEIGHT,
};
pub use geometry::{ray_segment, Rigid, Segment, Vec2};
pub use scene::{
    cast_ray, ground_truth_scan, laser_scan, LaserSpec, Obstacle, Pose, Scene,
    DEFAULT_EPSILON_FLOOR, DEFAULT_LASER_HEIGHT, DEFAULT_ROBOT_HEIGHT, SCENE_FORMAT_VERSION,
};
