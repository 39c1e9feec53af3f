use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Point or direction in the plane, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rigid {
    pub angle: f64,
    pub offset: Vec2,
}

impl Rigid {
    pub fn new(angle: f64, offset: Vec2) -> Self {
        Rigid { angle, offset }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotate(self.angle) + self.offset
    }

    pub fn apply_segment(&self, s: &Segment) -> Segment {
        Segment::new(self.apply(s.a), self.apply(s.b))
    }
}

/// Closed line segment between `a` and `b`, serialized as `[[ax, ay], [bx, by]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Vec2; 2]", into = "[Vec2; 2]")]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl From<[Vec2; 2]> for Segment {
    fn from([a, b]: [Vec2; 2]) -> Self {
        Segment { a, b }
    }
}

impl From<Segment> for [Vec2; 2] {
    fn from(s: Segment) -> Self {
        [s.a, s.b]
    }
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let e = self.b - self.a;
        let t = ((p - self.a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
        (self.a + e * t - p).norm()
    }
}

const PARALLEL_EPS: f64 = 1e-12;

/// Distance `t ≥ 0` along the ray `origin + t·dir` (with `dir` unit length) to
/// the first point of `seg`, or `None` if the ray misses. A ray running along
/// a collinear segment hits its nearer endpoint, or `0` when it starts on it.
pub fn ray_segment(origin: Vec2, dir: Vec2, seg: &Segment) -> Option<f64> {
    let e = seg.b - seg.a;
    let w = seg.a - origin;
    let denom = dir.cross(e);
    let scale = e.norm();
    if denom.abs() > PARALLEL_EPS * scale {
        let t = w.cross(e) / denom;
        let u = w.cross(dir) / denom;
        return (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t);
    }
    if w.cross(dir).abs() > PARALLEL_EPS * (w.norm() + scale) {
        return None;
    }
    let ta = w.dot(dir);
    let tb = (seg.b - origin).dot(dir);
    let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
    if hi < 0.0 {
        None
    } else {
        Some(lo.max(0.0))
    }
}
