//! Keypoint vectors and the dot-product / arccos angle between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KeypointLayout, Landmark, Side, Skeleton};

/// Vectors shorter than this (in pixels) have no usable direction.
pub const ZERO_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector2 {
    pub dx: f64,
    pub dy: f64,
}

impl Vector2 {
    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn norm(&self) -> f64 {
        dot(*self, *self).sqrt()
    }

    pub fn scale(&self, k: f64) -> Vector2 {
        Vector2::new(self.dx * k, self.dy * k)
    }
}

pub fn vector_between(from: Point2, to: Point2) -> Vector2 {
    Vector2::new(to.x - from.x, to.y - from.y)
}

pub fn dot(p: Vector2, q: Vector2) -> f64 {
    p.dx * q.dx + p.dy * q.dy
}

/// Angle between two vectors in degrees, in `[0, 180]`.
///
/// The cosine is clamped to `[-1, 1]` before `acos`. The denominator is taken
/// as `sqrt(|p|^2 |q|^2)` so that `angle_between(p, p)` is exactly 0 and
/// `angle_between(p, -p)` exactly 180.
pub fn angle_between(p: Vector2, q: Vector2) -> Result<f64> {
    let pp = dot(p, p);
    let qq = dot(q, q);
    if pp.sqrt() < ZERO_EPSILON || qq.sqrt() < ZERO_EPSILON {
        return Err(Error::ZeroVector);
    }
    let cos = (dot(p, q) / (pp * qq).sqrt()).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

fn landmark_point(s: &Skeleton, layout: KeypointLayout, lm: Landmark) -> Option<Point2> {
    s.landmark(layout, lm).map(|kp| kp.point())
}

/// Interior angle at `vertex` between the rays towards `a` and `b`.
fn vertex_angle(vertex: Point2, a: Point2, b: Point2) -> Option<f64> {
    angle_between(vector_between(vertex, a), vector_between(vertex, b)).ok()
}

/// Angle at the elbow between forearm and upper arm. A straight arm gives 180.
pub fn elbow_angle(s: &Skeleton, side: Side, layout: KeypointLayout) -> Option<f64> {
    let shoulder = landmark_point(s, layout, Landmark::Shoulder(side))?;
    let elbow = landmark_point(s, layout, Landmark::Elbow(side))?;
    let wrist = landmark_point(s, layout, Landmark::Wrist(side))?;
    vertex_angle(elbow, wrist, shoulder)
}

/// Angle at the shoulder between the upper arm and the shoulder-to-neck direction.
///
/// An arm hanging at the side gives about 90; raising it sideways moves it towards 180.
pub fn shoulder_neck_angle(s: &Skeleton, side: Side, layout: KeypointLayout) -> Option<f64> {
    let neck = landmark_point(s, layout, Landmark::Neck)?;
    let shoulder = landmark_point(s, layout, Landmark::Shoulder(side))?;
    let elbow = landmark_point(s, layout, Landmark::Elbow(side))?;
    vertex_angle(shoulder, elbow, neck)
}
