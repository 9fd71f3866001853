//! Planar and spatial primitives shared by the planners.
//!
//! Obstacles are closed polylines. All queries are pure functions over
//! immutable inputs.

use nalgebra::{Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Default angular resolution of [`visible_boundary`] (0.5 degrees).
pub const DEFAULT_VISION_RESOLUTION: f64 = 0.5 * PI / 180.0;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("query point lies inside the obstacle")]
    PInsideObstacle,
    #[error("query point lies inside or on the circle")]
    InsideCircle,
    #[error("zero-length vector")]
    ZeroVector,
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid may land on exactly -pi after the subtraction for inputs like 3pi
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

pub fn bearing(from: &Vec2, to: &Vec2) -> f64 {
    let d = to - from;
    d.y.atan2(d.x)
}

pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    Rotation2::new(angle) * v
}

pub fn cross2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed angle in (-pi, pi], positive counter-clockwise from `v` to `u`.
pub fn angle_between(u: &Vec2, v: &Vec2) -> Result<f64, GeometryError> {
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let a = cross2(v, u).atan2(v.dot(u));
    Ok(if a <= -PI { a + 2.0 * PI } else { a })
}

/// Closest point to `p` on segment `a`-`b`.
pub fn closest_on_segment(p: &Vec2, a: &Vec2, b: &Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Ray parameter `t >= 0` where `origin + t * dir` meets segment `a`-`b`.
pub fn ray_segment(origin: &Vec2, dir: &Vec2, a: &Vec2, b: &Vec2) -> Option<f64> {
    let e = b - a;
    let denom = cross2(dir, &e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = a - origin;
    let t = cross2(&w, &e) / denom;
    let s = cross2(&w, dir) / denom;
    if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// Proper or touching intersection test for two closed segments.
pub fn segments_intersect(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> bool {
    fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
        cross2(&(b - a), &(c - a))
    }
    fn on_seg(a: &Vec2, b: &Vec2, p: &Vec2) -> bool {
        p.x >= a.x.min(b.x) - 1e-12
            && p.x <= a.x.max(b.x) + 1e-12
            && p.y >= a.y.min(b.y) - 1e-12
            && p.y <= a.y.max(b.y) + 1e-12
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_seg(q1, q2, p1))
        || (d2 == 0.0 && on_seg(q1, q2, p2))
        || (d3 == 0.0 && on_seg(p1, p2, q1))
        || (d4 == 0.0 && on_seg(p1, p2, q2))
}

/// Even-odd point-in-polygon test over an implicitly closed vertex ring.
pub fn point_in_polygon(p: &Vec2, ring: &[Vec2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&ring[i], &ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed shoelace area (positive for counter-clockwise rings).
pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| cross2(&ring[i], &ring[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

pub fn polygon_centroid(ring: &[Vec2]) -> Vec2 {
    let n = ring.len();
    let a = signed_area(ring);
    if a.abs() < 1e-300 {
        return ring.iter().sum::<Vec2>() / n as f64;
    }
    let mut c = Vec2::zeros();
    for i in 0..n {
        let (p, q) = (&ring[i], &ring[(i + 1) % n]);
        c += (p + q) * cross2(p, q);
    }
    c / (6.0 * a)
}

fn ring_self_intersects(ring: &[Vec2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a1, a2) = (&ring[i], &ring[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (&ring[j], &ring[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

/// A closed obstacle outline with its mass center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBoundary {
    vertices: Vec<Vec2>,
    mass_center: Vec2,
}

impl ObstacleBoundary {
    /// Validates vertex count, simplicity and that the outline encloses `mass_center`.
    pub fn new(vertices: Vec<Vec2>, mass_center: Vec2) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidBoundary(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::InvalidBoundary("non-finite vertex".into()));
        }
        if ring_self_intersects(&vertices) {
            return Err(GeometryError::InvalidBoundary("self-intersecting outline".into()));
        }
        if !point_in_polygon(&mass_center, &vertices) {
            return Err(GeometryError::InvalidBoundary(
                "mass center is not enclosed by the outline".into(),
            ));
        }
        Ok(Self { vertices, mass_center })
    }

    /// Uses the area centroid as mass center.
    pub fn from_vertices(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidBoundary("need at least 3 vertices".into()));
        }
        let c = polygon_centroid(&vertices);
        Self::new(vertices, c)
    }

    /// Skips validation. Used for rigid transforms of an already validated outline.
    pub(crate) fn new_unchecked(vertices: Vec<Vec2>, mass_center: Vec2) -> Self {
        Self { vertices, mass_center }
    }

    /// Regular `n`-gon with the given circumradius.
    pub fn regular_polygon(center: Vec2, circumradius: f64, n: usize, phase: f64) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let a = phase + 2.0 * PI * k as f64 / n as f64;
                center + Vec2::new(a.cos(), a.sin()) * circumradius
            })
            .collect();
        Self::new_unchecked(vertices, center)
    }

    /// Polygonal ellipse, semi-axes `a` (local x) and `b`, rotated by `angle`.
    pub fn ellipse(center: Vec2, a: f64, b: f64, angle: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                center + rotate(&Vec2::new(a * t.cos(), b * t.sin()), angle)
            })
            .collect();
        Self::new_unchecked(vertices, center)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn mass_center(&self) -> Vec2 {
        self.mass_center
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        point_in_polygon(p, &self.vertices)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn translated(&self, offset: &Vec2) -> Self {
        Self::new_unchecked(
            self.vertices.iter().map(|v| v + offset).collect(),
            self.mass_center + offset,
        )
    }

    /// Rigid rotation about the mass center.
    pub fn rotated(&self, angle: f64) -> Self {
        let c = self.mass_center;
        Self::new_unchecked(
            self.vertices.iter().map(|v| c + rotate(&(v - c), angle)).collect(),
            c,
        )
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    /// First boundary hit along the ray `origin + t * dir`, `t >= 0`.
    pub fn ray_hit(&self, origin: &Vec2, dir: &Vec2) -> Option<Vec2> {
        self.edges()
            .filter_map(|(a, b)| ray_segment(origin, dir, &a, &b))
            .filter(|t| *t > 1e-12)
            .min_by(|a, b| a.total_cmp(b))
            .map(|t| origin + dir * t)
    }

    /// Farthest boundary distance from the mass center along `angle`.
    pub fn radius_at(&self, angle: f64) -> f64 {
        let c = self.mass_center;
        let dir = Vec2::new(angle.cos(), angle.sin());
        self.edges()
            .filter_map(|(a, b)| ray_segment(&c, &dir, &a, &b))
            .fold(0.0, f64::max)
    }

    /// True when segment `a`-`b` touches the outline or lies inside it.
    pub fn segment_crosses(&self, a: &Vec2, b: &Vec2) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        self.edges().any(|(p, q)| segments_intersect(a, b, &p, &q))
    }

    /// Vertex bearings from `p`, unwrapped continuously around the outline,
    /// relative to the bearing of the mass center.
    fn unwrapped_bearings(&self, p: &Vec2) -> Vec<f64> {
        let reference = bearing(p, &self.mass_center);
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut prev = normalize_angle(bearing(p, &self.vertices[0]) - reference);
        out.push(prev);
        for v in &self.vertices[1..] {
            let raw = normalize_angle(bearing(p, v) - reference);
            let step = normalize_angle(raw - prev);
            prev += step;
            out.push(prev);
        }
        out
    }

    /// Silhouette vertices seen from `p`: (most clockwise, most counter-clockwise).
    pub fn silhouette(&self, p: &Vec2) -> (Vec2, Vec2) {
        let b = self.unwrapped_bearings(p);
        let (mut lo, mut hi) = (0, 0);
        for i in 1..b.len() {
            if b[i] < b[lo] {
                lo = i;
            }
            if b[i] > b[hi] {
                hi = i;
            }
        }
        (self.vertices[lo], self.vertices[hi])
    }
}

/// Minimum distance from `p` to the outline of `obs` and an achieving point.
///
/// Ties between equally near points go to the smallest bearing angle.
pub fn dist_to_obstacle(p: &Vec2, obs: &ObstacleBoundary) -> Result<(f64, Vec2), GeometryError> {
    if obs.contains(p) {
        return Err(GeometryError::PInsideObstacle);
    }
    Ok(nearest_boundary_point(p, obs))
}

/// Same as [`dist_to_obstacle`] without the interior check.
pub(crate) fn nearest_boundary_point(p: &Vec2, obs: &ObstacleBoundary) -> (f64, Vec2) {
    let mut best_d = f64::INFINITY;
    let mut best_p = obs.vertices[0];
    for (a, b) in obs.edges() {
        let q = closest_on_segment(p, &a, &b);
        let d = (q - p).norm();
        if d < best_d - TIE_EPS {
            best_d = d;
            best_p = q;
        } else if (d - best_d).abs() <= TIE_EPS && bearing(p, &q) < bearing(p, &best_p) {
            best_p = q;
        }
    }
    (best_d, best_p)
}

/// Boundary points visible from a viewpoint, with their bearings.
#[derive(Debug, Clone, PartialEq)]
pub struct VisionSlice {
    pub points: Vec<Vec2>,
    pub angles: Vec<f64>,
}

/// Part of the outline seen from `p`, sampled by casting rays every `resolution`
/// radians across the obstacle's angular extent. Self-occluded parts are absent
/// because only the first hit along each ray is kept.
pub fn visible_boundary(
    p: &Vec2,
    obs: &ObstacleBoundary,
    resolution: f64,
) -> Result<VisionSlice, GeometryError> {
    if obs.contains(p) {
        return Err(GeometryError::PInsideObstacle);
    }
    let reference = bearing(p, &obs.mass_center);
    let rel = obs.unwrapped_bearings(p);
    let lo = rel.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let steps = ((hi - lo) / resolution.max(1e-9)).ceil().max(1.0) as usize;
    let mut slice = VisionSlice { points: Vec::new(), angles: Vec::new() };
    for k in 0..=steps {
        let rel_angle = (lo + (hi - lo) * k as f64 / steps as f64).clamp(lo, hi);
        // pull the extreme rays slightly inward so grazing silhouettes still register
        let eps = if k == 0 {
            1e-10
        } else if k == steps {
            -1e-10
        } else {
            0.0
        };
        let a = reference + rel_angle + eps;
        let dir = Vec2::new(a.cos(), a.sin());
        if let Some(hit) = obs.ray_hit(p, &dir) {
            slice.points.push(hit);
            slice.angles.push(normalize_angle(a));
        }
    }
    Ok(slice)
}

/// The two tangent lines from a point to a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentPair {
    pub angle1: f64,
    pub angle2: f64,
    pub touch_point1: Vec2,
    pub touch_point2: Vec2,
}

impl TangentPair {
    /// Length of the tangent segment from the query point to either touch point.
    pub fn length(&self, from: &Vec2) -> f64 {
        (self.touch_point1 - from).norm()
    }
}

/// Tangent directions from `p` to the circle (`center`, `radius`), sorted so that
/// `angle1 <= angle2` in (-pi, pi].
pub fn tangents_to_circle(p: &Vec2, center: &Vec2, radius: f64) -> Result<TangentPair, GeometryError> {
    let d = (center - p).norm();
    if radius < 0.0 || d <= radius {
        return Err(GeometryError::InsideCircle);
    }
    let b = bearing(p, center);
    if radius == 0.0 {
        return Ok(TangentPair { angle1: b, angle2: b, touch_point1: *center, touch_point2: *center });
    }
    let half = (radius / d).asin();
    let len = (d * d - radius * radius).sqrt();
    let touch = |a: f64| p + Vec2::new(a.cos(), a.sin()) * len;
    let (a1, a2) = (normalize_angle(b - half), normalize_angle(b + half));
    let (a1, a2) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
    Ok(TangentPair { angle1: a1, angle2: a2, touch_point1: touch(a1), touch_point2: touch(a2) })
}

/// Distance from `c` to the infinite line through `p` with direction angle `angle`.
pub fn line_distance(p: &Vec2, angle: f64, c: &Vec2) -> f64 {
    let dir = Vec2::new(angle.cos(), angle.sin());
    cross2(&dir, &(c - p)).abs()
}
