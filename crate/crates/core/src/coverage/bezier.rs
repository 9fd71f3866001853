//! Closed tours smoothed into chains of cubic Bézier segments.

use super::CoverageError;
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const CURVATURE_SAMPLES: usize = 64;
const MAX_ADJUSTMENTS: usize = 20;
const HANDLE_GROWTH: f64 = 1.2;
/// Handles longer than this fraction of the leg start to fold the segment.
const MAX_HANDLE_FRACTION: f64 = 0.6;

// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] =
    [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
const GL_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BezierSegment {
    pub b0: Vec3,
    pub b1: Vec3,
    pub b2: Vec3,
    pub b3: Vec3,
}

impl BezierSegment {
    pub fn point(&self, t: f64) -> Vec3 {
        let s = 1.0 - t;
        self.b0 * (s * s * s) + self.b1 * (3.0 * t * s * s) + self.b2 * (3.0 * t * t * s) + self.b3 * (t * t * t)
    }

    pub fn derivative(&self, t: f64) -> Vec3 {
        let s = 1.0 - t;
        (self.b1 - self.b0) * (3.0 * s * s) + (self.b2 - self.b1) * (6.0 * s * t) + (self.b3 - self.b2) * (3.0 * t * t)
    }

    pub fn second_derivative(&self, t: f64) -> Vec3 {
        (self.b2 - self.b1 * 2.0 + self.b0) * (6.0 * (1.0 - t)) + (self.b3 - self.b2 * 2.0 + self.b1) * (6.0 * t)
    }

    /// Zero where the speed vanishes.
    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.derivative(t);
        let speed = d1.norm();
        if speed < 1e-12 {
            return 0.0;
        }
        d1.cross(&self.second_derivative(t)).norm() / (speed * speed * speed)
    }

    /// Smallest sampled radius of curvature, with the parameter where it occurs.
    pub fn min_radius(&self) -> (f64, f64) {
        (0..=CURVATURE_SAMPLES)
            .map(|k| {
                let t = k as f64 / CURVATURE_SAMPLES as f64;
                let kappa = self.curvature(t);
                (if kappa > 0.0 { 1.0 / kappa } else { f64::INFINITY }, t)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("samples")
    }

    pub fn length(&self) -> f64 {
        let h = 1.0 / GL_PANELS as f64;
        (0..GL_PANELS)
            .map(|p| {
                let mid = (p as f64 + 0.5) * h;
                GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * self.derivative(mid + 0.5 * h * x).norm()).sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothPath {
    pub segments: Vec<BezierSegment>,
    pub closed: bool,
    /// Original waypoints in visiting order.
    pub waypoints: Vec<Vec3>,
    /// Where the path actually passes, each within `delta` of its waypoint.
    pub visit_points: Vec<Vec3>,
    pub delta: f64,
}

impl SmoothPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(BezierSegment::length).sum()
    }

    /// Point at global parameter `t ∈ [0, segments]`.
    pub fn point(&self, t: f64) -> Vec3 {
        let n = self.segments.len();
        let k = (t.floor().max(0.0) as usize).min(n - 1);
        self.segments[k].point(t - k as f64)
    }

    /// Samples at global parameter step `step` (per-segment parameter units),
    /// always including the final endpoint.
    pub fn sample(&self, step: f64) -> Vec<(f64, Vec3)> {
        let end = self.segments.len() as f64;
        let count = (end / step).ceil().max(1.0) as usize;
        (0..=count).map(|k| k as f64 * end / count as f64).map(|t| (t, self.point(t))).collect()
    }

    /// CSV `t,x,y,z` with a header line.
    pub fn to_csv(&self, step: f64) -> String {
        let mut out = String::from("t,x,y,z\n");
        for (t, p) in self.sample(step) {
            let _ = writeln!(out, "{t},{},{},{}", p.x, p.y, p.z);
        }
        out
    }

    /// Largest endpoint gap and largest unit-tangent mismatch over all joins,
    /// including the closing join of a closed path.
    pub fn join_residuals(&self) -> (f64, f64) {
        let n = self.segments.len();
        let joins = if self.closed { n } else { n.saturating_sub(1) };
        let mut c0: f64 = 0.0;
        let mut c1: f64 = 0.0;
        for k in 0..joins {
            let (a, b) = (&self.segments[k], &self.segments[(k + 1) % n]);
            c0 = c0.max((a.b3 - b.b0).norm());
            let (ta, tb) = (a.derivative(1.0), b.derivative(0.0));
            if ta.norm() > 0.0 && tb.norm() > 0.0 {
                c1 = c1.max((ta.normalize() - tb.normalize()).norm());
            }
        }
        (c0, c1)
    }

    pub fn min_turn_radius(&self) -> f64 {
        self.segments.iter().map(|s| s.min_radius().0).fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the nearest of `per_segment` samples per segment.
    pub fn distance_to(&self, p: &Vec3, per_segment: usize) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| (0..=per_segment).map(move |k| s.point(k as f64 / per_segment as f64)))
            .map(|q| (q - p).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

fn unit_or(v: Vec3, fallback: Vec3) -> Vec3 {
    if v.norm() > 1e-12 {
        v.normalize()
    } else {
        fallback
    }
}

/// Cut each corner by moving the waypoint along its inward bisector, by at most
/// `delta` and by at most half its distance to the chord joining its neighbours.
fn visit_points(points: &[Vec3], delta: f64) -> Vec<Vec3> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let p = points[i];
            let (prev, next) = (points[(i + n - 1) % n], points[(i + 1) % n]);
            let (a, b) = (prev - p, next - p);
            if delta == 0.0 || a.norm() < 1e-12 || b.norm() < 1e-12 {
                return p;
            }
            let bisector = a.normalize() + b.normalize();
            if bisector.norm() < 1e-9 {
                return p;
            }
            let chord = next - prev;
            let to_chord = if chord.norm() < 1e-12 {
                a.norm()
            } else {
                let s = ((p - prev).dot(&chord) / chord.norm_squared()).clamp(0.0, 1.0);
                (prev + chord * s - p).norm()
            };
            p + bisector.normalize() * delta.min(0.5 * to_chord)
        })
        .collect()
}

/// Tangent direction at each visit point of the closed loop. A zero vector
/// marks a point where the tour doubles back along a line; its handles
/// collapse so the legs on either side stay straight.
fn tangents(v: &[Vec3]) -> Vec<Vec3> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (prev, next) = (v[(i + n - 1) % n], v[(i + 1) % n]);
            let (a, b) = (prev - v[i], next - v[i]);
            let chord = next - prev;
            if chord.norm() < 1e-12 {
                // there-and-back loops have no chord; turn sideways in the horizontal plane
                return unit_or(Vec3::z().cross(&b), Vec3::x());
            }
            if a.norm() > 1e-12 && b.norm() > 1e-12 && a.normalize().dot(&b.normalize()) > 1.0 - 1e-12 {
                return Vec3::zeros();
            }
            chord.normalize()
        })
        .collect()
}

fn build(v: &[Vec3], t: &[Vec3], scale: &[(f64, f64)]) -> Vec<BezierSegment> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let leg = (v[j] - v[i]).norm();
            BezierSegment { b0: v[i], b1: v[i] + t[i] * (leg * scale[i].0), b2: v[j] - t[j] * (leg * scale[i].1), b3: v[j] }
        })
        .collect()
}

/// One cubic per leg of the closed tour `points`, with C1 joins at the visit
/// points. Handle lengths start at a third of the leg and grow on segments
/// whose sampled turn radius falls below `min_turn_radius`.
pub fn smooth_tour(points: &[Vec3], delta: f64, min_turn_radius: f64) -> Result<SmoothPath, CoverageError> {
    if points.len() < 2 {
        return Err(CoverageError::InvalidParameter("a tour needs at least 2 waypoints".into()));
    }
    if !(delta >= 0.0) || !(min_turn_radius >= 0.0) {
        return Err(CoverageError::InvalidParameter("delta and minimum turn radius must be non-negative".into()));
    }
    let v = visit_points(points, delta);
    let t = tangents(&v);
    let mut scale = vec![(1.0 / 3.0, 1.0 / 3.0); v.len()];
    let mut segments = build(&v, &t, &scale);
    for _ in 0..MAX_ADJUSTMENTS {
        let mut changed = false;
        for (k, seg) in segments.iter().enumerate() {
            if seg.min_radius().0 < min_turn_radius {
                let (a, b) = scale[k];
                scale[k] = ((a * HANDLE_GROWTH).min(MAX_HANDLE_FRACTION), (b * HANDLE_GROWTH).min(MAX_HANDLE_FRACTION));
                changed |= scale[k] != (a, b);
            }
        }
        if !changed {
            break;
        }
        segments = build(&v, &t, &scale);
    }
    if let Some((k, r)) = segments
        .iter()
        .enumerate()
        .map(|(k, s)| (k, s.min_radius().0))
        .find(|(_, r)| *r < min_turn_radius)
    {
        return Err(CoverageError::InfeasibleCurvature { segment: k, radius: r, required: min_turn_radius });
    }
    Ok(SmoothPath { segments, closed: true, waypoints: points.to_vec(), visit_points: v, delta })
}
