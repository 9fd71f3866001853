//! Separation and terrain-clearance margins for a planned tour.

use super::{CoverageError, Region, SmoothPath, WaypointSet};
use serde::{Deserialize, Serialize};

const PATH_SAMPLES_PER_SEGMENT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarginViolation {
    /// Two waypoints closer than the separation margin.
    Separation { i: usize, j: usize, distance: f64 },
    /// Waypoint too close to the ground below it.
    Clearance { index: usize, clearance: f64 },
    /// A path sample dips below the clearance margin less the visit tolerance.
    PathClearance { segment: usize, t: f64, clearance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub violations: Vec<MarginViolation>,
    pub min_separation: f64,
    pub min_clearance: f64,
    pub min_path_clearance: f64,
}

impl MarginReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks pairwise waypoint separation ≥ `c1`, waypoint clearance above the
/// terrain ≥ `c2`, and path clearance ≥ `c2 − δ`. Requires `c1 > 2δ > 0` and
/// `c2 > δ > 0`, with δ taken from the path.
pub fn check_safety_margins(
    path: &SmoothPath,
    ws: &WaypointSet,
    region: &Region,
    c1: f64,
    c2: f64,
) -> Result<MarginReport, CoverageError> {
    let delta = path.delta;
    if !(delta > 0.0 && c1 > 2.0 * delta && c2 > delta) {
        return Err(CoverageError::InvalidParameter(format!(
            "margins need c1 > 2δ > 0 and c2 > δ > 0 (c1 = {c1}, c2 = {c2}, δ = {delta})"
        )));
    }
    let mut violations = Vec::new();
    let mut min_separation = f64::INFINITY;
    for i in 0..ws.points.len() {
        for j in i + 1..ws.points.len() {
            let distance = (ws.points[i] - ws.points[j]).norm();
            min_separation = min_separation.min(distance);
            if distance < c1 {
                violations.push(MarginViolation::Separation { i, j, distance });
            }
        }
    }
    let mut min_clearance = f64::INFINITY;
    for (index, p) in ws.points.iter().enumerate() {
        let clearance = p.z - region.ground(&p.xy());
        min_clearance = min_clearance.min(clearance);
        if clearance < c2 {
            violations.push(MarginViolation::Clearance { index, clearance });
        }
    }
    let mut min_path_clearance = f64::INFINITY;
    for (segment, s) in path.segments.iter().enumerate() {
        for k in 0..=PATH_SAMPLES_PER_SEGMENT {
            let t = k as f64 / PATH_SAMPLES_PER_SEGMENT as f64;
            let p = s.point(t);
            let clearance = p.z - region.ground(&p.xy());
            min_path_clearance = min_path_clearance.min(clearance);
            if clearance < c2 - delta {
                violations.push(MarginViolation::PathClearance { segment, t, clearance });
            }
        }
    }
    Ok(MarginReport { violations, min_separation, min_clearance, min_path_clearance })
}
