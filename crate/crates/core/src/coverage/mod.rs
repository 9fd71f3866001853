//! Two-phase reconnaissance planning for camera-carrying UAVs: waypoints on an
//! equilateral triangular lattice so the cone-shaped field of view covers a
//! region, then clustered tours smoothed into closed cubic Bézier loops.

pub mod bezier;
pub mod safety;
pub mod spec;
pub mod tour;
pub mod triangulation;

use crate::geometry::{GeometryError, ObstacleBoundary, Vec2, Vec3};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub use bezier::{smooth_tour, BezierSegment, SmoothPath};
pub use safety::{check_safety_margins, MarginReport, MarginViolation};
pub use spec::RegionSpec;
pub use tour::{cluster_waypoints, nearest_neighbor_tour, spiral_alternating_tour, tour_length, two_opt};
pub use triangulation::{
    check_full_coverage, lattice_side, minimal_triangulation, sample_region, sole_coverage_counts, triangulate_region,
    CoverageCheck,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("region yields no waypoints")]
    EmptyRegion,
    #[error("cluster count {k} is outside 1..={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("curvature constraint not met on segment {segment} (radius {radius} < {required})")]
    InfeasibleCurvature { segment: usize, radius: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Ground elevation sampled on a regular grid, bilinear in between and
/// clamped at the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heightmap {
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `ny` rows of `nx` values.
    pub z: Vec<f64>,
}

impl Heightmap {
    pub fn flat(origin: Vec2, cell: f64, nx: usize, ny: usize, z: f64) -> Self {
        Self { origin, cell, nx, ny, z: vec![z; nx * ny] }
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        if !(self.cell > 0.0) || self.nx < 2 || self.ny < 2 || self.z.len() != self.nx * self.ny {
            return Err(CoverageError::InvalidParameter("heightmap needs cell > 0, at least 2×2 samples".into()));
        }
        Ok(())
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.z[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, z: f64) {
        self.z[j * self.nx + i] = z;
    }

    pub fn covers(&self, lo: &Vec2, hi: &Vec2) -> bool {
        let max = self.origin + Vec2::new((self.nx - 1) as f64, (self.ny - 1) as f64) * self.cell;
        lo.x >= self.origin.x && lo.y >= self.origin.y && hi.x <= max.x && hi.y <= max.y
    }

    pub fn elevation(&self, p: &Vec2) -> f64 {
        let u = ((p.x - self.origin.x) / self.cell).clamp(0.0, (self.nx - 1) as f64);
        let v = ((p.y - self.origin.y) / self.cell).clamp(0.0, (self.ny - 1) as f64);
        let (i, j) = ((u.floor() as usize).min(self.nx - 2), (v.floor() as usize).min(self.ny - 2));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let z00 = self.at(i, j);
        let z10 = self.at(i + 1, j);
        let z01 = self.at(i, j + 1);
        let z11 = self.at(i + 1, j + 1);
        z00 * (1.0 - fu) * (1.0 - fv) + z10 * fu * (1.0 - fv) + z01 * (1.0 - fu) * fv + z11 * fu * fv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub outline: ObstacleBoundary,
    pub heightmap: Option<Heightmap>,
}

impl Region {
    pub fn new(outline: ObstacleBoundary, heightmap: Option<Heightmap>) -> Result<Self, CoverageError> {
        if let Some(h) = &heightmap {
            h.validate()?;
            let (lo, hi) = outline.bounding_box();
            if !h.covers(&lo, &hi) {
                return Err(CoverageError::InvalidParameter("heightmap does not cover the region".into()));
            }
        }
        Ok(Self { outline, heightmap })
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        let outline = ObstacleBoundary::from_vertices(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(width, 0.0),
            Vec2::new(width, height),
            Vec2::new(0.0, height),
        ])
        .expect("rectangle is simple");
        Self { outline, heightmap: None }
    }

    pub fn ground(&self, p: &Vec2) -> f64 {
        self.heightmap.as_ref().map_or(0.0, |h| h.elevation(p))
    }
}

/// Downward cone-shaped camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovSpec {
    /// Full apex angle (rad).
    pub theta: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl FovSpec {
    pub fn new(theta: f64, z_min: f64, z_max: f64) -> Result<Self, CoverageError> {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(CoverageError::InvalidParameter(format!("apex angle {theta} must lie in (0, π)")));
        }
        if !(0.0 <= z_min && z_min <= z_max) {
            return Err(CoverageError::InvalidParameter(format!("altitude range [{z_min}, {z_max}] is empty")));
        }
        Ok(Self { theta, z_min, z_max })
    }

    /// Ground radius seen from altitude `z`.
    pub fn radius_at(&self, z: f64) -> f64 {
        z * (self.theta / 2.0).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Altitude {
    pub z: f64,
    /// Ground radius actually seen from `z`.
    pub radius: f64,
    pub clipped: bool,
}

/// Altitude at which the field of view covers radius `r`, kept inside the
/// permitted altitude band.
pub fn altitude_for_radius(r: f64, fov: &FovSpec) -> Result<Altitude, CoverageError> {
    if !(r > 0.0) {
        return Err(CoverageError::InvalidParameter(format!("radius {r} must be positive")));
    }
    let z = r / (fov.theta / 2.0).tan();
    let clamped = z.clamp(fov.z_min, fov.z_max);
    if clamped == z {
        Ok(Altitude { z, radius: r, clipped: false })
    } else {
        Ok(Altitude { z: clamped, radius: fov.radius_at(clamped), clipped: true })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Lattice rotation, in [0, π/3).
    pub lambda: f64,
    pub x0: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    pub points: Vec<Vec3>,
    pub coverage_radius: f64,
    pub lattice: LatticeParams,
}

impl WaypointSet {
    pub fn planar(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.xy()).collect()
    }

    pub fn without(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.points.remove(index);
        out
    }

    /// CSV `x,y,z` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePlan {
    pub waypoints: WaypointSet,
    pub altitude: Altitude,
    /// Waypoint indices per cluster, in visiting order.
    pub tours: Vec<Vec<usize>>,
    pub paths: Vec<SmoothPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub clusters: usize,
    /// Visit tolerance around each waypoint; defaults to a quarter of the radius.
    pub delta: Option<f64>,
    pub min_turn_radius: f64,
    pub seed: u64,
    /// Search lattice rotation and anchor for the fewest waypoints.
    pub search: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self { clusters: 1, delta: None, min_turn_radius: 0.0, seed: 0, search: false }
    }
}

/// Both phases: lattice waypoints, then one smoothed closed tour per cluster.
pub fn plan_coverage(region: &Region, fov: &FovSpec, radius: f64, cfg: &PlanConfig) -> Result<CoveragePlan, CoverageError> {
    let altitude = altitude_for_radius(radius, fov)?;
    let ws = if cfg.search {
        minimal_triangulation(region, altitude.radius, altitude.z)?
    } else {
        triangulate_region(region, altitude.radius, LatticeParams { lambda: 0.0, x0: 0.0, y0: 0.0 }, altitude.z)?
    };
    let delta = cfg.delta.unwrap_or(0.25 * altitude.radius);
    let clusters = cluster_waypoints(&ws, cfg.clusters, cfg.seed)?;
    let start = ws.points[0];
    let mut tours = Vec::new();
    let mut paths = Vec::new();
    for c in clusters {
        let pts: Vec<Vec3> = c.iter().map(|i| ws.points[*i]).collect();
        let order = two_opt(&pts, spiral_alternating_tour(&pts, &start, altitude.radius * 3f64.sqrt()));
        let visit: Vec<Vec3> = order.iter().map(|k| pts[*k]).collect();
        if visit.len() >= 2 {
            paths.push(smooth_tour(&visit, delta, cfg.min_turn_radius)?);
        }
        tours.push(order.iter().map(|k| c[*k]).collect());
    }
    Ok(CoveragePlan { waypoints: ws, altitude, tours, paths })
}
