//! Scenario files and their expansion into replayable per-step obstacle tracks.

use super::SimError;
use crate::amaps::AmapsConfig;
use crate::geometry::{nearest_boundary_point, rotate, ObstacleBoundary, Vec2, Vec3};
use crate::kinematics::RobotCaps;
use crate::planner2d::{check_motion_constraints, MotionConstraint, MotionSample, PlannerConfig2d};
use crate::planner3d::{fibonacci_sphere, PlannerConfig3d};
use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::Path;

/// Largest relative change of any boundary point's distance to the mass
/// center between consecutive steps.
pub const MAX_DEFORMATION_RATE: f64 = 0.10;
const DEFAULT_SURFACE_SAMPLES: usize = 400;
const DEFAULT_ELLIPSE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    /// Speed and turn-rate navigation law (2D unicycle or 3D vehicle).
    #[default]
    Reactive,
    /// Occupancy-count grid for deforming obstacles with a waypoint-driven vehicle.
    Amaps,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    pub reactive2d: PlannerConfig2d,
    pub reactive3d: PlannerConfig3d,
    pub amaps: AmapsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dimension: u8,
    #[serde(default)]
    pub planner: PlannerKind,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    /// Initial heading direction; defaults to the direction of the goal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<Vec<f64>>,
    pub caps: RobotCaps,
    pub dt: f64,
    /// Step budget; defaults to ten times the straight-line travel time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub planner_config: PlannerSettings,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub shape: ShapeSpec,
    #[serde(default)]
    pub motion: MotionSpec,
    #[serde(default)]
    pub deformation: DeformationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass_center: Option<[f64; 2]>,
    },
    Regular {
        center: [f64; 2],
        radius: f64,
        sides: usize,
        #[serde(default)]
        phase: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default = "default_ellipse_points")]
        points: usize,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_surface_samples")]
        samples: usize,
    },
    Ellipsoid {
        center: [f64; 3],
        radii: [f64; 3],
        #[serde(default = "default_surface_samples")]
        samples: usize,
    },
}

fn default_ellipse_points() -> usize {
    DEFAULT_ELLIPSE_POINTS
}

fn default_surface_samples() -> usize {
    DEFAULT_SURFACE_SAMPLES
}

/// Angular velocity: a scalar in the plane, a rotation vector in space (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spin {
    Planar(f64),
    Spatial([f64; 3]),
}

impl Default for Spin {
    fn default() -> Self {
        Spin::Planar(0.0)
    }
}

impl Spin {
    fn vector(&self) -> Vec3 {
        match self {
            Spin::Planar(w) => Vec3::new(0.0, 0.0, *w),
            Spin::Spatial(v) => Vec3::from(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSegment {
    pub steps: usize,
    pub velocity: Vec<f64>,
    #[serde(default)]
    pub angular_velocity: Spin,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    #[default]
    Static,
    Constant {
        velocity: Vec<f64>,
        #[serde(default)]
        angular_velocity: Spin,
    },
    /// Segments run in order; the last one holds once the others are used up.
    Piecewise { segments: Vec<MotionSegment> },
    /// `velocity + amplitude · sin(2π t / period)` per component.
    Sinusoid {
        velocity: Vec<f64>,
        amplitude: Vec<f64>,
        period: f64,
        #[serde(default)]
        angular_velocity: Spin,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeformationSpec {
    #[default]
    None,
    /// Stretch along a body axis while squeezing across it, periodically.
    Pulse {
        amplitude: f64,
        /// Steps per cycle.
        period: f64,
        #[serde(default)]
        axis: f64,
    },
    /// Independent random walks of the two axis scales, each step changing
    /// by at most `rate` and staying within `1 ± bound`.
    Random {
        rate: f64,
        bound: f64,
        #[serde(default)]
        axis: f64,
    },
    /// Explicit per-step axis scales; the last entry holds.
    Table {
        scales: Vec<[f64; 2]>,
        #[serde(default)]
        axis: f64,
    },
}

/// Which rule an obstacle script broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptConstraint {
    Motion(MotionConstraint),
    DeformationRate,
}

impl ScriptConstraint {
    pub fn describe(&self) -> &'static str {
        match self {
            ScriptConstraint::Motion(m) => m.describe(),
            ScriptConstraint::DeformationRate => "deformation rate bound (radial change per step <= 10%)",
        }
    }
}

impl std::fmt::Display for ScriptConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BaseShape {
    Outline(ObstacleBoundary),
    Surface { center: Vec3, radii: Vec3, samples: Vec<Vec3> },
}

/// One obstacle expanded over the whole horizon. Index `k` is the state at
/// time `k·dt`; velocities and spins at `k` act over the step `k → k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrack {
    pub id: usize,
    base: BaseShape,
    velocity: Vec<Vec3>,
    spin: Vec<Vec3>,
    offset: Vec<Vec3>,
    orientation: Vec<UnitQuaternion<f64>>,
    scale: Vec<(f64, f64)>,
    axis: f64,
}

impl ObstacleTrack {
    fn last(&self, k: usize) -> usize {
        k.min(self.offset.len() - 1)
    }

    pub fn velocity(&self, k: usize) -> Vec3 {
        self.velocity[k.min(self.velocity.len() - 1)]
    }

    pub fn spin(&self, k: usize) -> Vec3 {
        self.spin[k.min(self.spin.len() - 1)]
    }

    /// Velocities of the steps before `k`, oldest first.
    pub fn velocity_history(&self, k: usize) -> &[Vec3] {
        &self.velocity[..k.min(self.velocity.len())]
    }

    pub fn scale(&self, k: usize) -> (f64, f64) {
        self.scale[self.last(k)]
    }

    pub fn mass_center(&self, k: usize) -> Vec3 {
        let c = match &self.base {
            BaseShape::Outline(o) => Vec3::new(o.mass_center().x, o.mass_center().y, 0.0),
            BaseShape::Surface { center, .. } => *center,
        };
        c + self.offset[self.last(k)]
    }

    /// Planar outline at step `k`. Panics for spatial obstacles.
    pub fn outline(&self, k: usize) -> ObstacleBoundary {
        let BaseShape::Outline(base) = &self.base else { panic!("spatial obstacle has no outline") };
        let k = self.last(k);
        let c0 = base.mass_center();
        let c = c0 + self.offset[k].xy();
        let (sx, sy) = self.scale[k];
        let angle = self.orientation[k].scaled_axis().z;
        let vertices = base
            .vertices()
            .iter()
            .map(|v| {
                let local = rotate(&(v - c0), -self.axis);
                let stretched = rotate(&Vec2::new(local.x * sx, local.y * sy), self.axis);
                c + rotate(&stretched, angle)
            })
            .collect();
        // rigid motion and axis scaling keep the outline simple and the center inside
        ObstacleBoundary::new_unchecked(vertices, c)
    }

    /// Surface samples at step `k`. Panics for planar obstacles.
    pub fn surface(&self, k: usize) -> Vec<Vec3> {
        let BaseShape::Surface { center, samples, .. } = &self.base else { panic!("planar obstacle has no surface") };
        let k = self.last(k);
        let (q, c) = (self.orientation[k], center + self.offset[k]);
        samples.iter().map(|s| c + q * (s - center)).collect()
    }

    pub fn is_planar(&self) -> bool {
        matches!(self.base, BaseShape::Outline(_))
    }

    /// Signed clearance from `p` to the obstacle at step `k`: the distance to
    /// the boundary outside, its negation inside.
    pub fn clearance(&self, p: &Vec3, k: usize) -> f64 {
        match &self.base {
            BaseShape::Outline(_) => {
                let o = self.outline(k);
                let (d, _) = nearest_boundary_point(&p.xy(), &o);
                if o.contains(&p.xy()) {
                    -d
                } else {
                    d
                }
            }
            BaseShape::Surface { center, radii, .. } => {
                let kk = self.last(k);
                let c = center + self.offset[kk];
                let local = self.orientation[kk].inverse() * (p - c);
                if radii.x == radii.y && radii.y == radii.z {
                    return local.norm() - radii.x;
                }
                let inside = (local.x / radii.x).powi(2) + (local.y / radii.y).powi(2) + (local.z / radii.z).powi(2) < 1.0;
                let d = self.surface(k).iter().map(|s| (s - p).norm()).fold(f64::INFINITY, f64::min);
                if inside {
                    -d
                } else {
                    d
                }
            }
        }
    }
}

/// A validated scenario with its obstacle tracks expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledScenario {
    pub scenario: Scenario,
    pub start: Vec3,
    pub goal: Vec3,
    pub heading: Vec3,
    pub horizon: usize,
    pub tracks: Vec<ObstacleTrack>,
}

fn field(name: &str, message: impl Into<String>) -> SimError {
    SimError::InvalidField { field: name.to_string(), message: message.into() }
}

fn vector(name: &str, v: &[f64], dim: u8) -> Result<Vec3, SimError> {
    if v.len() != dim as usize {
        return Err(field(name, format!("expected {dim} components, found {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(field(name, "components must be finite"));
    }
    Ok(Vec3::new(v[0], v[1], if dim == 3 { v[2] } else { 0.0 }))
}

fn spin_vector(name: &str, s: &Spin, dim: u8) -> Result<Vec3, SimError> {
    match (s, dim) {
        (Spin::Planar(_), 2) | (Spin::Spatial(_), 3) => Ok(s.vector()),
        (Spin::Planar(w), 3) if *w == 0.0 => Ok(Vec3::zeros()),
        _ => Err(field(name, format!("angular velocity must be {}", if dim == 2 { "a number" } else { "a 3-vector" }))),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn goal_tolerance(&self) -> f64 {
        match (self.planner, self.dimension) {
            (PlannerKind::Amaps, _) => self.planner_config.amaps.goal_tolerance,
            (_, 3) => self.planner_config.reactive3d.goal_tolerance,
            _ => self.planner_config.reactive2d.goal_tolerance,
        }
    }

    /// Validates every field and obstacle script and expands the scripts into
    /// per-step tracks.
    pub fn compile(&self) -> Result<CompiledScenario, SimError> {
        let dim = self.dimension;
        if dim != 2 && dim != 3 {
            return Err(field("dimension", format!("must be 2 or 3, got {dim}")));
        }
        if self.planner == PlannerKind::Amaps && dim != 2 {
            return Err(field("planner", "the grid planner is planar only"));
        }
        let start = vector("start", &self.start, dim)?;
        let goal = vector("goal", &self.goal, dim)?;
        if start == goal {
            return Err(field("goal", "start and goal coincide"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(field("dt", format!("must be positive, got {}", self.dt)));
        }
        if !self.caps.is_valid() {
            return Err(field("caps", "v_max and u_max must be positive and finite"));
        }
        match (self.planner, dim) {
            (PlannerKind::Amaps, _) => self.planner_config.amaps.validate(),
            (_, 2) => self.planner_config.reactive2d.validate(),
            _ => self.planner_config.reactive3d.validate(),
        }
        .map_err(|m| field("planner_config", m))?;
        let heading = match &self.heading {
            Some(h) => vector("heading", h, dim)?,
            None => goal - start,
        };
        if heading.norm() == 0.0 {
            return Err(field("heading", "must be non-zero"));
        }
        let horizon = match self.horizon {
            Some(0) => return Err(field("horizon", "must be at least 1")),
            Some(h) => h,
            None => (10.0 * (goal - start).norm() / (self.caps.v_max * self.dt)).ceil() as usize,
        };
        let tracks = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(id, spec)| self.expand(id, spec, horizon))
            .collect::<Result<Vec<_>, _>>()?;
        for t in &tracks {
            if t.clearance(&start, 0) <= 0.0 {
                return Err(field(&format!("obstacles[{}]", t.id), "start lies inside the obstacle"));
            }
        }
        let compiled = CompiledScenario { scenario: self.clone(), start, goal, heading: heading.normalize(), horizon, tracks };
        compiled.check_scripts()?;
        Ok(compiled)
    }

    fn expand(&self, id: usize, spec: &ObstacleSpec, horizon: usize) -> Result<ObstacleTrack, SimError> {
        let dim = self.dimension;
        let name = format!("obstacles[{id}]");
        let base = match &spec.shape {
            ShapeSpec::Polygon { vertices, mass_center } if dim == 2 => {
                let vs: Vec<Vec2> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
                let o = match mass_center {
                    Some(c) => ObstacleBoundary::new(vs, Vec2::new(c[0], c[1])),
                    None => ObstacleBoundary::from_vertices(vs),
                }
                .map_err(|e| field(&name, e.to_string()))?;
                BaseShape::Outline(o)
            }
            ShapeSpec::Regular { center, radius, sides, phase } if dim == 2 => {
                if !(*radius > 0.0) || *sides < 3 {
                    return Err(field(&name, "regular polygon needs radius > 0 and at least 3 sides"));
                }
                BaseShape::Outline(ObstacleBoundary::regular_polygon(Vec2::from(*center), *radius, *sides, *phase))
            }
            ShapeSpec::Ellipse { center, a, b, angle, points } if dim == 2 => {
                if !(*a > 0.0 && *b > 0.0) || *points < 3 {
                    return Err(field(&name, "ellipse needs positive semi-axes and at least 3 points"));
                }
                BaseShape::Outline(ObstacleBoundary::ellipse(Vec2::from(*center), *a, *b, *angle, *points))
            }
            ShapeSpec::Sphere { center, radius, samples } if dim == 3 => {
                if !(*radius > 0.0) || *samples < 4 {
                    return Err(field(&name, "sphere needs radius > 0 and at least 4 samples"));
                }
                let c = Vec3::from(*center);
                BaseShape::Surface { center: c, radii: Vec3::repeat(*radius), samples: fibonacci_sphere(&c, *radius, *samples) }
            }
            ShapeSpec::Ellipsoid { center, radii, samples } if dim == 3 => {
                let r = Vec3::from(*radii);
                if r.iter().any(|x| !(*x > 0.0)) || *samples < 4 {
                    return Err(field(&name, "ellipsoid needs positive radii and at least 4 samples"));
                }
                let c = Vec3::from(*center);
                let samples = fibonacci_sphere(&Vec3::zeros(), 1.0, *samples)
                    .into_iter()
                    .map(|u| c + u.component_mul(&r))
                    .collect();
                BaseShape::Surface { center: c, radii: r, samples }
            }
            _ => return Err(field(&name, format!("shape does not fit a {dim}D scenario"))),
        };

        let (velocity, spin) = self.motion_table(&name, &spec.motion, horizon)?;
        if !matches!(spec.deformation, DeformationSpec::None) && dim != 2 {
            return Err(field(&name, "deformation is planar only"));
        }
        let (scale, axis) = self.deformation_table(&name, id, &spec.deformation, horizon)?;

        let mut offset = Vec::with_capacity(horizon + 1);
        let mut orientation = Vec::with_capacity(horizon + 1);
        offset.push(Vec3::zeros());
        orientation.push(UnitQuaternion::identity());
        for k in 0..horizon {
            offset.push(offset[k] + velocity[k] * self.dt);
            orientation.push(UnitQuaternion::from_scaled_axis(spin[k] * self.dt) * orientation[k]);
        }
        if dim == 2 {
            // keep planar orientation an exact angle about z
            let mut angle = 0.0;
            for k in 0..horizon {
                angle += spin[k].z * self.dt;
                orientation[k + 1] = UnitQuaternion::from_scaled_axis(Vec3::new(0.0, 0.0, angle));
            }
        }
        Ok(ObstacleTrack { id, base, velocity, spin, offset, orientation, scale, axis })
    }

    fn motion_table(&self, name: &str, m: &MotionSpec, horizon: usize) -> Result<(Vec<Vec3>, Vec<Vec3>), SimError> {
        let dim = self.dimension;
        let mut velocity = Vec::with_capacity(horizon);
        let mut spin = Vec::with_capacity(horizon);
        match m {
            MotionSpec::Static => {
                velocity.resize(horizon, Vec3::zeros());
                spin.resize(horizon, Vec3::zeros());
            }
            MotionSpec::Constant { velocity: v, angular_velocity } => {
                velocity.resize(horizon, vector(name, v, dim)?);
                spin.resize(horizon, spin_vector(name, angular_velocity, dim)?);
            }
            MotionSpec::Piecewise { segments } => {
                if segments.is_empty() {
                    return Err(field(name, "piecewise motion needs at least one segment"));
                }
                for s in segments {
                    let (v, w) = (vector(name, &s.velocity, dim)?, spin_vector(name, &s.angular_velocity, dim)?);
                    for _ in 0..s.steps.min(horizon - velocity.len()) {
                        velocity.push(v);
                        spin.push(w);
                    }
                }
                let last = segments.last().expect("non-empty");
                let (v, w) = (vector(name, &last.velocity, dim)?, spin_vector(name, &last.angular_velocity, dim)?);
                velocity.resize(horizon, v);
                spin.resize(horizon, w);
            }
            MotionSpec::Sinusoid { velocity: v, amplitude, period, angular_velocity } => {
                if !(*period > 0.0) {
                    return Err(field(name, "sinusoid period must be positive"));
                }
                let (v, a, w) = (vector(name, v, dim)?, vector(name, amplitude, dim)?, spin_vector(name, angular_velocity, dim)?);
                for k in 0..horizon {
                    velocity.push(v + a * (TAU * k as f64 * self.dt / period).sin());
                    spin.push(w);
                }
            }
        }
        Ok((velocity, spin))
    }

    fn deformation_table(
        &self,
        name: &str,
        id: usize,
        d: &DeformationSpec,
        horizon: usize,
    ) -> Result<(Vec<(f64, f64)>, f64), SimError> {
        let n = horizon + 1;
        let (scale, axis) = match d {
            DeformationSpec::None => (vec![(1.0, 1.0); n], 0.0),
            DeformationSpec::Pulse { amplitude, period, axis } => {
                if !(*period > 0.0) || !(0.0..1.0).contains(amplitude) {
                    return Err(field(name, "pulse needs period > 0 and amplitude in [0, 1)"));
                }
                let s = (0..n)
                    .map(|k| {
                        let p = amplitude * (TAU * k as f64 / period).sin();
                        (1.0 + p, 1.0 - p)
                    })
                    .collect();
                (s, *axis)
            }
            DeformationSpec::Random { rate, bound, axis } => {
                if !(*rate >= 0.0) || !(0.0..1.0).contains(bound) {
                    return Err(field(name, "random deformation needs rate >= 0 and bound in [0, 1)"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let (lo, hi) = (1.0 - bound, 1.0 + bound);
                let mut s = vec![(1.0, 1.0)];
                for _ in 1..n {
                    let (x, y) = *s.last().expect("seeded");
                    let mut walk = |v: f64| {
                        let f = if *rate > 0.0 { rng.random_range(-rate..=*rate) } else { 0.0 };
                        (v * (1.0 + f)).clamp(lo, hi)
                    };
                    let nx = walk(x);
                    let ny = walk(y);
                    s.push((nx, ny));
                }
                (s, *axis)
            }
            DeformationSpec::Table { scales, axis } => {
                if scales.is_empty() || scales.iter().flatten().any(|v| !(*v > 0.0)) {
                    return Err(field(name, "deformation table needs positive scales"));
                }
                let mut s: Vec<(f64, f64)> = scales.iter().take(n).map(|v| (v[0], v[1])).collect();
                let last = *s.last().expect("non-empty");
                s.resize(n, last);
                (s, *axis)
            }
        };
        Ok((scale, axis))
    }
}

impl CompiledScenario {
    pub fn dimension(&self) -> u8 {
        self.scenario.dimension
    }

    pub fn dt(&self) -> f64 {
        self.scenario.dt
    }

    fn violation(obstacle: usize, step: usize, constraint: ScriptConstraint, value: f64, limit: f64) -> SimError {
        SimError::ConstraintViolation { obstacle, step, constraint, value, limit }
    }

    /// Motion bounds (planar: speed, turn rate and rotation excursion; spatial:
    /// speed and turn rate) and the deformation rate, for every step.
    fn check_scripts(&self) -> Result<(), SimError> {
        let caps = &self.scenario.caps;
        let dt = self.dt();
        for t in &self.tracks {
            for k in 0..self.horizon {
                let (a, b) = (t.scale(k), t.scale(k + 1));
                let rate = ((b.0 / a.0) - 1.0).abs().max(((b.1 / a.1) - 1.0).abs());
                if rate > MAX_DEFORMATION_RATE + 1e-12 {
                    return Err(Self::violation(t.id, k, ScriptConstraint::DeformationRate, rate, MAX_DEFORMATION_RATE));
                }
            }
            if t.is_planar() {
                // excursion depends only on the deformed shape, the turn and the speed,
                // so identical steps share one evaluation
                let mut seen: HashMap<[u64; 4], ()> = HashMap::new();
                for k in 0..self.horizon {
                    let (v, w, s) = (t.velocity(k), t.spin(k).z, t.scale(k));
                    let key = [v.norm().to_bits(), w.to_bits(), s.0.to_bits(), s.1.to_bits()];
                    if seen.insert(key, ()).is_some() {
                        continue;
                    }
                    let outline = t.outline(k);
                    let sample = MotionSample { boundary: &outline, velocity: v.xy(), angular_velocity: w };
                    let report = check_motion_constraints(&[sample], caps, dt);
                    if let Some(v) = report.violations.first() {
                        return Err(Self::violation(t.id, k, ScriptConstraint::Motion(v.constraint), v.value, v.limit));
                    }
                }
            } else {
                for k in 0..self.horizon {
                    let (v, w) = (t.velocity(k).norm(), t.spin(k).norm());
                    if v >= caps.v_max {
                        return Err(Self::violation(t.id, k, ScriptConstraint::Motion(MotionConstraint::SpeedBound), v, caps.v_max));
                    }
                    if w >= caps.u_max {
                        return Err(Self::violation(t.id, k, ScriptConstraint::Motion(MotionConstraint::TurnRateBound), w, caps.u_max));
                    }
                }
            }
        }
        Ok(())
    }
}
