//! Sliding-mode navigation among moving planar obstacles.
//!
//! The robot drives straight at the target (target-approach mode) until an
//! obstacle that blocks the way comes within the switching distance. It then
//! follows a tangent of a forecast circle drawn around a point slightly ahead
//! of the nearest boundary point (obstacle-avoid mode), and returns to target
//! approach once the obstacle no longer blocks the way.

use crate::geometry::{
    angle_between, bearing, cross2, dist_to_obstacle, normalize_angle, rotate, tangents_to_circle, GeometryError,
    ObstacleBoundary, Vec2,
};
use crate::kinematics::{clamp_control2, Control2, Pose2, RobotCaps};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Angles closer than this to zero, or to each other, count as equal.
const ANGLE_EPS: f64 = 1e-12;
/// Side-angle band (rad) inside which an active avoidance keeps its side.
pub const SIDE_HYSTERESIS: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("robot is inside the forecast circle")]
    InsideForecastCircle,
    #[error("previous velocity is zero")]
    ZeroPrevVelocity,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavMode {
    TargetApproach,
    ObstacleAvoid,
}

impl NavMode {
    pub fn label(&self) -> &'static str {
        match self {
            NavMode::TargetApproach => "M1",
            NavMode::ObstacleAvoid => "M2",
        }
    }
}

/// Side tag chosen from where the obstacle's mass center lies relative to the
/// line to the target: `Positive` when it is counter-clockwise of that line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AvoidDirection {
    Positive,
    Negative,
}

impl AvoidDirection {
    pub fn sign(&self) -> f64 {
        match self {
            AvoidDirection::Positive => 1.0,
            AvoidDirection::Negative => -1.0,
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            AvoidDirection::Positive => AvoidDirection::Negative,
            AvoidDirection::Negative => AvoidDirection::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastCircle {
    pub center: Vec2,
    pub radius: f64,
}

/// Signed angle of the mass-center line measured from the target line.
pub fn side_angle(c_r: &Vec2, target: &Vec2, mass_center: &Vec2) -> Result<f64, PlannerError> {
    let to_target = target - c_r;
    let to_mass = mass_center - c_r;
    if to_target.norm() == 0.0 {
        return Err(PlannerError::DegenerateGeometry("robot is at the target"));
    }
    if to_mass.norm() == 0.0 {
        return Err(PlannerError::DegenerateGeometry("robot is at the mass center"));
    }
    Ok(angle_between(&to_mass, &to_target)?)
}

/// `None` means the obstacle is not in the way (mass center at or behind the
/// robot's side line).
pub fn decide_direction(
    c_r: &Vec2,
    target: &Vec2,
    mass_center: &Vec2,
) -> Result<Option<AvoidDirection>, PlannerError> {
    let a = side_angle(c_r, target, mass_center)?;
    Ok(if (0.0..FRAC_PI_2).contains(&a) {
        Some(AvoidDirection::Positive)
    } else if (-FRAC_PI_2..0.0).contains(&a) {
        Some(AvoidDirection::Negative)
    } else {
        None
    })
}

/// Boundary point hit by the ray toward the nearest point after rotating it by
/// `alpha0` (counter-clockwise for `Positive`). Falls back to the silhouette
/// vertex on that side when the rotated ray misses.
pub fn widened_nearest_point(
    c_r: &Vec2,
    obs: &ObstacleBoundary,
    alpha0: f64,
    dir: AvoidDirection,
) -> Result<Vec2, PlannerError> {
    let (d, r_min) = dist_to_obstacle(c_r, obs)?;
    if alpha0 == 0.0 {
        return Ok(r_min);
    }
    if d == 0.0 {
        return Err(PlannerError::Geometry(GeometryError::PInsideObstacle));
    }
    let ray = rotate(&((r_min - c_r) / d), dir.sign() * alpha0);
    if let Some(hit) = obs.ray_hit(c_r, &ray) {
        return Ok(hit);
    }
    let (cw, ccw) = obs.silhouette(c_r);
    Ok(match dir {
        AvoidDirection::Positive => ccw,
        AvoidDirection::Negative => cw,
    })
}

/// Sign law of the navigation rule: 0 at 0, +1 on (0, pi], -1 on (-pi, 0).
pub fn turn_sign(beta: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else if beta > 0.0 && beta <= PI {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastControl {
    pub control: Control2,
    pub circle: ForecastCircle,
    /// Forecast vectors along the two tangents, ordered by tangent angle.
    pub vectors: [Vec2; 2],
    /// Signed angles from each forecast vector to the previous velocity.
    pub betas: [f64; 2],
    /// Selected index, 1 or 2.
    pub j: usize,
}

impl ForecastControl {
    pub fn beta_j(&self) -> f64 {
        self.betas[self.j - 1]
    }

    pub fn l_j(&self) -> Vec2 {
        self.vectors[self.j - 1]
    }
}

/// Tangent-vector control for a forecast circle of radius `|v_obs|` around `r_star`.
pub fn forecast_control(
    c_r: &Vec2,
    v_prev: &Vec2,
    r_star: &Vec2,
    v_obs: &Vec2,
    caps: &RobotCaps,
) -> Result<ForecastControl, PlannerError> {
    forecast_control_radius(c_r, v_prev, r_star, v_obs.norm(), caps, TangentChoice::NearestHeading)
}

/// Which of the two tangents drives the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentChoice {
    /// The tangent closest to the previous velocity; ties go to index 1.
    NearestHeading,
    /// The tangent that leaves the circle on the robot's left.
    Clockwise,
    /// The tangent that leaves the circle on the robot's right.
    CounterClockwise,
}

/// As [`forecast_control`] with an explicit circle radius and tangent choice.
pub fn forecast_control_radius(
    c_r: &Vec2,
    v_prev: &Vec2,
    r_star: &Vec2,
    radius: f64,
    caps: &RobotCaps,
    choice: TangentChoice,
) -> Result<ForecastControl, PlannerError> {
    if v_prev.norm() == 0.0 {
        return Err(PlannerError::ZeroPrevVelocity);
    }
    let d = (r_star - c_r).norm();
    if d <= radius {
        return Err(PlannerError::InsideForecastCircle);
    }
    let tangents = tangents_to_circle(c_r, r_star, radius).map_err(|_| PlannerError::InsideForecastCircle)?;
    // |v| / tan(asin(|v| / d)) written without the removable singularity at |v| = 0
    let len = (d * d - radius * radius).sqrt();
    let unit = |a: f64| Vec2::new(a.cos(), a.sin());
    let vectors = [unit(tangents.angle1) * len, unit(tangents.angle2) * len];
    let beta = |l: &Vec2| -> Result<f64, PlannerError> {
        if len == 0.0 {
            return Ok(0.0);
        }
        let b = angle_between(v_prev, l)?;
        Ok(if b.abs() < ANGLE_EPS { 0.0 } else { b })
    };
    let betas = [beta(&vectors[0])?, beta(&vectors[1])?];
    let center_bearing = bearing(c_r, r_star);
    // a tangent is clockwise of the center line when the center lies to its left
    let is_clockwise = |a: f64| normalize_angle(a - center_bearing) <= 0.0;
    let j = match choice {
        TangentChoice::NearestHeading => {
            if betas[0].abs() <= betas[1].abs() + ANGLE_EPS {
                1
            } else {
                2
            }
        }
        TangentChoice::Clockwise => {
            if is_clockwise(tangents.angle1) {
                1
            } else {
                2
            }
        }
        TangentChoice::CounterClockwise => {
            if is_clockwise(tangents.angle1) {
                2
            } else {
                1
            }
        }
    };
    let b = betas[j - 1];
    let control = Control2 { v: len.min(caps.v_max), omega: -caps.u_max * turn_sign(b) };
    Ok(ForecastControl {
        control,
        circle: ForecastCircle { center: *r_star, radius },
        vectors,
        betas,
        j,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig2d {
    /// Widening angle of the look-ahead ray (rad).
    pub alpha0: f64,
    /// Obstacle distance that triggers and releases avoidance (m).
    pub switch_distance: f64,
    /// Heading error below which the robot drives at full speed (rad).
    pub align_tolerance: f64,
    pub goal_tolerance: f64,
    /// Time span the forecast circle covers (s).
    pub forecast_horizon: f64,
    /// Clearance added to the forecast circle radius (m).
    pub safety_margin: f64,
}

impl Default for PlannerConfig2d {
    fn default() -> Self {
        Self {
            alpha0: 0.2,
            switch_distance: 1.5,
            align_tolerance: 5f64.to_radians(),
            goal_tolerance: 0.1,
            forecast_horizon: 1.0,
            safety_margin: 0.25,
        }
    }
}

impl PlannerConfig2d {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= PI / 4.0) {
            return Err(format!("alpha0 must lie in (0, pi/4], got {}", self.alpha0));
        }
        if !(self.switch_distance > 0.0) {
            return Err(format!("switch_distance must be positive, got {}", self.switch_distance));
        }
        if !(self.goal_tolerance > 0.0) || !(self.align_tolerance > 0.0) {
            return Err("goal and alignment tolerances must be positive".into());
        }
        if !(self.forecast_horizon >= 0.0) || !(self.safety_margin >= 0.0) {
            return Err("forecast horizon and safety margin must be non-negative".into());
        }
        Ok(())
    }
}

/// Planner memory carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceContext {
    pub mode: NavMode,
    pub active: Option<usize>,
    pub direction: Option<AvoidDirection>,
    pub last_velocity: Vec2,
}

impl AvoidanceContext {
    pub fn new(initial_heading: f64) -> Self {
        Self {
            mode: NavMode::TargetApproach,
            active: None,
            direction: None,
            last_velocity: Vec2::new(initial_heading.cos(), initial_heading.sin()),
        }
    }
}

/// What the planner sees of one obstacle at the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleView {
    pub id: usize,
    pub boundary: ObstacleBoundary,
    pub velocity: Vec2,
    pub angular_velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavStep2d {
    pub control: Control2,
    pub mode: NavMode,
    pub context: AvoidanceContext,
    /// Obstacle being avoided in this step.
    pub active: Option<usize>,
    pub nearest: Option<usize>,
    pub dmin: f64,
    pub emergency: bool,
    pub terminal: bool,
}

/// True when the obstacle should be avoided: its mass center is ahead of the
/// robot relative to the target line, or it covers part of that line.
pub fn in_way(c_r: &Vec2, target: &Vec2, obs: &ObstacleBoundary) -> bool {
    let ahead = matches!(decide_direction(c_r, target, &obs.mass_center()), Ok(Some(_)));
    ahead || obs.segment_crosses(c_r, target)
}

/// Index into `obstacles` of the nearest obstacle within `switch_distance`
/// that is in the way, with its distance.
pub fn nearest_in_way(
    c_r: &Vec2,
    target: &Vec2,
    obstacles: &[ObstacleView],
    distances: &[f64],
    switch_distance: f64,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, o) in obstacles.iter().enumerate() {
        if distances[k] > switch_distance || !in_way(c_r, target, &o.boundary) {
            continue;
        }
        if best.is_none_or(|b| distances[k] < distances[b]) {
            best = Some(k);
        }
    }
    best
}

fn target_approach(pose: &Pose2, target: &Vec2, cfg: &PlannerConfig2d, caps: &RobotCaps, dt: f64) -> Control2 {
    let desired = bearing(&pose.position(), target);
    let err = normalize_angle(pose.theta - desired);
    let omega = -(err / dt).clamp(-caps.u_max, caps.u_max);
    let v = if err.abs() < cfg.align_tolerance { caps.v_max } else { caps.v_max * err.cos().max(0.0) };
    // do not step past the target
    let v = v.min((target - pose.position()).norm() / dt);
    clamp_control2(Control2 { v, omega }, caps)
}

/// Turn toward `away` at the highest useful rate, moving only while the
/// heading has a component along it.
fn escape(pose: &Pose2, away: &Vec2, caps: &RobotCaps, dt: f64) -> Control2 {
    let err = normalize_angle(pose.theta - away.y.atan2(away.x));
    let omega = -(err / dt).clamp(-caps.u_max, caps.u_max);
    clamp_control2(Control2 { v: caps.v_max * err.cos().max(0.0), omega }, caps)
}

/// One planner step. `dt` is the control period used to keep discrete turns
/// from overshooting the commanded direction.
pub fn navigate_step2d(
    pose: &Pose2,
    target: &Vec2,
    obstacles: &[ObstacleView],
    cfg: &PlannerConfig2d,
    ctx: &AvoidanceContext,
    caps: &RobotCaps,
    dt: f64,
) -> Result<NavStep2d, PlannerError> {
    let c_r = pose.position();
    let mut distances = Vec::with_capacity(obstacles.len());
    let mut nearest_points = Vec::with_capacity(obstacles.len());
    for o in obstacles {
        let (d, p) = dist_to_obstacle(&c_r, &o.boundary)?;
        distances.push(d);
        nearest_points.push(p);
    }
    let nearest = (0..obstacles.len()).min_by(|a, b| distances[*a].total_cmp(&distances[*b]));
    let dmin = nearest.map_or(f64::INFINITY, |k| distances[k]);
    let nearest_id = nearest.map(|k| obstacles[k].id);

    let heading = pose.heading();
    let mut next = *ctx;
    let done = |control: Control2, next: AvoidanceContext, active, emergency, terminal| NavStep2d {
        control,
        mode: next.mode,
        context: next,
        active,
        nearest: nearest_id,
        dmin,
        emergency,
        terminal,
    };

    if (target - c_r).norm() <= cfg.goal_tolerance {
        next.mode = NavMode::TargetApproach;
        next.active = None;
        next.direction = None;
        return Ok(done(Control2::stop(), next, None, false, true));
    }

    let Some(k) = nearest_in_way(&c_r, target, obstacles, &distances, cfg.switch_distance) else {
        let control = target_approach(pose, target, cfg, caps, dt);
        next.mode = NavMode::TargetApproach;
        next.active = None;
        next.direction = None;
        next.last_velocity = heading * control.v.max(f64::MIN_POSITIVE);
        return Ok(done(control, next, None, false, false));
    };

    let obs = &obstacles[k];
    let a = side_angle(&c_r, target, &obs.boundary.mass_center())?;
    let fresh = if a >= 0.0 { AvoidDirection::Positive } else { AvoidDirection::Negative };
    // keep the side while the mass center stays near the target line; switch once it has clearly crossed
    let direction = match (ctx.active, ctx.direction) {
        (Some(id), Some(dir)) if id == obs.id && ctx.mode == NavMode::ObstacleAvoid && a.abs() <= SIDE_HYSTERESIS => dir,
        _ => fresh,
    };
    next.mode = NavMode::ObstacleAvoid;
    next.active = Some(obs.id);
    next.direction = Some(direction);

    // the robot passes on the side away from the mass center, so the look-ahead
    // ray turns against the side tag
    let r_star = widened_nearest_point(&c_r, &obs.boundary, cfg.alpha0, direction.flipped())?;
    let radius = obs.velocity.norm() * cfg.forecast_horizon + cfg.safety_margin;
    let v_prev = if ctx.last_velocity.norm() > 0.0 { ctx.last_velocity } else { heading };

    // keep the obstacle on the side away from its mass center
    let choice = match direction {
        AvoidDirection::Positive => TangentChoice::Clockwise,
        AvoidDirection::Negative => TangentChoice::CounterClockwise,
    };
    let control = match forecast_control_radius(&c_r, &v_prev, &r_star, radius, caps, choice) {
        Ok(fc) => {
            let beta = fc.beta_j();
            let omega = -turn_sign(beta) * caps.u_max.min(beta.abs() / dt);
            // heading may lag the commanded tangent; only advance with the aligned component
            let lead = angle_between(&heading, &fc.l_j()).unwrap_or(0.0);
            let v = fc.control.v * lead.cos().max(0.0);
            clamp_control2(Control2 { v, omega }, caps)
        }
        Err(PlannerError::InsideForecastCircle) => {
            // back away from everything close, not only the active obstacle, so a
            // second obstacle closing in from the other side is not run into
            let mut away = Vec2::zeros();
            for (i, p) in nearest_points.iter().enumerate() {
                if i == k || distances[i] <= cfg.switch_distance {
                    let d = distances[i].max(1e-9);
                    away += (c_r - p) / (d * d * d);
                }
            }
            let away = if away.norm() > 0.0 { away } else { c_r - obs.boundary.mass_center() };
            let control = escape(pose, &away, caps, dt);
            next.last_velocity = heading * control.v.max(f64::MIN_POSITIVE);
            return Ok(done(control, next, Some(obs.id), true, false));
        }
        Err(e) => return Err(e),
    };
    next.last_velocity = heading * control.v.max(f64::MIN_POSITIVE);
    Ok(done(control, next, Some(obs.id), false, false))
}

/// Kind of obstacle motion constraint that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionConstraint {
    /// Obstacle speed must stay strictly between zero and the robot's top speed.
    SpeedBound,
    /// Obstacle turn rate must stay below the robot's top turn rate.
    TurnRateBound,
    /// Boundary excursion caused by rotation must stay below the robot's speed margin.
    RotationExcursion,
}

impl MotionConstraint {
    pub fn describe(&self) -> &'static str {
        match self {
            MotionConstraint::SpeedBound => "obstacle speed bound (0 < |v_obs| < v_max)",
            MotionConstraint::TurnRateBound => "obstacle turn-rate bound (|w_obs| < u_max)",
            MotionConstraint::RotationExcursion => {
                "rotation excursion bound (excursion < (v_max - |v_obs|) * dt)"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub constraint: MotionConstraint,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One step of an obstacle's motion: shape at the start of the step, velocity
/// and turn rate held over the step.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSample<'a> {
    pub boundary: &'a ObstacleBoundary,
    pub velocity: Vec2,
    pub angular_velocity: f64,
}

/// Largest outward motion of the outline along any fixed direction from the
/// mass center while the shape turns by `angle`.
pub fn rotation_excursion(boundary: &ObstacleBoundary, angle: f64) -> f64 {
    if angle == 0.0 {
        return 0.0;
    }
    let rho = |a: f64| boundary.radius_at(a);
    // direction psi in the world frame sees body angle psi - s for s in [0, angle]
    let excursion = |psi: f64, s: f64| rho(psi - s) - rho(psi);
    let n_psi = 720usize;
    let n_s = 8usize;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let mut base: Vec<f64> = Vec::with_capacity(n_psi);
    for i in 0..n_psi {
        base.push(2.0 * PI * i as f64 / n_psi as f64);
    }
    let mut seeds: Vec<(f64, f64, f64)> = Vec::new();
    for &psi in &base {
        for j in 1..=n_s {
            let s = angle * j as f64 / n_s as f64;
            let e = excursion(psi, s);
            seeds.push((psi, s, e));
            if e > best.2 {
                best = (psi, s, e);
            }
        }
    }
    seeds.sort_by(|a, b| b.2.total_cmp(&a.2));
    seeds.truncate(6);
    let step_psi = 2.0 * PI / n_psi as f64;
    for (psi0, s0, _) in seeds {
        let (p, s, e) = refine(&excursion, psi0, s0, step_psi, angle);
        if e > best.2 {
            best = (p, s, e);
        }
    }
    best.2.max(0.0)
}

/// Upper bound on [`rotation_excursion`] for a convex outline around its mass
/// center: the radial function is Lipschitz there with slope at most
/// `r·sqrt(r² − h²)/h` at a vertex at distance `r` on an edge at distance `h`.
/// `None` for non-convex outlines, where the radius can jump.
pub fn rotation_excursion_bound(boundary: &ObstacleBoundary, angle: f64) -> Option<f64> {
    let c = boundary.mass_center();
    let v = boundary.vertices();
    let n = v.len();
    let mut turn_sign = 0.0;
    let mut slope: f64 = 0.0;
    for i in 0..n {
        let (a, b, next) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
        let turn = cross2(&(b - a), &(next - b));
        if turn != 0.0 {
            if turn_sign != 0.0 && turn.signum() != turn_sign {
                return None;
            }
            turn_sign = turn.signum();
        }
        let edge = b - a;
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let h = cross2(&edge, &(c - a)).abs() / len;
        if h <= 0.0 {
            return None;
        }
        for r in [(a - c).norm(), (b - c).norm()] {
            slope = slope.max(r * (r * r - h * h).max(0.0).sqrt() / h);
        }
    }
    Some(slope * angle.abs())
}

/// Alternating golden-section search on psi (within one grid cell either side)
/// and s (within [0, angle]).
fn refine(f: &dyn Fn(f64, f64) -> f64, psi0: f64, s0: f64, half_width: f64, angle: f64) -> (f64, f64, f64) {
    let (mut psi, mut s) = (psi0, s0);
    let (s_lo, s_hi) = if angle >= 0.0 { (0.0, angle) } else { (angle, 0.0) };
    let mut width = half_width;
    for _ in 0..6 {
        psi = golden_max(|x| f(x, s), psi - width, psi + width);
        s = golden_max(|x| f(psi, x), s_lo, s_hi);
        width *= 0.5;
    }
    (psi, s, f(psi, s))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    [(a, f(a)), (b, f(b)), (m, f(m))].into_iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0
}

/// Checks a per-step obstacle motion trace against the robot's caps.
///
/// A stationary step is reported as a note rather than a violation.
pub fn check_motion_constraints(trace: &[MotionSample<'_>], caps: &RobotCaps, dt: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut static_steps = 0usize;
    for (step, m) in trace.iter().enumerate() {
        let speed = m.velocity.norm();
        if speed == 0.0 {
            static_steps += 1;
        } else if speed >= caps.v_max {
            report.violations.push(Violation {
                step,
                constraint: MotionConstraint::SpeedBound,
                value: speed,
                limit: caps.v_max,
            });
        }
        if m.angular_velocity.abs() >= caps.u_max {
            report.violations.push(Violation {
                step,
                constraint: MotionConstraint::TurnRateBound,
                value: m.angular_velocity.abs(),
                limit: caps.u_max,
            });
        }
        let limit = (caps.v_max - speed) * dt;
        let angle = m.angular_velocity * dt;
        let excursion = match rotation_excursion_bound(m.boundary, angle) {
            Some(bound) if bound < limit => 0.0,
            _ => rotation_excursion(m.boundary, angle),
        };
        if excursion > 0.0 && excursion >= limit {
            report.violations.push(Violation {
                step,
                constraint: MotionConstraint::RotationExcursion,
                value: excursion,
                limit,
            });
        }
    }
    if static_steps > 0 {
        report.notes.push(format!(
            "{static_steps} stationary step(s): the strict lower speed bound is not met, which only makes avoidance easier"
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CAPS: RobotCaps = RobotCaps { v_max: 0.707, u_max: 1.414 };

    fn disc(center: Vec2, r: f64) -> ObstacleBoundary {
        ObstacleBoundary::regular_polygon(center, r, 4096, 0.0)
    }

    #[test]
    fn direction_examples() {
        let o = Vec2::zeros();
        let t = Vec2::new(10.0, 10.0);
        assert_eq!(decide_direction(&o, &t, &Vec2::new(6.0, 5.0)).unwrap(), Some(AvoidDirection::Negative));
        assert_eq!(decide_direction(&o, &t, &Vec2::new(5.0, 5.0)).unwrap(), Some(AvoidDirection::Positive));
        assert_eq!(decide_direction(&o, &t, &Vec2::new(-3.0, -3.0)).unwrap(), None);
        assert_eq!(decide_direction(&o, &t, &Vec2::new(5.0, 6.0)).unwrap(), Some(AvoidDirection::Positive));
        assert!(decide_direction(&o, &o, &Vec2::new(1.0, 0.0)).is_err());
        assert!(decide_direction(&o, &t, &o).is_err());
    }

    #[test]
    fn widening_zero_returns_nearest_point() {
        let obs = ObstacleBoundary::regular_polygon(Vec2::new(5.0, 0.0), 1.0, 64, 0.0);
        let (_, r_min) = dist_to_obstacle(&Vec2::zeros(), &obs).unwrap();
        let p = widened_nearest_point(&Vec2::zeros(), &obs, 0.0, AvoidDirection::Positive).unwrap();
        assert_eq!(p, r_min);
    }

    /// First intersection of the ray at `angle` from the origin with the circle.
    fn ray_circle(angle: f64, c: Vec2, r: f64) -> Option<Vec2> {
        let d = Vec2::new(angle.cos(), angle.sin());
        let b = d.dot(&c);
        let disc = b * b - (c.norm_squared() - r * r);
        (disc >= 0.0).then(|| d * (b - disc.sqrt()))
    }

    #[test]
    fn widened_point_matches_ray_circle_oracle() {
        let c = Vec2::new(5.0, 0.0);
        // polygon vertices lie on the circle; keep the chord sag well below 1e-9
        let obs = ObstacleBoundary::regular_polygon(c, 1.0, 1 << 16, 0.0);
        let a0 = 5f64.to_radians();
        let want = ray_circle(a0, c, 1.0).unwrap();
        let got = widened_nearest_point(&Vec2::zeros(), &obs, a0, AvoidDirection::Positive).unwrap();
        assert!((got - want).norm() < 1e-8, "{got} vs {want}");
        let want_neg = ray_circle(-a0, c, 1.0).unwrap();
        let got_neg = widened_nearest_point(&Vec2::zeros(), &obs, a0, AvoidDirection::Negative).unwrap();
        assert!((got_neg - want_neg).norm() < 1e-8);
    }

    #[test]
    fn wide_angle_falls_back_to_silhouette() {
        let obs = ObstacleBoundary::regular_polygon(Vec2::new(5.0, 0.0), 1.0, 64, 0.0);
        // silhouette half-angle is asin(1/5) < 12 degrees
        let a0 = 0.6;
        assert!(ray_circle(a0, Vec2::new(5.0, 0.0), 1.0).is_none());
        let p = widened_nearest_point(&Vec2::zeros(), &obs, a0, AvoidDirection::Positive).unwrap();
        let (_, ccw) = obs.silhouette(&Vec2::zeros());
        assert_eq!(p, ccw);
        assert!(p.y > 0.0);
    }

    #[test]
    fn forecast_example_closed_form() {
        let fc = forecast_control(
            &Vec2::zeros(),
            &Vec2::new(1.0, 0.0),
            &Vec2::new(4.0, 0.0),
            &Vec2::new(0.0, 2.0),
            &CAPS,
        )
        .unwrap();
        let thirty = 30f64.to_radians();
        assert!((fc.l_j().norm() - 2.0 / thirty.tan()).abs() < 1e-12);
        assert!((fc.l_j().norm() - 3.4641016151377544).abs() < 1e-12);
        assert_eq!(fc.j, 1);
        assert!((fc.betas[0].abs() - thirty).abs() < 1e-12);
        assert!((fc.betas[1].abs() - thirty).abs() < 1e-12);
        assert_eq!(fc.control.omega, -CAPS.u_max);
        assert_eq!(fc.control.v, CAPS.v_max);
    }

    #[test]
    fn static_obstacle_limit_points_at_the_boundary() {
        let r_star = Vec2::new(3.0, 4.0);
        let fc = forecast_control(&Vec2::zeros(), &Vec2::new(3.0, 4.0), &r_star, &Vec2::zeros(), &CAPS).unwrap();
        assert!((fc.l_j() - r_star).norm() < 1e-12);
        assert_eq!(fc.beta_j(), 0.0);
        assert_eq!(fc.control.omega, 0.0);
    }

    #[test]
    fn forecast_errors() {
        let e = forecast_control(&Vec2::zeros(), &Vec2::x(), &Vec2::new(1.0, 0.0), &Vec2::new(2.0, 0.0), &CAPS);
        assert_eq!(e.unwrap_err(), PlannerError::InsideForecastCircle);
        let e = forecast_control(&Vec2::zeros(), &Vec2::zeros(), &Vec2::new(4.0, 0.0), &Vec2::x(), &CAPS);
        assert_eq!(e.unwrap_err(), PlannerError::ZeroPrevVelocity);
    }

    #[test]
    fn aligned_robot_without_obstacles_drives_full_speed() {
        let pose = Pose2::new(0.0, 0.0, std::f64::consts::FRAC_PI_4);
        let cfg = PlannerConfig2d::default();
        let ctx = AvoidanceContext::new(pose.theta);
        let s = navigate_step2d(&pose, &Vec2::new(10.0, 10.0), &[], &cfg, &ctx, &CAPS, 0.1).unwrap();
        assert_eq!(s.mode, NavMode::TargetApproach);
        assert_eq!(s.control.v, 0.707);
        assert_eq!(s.control.omega, 0.0);
    }

    #[test]
    fn at_target_stops() {
        let pose = Pose2::new(9.95, 10.0, 0.3);
        let cfg = PlannerConfig2d::default();
        let s = navigate_step2d(&pose, &Vec2::new(10.0, 10.0), &[], &cfg, &AvoidanceContext::new(0.3), &CAPS, 0.1)
            .unwrap();
        assert!(s.terminal);
        assert_eq!(s.control, Control2::stop());
    }

    #[test]
    fn obstacle_in_path_switches_to_avoidance() {
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let view = ObstacleView {
            id: 7,
            boundary: disc(Vec2::new(2.0, 0.1), 1.0),
            velocity: Vec2::new(0.0, 0.2),
            angular_velocity: 0.0,
        };
        let cfg = PlannerConfig2d::default();
        let s = navigate_step2d(&pose, &Vec2::new(10.0, 0.0), &[view], &cfg, &AvoidanceContext::new(0.0), &CAPS, 0.1)
            .unwrap();
        assert_eq!(s.mode, NavMode::ObstacleAvoid);
        assert_eq!(s.active, Some(7));
        assert_eq!(s.context.direction, Some(AvoidDirection::Positive));
        // mass center sits left of the target line, so the robot veers right
        assert!(s.control.omega < 0.0);
        assert!(s.control.within(&CAPS));
    }

    #[test]
    fn far_obstacle_is_ignored() {
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let view = ObstacleView {
            id: 0,
            boundary: disc(Vec2::new(5.0, 0.0), 1.0),
            velocity: Vec2::zeros(),
            angular_velocity: 0.0,
        };
        let cfg = PlannerConfig2d::default();
        let s = navigate_step2d(&pose, &Vec2::new(10.0, 0.0), &[view], &cfg, &AvoidanceContext::new(0.0), &CAPS, 0.1)
            .unwrap();
        assert_eq!(s.mode, NavMode::TargetApproach);
        assert!((s.dmin - 4.0).abs() < 1e-6);
    }

    #[test]
    fn m1_turns_toward_target() {
        let cfg = PlannerConfig2d::default();
        for th in [-3.0, -1.0, -0.01, 0.5, 2.0, 3.1] {
            let pose = Pose2::new(0.0, 0.0, th);
            let s = navigate_step2d(&pose, &Vec2::new(0.0, 5.0), &[], &cfg, &AvoidanceContext::new(th), &CAPS, 0.1)
                .unwrap();
            let err = normalize_angle(th - FRAC_PI_2);
            assert!(s.control.omega * err <= 0.0);
        }
    }

    #[test]
    fn static_obstacle_is_reported_as_note() {
        let b = disc(Vec2::zeros(), 1.0);
        let trace = [MotionSample { boundary: &b, velocity: Vec2::zeros(), angular_velocity: 0.0 }];
        let r = check_motion_constraints(&trace, &CAPS, 0.1);
        assert!(r.is_ok());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn fast_obstacle_violates_speed_bound() {
        let b = disc(Vec2::zeros(), 1.0);
        let trace = [
            MotionSample { boundary: &b, velocity: Vec2::new(0.3, 0.0), angular_velocity: 0.0 },
            MotionSample { boundary: &b, velocity: Vec2::new(0.8, 0.0), angular_velocity: 2.0 },
        ];
        let r = check_motion_constraints(&trace, &CAPS, 0.1);
        let kinds: Vec<_> = r.violations.iter().map(|v| (v.step, v.constraint)).collect();
        assert!(kinds.contains(&(1, MotionConstraint::SpeedBound)));
        assert!(kinds.contains(&(1, MotionConstraint::TurnRateBound)));
        assert!(!kinds.iter().any(|(s, _)| *s == 0));
    }

    #[test]
    fn rotating_disc_has_no_excursion() {
        let b = ObstacleBoundary::regular_polygon(Vec2::new(1.0, 2.0), 1.0, 8192, 0.0);
        assert!(rotation_excursion(&b, 0.1) < 1e-6);
    }

    /// Polar radius of an ellipse with semi-axes `a`, `b` turned by `rot`.
    fn ellipse_radius(a: f64, b: f64, rot: f64, phi: f64) -> f64 {
        let t = phi - rot;
        a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt()
    }

    #[test]
    fn rotating_ellipse_excursion_matches_sampling_oracle() {
        let (a, b, rot) = (2.0, 1.0, 0.1);
        let shape = ObstacleBoundary::ellipse(Vec2::new(0.5, -0.5), a, b, rot, 8192);
        for delta in [0.1, -0.1] {
            // exhaustive scan over world directions and rotation fractions
            let mut oracle = f64::NEG_INFINITY;
            let n = 200_000;
            for i in 0..n {
                let psi = 2.0 * PI * i as f64 / n as f64;
                let r0 = ellipse_radius(a, b, rot, psi);
                for j in 1..=4 {
                    let s = delta * j as f64 / 4.0;
                    oracle = oracle.max(ellipse_radius(a, b, rot, psi - s) - r0);
                }
            }
            let got = rotation_excursion(&shape, delta);
            assert!((got - oracle).abs() < 1e-6, "delta {delta}: {got} vs {oracle}");
        }
    }

    #[test]
    fn excursion_bound_rejects_non_convex_outlines() {
        let star: Vec<Vec2> = (0..10)
            .map(|i| {
                let a = PI * i as f64 / 5.0;
                let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let obs = ObstacleBoundary::from_vertices(star).unwrap();
        assert_eq!(rotation_excursion_bound(&obs, 0.1), None);
        let square = ObstacleBoundary::regular_polygon(Vec2::zeros(), 1.0, 4, 0.0);
        assert_eq!(rotation_excursion_bound(&square, 0.0), Some(0.0));
    }

    proptest! {
        #[test]
        fn excursion_bound_dominates_search(
            a in 0.2f64..1.5, ratio in 0.3f64..1.0, tilt in 0.0f64..PI, sides in 3usize..40, angle in -0.3f64..0.3,
        ) {
            let obs = if sides < 12 {
                ObstacleBoundary::regular_polygon(Vec2::new(1.0, -2.0), a, sides, tilt)
            } else {
                ObstacleBoundary::ellipse(Vec2::new(1.0, -2.0), a, a * ratio, tilt, sides)
            };
            let bound = rotation_excursion_bound(&obs, angle).unwrap();
            prop_assert!(rotation_excursion(&obs, angle) <= bound + 1e-12);
        }

        #[test]
        fn turn_sign_is_odd(beta in -PI..PI) {
            prop_assume!(beta != 0.0);
            prop_assert_eq!(turn_sign(-beta), -turn_sign(beta));
        }

        #[test]
        fn forecast_vectors_satisfy_pythagoras(
            rx in -5.0f64..5.0, ry in -5.0f64..5.0, speed in 0.0f64..0.7, vx in -1.0f64..1.0, vy in -1.0f64..1.0,
        ) {
            let r_star = Vec2::new(rx, ry);
            prop_assume!(r_star.norm() > speed + 1e-3);
            let v_prev = Vec2::new(vx, vy);
            prop_assume!(v_prev.norm() > 1e-6);
            let fc = forecast_control(&Vec2::zeros(), &v_prev, &r_star, &Vec2::new(speed, 0.0), &CAPS).unwrap();
            for l in fc.vectors {
                prop_assert!((l.norm_squared() + speed * speed - r_star.norm_squared()).abs() < 1e-6);
            }
            prop_assert!(fc.control.within(&CAPS));
            prop_assert!(fc.beta_j().abs() <= fc.betas[2 - fc.j].abs());
        }
    }
}
