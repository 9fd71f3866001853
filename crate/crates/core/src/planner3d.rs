//! Navigation in space. Each step builds a planar frame at the robot with its
//! second axis toward the goal, solves the planar tangent construction there
//! and lifts the result back to a turn vector orthogonal to the heading.

use crate::geometry::{angle_between, rotate, Vec2, Vec3};
use crate::kinematics::{check_control3, Control3, KinematicsError, RobotCaps, State3};
use crate::planner2d::{forecast_control_radius, AvoidDirection, NavMode, PlannerError, TangentChoice};
use crate::predictor::ArPredictor;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Planner3dError {
    #[error("robot position coincides with the goal")]
    CoincidentPoints,
    #[error("obstacle surface sample set is empty")]
    EmptySurfaceSet,
    #[error(transparent)]
    Planar(#[from] PlannerError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Planar frame anchored at the robot: `y_axis` toward the goal, `x_axis`
/// horizontal and orthogonal to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineFrame {
    pub origin: Vec3,
    pub x_axis: Vec3,
    pub y_axis: Vec3,
}

impl OnlineFrame {
    pub fn normal(&self) -> Vec3 {
        self.x_axis.cross(&self.y_axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSphere {
    pub center: Vec3,
    pub radius: f64,
}

pub fn build_online_frame(c_r: &Vec3, goal: &Vec3) -> Result<OnlineFrame, Planner3dError> {
    let y = (goal - c_r).try_normalize(0.0).ok_or(Planner3dError::CoincidentPoints)?;
    let x = y.cross(&Vec3::z()).try_normalize(1e-12).unwrap_or_else(Vec3::x);
    Ok(OnlineFrame { origin: *c_r, x_axis: x, y_axis: y })
}

pub fn project_to_frame(frame: &OnlineFrame, p: &Vec3) -> Vec2 {
    let d = p - frame.origin;
    Vec2::new(d.dot(&frame.x_axis), d.dot(&frame.y_axis))
}

pub fn lift_from_frame(frame: &OnlineFrame, q: &Vec2) -> Vec3 {
    frame.origin + frame.x_axis * q.x + frame.y_axis * q.y
}

/// Direction (not point) versions of the frame maps.
pub fn project_direction(frame: &OnlineFrame, v: &Vec3) -> Vec2 {
    Vec2::new(v.dot(&frame.x_axis), v.dot(&frame.y_axis))
}

pub fn lift_direction(frame: &OnlineFrame, q: &Vec2) -> Vec3 {
    frame.x_axis * q.x + frame.y_axis * q.y
}

/// Index and distance of the sample nearest to `p`.
pub fn nearest_sample(p: &Vec3, samples: &[Vec3]) -> Result<(usize, f64), Planner3dError> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, (s - p).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Planner3dError::EmptySurfaceSet)
}

/// Avoid point in the frame plane: the projected ray toward the nearest sample,
/// rotated by `alpha0` (counter-clockwise for `Positive`), meets the projected
/// point cloud where the first sample lies within `band` of the ray. Falls back
/// to the extreme projected sample on that side when nothing is hit.
pub fn confirm_avoid_point3d(
    frame: &OnlineFrame,
    samples: &[Vec3],
    alpha0: f64,
    dir: AvoidDirection,
    band: f64,
) -> Result<Vec3, Planner3dError> {
    let (k, _) = nearest_sample(&frame.origin, samples)?;
    let q_min = project_to_frame(frame, &samples[k]);
    if alpha0 == 0.0 || q_min.norm() == 0.0 {
        return Ok(samples[k]);
    }
    let ray = rotate(&q_min.normalize(), dir.sign() * alpha0);
    let mut best_t = f64::INFINITY;
    let mut extreme: Option<(f64, Vec2)> = None;
    for s in samples {
        let q = project_to_frame(frame, s);
        let t = q.dot(&ray);
        let off = (q - ray * t).norm();
        if t > 0.0 && off <= band && t < best_t {
            best_t = t;
        }
        if let Ok(a) = angle_between(&q, &q_min) {
            let key = dir.sign() * a;
            if extreme.is_none_or(|(best, _)| key > best) {
                extreme = Some((key, q));
            }
        }
    }
    if best_t.is_finite() {
        return Ok(lift_from_frame(frame, &(ray * best_t)));
    }
    let (_, q) = extreme.ok_or(Planner3dError::EmptySurfaceSet)?;
    Ok(lift_from_frame(frame, &q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig3d {
    pub alpha0: f64,
    /// Distance that triggers and releases avoidance (m).
    pub threshold: f64,
    pub align_tolerance: f64,
    pub goal_tolerance: f64,
    pub forecast_horizon: f64,
    pub safety_margin: f64,
    /// Half-width of the strip around the widened ray that counts as a hit (m).
    pub ray_band: f64,
    pub predictor: ArPredictor,
}

impl Default for PlannerConfig3d {
    fn default() -> Self {
        Self {
            alpha0: 0.2,
            threshold: 2.0,
            align_tolerance: 5f64.to_radians(),
            goal_tolerance: 0.1,
            forecast_horizon: 1.0,
            safety_margin: 0.5,
            ray_band: 0.15,
            predictor: ArPredictor::default(),
        }
    }
}

impl PlannerConfig3d {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= std::f64::consts::FRAC_PI_4) {
            return Err(format!("alpha0 must lie in (0, pi/4], got {}", self.alpha0));
        }
        if !(self.threshold > 0.0 && self.goal_tolerance > 0.0 && self.ray_band > 0.0) {
            return Err("threshold, goal tolerance and ray band must be positive".into());
        }
        if !(self.forecast_horizon >= 0.0 && self.safety_margin >= 0.0) {
            return Err("forecast horizon and safety margin must be non-negative".into());
        }
        if self.predictor.max_order == 0 {
            return Err("predictor max_order must be at least 1".into());
        }
        Ok(())
    }
}

/// Obstacle observation in space: surface samples, mass center and the
/// recorded velocity history (one entry per past step, newest last).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialObstacleView {
    pub id: usize,
    pub samples: Vec<Vec3>,
    pub mass_center: Vec3,
    pub velocity_history: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavContext3d {
    pub mode: NavMode,
    pub active: Option<usize>,
    pub direction: Option<AvoidDirection>,
}

impl Default for NavContext3d {
    fn default() -> Self {
        Self { mode: NavMode::TargetApproach, active: None, direction: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavStep3d {
    pub control: Control3,
    pub mode: NavMode,
    pub context: NavContext3d,
    pub active: Option<usize>,
    pub dmin: f64,
    pub predicted_velocity: Option<Vec3>,
    pub emergency: bool,
    pub terminal: bool,
}

/// True when the mass center lies ahead of the robot along the goal axis or the
/// obstacle's bounding sphere meets the segment to the goal.
pub fn blocks_way(frame: &OnlineFrame, goal: &Vec3, obs: &SpatialObstacleView) -> bool {
    let q = project_to_frame(frame, &obs.mass_center);
    if q.y > 0.0 {
        return true;
    }
    let reach = obs.samples.iter().map(|s| (s - obs.mass_center).norm()).fold(0.0, f64::max);
    let seg = goal - frame.origin;
    let t = ((obs.mass_center - frame.origin).dot(&seg) / seg.norm_squared()).clamp(0.0, 1.0);
    (frame.origin + seg * t - obs.mass_center).norm() <= reach
}

/// Turn vector of magnitude at most `u_max` rotating `heading` toward `desired`.
fn turn_toward(heading: &Vec3, desired: &Vec3, caps: &RobotCaps, dt: f64) -> (Vec3, f64) {
    let d = desired.normalize();
    let angle = heading.dot(&d).clamp(-1.0, 1.0).acos();
    let perp = d - heading * heading.dot(&d);
    let axis = match perp.try_normalize(1e-12) {
        Some(a) => a,
        // desired is straight behind: any direction orthogonal to the heading works
        None => heading.cross(&Vec3::z()).try_normalize(1e-12).unwrap_or_else(|| heading.cross(&Vec3::x()).normalize()),
    };
    let rate = (angle / dt).min(caps.u_max);
    (axis * rate, angle)
}

/// Removes any heading component left by rounding so the orthogonality check holds.
fn orthogonalize(turn: Vec3, heading: &Vec3, caps: &RobotCaps) -> Vec3 {
    let t = turn - heading * heading.dot(&turn);
    let n = t.norm();
    if n > caps.u_max {
        t * (caps.u_max / n)
    } else {
        t
    }
}

pub fn navigate_step3d(
    state: &State3,
    goal: &Vec3,
    obstacles: &[SpatialObstacleView],
    cfg: &PlannerConfig3d,
    ctx: &NavContext3d,
    caps: &RobotCaps,
    dt: f64,
) -> Result<NavStep3d, Planner3dError> {
    let c_r = state.position;
    let h = state.heading;
    let mut dists = Vec::with_capacity(obstacles.len());
    for o in obstacles {
        dists.push(nearest_sample(&c_r, &o.samples)?.1);
    }
    let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut next = *ctx;

    if (goal - c_r).norm() <= cfg.goal_tolerance {
        next = NavContext3d::default();
        return Ok(NavStep3d {
            control: Control3::stop(),
            mode: NavMode::TargetApproach,
            context: next,
            active: None,
            dmin,
            predicted_velocity: None,
            emergency: false,
            terminal: true,
        });
    }

    let frame = build_online_frame(&c_r, goal)?;
    // nearest obstacle within the threshold that is ahead in the frame or covers the goal line
    let candidate = (0..obstacles.len())
        .filter(|k| dists[*k] <= cfg.threshold && blocks_way(&frame, goal, &obstacles[*k]))
        .min_by(|a, b| dists[*a].total_cmp(&dists[*b]));

    let Some(k) = candidate else {
        let (turn, angle) = turn_toward(&h, &(goal - c_r), caps, dt);
        let speed = if angle < cfg.align_tolerance { caps.v_max } else { caps.v_max * angle.cos().max(0.0) };
        // do not step past the goal
        let speed = speed.min((goal - c_r).norm() / dt);
        let control = Control3 { speed, turn: orthogonalize(turn, &h, caps) };
        check_control3(&control, &h, caps)?;
        next = NavContext3d::default();
        return Ok(NavStep3d {
            control,
            mode: NavMode::TargetApproach,
            context: next,
            active: None,
            dmin,
            predicted_velocity: None,
            emergency: false,
            terminal: false,
        });
    };

    let obs = &obstacles[k];
    let predicted = cfg.predictor.predict_vec3(&obs.velocity_history);
    let q_mass = project_to_frame(&frame, &obs.mass_center);
    let direction = match (ctx.mode, ctx.active, ctx.direction) {
        (NavMode::ObstacleAvoid, Some(id), Some(d)) if id == obs.id => d,
        _ => {
            let a = angle_between(&q_mass, &Vec2::y()).unwrap_or(0.0);
            if a >= 0.0 {
                AvoidDirection::Positive
            } else {
                AvoidDirection::Negative
            }
        }
    };
    next.mode = NavMode::ObstacleAvoid;
    next.active = Some(obs.id);
    next.direction = Some(direction);

    let r_star = confirm_avoid_point3d(&frame, &obs.samples, cfg.alpha0, direction.flipped(), cfg.ray_band)?;
    let q_star = project_to_frame(&frame, &r_star);
    let v_planar = project_direction(&frame, &predicted);
    let radius = v_planar.norm() * cfg.forecast_horizon + cfg.safety_margin;
    let h_planar = project_direction(&frame, &h);
    let v_prev = if h_planar.norm() > 1e-9 { h_planar } else { Vec2::y() };
    let choice = match direction {
        AvoidDirection::Positive => TangentChoice::Clockwise,
        AvoidDirection::Negative => TangentChoice::CounterClockwise,
    };

    let (control, emergency) = match forecast_control_radius(&Vec2::zeros(), &v_prev, &q_star, radius, caps, choice) {
        Ok(fc) => {
            let l = fc.l_j();
            let desired = lift_direction(&frame, &l);
            // turn about the frame normal toward the lifted tangent, saturated at u_max
            let (turn, angle) = if l.norm() > 0.0 && fc.beta_j() != 0.0 {
                turn_toward(&h, &desired, caps, dt)
            } else {
                (Vec3::zeros(), 0.0)
            };
            let speed = fc.control.v * angle.cos().max(0.0);
            (Control3 { speed, turn: orthogonalize(turn, &h, caps) }, false)
        }
        Err(PlannerError::InsideForecastCircle) => {
            let (idx, _) = nearest_sample(&c_r, &obs.samples)?;
            let away = c_r - obs.samples[idx];
            let away = if away.norm() > 0.0 { away } else { c_r - obs.mass_center };
            let (turn, angle) = turn_toward(&h, &away, caps, dt);
            let speed = caps.v_max * angle.cos().max(0.0);
            (Control3 { speed, turn: orthogonalize(turn, &h, caps) }, true)
        }
        Err(e) => return Err(e.into()),
    };
    let control = Control3 { speed: control.speed.clamp(0.0, caps.v_max), ..control };
    check_control3(&control, &h, caps)?;
    Ok(NavStep3d {
        control,
        mode: NavMode::ObstacleAvoid,
        context: next,
        active: Some(obs.id),
        dmin,
        predicted_velocity: Some(predicted),
        emergency,
        terminal: false,
    })
}

/// Evenly spread points on a sphere (golden-angle spiral).
pub fn fibonacci_sphere(center: &Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            center + Vec3::new(r * a.cos(), r * a.sin(), z) * radius
        })
        .collect()
}
