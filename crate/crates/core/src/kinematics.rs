//! Unicycle and 3D nonholonomic motion models with exact fixed-step integration.

use crate::geometry::{normalize_angle, Vec2, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed when checking controls against their bounds.
pub const BOUND_EPS: f64 = 1e-12;
/// Residual allowed for the heading/turn orthogonality check.
pub const ORTHOGONALITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("control out of bounds: {0}")]
    ControlOutOfBounds(String),
    #[error("turn vector is not orthogonal to heading (residual {0:e})")]
    NonOrthogonalTurn(f64),
    #[error("timestep must be positive, got {0}")]
    InvalidTimestep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotCaps {
    pub v_max: f64,
    pub u_max: f64,
}

impl RobotCaps {
    pub fn new(v_max: f64, u_max: f64) -> Self {
        Self { v_max, u_max }
    }

    pub fn is_valid(&self) -> bool {
        self.v_max > 0.0 && self.u_max > 0.0 && self.v_max.is_finite() && self.u_max.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control2 {
    pub v: f64,
    pub omega: f64,
}

impl Control2 {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn stop() -> Self {
        Self { v: 0.0, omega: 0.0 }
    }

    pub fn within(&self, caps: &RobotCaps) -> bool {
        self.v >= 0.0 && self.v <= caps.v_max + BOUND_EPS && self.omega.abs() <= caps.u_max + BOUND_EPS
    }
}

/// Clips speed into `[0, v_max]` and turn rate into `[-u_max, u_max]`.
pub fn clamp_control2(raw: Control2, caps: &RobotCaps) -> Control2 {
    Control2 {
        v: raw.v.clamp(0.0, caps.v_max),
        omega: raw.omega.clamp(-caps.u_max, caps.u_max),
    }
}

/// Advances the unicycle by exact arc integration.
pub fn step_unicycle(pose: &Pose2, ctrl: &Control2, dt: f64) -> Result<Pose2, KinematicsError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(KinematicsError::InvalidTimestep(dt));
    }
    if ctrl.v < 0.0 || !ctrl.v.is_finite() || !ctrl.omega.is_finite() {
        return Err(KinematicsError::ControlOutOfBounds(format!("{ctrl:?}")));
    }
    Ok(integrate_arc(pose, ctrl, dt))
}

/// Like [`step_unicycle`] but also enforces the robot's caps.
pub fn step_unicycle_capped(
    pose: &Pose2,
    ctrl: &Control2,
    caps: &RobotCaps,
    dt: f64,
) -> Result<Pose2, KinematicsError> {
    if !ctrl.within(caps) {
        return Err(KinematicsError::ControlOutOfBounds(format!(
            "v={} omega={} exceeds caps v_max={} u_max={}",
            ctrl.v, ctrl.omega, caps.v_max, caps.u_max
        )));
    }
    step_unicycle(pose, ctrl, dt)
}

fn integrate_arc(pose: &Pose2, ctrl: &Control2, dt: f64) -> Pose2 {
    let th = pose.theta;
    let dth = ctrl.omega * dt;
    if dth.abs() < 1e-12 {
        let s = ctrl.v * dt;
        return Pose2::new(pose.x + s * th.cos(), pose.y + s * th.sin(), th + dth);
    }
    let r = ctrl.v / ctrl.omega;
    let th1 = th + dth;
    Pose2::new(
        pose.x + r * (th1.sin() - th.sin()),
        pose.y - r * (th1.cos() - th.cos()),
        th1,
    )
}

/// Position and unit heading in space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub position: Vec3,
    pub heading: Vec3,
}

impl State3 {
    /// Normalizes `heading`; returns `None` for a zero heading.
    pub fn new(position: Vec3, heading: Vec3) -> Option<Self> {
        let n = heading.norm();
        (n > 0.0 && n.is_finite()).then(|| Self { position, heading: heading / n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control3 {
    pub speed: f64,
    pub turn: Vec3,
}

impl Control3 {
    pub fn stop() -> Self {
        Self { speed: 0.0, turn: Vec3::zeros() }
    }

    pub fn orthogonality_residual(&self, heading: &Vec3) -> f64 {
        heading.dot(&self.turn).abs()
    }
}

/// Checks speed, turn magnitude and orthogonality against the current heading.
pub fn check_control3(ctrl: &Control3, heading: &Vec3, caps: &RobotCaps) -> Result<(), KinematicsError> {
    if !(ctrl.speed >= 0.0 && ctrl.speed <= caps.v_max + BOUND_EPS) {
        return Err(KinematicsError::ControlOutOfBounds(format!("speed {}", ctrl.speed)));
    }
    let u = ctrl.turn.norm();
    if !(u <= caps.u_max + BOUND_EPS) {
        return Err(KinematicsError::ControlOutOfBounds(format!("turn rate {u}")));
    }
    let res = ctrl.orthogonality_residual(heading);
    if res > ORTHOGONALITY_EPS {
        return Err(KinematicsError::NonOrthogonalTurn(res));
    }
    Ok(())
}

/// Advances the 3D model: the heading rotates by `|turn| * dt` in the plane of
/// (heading, turn) and the position moves along the chord of the resulting arc.
pub fn step3d(
    state: &State3,
    ctrl: &Control3,
    caps: &RobotCaps,
    dt: f64,
) -> Result<State3, KinematicsError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(KinematicsError::InvalidTimestep(dt));
    }
    check_control3(ctrl, &state.heading, caps)?;
    let h = state.heading;
    let rate = ctrl.turn.norm();
    let phi = rate * dt;
    let s = ctrl.speed * dt;
    if phi < 1e-12 {
        return Ok(State3 { position: state.position + h * s, heading: h });
    }
    let t_hat = ctrl.turn / rate;
    let h1 = (h * phi.cos() + t_hat * phi.sin()).normalize();
    // chord of an arc of length s turning through phi
    let chord = 2.0 * (s / phi) * (phi / 2.0).sin();
    let dir = (h + h1).try_normalize(1e-300).unwrap_or(h1);
    Ok(State3 { position: state.position + dir * chord, heading: h1 })
}
