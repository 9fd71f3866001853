//! Fixed-step simulation loop driving the planners against scripted obstacles.

use super::log::{LogRecord, RunSummary, Termination, TrajectoryLog};
use super::scenario::{CompiledScenario, PlannerKind};
use crate::amaps::{clamp_displacement, nearest_avoid_point, uuv_navigate_step, AmapsGrid, DeformationTrace, StrategyTag, UuvState};
use crate::geometry::{ObstacleBoundary, Vec2, Vec3};
use crate::kinematics::{step3d, step_unicycle, Control2, Pose2, State3, BOUND_EPS};
use crate::planner2d::{navigate_step2d, AvoidanceContext, NavMode, ObstacleView};
use crate::planner3d::{navigate_step3d, NavContext3d, SpatialObstacleView};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub summary: RunSummary,
}

struct Tally {
    min_clearance: f64,
    violations: Vec<String>,
    heading_residual: f64,
    orthogonality_residual: f64,
}

impl Tally {
    fn new() -> Self {
        Self { min_clearance: f64::INFINITY, violations: Vec::new(), heading_residual: 0.0, orthogonality_residual: 0.0 }
    }
}

fn clearance(c: &CompiledScenario, p: &Vec3, k: usize) -> (f64, Option<usize>) {
    c.tracks
        .iter()
        .map(|t| (t.clearance(p, k), Some(t.id)))
        .fold((f64::INFINITY, None), |a, b| if b.0 < a.0 { b } else { a })
}

/// Runs the scenario to the goal, a collision, a planner failure or the
/// horizon. Identical inputs give identical outputs.
pub fn run(c: &CompiledScenario) -> RunOutcome {
    let mut log = TrajectoryLog::new(c.dimension());
    let mut tally = Tally::new();
    let termination = match (c.scenario.planner, c.dimension()) {
        (PlannerKind::Amaps, _) => run_amaps(c, &mut log, &mut tally),
        (_, 3) => run_reactive3d(c, &mut log, &mut tally),
        _ => run_reactive2d(c, &mut log, &mut tally),
    };
    let summary = RunSummary {
        name: c.scenario.name.clone(),
        reached: termination == Termination::Reached,
        termination,
        steps: log.records.len(),
        path_length: log.path_length(),
        straight_line: log.records.last().map_or(0.0, |r| (Vec3::new(r.x, r.y, r.z.unwrap_or(0.0)) - c.start).norm()),
        min_clearance: tally.min_clearance,
        violations: tally.violations,
        max_heading_residual: (c.dimension() == 3).then_some(tally.heading_residual),
        max_orthogonality_residual: (c.dimension() == 3).then_some(tally.orthogonality_residual),
        seed: c.scenario.seed,
    };
    RunOutcome { log, summary }
}

/// Shared per-step bookkeeping: returns the termination if the run ends at
/// step `k` before planning.
fn checkpoint(c: &CompiledScenario, p: &Vec3, k: usize, tally: &mut Tally) -> (f64, Option<usize>, Option<Termination>) {
    let (d, id) = clearance(c, p, k);
    tally.min_clearance = tally.min_clearance.min(d);
    if d <= 0.0 {
        return (d, id, Some(Termination::Collision));
    }
    if (c.goal - p).norm() <= c.scenario.goal_tolerance() {
        return (d, id, Some(Termination::Reached));
    }
    (d, id, None)
}

fn run_reactive2d(c: &CompiledScenario, log: &mut TrajectoryLog, tally: &mut Tally) -> Termination {
    let s = &c.scenario;
    let (caps, dt, cfg) = (&s.caps, s.dt, &s.planner_config.reactive2d);
    let goal = c.goal.xy();
    let mut pose = Pose2::new(c.start.x, c.start.y, c.heading.y.atan2(c.heading.x));
    let mut ctx = AvoidanceContext::new(pose.theta);
    for k in 0..c.horizon {
        let t = k as f64 * dt;
        let p = Vec3::new(pose.x, pose.y, 0.0);
        let (d, _, end) = checkpoint(c, &p, k, tally);
        let record = |control: Control2, mode: &str, id: Option<usize>| LogRecord {
            t,
            x: pose.x,
            y: pose.y,
            z: None,
            theta: Some(pose.theta),
            v: control.v,
            omega: control.omega,
            mode: mode.to_string(),
            dmin: d,
            obstacle_id: id,
        };
        if let Some(end) = end {
            log.records.push(record(Control2::stop(), NavMode::TargetApproach.label(), None));
            return end;
        }
        let views: Vec<ObstacleView> = c
            .tracks
            .iter()
            .map(|tr| ObstacleView {
                id: tr.id,
                boundary: tr.outline(k),
                velocity: tr.velocity(k).xy(),
                angular_velocity: tr.spin(k).z,
            })
            .collect();
        let step = match navigate_step2d(&pose, &goal, &views, cfg, &ctx, caps, dt) {
            Ok(step) => step,
            Err(e) => {
                tally.violations.push(format!("step {k}: planner failed: {e}"));
                log.records.push(record(Control2::stop(), "ERR", None));
                return Termination::PlannerError;
            }
        };
        let mode = if step.emergency { "ESC" } else { step.mode.label() };
        log.records.push(record(step.control, mode, step.active));
        if !step.control.within(caps) {
            tally.violations.push(format!("step {k}: control v={} omega={} outside caps", step.control.v, step.control.omega));
        }
        ctx = step.context;
        pose = step_unicycle(&pose, &step.control, dt).expect("dt validated at load");
    }
    Termination::Horizon
}

fn run_reactive3d(c: &CompiledScenario, log: &mut TrajectoryLog, tally: &mut Tally) -> Termination {
    let s = &c.scenario;
    let (caps, dt, cfg) = (&s.caps, s.dt, &s.planner_config.reactive3d);
    let mut state = State3::new(c.start, c.heading).expect("heading validated at load");
    let mut ctx = NavContext3d::default();
    for k in 0..c.horizon {
        let t = k as f64 * dt;
        tally.heading_residual = tally.heading_residual.max((state.heading.norm() - 1.0).abs());
        let (d, _, end) = checkpoint(c, &state.position, k, tally);
        let p = state.position;
        let record = |v: f64, omega: f64, mode: &str, id: Option<usize>| LogRecord {
            t,
            x: p.x,
            y: p.y,
            z: Some(p.z),
            theta: None,
            v,
            omega,
            mode: mode.to_string(),
            dmin: d,
            obstacle_id: id,
        };
        if let Some(end) = end {
            log.records.push(record(0.0, 0.0, NavMode::TargetApproach.label(), None));
            return end;
        }
        let views: Vec<SpatialObstacleView> = c
            .tracks
            .iter()
            .map(|tr| SpatialObstacleView {
                id: tr.id,
                samples: tr.surface(k),
                mass_center: tr.mass_center(k),
                velocity_history: tr.velocity_history(k).to_vec(),
            })
            .collect();
        let step = match navigate_step3d(&state, &c.goal, &views, cfg, &ctx, caps, dt) {
            Ok(step) => step,
            Err(e) => {
                tally.violations.push(format!("step {k}: planner failed: {e}"));
                log.records.push(record(0.0, 0.0, "ERR", None));
                return Termination::PlannerError;
            }
        };
        let ctrl = step.control;
        let mode = if step.emergency { "ESC" } else { step.mode.label() };
        log.records.push(record(ctrl.speed, ctrl.turn.norm(), mode, step.active));
        tally.orthogonality_residual = tally.orthogonality_residual.max(ctrl.orthogonality_residual(&state.heading));
        if ctrl.speed > caps.v_max + BOUND_EPS || ctrl.turn.norm() > caps.u_max + BOUND_EPS {
            tally.violations.push(format!("step {k}: control speed={} turn={} outside caps", ctrl.speed, ctrl.turn.norm()));
        }
        ctx = step.context;
        state = match step3d(&state, &ctrl, caps, dt) {
            Ok(s) => s,
            Err(e) => {
                tally.violations.push(format!("step {k}: integration failed: {e}"));
                return Termination::PlannerError;
            }
        };
    }
    Termination::Horizon
}

fn tag_label(tag: StrategyTag) -> &'static str {
    match tag {
        StrategyTag::Approach => "APPROACH",
        StrategyTag::Plus => "PLUS",
        StrategyTag::Minus => "MINUS",
        StrategyTag::Retreat => "RETREAT",
    }
}

fn run_amaps(c: &CompiledScenario, log: &mut TrajectoryLog, tally: &mut Tally) -> Termination {
    let s = &c.scenario;
    let (caps, dt, cfg) = (&s.caps, s.dt, &s.planner_config.amaps);
    let goal = c.goal.xy();
    // one grid per obstacle, sized to everything the obstacle sweeps over the run
    let mut grids = Vec::with_capacity(c.tracks.len());
    for tr in &c.tracks {
        let (mut lo, mut hi) = (c.start.xy().inf(&goal), c.start.xy().sup(&goal));
        for k in 0..=c.horizon {
            let (a, b) = tr.outline(k).bounding_box();
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        let margin = Vec2::repeat(1.0);
        match AmapsGrid::covering(lo - margin, hi + margin, cfg.cell_size, cfg.window) {
            Ok(g) => grids.push(g),
            Err(e) => {
                tally.violations.push(format!("grid setup failed: {e}"));
                return Termination::PlannerError;
            }
        }
    }
    let mut traces = vec![DeformationTrace::default(); c.tracks.len()];
    let mut latched: Vec<Option<StrategyTag>> = vec![None; c.tracks.len()];
    let mut state = UuvState { position: c.start.xy(), velocity: Vec2::zeros() };
    let mut theta = c.heading.y.atan2(c.heading.x);
    for k in 0..c.horizon {
        let t = k as f64 * dt;
        let p = Vec3::new(state.position.x, state.position.y, 0.0);
        let (d, _, end) = checkpoint(c, &p, k, tally);
        let outlines: Vec<ObstacleBoundary> = c.tracks.iter().map(|tr| tr.outline(k)).collect();
        for (g, o) in grids.iter_mut().zip(&outlines) {
            if let Err(e) = g.rasterize(o) {
                tally.violations.push(format!("step {k}: rasterization failed: {e}"));
                return Termination::PlannerError;
            }
        }
        let record = |v: f64, theta: f64, mode: &str, id: Option<usize>| LogRecord {
            t,
            x: p.x,
            y: p.y,
            z: None,
            theta: Some(theta),
            v,
            omega: 0.0,
            mode: mode.to_string(),
            dmin: d,
            obstacle_id: id,
        };
        if let Some(end) = end {
            log.records.push(record(0.0, theta, tag_label(StrategyTag::Approach), None));
            return end;
        }
        // the obstacle with the nearest visible covered cell drives the decision
        let others = |a: usize| -> Vec<ObstacleBoundary> {
            outlines.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, o)| o.clone()).collect()
        };
        let active = (0..outlines.len())
            .filter_map(|i| {
                nearest_avoid_point(&state.position, &grids[i], &outlines[i], &others(i))
                    .ok()
                    .map(|q| ((q - state.position).norm(), i))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, i)| i);
        let (waypoint, tag, id) = match active.or((!outlines.is_empty()).then_some(0)) {
            None => (state.position + clamp_displacement(goal - state.position, caps, dt), StrategyTag::Approach, None),
            Some(a) => {
                for (i, tr) in traces.iter_mut().enumerate() {
                    if i != a {
                        tr.reset();
                        latched[i] = None;
                    }
                }
                match uuv_navigate_step(&state, &goal, &grids[a], &outlines[a], &others(a), &mut traces[a], latched[a], cfg, caps, dt) {
                    Ok(step) => {
                        latched[a] = step.latched;
                        let id = (step.tag != StrategyTag::Approach).then_some(c.tracks[a].id);
                        (step.waypoint, step.tag, id)
                    }
                    Err(e) => {
                        tally.violations.push(format!("step {k}: planner failed: {e}"));
                        log.records.push(record(0.0, theta, "ERR", None));
                        return Termination::PlannerError;
                    }
                }
            }
        };
        let disp = waypoint - state.position;
        if disp.norm() > 0.0 {
            theta = disp.y.atan2(disp.x);
        }
        log.records.push(record(disp.norm() / dt, theta, tag_label(tag), id));
        if disp.x.abs().max(disp.y.abs()) > caps.v_max * dt + 1e-9 {
            tally.violations.push(format!("step {k}: displacement {disp:?} exceeds the per-axis bound"));
        }
        state = UuvState { position: waypoint, velocity: disp / dt };
    }
    Termination::Horizon
}
