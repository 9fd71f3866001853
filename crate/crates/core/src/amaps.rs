//! Avoidance of shape-changing obstacles for a waypoint-driven underwater
//! vehicle. A grid of small square cells records how often each cell was
//! covered by the obstacle over a sliding window of observations; the nearest
//! covered cell and the recent drift of that point define a forecast circle
//! whose tangent points become the next waypoints.

use crate::geometry::{
    angle_between, bearing, ray_segment, tangents_to_circle, GeometryError, ObstacleBoundary, Vec2,
};
use crate::kinematics::RobotCaps;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

pub type Cell = (i64, i64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmapsError {
    #[error("grid does not cover the obstacle bounding box")]
    GridTooSmall,
    #[error("no visible covered cell")]
    NoCoveredCells,
    #[error("deformation trace has no recorded steps")]
    EmptyTrace,
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmapsGrid {
    cell_size: f64,
    origin_cell: Cell,
    nx: i64,
    ny: i64,
    window: usize,
    observations: VecDeque<HashSet<Cell>>,
    counts: HashMap<Cell, u32>,
}

impl AmapsGrid {
    /// Grid of `nx` by `ny` cells whose lower-left cell has index `origin_cell`.
    pub fn new(cell_size: f64, origin_cell: Cell, nx: i64, ny: i64, window: usize) -> Result<Self, AmapsError> {
        if !(cell_size > 0.0) || nx <= 0 || ny <= 0 || window == 0 {
            return Err(AmapsError::InvalidGrid(format!(
                "cell_size={cell_size} nx={nx} ny={ny} window={window}"
            )));
        }
        Ok(Self {
            cell_size,
            origin_cell,
            nx,
            ny,
            window,
            observations: VecDeque::new(),
            counts: HashMap::new(),
        })
    }

    /// Smallest grid containing the rectangle `lo`..`hi`.
    pub fn covering(lo: Vec2, hi: Vec2, cell_size: f64, window: usize) -> Result<Self, AmapsError> {
        let i0 = (lo.x / cell_size).floor() as i64;
        let j0 = (lo.y / cell_size).floor() as i64;
        let i1 = (hi.x / cell_size).ceil() as i64;
        let j1 = (hi.y / cell_size).ceil() as i64;
        Self::new(cell_size, (i0, j0), (i1 - i0).max(1), (j1 - j0).max(1), window)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn cell_center(&self, c: Cell) -> Vec2 {
        Vec2::new((c.0 as f64 + 0.5) * self.cell_size, (c.1 as f64 + 0.5) * self.cell_size)
    }

    pub fn count(&self, c: Cell) -> u32 {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<Cell, u32> {
        &self.counts
    }

    /// Cells covered in the most recent observation.
    pub fn latest(&self) -> Option<&HashSet<Cell>> {
        self.observations.back()
    }

    pub fn observation_count(&self) -> usize {
        self.observations.len()
    }

    fn in_bounds(&self, lo: &Vec2, hi: &Vec2) -> bool {
        let (i0, j0) = self.origin_cell;
        let min = Vec2::new(i0 as f64, j0 as f64) * self.cell_size;
        let max = Vec2::new((i0 + self.nx) as f64, (j0 + self.ny) as f64) * self.cell_size;
        lo.x >= min.x && lo.y >= min.y && hi.x <= max.x && hi.y <= max.y
    }

    /// Cells whose centers lie inside `obs`, found by scanlines through cell-center rows.
    pub fn cells_inside(&self, obs: &ObstacleBoundary) -> Result<HashSet<Cell>, AmapsError> {
        let (lo, hi) = obs.bounding_box();
        if !self.in_bounds(&lo, &hi) {
            return Err(AmapsError::GridTooSmall);
        }
        let cs = self.cell_size;
        let mut cells = HashSet::new();
        let j_lo = (lo.y / cs - 0.5).ceil() as i64;
        let j_hi = (hi.y / cs - 0.5).floor() as i64;
        let vs = obs.vertices();
        let mut xs: Vec<f64> = Vec::new();
        for j in j_lo..=j_hi {
            let y = (j as f64 + 0.5) * cs;
            xs.clear();
            for k in 0..vs.len() {
                let (a, b) = (vs[k], vs[(k + 1) % vs.len()]);
                // half-open in y so shared vertices count once
                if (a.y <= y && y < b.y) || (b.y <= y && y < a.y) {
                    xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let i_lo = (pair[0] / cs - 0.5).ceil() as i64;
                let i_hi = (pair[1] / cs - 0.5).floor() as i64;
                for i in i_lo..=i_hi {
                    // centers exactly on the right edge are outside
                    if (i as f64 + 0.5) * cs < pair[1] {
                        cells.insert((i, j));
                    }
                }
            }
        }
        Ok(cells)
    }

    /// Records one observation of `obs`, dropping the oldest beyond the window.
    pub fn rasterize(&mut self, obs: &ObstacleBoundary) -> Result<&mut Self, AmapsError> {
        let cells = self.cells_inside(obs)?;
        for c in &cells {
            *self.counts.entry(*c).or_insert(0) += 1;
        }
        self.observations.push_back(cells);
        while self.observations.len() > self.window {
            let old = self.observations.pop_front().expect("non-empty");
            for c in old {
                if let Some(n) = self.counts.get_mut(&c) {
                    *n -= 1;
                    if *n == 0 {
                        self.counts.remove(&c);
                    }
                }
            }
        }
        Ok(self)
    }

    /// One line per covered cell, `ix iy count`, sorted by cell.
    pub fn dump(&self) -> String {
        let mut cells: Vec<_> = self.counts.iter().collect();
        cells.sort();
        cells.iter().map(|((i, j), n)| format!("{i} {j} {n}\n")).collect()
    }
}

/// Distinct outline crossings on the segment `a`-`b`; hits at a shared vertex count once.
fn crossings(a: &Vec2, b: &Vec2, obs: &ObstacleBoundary) -> usize {
    let dir = b - a;
    let mut ts: Vec<f64> = obs
        .edges()
        .filter_map(|(p, q)| ray_segment(a, &dir, &p, &q))
        .filter(|t| *t <= 1.0)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    ts.len()
}

/// Center of the covered cell nearest to `pos` among the cells of the latest
/// observation that can be seen from `pos`: the sight line crosses the latest
/// outline once and misses every occluder.
pub fn nearest_avoid_point(
    pos: &Vec2,
    grid: &AmapsGrid,
    latest: &ObstacleBoundary,
    occluders: &[ObstacleBoundary],
) -> Result<Vec2, AmapsError> {
    if latest.contains(pos) {
        return Err(GeometryError::PInsideObstacle.into());
    }
    let cells = grid.latest().ok_or(AmapsError::NoCoveredCells)?;
    let mut candidates: Vec<(f64, Cell, Vec2)> = cells
        .iter()
        .filter(|(i, j)| {
            // interior cells are never nearest; keep cells with an uncovered neighbour
            [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(di, dj)| !cells.contains(&(i + di, j + dj)))
                || cells.len() == 1
        })
        .map(|c| {
            let p = grid.cell_center(*c);
            ((p - pos).norm(), *c, p)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, _, p) in candidates {
        if crossings(pos, &p, latest) == 1 && occluders.iter().all(|o| !o.segment_crosses(pos, &p)) {
            return Ok(p);
        }
    }
    Err(AmapsError::NoCoveredCells)
}

/// Nearest avoid points over time with the number of steps since the last reset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeformationTrace {
    pub r_min_history: Vec<Vec2>,
    pub count: usize,
}

impl DeformationTrace {
    pub fn record(&mut self, r_min: Vec2) {
        if !self.r_min_history.is_empty() {
            self.count += 1;
        }
        self.r_min_history.push(r_min);
        self.count = self.count.min(self.r_min_history.len().saturating_sub(1));
    }

    pub fn reset(&mut self) {
        self.count = 0;
    }
}

/// Mean step displacement of the nearest avoid point over the last `count` steps.
pub fn forecast_radius(trace: &DeformationTrace) -> Result<f64, AmapsError> {
    let n = trace.r_min_history.len();
    if trace.count == 0 || n < trace.count + 1 {
        return Err(AmapsError::EmptyTrace);
    }
    let h = &trace.r_min_history;
    let sum: f64 = (1..=trace.count).map(|k| (h[n - 1 - k] - h[n - k]).norm()).sum();
    Ok(sum / trace.count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UuvState {
    pub position: Vec2,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyTag {
    /// Heading for the goal.
    Approach,
    /// Mass center counter-clockwise of the goal line.
    Plus,
    /// Mass center clockwise of the goal line.
    Minus,
    /// Inside the forecast circle: backing away from the nearest point.
    Retreat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmapsConfig {
    pub cell_size: f64,
    pub window: usize,
    /// Distance below which the vehicle avoids instead of approaching (m).
    pub switch_distance: f64,
    /// Added to the forecast radius so a still outline is skirted (m).
    pub safety_margin: f64,
    pub goal_tolerance: f64,
}

impl Default for AmapsConfig {
    fn default() -> Self {
        Self { cell_size: 0.1, window: 10, switch_distance: 1.5, safety_margin: 0.35, goal_tolerance: 0.1 }
    }
}

impl AmapsConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cell_size > 0.0 && self.switch_distance > 0.0 && self.goal_tolerance > 0.0) {
            return Err("cell_size, switch_distance and goal_tolerance must be positive".into());
        }
        if self.window == 0 {
            return Err("window must be at least 1".into());
        }
        if !(self.safety_margin >= 0.0) {
            return Err("safety_margin must be non-negative".into());
        }
        Ok(())
    }
}

/// Scales `delta` so neither component exceeds `v_max * dt`.
pub fn clamp_displacement(delta: Vec2, caps: &RobotCaps, dt: f64) -> Vec2 {
    let limit = caps.v_max * dt;
    let m = delta.x.abs().max(delta.y.abs());
    if m > limit {
        delta * (limit / m)
    } else {
        delta
    }
}

/// Full-speed step toward `to`, stopping on it when closer than one step.
fn full_step(from: &Vec2, to: &Vec2, caps: &RobotCaps, dt: f64) -> Vec2 {
    from + clamp_displacement(to - from, caps, dt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UuvStep {
    pub waypoint: Vec2,
    pub tag: StrategyTag,
    /// Side chosen when the current avoidance began; kept until it ends.
    pub latched: Option<StrategyTag>,
    pub avoid_point: Option<Vec2>,
    pub d_imin: f64,
    pub forecast_radius: f64,
}

/// One decision of the vehicle. `latched` carries the side chosen when the
/// current avoidance began; `trace` is updated in place and reset when the
/// obstacle is farther than the switching distance.
#[allow(clippy::too_many_arguments)]
pub fn uuv_navigate_step(
    state: &UuvState,
    goal: &Vec2,
    grid: &AmapsGrid,
    latest: &ObstacleBoundary,
    occluders: &[ObstacleBoundary],
    trace: &mut DeformationTrace,
    latched: Option<StrategyTag>,
    cfg: &AmapsConfig,
    caps: &RobotCaps,
    dt: f64,
) -> Result<UuvStep, AmapsError> {
    let pos = state.position;
    let approach = |trace: &mut DeformationTrace, r: Option<Vec2>, d: f64| {
        trace.reset();
        UuvStep {
            waypoint: full_step(&pos, goal, caps, dt),
            tag: StrategyTag::Approach,
            latched: None,
            avoid_point: r,
            d_imin: d,
            forecast_radius: 0.0,
        }
    };
    let r_imin = match nearest_avoid_point(&pos, grid, latest, occluders) {
        Ok(p) => p,
        Err(AmapsError::NoCoveredCells) => return Ok(approach(trace, None, f64::INFINITY)),
        Err(e) => return Err(e),
    };
    trace.record(r_imin);
    let d = (r_imin - pos).norm();
    let to_goal = goal - pos;
    let blocks = latest.segment_crosses(&pos, goal);
    let ahead = to_goal.norm() > 0.0 && angle_between(&(latest.mass_center() - pos), &to_goal).is_ok_and(|a| a.abs() < FRAC_PI_2);
    if d > cfg.switch_distance || !(blocks || ahead) || to_goal.norm() <= cfg.goal_tolerance {
        return Ok(approach(trace, Some(r_imin), d));
    }

    let radius = forecast_radius(trace).unwrap_or(0.0) + cfg.safety_margin;
    let side = latched.unwrap_or_else(|| {
        let a = angle_between(&(latest.mass_center() - pos), &to_goal).unwrap_or(0.0);
        if (0.0..FRAC_PI_2).contains(&a) {
            StrategyTag::Plus
        } else {
            StrategyTag::Minus
        }
    });
    if d <= radius {
        let away = (pos - r_imin).try_normalize(0.0).unwrap_or_else(|| (pos - latest.mass_center()).normalize());
        return Ok(UuvStep {
            waypoint: pos + clamp_displacement(away * caps.v_max * dt * 2.0, caps, dt),
            tag: StrategyTag::Retreat,
            latched: Some(side),
            avoid_point: Some(r_imin),
            d_imin: d,
            forecast_radius: radius,
        });
    }
    let t = tangents_to_circle(&pos, &r_imin, radius)?;
    let center = bearing(&pos, &r_imin);
    // touch point reached by turning the center line counter-clockwise
    let (p_plus, p_minus) = if crate::geometry::normalize_angle(t.angle2 - center) >= 0.0 {
        (t.touch_point2, t.touch_point1)
    } else {
        (t.touch_point1, t.touch_point2)
    };
    // pass on the side away from the mass center
    let target = match side {
        StrategyTag::Plus => p_minus,
        _ => p_plus,
    };
    let dir = (target - pos).normalize();
    let waypoint = pos + clamp_displacement(dir * 2.0 * caps.v_max * dt, caps, dt);
    Ok(UuvStep { waypoint, tag: side, latched: Some(side), avoid_point: Some(r_imin), d_imin: d, forecast_radius: radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CAPS: RobotCaps = RobotCaps { v_max: 0.5, u_max: 1.0 };

    fn square(lo: Vec2, side: f64) -> ObstacleBoundary {
        ObstacleBoundary::new(
            vec![lo, lo + Vec2::new(side, 0.0), lo + Vec2::new(side, side), lo + Vec2::new(0.0, side)],
            lo + Vec2::repeat(side / 2.0),
        )
        .unwrap()
    }

    #[test]
    fn aligned_square_fills_sixteen_cells() {
        let mut g = AmapsGrid::new(0.5, (-4, -4), 12, 12, 10).unwrap();
        let sq = square(Vec2::new(0.0, 0.0), 2.0);
        g.rasterize(&sq).unwrap();
        assert_eq!(g.counts().len(), 16);
        assert!(g.counts().values().all(|n| *n == 1));
        g.rasterize(&sq).unwrap();
        assert_eq!(g.counts().len(), 16);
        assert!(g.counts().values().all(|n| *n == 2));
    }

    #[test]
    fn grid_too_small_is_rejected() {
        let mut g = AmapsGrid::new(0.5, (0, 0), 2, 2, 10).unwrap();
        assert_eq!(g.rasterize(&square(Vec2::new(0.0, 0.0), 2.0)).unwrap_err(), AmapsError::GridTooSmall);
    }

    #[test]
    fn window_evicts_old_observations() {
        let mut g = AmapsGrid::new(0.5, (-10, -10), 40, 40, 3).unwrap();
        for k in 0..6 {
            g.rasterize(&square(Vec2::new(k as f64 * 0.5, 0.0), 1.0)).unwrap();
            assert!(g.counts().values().all(|n| *n as usize <= g.window()));
        }
        assert_eq!(g.observation_count(), 3);
        // only the last three squares remain, offsets 1.5, 2.0 and 2.5
        assert_eq!(g.count((3, 0)), 1);
        assert_eq!(g.count((4, 0)), 2);
        assert_eq!(g.count((5, 0)), 2);
        assert_eq!(g.count((2, 0)), 0);
    }

    #[test]
    fn blob_area_matches_shoelace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = 40;
            let c = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let vs: Vec<Vec2> = (0..n)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    let r = 1.0 + 0.25 * (3.0 * a).sin() + rng.random_range(-0.05..0.05);
                    c + Vec2::new(a.cos(), a.sin()) * r
                })
                .collect();
            let blob = ObstacleBoundary::new(vs, c).unwrap();
            let cs = blob.diameter() / 50.0;
            let mut g = AmapsGrid::covering(Vec2::repeat(-5.0), Vec2::repeat(5.0), cs, 10).unwrap();
            g.rasterize(&blob).unwrap();
            let area = g.counts().len() as f64 * cs * cs;
            assert!((area - blob.area()).abs() / blob.area() < 0.05);
        }
    }

    #[test]
    fn single_cell_is_its_own_avoid_point() {
        let mut g = AmapsGrid::new(1.0, (-5, -5), 10, 10, 10).unwrap();
        let tiny = square(Vec2::new(2.2, 2.2), 0.6);
        g.rasterize(&tiny).unwrap();
        assert_eq!(g.counts().len(), 1);
        let p = nearest_avoid_point(&Vec2::zeros(), &g, &tiny, &[]).unwrap();
        assert_eq!(p, Vec2::new(2.5, 2.5));
    }

    #[test]
    fn convex_avoid_point_is_close_to_exact() {
        let disc = ObstacleBoundary::regular_polygon(Vec2::new(3.0, 1.0), 1.0, 64, 0.0);
        let mut g = AmapsGrid::covering(Vec2::repeat(-1.0), Vec2::repeat(6.0), 0.1, 10).unwrap();
        g.rasterize(&disc).unwrap();
        for pos in [Vec2::zeros(), Vec2::new(3.0, -1.5), Vec2::new(5.5, 3.0)] {
            let p = nearest_avoid_point(&pos, &g, &disc, &[]).unwrap();
            let (d, _) = crate::geometry::dist_to_obstacle(&pos, &disc).unwrap();
            assert!(((p - pos).norm() - d).abs() <= 0.1 * 2f64.sqrt() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn hidden_obstacle_has_no_avoid_point() {
        let far = square(Vec2::new(5.0, -0.5), 1.0);
        let wall = ObstacleBoundary::new(
            vec![Vec2::new(2.0, -5.0), Vec2::new(2.5, -5.0), Vec2::new(2.5, 5.0), Vec2::new(2.0, 5.0)],
            Vec2::new(2.25, 0.0),
        )
        .unwrap();
        let mut g = AmapsGrid::covering(Vec2::repeat(-1.0), Vec2::repeat(8.0), 0.1, 10).unwrap();
        g.rasterize(&far).unwrap();
        assert_eq!(nearest_avoid_point(&Vec2::zeros(), &g, &far, &[wall]).unwrap_err(), AmapsError::NoCoveredCells);
    }

    #[test]
    fn forecast_radius_examples() {
        let still = DeformationTrace { r_min_history: vec![Vec2::new(1.0, 1.0); 6], count: 5 };
        assert_eq!(forecast_radius(&still).unwrap(), 0.0);
        let drift = DeformationTrace {
            r_min_history: (0..6).map(|k| Vec2::new(0.3 * k as f64, 0.0)).collect(),
            count: 5,
        };
        assert!((forecast_radius(&drift).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(forecast_radius(&DeformationTrace::default()).unwrap_err(), AmapsError::EmptyTrace);
    }

    #[test]
    fn far_from_obstacle_heads_for_goal() {
        let obs = ObstacleBoundary::regular_polygon(Vec2::new(7.0, 2.0), 0.8, 32, 0.0);
        let mut g = AmapsGrid::covering(Vec2::repeat(-1.0), Vec2::repeat(11.0), 0.1, 10).unwrap();
        g.rasterize(&obs).unwrap();
        let mut trace = DeformationTrace::default();
        let st = UuvState { position: Vec2::zeros(), velocity: Vec2::zeros() };
        let s = uuv_navigate_step(
            &st, &Vec2::new(10.0, 10.0), &g, &obs, &[], &mut trace, None, &AmapsConfig::default(), &CAPS, 0.1,
        )
        .unwrap();
        assert_eq!(s.tag, StrategyTag::Approach);
        assert!((s.waypoint - Vec2::new(0.05, 0.05)).norm() < 1e-12);
        assert_eq!(trace.count, 0);
    }

    #[test]
    fn still_outline_is_skirted() {
        let obs = ObstacleBoundary::regular_polygon(Vec2::new(2.0, 0.0), 0.5, 32, 0.0);
        let mut g = AmapsGrid::covering(Vec2::repeat(-3.0), Vec2::repeat(6.0), 0.1, 10).unwrap();
        let cfg = AmapsConfig::default();
        let mut trace = DeformationTrace::default();
        let mut st = UuvState { position: Vec2::new(0.5, 0.05), velocity: Vec2::zeros() };
        let mut latched = None;
        for _ in 0..100 {
            g.rasterize(&obs).unwrap();
            let s = uuv_navigate_step(&st, &Vec2::new(5.0, 0.0), &g, &obs, &[], &mut trace, latched, &cfg, &CAPS, 0.1)
                .unwrap();
            assert!((s.waypoint - st.position).norm() <= 2f64.sqrt() * CAPS.v_max * 0.1 + 1e-9);
            latched = s.latched;
            st.position = s.waypoint;
            assert!(!obs.contains(&st.position));
            let (d, _) = crate::geometry::dist_to_obstacle(&st.position, &obs).unwrap();
            assert!(d > 0.0);
        }
        assert!(st.position.x > 2.5, "{}", st.position);
    }

    proptest! {
        #[test]
        fn forecast_radius_is_mean_displacement(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30),
            frac in 0.0f64..1.0,
        ) {
            let hist: Vec<Vec2> = pts.iter().map(|(x, y)| Vec2::new(*x, *y)).collect();
            let count = 1 + ((hist.len() - 2) as f64 * frac) as usize;
            let trace = DeformationTrace { r_min_history: hist.clone(), count };
            let n = hist.len();
            let mut sum = 0.0;
            for k in 1..=count {
                sum += (hist[n - k] - hist[n - k - 1]).norm();
            }
            let r = forecast_radius(&trace).unwrap();
            prop_assert!((r - sum / count as f64).abs() < 1e-12);
            prop_assert!(r >= 0.0);
        }

        #[test]
        fn clamped_steps_respect_component_bound(dx in -5.0f64..5.0, dy in -5.0f64..5.0, dt in 0.01f64..2.0) {
            let d = clamp_displacement(Vec2::new(dx, dy), &CAPS, dt);
            prop_assert!(d.x.abs() <= CAPS.v_max * dt + 1e-12 && d.y.abs() <= CAPS.v_max * dt + 1e-12);
            prop_assert!(d.norm() <= 2f64.sqrt() * CAPS.v_max * dt + 1e-9);
        }
    }
}
