//! Plain SVG plots of runs and coverage plans. Spatial runs are drawn as their
//! ground projection.

use super::log::TrajectoryLog;
use super::scenario::CompiledScenario;
use crate::coverage::{CoveragePlan, Region};
use crate::geometry::Vec2;
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const PAD: f64 = 20.0;

struct Frame {
    lo: Vec2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Vec2>) -> Self {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in points {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        if !lo.x.is_finite() {
            (lo, hi) = (Vec2::zeros(), Vec2::repeat(1.0));
        }
        let span = (hi - lo).map(|v| v.max(1e-9));
        let scale = (WIDTH - 2.0 * PAD) / span.x.max(span.y);
        Self { lo, scale, height: span.y * scale + 2.0 * PAD }
    }

    /// SVG y grows downward.
    fn map(&self, p: &Vec2) -> (f64, f64) {
        (PAD + (p.x - self.lo.x) * self.scale, self.height - PAD - (p.y - self.lo.y) * self.scale)
    }

    fn points(&self, pts: &[Vec2]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn open(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{:.0}\" viewBox=\"0 0 {WIDTH} {:.2}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            self.height, self.height
        )
    }
}

/// Robot path, obstacle outlines every `every` steps (faded by age), and
/// start and goal markers.
pub fn render_run(c: &CompiledScenario, log: &TrajectoryLog, every: usize) -> String {
    let every = every.max(1);
    let steps = log.records.len().max(1);
    let snapshots: Vec<usize> = (0..steps).step_by(every).collect();
    let outlines: Vec<(usize, Vec<Vec2>)> = c
        .tracks
        .iter()
        .flat_map(|t| {
            snapshots.iter().map(move |&k| {
                let pts = if t.is_planar() { t.outline(k).vertices().to_vec() } else { t.surface(k).iter().map(|p| p.xy()).collect() };
                (k, pts)
            })
        })
        .collect();
    let path: Vec<Vec2> = log.records.iter().map(|r| Vec2::new(r.x, r.y)).collect();
    let frame = Frame::fit(
        path.iter().copied().chain([c.start.xy(), c.goal.xy()]).chain(outlines.iter().flat_map(|(_, o)| o.iter().copied())),
    );
    let mut out = frame.open();
    for (k, pts) in &outlines {
        let opacity = 0.15 + 0.6 * (*k as f64 / steps as f64);
        if c.dimension() == 2 {
            let _ = writeln!(
                out,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"green\" stroke-opacity=\"{opacity:.2}\"/>",
                frame.points(pts)
            );
        } else {
            for p in pts.iter().step_by(4) {
                let (x, y) = frame.map(p);
                let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"0.8\" fill=\"green\" fill-opacity=\"{opacity:.2}\"/>");
            }
        }
    }
    let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\"/>", frame.points(&path));
    for (p, color, label) in [(c.start.xy(), "black", "S"), (c.goal.xy(), "red", "E")] {
        let (x, y) = frame.map(&p);
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"/>");
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{label}</text>", x + 6.0, y - 6.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Region outline, coverage discs, waypoints and the smoothed tours.
pub fn render_coverage(region: &Region, plan: &CoveragePlan) -> String {
    let r = plan.waypoints.coverage_radius;
    let frame = Frame::fit(
        region
            .outline
            .vertices()
            .iter()
            .copied()
            .chain(plan.waypoints.points.iter().flat_map(|p| [p.xy() - Vec2::repeat(r), p.xy() + Vec2::repeat(r)])),
    );
    let mut out = frame.open();
    let _ = writeln!(
        out,
        "<polygon points=\"{}\" fill=\"#eef\" stroke=\"black\"/>",
        frame.points(region.outline.vertices())
    );
    for p in &plan.waypoints.points {
        let (x, y) = frame.map(&p.xy());
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"orange\" fill-opacity=\"0.08\" stroke=\"orange\" stroke-opacity=\"0.4\"/>",
            r * frame.scale
        );
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"black\"/>");
    }
    let colors = ["blue", "red", "green", "purple", "brown", "teal"];
    for (i, path) in plan.paths.iter().enumerate() {
        // sample step is in segment-parameter units
        let step = path.segments.len() as f64 / 400.0;
        let pts: Vec<Vec2> = path.sample(step).iter().map(|(_, p)| p.xy()).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>",
            frame.points(&pts),
            colors[i % colors.len()]
        );
    }
    out.push_str("</svg>\n");
    out
}
