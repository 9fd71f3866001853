//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use nalgebra::{DMatrix, DVector};
use navkit::amaps::{forecast_radius, DeformationTrace};
use navkit::bpnn::sensors::{synth_dataset, SceneConfig};
use navkit::bpnn::{error_band, errors, fit, train, Mlp, Sample, TrainConfig};
use navkit::coverage::{
    check_full_coverage, check_safety_margins, cluster_waypoints, lattice_side, plan_coverage, sole_coverage_counts,
    spiral_alternating_tour, tour_length, FovSpec, PlanConfig, Region, RegionSpec,
};
use navkit::geometry::{ObstacleBoundary, Vec2, Vec3};
use navkit::planner2d::in_way;
use navkit::predictor::{fit_ar, fit_ar_order, predict_next, ArPredictor, DEFAULT_MAX_ORDER};
use navkit::sim::{random_scenario2d, run, CompiledScenario, RunOutcome, Scenario, Termination, MAX_DEFORMATION_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Slack for comparing logged controls against the caps.
const BOUND_EPS: f64 = 1e-9;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn compile(name: &str) -> CompiledScenario {
    Scenario::load(&scenarios_dir().join(name)).unwrap().compile().unwrap()
}

fn timed_run(c: &CompiledScenario) -> (RunOutcome, Duration) {
    let t = Instant::now();
    let out = run(c);
    (out, t.elapsed())
}

/// Clearance from each logged position, recomputed from the obstacle tracks.
fn every_step_clear(c: &CompiledScenario, out: &RunOutcome) -> Result<(), String> {
    for (k, r) in out.log.records.iter().enumerate() {
        let p = Vec3::new(r.x, r.y, r.z.unwrap_or(0.0));
        for t in &c.tracks {
            let d = t.clearance(&p, k);
            ensure(d > 0.0, format!("step {k}: clearance {d} to obstacle {}", t.id))?;
        }
    }
    Ok(())
}

fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let t = if ab.norm_squared() > 0.0 { ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

fn outline_distance(p: &Vec2, o: &ObstacleBoundary) -> f64 {
    let v = o.vertices();
    (0..v.len()).map(|i| point_segment_distance(p, &v[i], &v[(i + 1) % v.len()])).fold(f64::INFINITY, f64::min)
}

fn single_obstacle() -> Check {
    let c = compile("ch2_single_obstacle.json");
    ensure(c.start.xy() == Vec2::new(0.0, 0.0) && c.goal.xy() == Vec2::new(10.0, 10.0), "start/goal")?;
    ensure(c.scenario.caps.v_max == 0.707 && c.scenario.caps.u_max == 1.414, "caps")?;
    let (out, elapsed) = timed_run(&c);
    let s = &out.summary;
    ensure(s.termination == Termination::Reached, format!("terminated by {:?}", s.termination))?;
    every_step_clear(&c, &out)?;
    ensure(s.path_length <= 16.4, format!("path length {:.3} > 16.4", s.path_length))?;
    ensure(elapsed < Duration::from_secs(1), format!("runtime {elapsed:?}"))?;
    Ok(format!("path {:.3} m, min clearance {:.3}, {} steps, {elapsed:.2?}", s.path_length, s.min_clearance, s.steps))
}

fn six_obstacles() -> Check {
    let c = compile("ch2_six_obstacles.json");
    let (out, _) = timed_run(&c);
    ensure(out.summary.termination == Termination::Reached, format!("terminated by {:?}", out.summary.termination))?;
    ensure(out.summary.violations.is_empty(), format!("{:?}", out.summary.violations.first()))?;
    let caps = c.scenario.caps;
    let switch = c.scenario.planner_config.reactive2d.switch_distance;
    let goal = c.goal.xy();
    let mut avoiding = 0;
    // the final record is the arrival check and carries no planning decision
    let planned = &out.log.records[..out.log.records.len() - 1];
    for (k, r) in planned.iter().enumerate() {
        ensure(
            r.v >= -BOUND_EPS && r.v <= caps.v_max + BOUND_EPS && r.omega.abs() <= caps.u_max + BOUND_EPS,
            format!("step {k}: control ({}, {}) outside caps", r.v, r.omega),
        )?;
        let p = Vec2::new(r.x, r.y);
        let candidates: Vec<(usize, f64)> = c
            .tracks
            .iter()
            .map(|t| (t.id, t.outline(k)))
            .map(|(id, o)| (id, outline_distance(&p, &o), in_way(&p, &goal, &o)))
            .filter(|(_, d, way)| *way && *d <= switch)
            .map(|(id, d, _)| (id, d))
            .collect();
        let nearest = candidates.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
        match r.obstacle_id {
            None => ensure(candidates.is_empty(), format!("step {k}: no target but {candidates:?} in the way"))?,
            Some(id) => {
                avoiding += 1;
                let d = candidates.iter().find(|(i, _)| *i == id).map(|(_, d)| *d);
                ensure(
                    d.is_some_and(|d| d <= nearest + 1e-9),
                    format!("step {k}: target {id} is not the nearest in-way obstacle ({candidates:?})"),
                )?;
            }
        }
    }
    ensure(avoiding > 0, "the run never avoided anything")?;
    Ok(format!("{} steps, {avoiding} with an avoidance target, path {:.3} m", out.summary.steps, out.summary.path_length))
}

fn random_suite() -> Check {
    let t = Instant::now();
    let n = 200;
    let mut reached = 0;
    for seed in 0..n {
        let c = random_scenario2d(seed).compile().unwrap();
        let out = run(&c);
        match out.summary.termination {
            Termination::Reached => reached += 1,
            Termination::Horizon => {}
            other => return Err(format!("seed {seed}: terminated by {other:?}")),
        }
        every_step_clear(&c, &out).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let elapsed = t.elapsed();
    ensure(reached as f64 >= 0.95 * n as f64, format!("only {reached}/{n} reached"))?;
    ensure(elapsed < Duration::from_secs(60), format!("runtime {elapsed:?}"))?;
    Ok(format!("{reached}/{n} reached, no collisions, {elapsed:.2?}"))
}

fn spatial_run() -> Check {
    let c = compile("ch3_spatial.json");
    let caps = c.scenario.caps;
    for t in &c.tracks {
        for k in 0..c.horizon {
            let (v, w) = (t.velocity(k).norm(), t.spin(k).norm());
            ensure(v > 0.0 && v < caps.v_max && w < caps.u_max, format!("obstacle {} step {k}: speed {v}, spin {w}", t.id))?;
        }
    }
    let (out, _) = timed_run(&c);
    let s = &out.summary;
    ensure(s.termination == Termination::Reached, format!("terminated by {:?}", s.termination))?;
    every_step_clear(&c, &out)?;
    let heading = s.max_heading_residual.unwrap();
    let ortho = s.max_orthogonality_residual.unwrap();
    ensure(heading < 1e-9 && ortho < 1e-9, format!("residuals {heading:e}, {ortho:e}"))?;

    let predictor = ArPredictor::default();
    let v = predictor.predict_vec3(&vec![Vec3::new(0.5, 0.5, 0.0); 20]);
    ensure(v == Vec3::new(0.5, 0.5, 0.0), format!("predicted {v:?}"))?;
    let spin = predictor.predict_scalar(&[0.0; 20]);
    ensure(spin == 0.0, format!("predicted spin {spin}"))?;
    let track = &c.tracks[0];
    let k = 30;
    let p = predictor.predict_vec3(track.velocity_history(k));
    ensure((p - track.velocity(k)).norm() < 1e-12, format!("scripted obstacle predicted {p:?}"))?;
    Ok(format!("path {:.3} m, residuals {heading:.1e} / {ortho:.1e}, predictor (0.5, 0.5)", s.path_length))
}

fn ar_series(coeffs: &[f64], init: &[f64], n: usize) -> Vec<f64> {
    let mut s = init.to_vec();
    while s.len() < n {
        let m = s.len();
        s.push(coeffs.iter().enumerate().map(|(i, a)| a * s[m - 1 - i]).sum());
    }
    s
}

fn predictor_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_coeff: f64 = 0.0;
    for _ in 0..50 {
        let (a1, a2) = (rng.random_range(0.1..0.7), rng.random_range(-0.4..0.25));
        let s = ar_series(&[a1, a2], &[rng.random_range(0.5..2.0), rng.random_range(-2.0..-0.5)], 50);
        let m = fit_ar(&s, DEFAULT_MAX_ORDER).map_err(|e| e.to_string())?;
        ensure(m.order == 2, format!("({a1}, {a2}) selected order {}", m.order))?;
        let err = (m.coefficients[0] - a1).abs().max((m.coefficients[1] - a2).abs()).max(m.intercept.abs());
        worst_coeff = worst_coeff.max(err);
        ensure(err < 1e-6, format!("({a1}, {a2}) recovered as {m:?}"))?;
    }

    let mut worst_ramp: f64 = 0.0;
    for _ in 0..50 {
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0));
        let s: Vec<f64> = (0..20).map(|t| a + b * t as f64).collect();
        let m = fit_ar(&s, DEFAULT_MAX_ORDER).map_err(|e| e.to_string())?;
        let next = predict_next(&m, &s).map_err(|e| e.to_string())?;
        let err = (next - (a + b * 20.0)).abs();
        worst_ramp = worst_ramp.max(err);
        ensure(err < 1e-6, format!("ramp {a} + {b} t continued to {next}"))?;
    }

    let mut worst_normal: f64 = 0.0;
    let mut s = vec![0.0, 0.0];
    for _ in 0..200 {
        let m = s.len();
        let e: f64 = rng.random_range(-1.0..1.0);
        s.push(0.3 + 0.5 * s[m - 1] - 0.2 * s[m - 2] + e);
    }
    for order in 1..=4 {
        let m = fit_ar_order(&s, order).map_err(|e| e.to_string())?;
        let rows = s.len() - order;
        let x = DMatrix::from_fn(rows, order + 1, |r, c| if c == 0 { 1.0 } else { s[order + r - c] });
        let y = DVector::from_fn(rows, |r, _| s[order + r]);
        let beta = DVector::from_iterator(order + 1, std::iter::once(m.intercept).chain(m.coefficients.iter().copied()));
        let g = x.transpose() * (y - &x * beta);
        worst_normal = worst_normal.max(g.amax());
    }
    ensure(worst_normal < 1e-8, format!("normal-equation residual {worst_normal:e}"))?;
    Ok(format!("AR(2) error {worst_coeff:.1e}, ramp error {worst_ramp:.1e}, normal-equation residual {worst_normal:.1e}"))
}

fn uuv_run() -> Check {
    let c = compile("ch4_uuv_deforming.json");
    ensure(c.start.xy() == Vec2::new(0.0, 0.0) && c.goal.xy() == Vec2::new(10.0, 10.0), "start/goal")?;
    let mut deforms = false;
    for t in &c.tracks {
        for k in 0..c.horizon {
            let (a, b) = (t.scale(k), t.scale(k + 1));
            let rate = (b.0 / a.0 - 1.0).abs().max((b.1 / a.1 - 1.0).abs());
            deforms |= rate > 0.0;
            ensure(rate <= MAX_DEFORMATION_RATE + 1e-12, format!("obstacle {} step {k}: deformation {rate}", t.id))?;
        }
    }
    ensure(deforms, "obstacle never deforms")?;
    let (out, _) = timed_run(&c);
    ensure(out.summary.termination == Termination::Reached, format!("terminated by {:?}", out.summary.termination))?;
    every_step_clear(&c, &out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut trace = DeformationTrace::default();
        for _ in 0..rng.random_range(2..40) {
            if rng.random_bool(0.1) {
                trace.reset();
            }
            trace.record(Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)));
        }
        if trace.count == 0 {
            trace.record(Vec2::new(rng.random_range(-5.0..5.0), 0.0));
        }
        let h = &trace.r_min_history;
        let n = h.len();
        let mut direct = 0.0;
        for i in n - trace.count..n {
            direct += (h[i] - h[i - 1]).norm();
        }
        direct /= trace.count as f64;
        let got = forecast_radius(&trace).map_err(|e| e.to_string())?;
        worst = worst.max((got - direct).abs());
    }
    ensure(worst <= 1e-12, format!("forecast radius differs from direct sum by {worst:e}"))?;
    Ok(format!(
        "path {:.3} m, min clearance {:.3}, forecast radius error {worst:.1e}",
        out.summary.path_length, out.summary.min_clearance
    ))
}

fn bpnn() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst_grad: f64 = 0.0;
    for trial in 0..20 {
        let sizes = [9, rng.random_range(2..16), 2];
        let net = Mlp::random(&sizes, 100 + trial).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..4.0)).collect();
        let target = [rng.random_range(0.0..4.0), rng.random_range(1.0..9.0)];
        let analytic = net.backprop(&x, &target).flatten();
        let p = net.parameters();
        let h = 1e-5;
        for (i, a) in analytic.iter().enumerate() {
            let (mut up, mut down) = (net.clone(), net.clone());
            let mut q = p.clone();
            q[i] += h;
            up.set_parameters(&q);
            q[i] -= 2.0 * h;
            down.set_parameters(&q);
            let numeric = (up.loss(&x, &target) - down.loss(&x, &target)) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
            worst_grad = worst_grad.max(rel);
        }
    }
    ensure(worst_grad < 1e-4, format!("gradient relative error {worst_grad:e}"))?;

    let w: Vec<f64> = (0..9).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut draw = |n: usize| -> Vec<Sample> {
        (0..n)
            .map(|_| {
                let r: [f64; 9] = std::array::from_fn(|_| rng.random_range(0.5..3.5));
                Sample { readings: r, d_min: r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.2, index: 5.0 }
            })
            .collect()
    };
    // enough samples to overdetermine the 146 weights, otherwise the net can
    // interpolate the training set and bend between samples
    let train_set = draw(600);
    let held = draw(200);
    let x = DMatrix::from_fn(train_set.len(), 10, |i, j| if j == 9 { 1.0 } else { train_set[i].readings[j] });
    let y = DVector::from_iterator(train_set.len(), train_set.iter().map(|s| s.d_min));
    let beta = x.svd(true, true).solve(&y, 1e-12).map_err(|e| e.to_string())?;
    let cfg = TrainConfig { max_epochs: 300, patience: 50, ..Default::default() };
    let (net, _) = fit(&Mlp::sonar(12, 1), &train_set[..480], &train_set[480..], &cfg);
    let worst_ls = held
        .iter()
        .map(|s| {
            let ls = s.readings.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>() + beta[9];
            (net.forward(&s.readings)[0] - ls).abs()
        })
        .fold(0.0, f64::max);
    ensure(worst_ls < 0.01, format!("trained net differs from least squares by {worst_ls}"))?;

    let scene = SceneConfig::default();
    let mut widths = [Vec::new(), Vec::new()];
    for seed in 0..5u64 {
        let held = synth_dataset(&scene, 500, 1000 + seed);
        for (slot, n) in [50, 150].into_iter().enumerate() {
            let data = synth_dataset(&scene, n, seed);
            let (net, _) = train(&Mlp::sonar(12, seed), &data, &TrainConfig { seed, ..Default::default() })
                .map_err(|e| e.to_string())?;
            let (lo, hi) = error_band(&errors(&net, &held.samples), 0);
            widths[slot].push(hi - lo);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (w50, w150) = (mean(&widths[0]), mean(&widths[1]));
    ensure(w150 < w50, format!("band did not narrow: {w50:.3} at 50, {w150:.3} at 150"))?;
    let widest = widths[1].iter().copied().fold(0.0, f64::max);
    ensure(widest < 1.0, format!("band at 150 groups is {widest:.3} m wide"))?;
    Ok(format!(
        "gradient error {worst_grad:.1e}, least squares gap {worst_ls:.1e}, mean band {w50:.3} -> {w150:.3} m (widest {widest:.3})"
    ))
}

fn coverage_square() -> Check {
    let t = Instant::now();
    let region = Region::rectangle(600.0, 600.0);
    let fov = FovSpec::new(FRAC_PI_2, 0.0, 500.0).map_err(|e| e.to_string())?;
    let plan = plan_coverage(&region, &fov, 60.0, &PlanConfig::default()).map_err(|e| e.to_string())?;
    let check = check_full_coverage(&plan.waypoints, &region, 1.0);
    let elapsed = t.elapsed();
    ensure((plan.altitude.z - 60.0).abs() < 1e-12, format!("altitude {}", plan.altitude.z))?;
    ensure((lattice_side(60.0) / 3f64.sqrt() - 60.0).abs() < 1e-12, "circumradius identity")?;
    ensure(check.covered && check.uncovered.is_empty(), format!("{} uncovered points", check.uncovered.len()))?;
    ensure(elapsed < Duration::from_secs(5), format!("runtime {elapsed:?}"))?;
    let sole = sole_coverage_counts(&plan.waypoints, &region, 1.0);
    ensure(sole.iter().all(|c| *c >= 1), "a waypoint covers nothing on its own")?;
    for i in 0..plan.waypoints.points.len() {
        let without = check_full_coverage(&plan.waypoints.without(i), &region, 1.0);
        ensure(!without.covered, format!("waypoint {i} is redundant"))?;
    }
    Ok(format!(
        "{} waypoints, {} samples covered, every waypoint needed, {elapsed:.2?}",
        plan.waypoints.points.len(),
        check.samples
    ))
}

/// Shortest closed tour by enumerating the orders that start at point 0.
fn brute_force_tour(points: &[Vec3]) -> f64 {
    fn permute(rest: &mut Vec<usize>, k: usize, points: &[Vec3], best: &mut f64) {
        if k == rest.len() {
            let mut order = vec![0];
            order.extend(rest.iter());
            *best = best.min(tour_length(points, &order));
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            permute(rest, k + 1, points, best);
            rest.swap(k, i);
        }
    }
    let mut rest: Vec<usize> = (1..points.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut rest, 0, points, &mut best);
    best
}

fn tour_quality() -> Check {
    let fov = FovSpec::new(FRAC_PI_2, 0.0, 500.0).map_err(|e| e.to_string())?;
    let mut worst_ratio: f64 = 0.0;
    let mut clusters_checked = 0;
    for (w, h, k) in [(600.0, 600.0, 8), (300.0, 200.0, 2), (400.0, 400.0, 4), (500.0, 250.0, 3), (250.0, 250.0, 1)] {
        let region = Region::rectangle(w, h);
        let plan = plan_coverage(&region, &fov, 60.0, &PlanConfig { clusters: k, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let ws = &plan.waypoints;
        let ring = ws.coverage_radius * 3f64.sqrt();
        for cluster in cluster_waypoints(ws, k, 0).map_err(|e| e.to_string())? {
            if cluster.len() < 3 || cluster.len() > 8 {
                continue;
            }
            let pts: Vec<Vec3> = cluster.iter().map(|i| ws.points[*i]).collect();
            let spiral = tour_length(&pts, &spiral_alternating_tour(&pts, &ws.points[0], ring));
            let ratio = spiral / brute_force_tour(&pts);
            worst_ratio = worst_ratio.max(ratio);
            clusters_checked += 1;
        }
        for path in &plan.paths {
            let (c0, c1) = path.join_residuals();
            ensure(c0 < 1e-6 && c1 < 1e-6, format!("{w}x{h}: join residuals {c0:e}, {c1:e}"))?;
            for (v, p) in path.visit_points.iter().zip(&path.waypoints) {
                ensure((v - p).norm() <= path.delta + 1e-9, format!("{w}x{h}: visit point {v:?} beyond δ of {p:?}"))?;
            }
        }
    }
    ensure(clusters_checked > 0, "no cluster of at most 8 waypoints")?;
    ensure(worst_ratio <= 1.5, format!("spiral tour is {worst_ratio:.3}x optimal"))?;

    let mut regions = 0;
    for name in ["coverage_600.json", "coverage_hills.json"] {
        let spec = RegionSpec::load(&scenarios_dir().join("regions").join(name)).map_err(|e| e.to_string())?;
        let region = spec.region().map_err(|e| e.to_string())?;
        let fov = FovSpec::new(FRAC_PI_2, spec.altitude_band[0], spec.altitude_band[1]).map_err(|e| e.to_string())?;
        let plan = plan_coverage(&region, &fov, 60.0, &PlanConfig { clusters: 2, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let pts = &plan.waypoints.points;
        for i in 0..pts.len() {
            let clear = pts[i].z - region.ground(&pts[i].xy());
            ensure(clear >= spec.clearance_margin, format!("{name}: waypoint {i} clearance {clear}"))?;
            for j in i + 1..pts.len() {
                let d = (pts[i] - pts[j]).norm();
                ensure(d >= spec.separation_margin, format!("{name}: waypoints {i}, {j} only {d} apart"))?;
            }
        }
        for path in &plan.paths {
            let m = check_safety_margins(path, &plan.waypoints, &region, spec.separation_margin, spec.clearance_margin)
                .map_err(|e| e.to_string())?;
            ensure(m.ok(), format!("{name}: {:?}", m.violations.first()))?;
        }
        regions += 1;
    }
    Ok(format!("{clusters_checked} clusters, worst spiral/optimal {worst_ratio:.3}, margins hold on {regions} regions"))
}

fn determinism() -> Check {
    let mut names: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    ensure(!names.is_empty(), "no bundled scenarios")?;
    for p in &names {
        let once = run(&Scenario::load(p).unwrap().compile().unwrap()).log.to_csv();
        let twice = run(&Scenario::load(p).unwrap().compile().unwrap()).log.to_csv();
        ensure(once.as_bytes() == twice.as_bytes(), format!("{} differs between runs", p.display()))?;
    }
    Ok(format!("{} scenarios reproduced byte for byte", names.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("single obstacle run", single_obstacle),
        ("six obstacle targets", six_obstacles),
        ("random planar suite", random_suite),
        ("spatial run and predictor", spatial_run),
        ("predictor oracles", predictor_oracles),
        ("deforming obstacle run", uuv_run),
        ("sonar network", bpnn),
        ("square coverage", coverage_square),
        ("tour quality and margins", tour_quality),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
