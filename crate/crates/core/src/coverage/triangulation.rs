//! Waypoints on the vertices of an equilateral triangular lattice of side
//! √3·R. Every point of a lattice triangle lies within R (the circumradius)
//! of the nearest triangle vertex, so discs of radius R at the vertices cover
//! the plane; a vertex is kept when its Voronoi hexagon meets the region.

use super::{CoverageError, LatticeParams, Region, WaypointSet};
use crate::geometry::{point_in_polygon, segments_intersect, Vec2, Vec3};
use nalgebra::Matrix2;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

/// Triangle side for coverage radius `r`.
pub fn lattice_side(r: f64) -> f64 {
    3f64.sqrt() * r
}

fn basis(side: f64, lambda: f64) -> (Vec2, Vec2) {
    let e1 = Vec2::new(lambda.cos(), lambda.sin()) * side;
    let a = lambda + FRAC_PI_3;
    let e2 = Vec2::new(a.cos(), a.sin()) * side;
    (e1, e2)
}

fn polygons_meet(a: &[Vec2], b: &[Vec2]) -> bool {
    if a.iter().any(|p| point_in_polygon(p, b)) || b.iter().any(|p| point_in_polygon(p, a)) {
        return true;
    }
    (0..a.len()).any(|i| {
        let (p, q) = (a[i], a[(i + 1) % a.len()]);
        (0..b.len()).any(|j| segments_intersect(&p, &q, &b[j], &b[(j + 1) % b.len()]))
    })
}

/// Vertex hexagon: the six centers of the triangles around `v`.
fn hexagon(v: &Vec2, r: f64, lambda: f64) -> Vec<Vec2> {
    (0..6)
        .map(|k| {
            let a = lambda + FRAC_PI_6 + k as f64 * FRAC_PI_3;
            v + Vec2::new(a.cos(), a.sin()) * r
        })
        .collect()
}

/// Lattice vertices (side √3·r, rotated by λ, through (x0, y0)) whose
/// hexagons meet the region, all at altitude `z`.
pub fn triangulate_region(region: &Region, r: f64, params: LatticeParams, z: f64) -> Result<WaypointSet, CoverageError> {
    if !(r > 0.0) {
        return Err(CoverageError::InvalidParameter(format!("radius {r} must be positive")));
    }
    if !(0.0..FRAC_PI_3).contains(&params.lambda) {
        return Err(CoverageError::InvalidParameter(format!("lattice rotation {} outside [0, π/3)", params.lambda)));
    }
    let side = lattice_side(r);
    let (e1, e2) = basis(side, params.lambda);
    let inv = Matrix2::from_columns(&[e1, e2]).try_inverse().expect("lattice basis is independent");
    let anchor = Vec2::new(params.x0, params.y0);
    let (lo, hi) = region.outline.bounding_box();
    let (lo, hi) = (lo - Vec2::repeat(r), hi + Vec2::repeat(r));
    let corners = [lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)];
    let ij: Vec<Vec2> = corners.iter().map(|c| inv * (c - anchor)).collect();
    let i_min = ij.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let i_max = ij.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let j_min = ij.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let j_max = ij.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let outline = region.outline.vertices();
    let mut points = Vec::new();
    for j in j_min..=j_max {
        for i in i_min..=i_max {
            let v = anchor + e1 * i as f64 + e2 * j as f64;
            if v.x < lo.x || v.x > hi.x || v.y < lo.y || v.y > hi.y {
                continue;
            }
            // slightly shrunk so a hexagon touching the region at one corner is skipped
            if polygons_meet(&hexagon(&v, r * (1.0 - 1e-9), params.lambda), outline) {
                points.push(Vec3::new(v.x, v.y, z));
            }
        }
    }
    if points.is_empty() {
        return Err(CoverageError::EmptyRegion);
    }
    Ok(WaypointSet { points, coverage_radius: r, lattice: params })
}

/// Fewest waypoints over a coarse search of lattice rotation (16 steps) and
/// anchor (steps of r/4 across one lattice cell).
pub fn minimal_triangulation(region: &Region, r: f64, z: f64) -> Result<WaypointSet, CoverageError> {
    let side = lattice_side(r);
    let steps = (side / (r / 4.0)).ceil() as usize;
    let mut candidates = Vec::new();
    for l in 0..16 {
        let lambda = l as f64 * FRAC_PI_3 / 16.0;
        let (e1, e2) = basis(side, lambda);
        for a in 0..steps {
            for b in 0..steps {
                let o = e1 * (a as f64 / steps as f64) + e2 * (b as f64 / steps as f64);
                candidates.push(LatticeParams { lambda, x0: o.x, y0: o.y });
            }
        }
    }
    candidates
        .par_iter()
        .map(|p| triangulate_region(region, r, *p, z))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .min_by_key(|w| w.points.len())
        .ok_or(CoverageError::EmptyRegion)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCheck {
    pub covered: bool,
    pub uncovered: Vec<Vec2>,
    pub samples: usize,
}

/// Region sample points on a `step` grid anchored at the outline's lower-left
/// bounding corner; boundary points count as inside.
pub fn sample_region(region: &Region, step: f64) -> Vec<Vec2> {
    let (lo, hi) = region.outline.bounding_box();
    let nx = ((hi.x - lo.x) / step + 1e-9).floor() as usize;
    let ny = ((hi.y - lo.y) / step + 1e-9).floor() as usize;
    let ring = region.outline.vertices();
    (0..=ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..=nx).filter_map(move |i| {
                let p = lo + Vec2::new(i as f64 * step, j as f64 * step);
                let on_edge = (0..ring.len()).any(|k| {
                    let q = crate::geometry::closest_on_segment(&p, &ring[k], &ring[(k + 1) % ring.len()]);
                    (q - p).norm() < 1e-9
                });
                (on_edge || point_in_polygon(&p, ring)).then_some(p)
            })
        })
        .collect()
}

struct Buckets {
    size: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(points: &[Vec2], size: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(((p.x / size).floor() as i64, (p.y / size).floor() as i64)).or_default().push(i);
        }
        Self { size, cells }
    }

    fn near(&self, p: &Vec2) -> impl Iterator<Item = usize> + '_ {
        let (ci, cj) = ((p.x / self.size).floor() as i64, (p.y / self.size).floor() as i64);
        (-1..=1)
            .flat_map(move |di| (-1..=1).map(move |dj| (ci + di, cj + dj)))
            .filter_map(|c| self.cells.get(&c))
            .flatten()
            .copied()
    }
}

/// Terrain between a waypoint and a ground point does not rise above the
/// sight line, probed every metre.
fn line_of_sight(region: &Region, from: &Vec3, to: &Vec2) -> bool {
    let Some(h) = &region.heightmap else { return true };
    let ground = Vec3::new(to.x, to.y, h.elevation(to));
    let n = ((from - ground).norm().ceil() as usize).max(1);
    (1..n).all(|k| {
        let p = ground + (from - ground) * (k as f64 / n as f64);
        h.elevation(&p.xy()) <= p.z + 1e-9
    })
}

/// Brute-force disc membership over the sampled region.
pub fn check_full_coverage(ws: &WaypointSet, region: &Region, step: f64) -> CoverageCheck {
    let samples = sample_region(region, step);
    let planar = ws.planar();
    let r = ws.coverage_radius;
    let buckets = Buckets::new(&planar, r);
    let uncovered: Vec<Vec2> = samples
        .par_iter()
        .filter(|p| {
            !buckets
                .near(p)
                .any(|i| (planar[i] - *p).norm() <= r + 1e-9 && line_of_sight(region, &ws.points[i], p))
        })
        .copied()
        .collect();
    CoverageCheck { covered: uncovered.is_empty(), uncovered, samples: samples.len() }
}

/// For each waypoint, the number of samples no other waypoint covers; these
/// are exactly the samples its removal would leave uncovered.
pub fn sole_coverage_counts(ws: &WaypointSet, region: &Region, step: f64) -> Vec<usize> {
    let samples = sample_region(region, step);
    let planar = ws.planar();
    let r = ws.coverage_radius;
    let buckets = Buckets::new(&planar, r);
    let sole: Vec<usize> = samples
        .par_iter()
        .filter_map(|p| {
            let mut seen = buckets
                .near(p)
                .filter(|i| (planar[*i] - *p).norm() <= r + 1e-9 && line_of_sight(region, &ws.points[*i], p));
            match (seen.next(), seen.next()) {
                (Some(i), None) => Some(i),
                _ => None,
            }
        })
        .collect();
    let mut counts = vec![0; ws.points.len()];
    for i in sole {
        counts[i] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::Heightmap;
    use crate::geometry::ObstacleBoundary;
    use proptest::prelude::*;

    const ORIGIN: LatticeParams = LatticeParams { lambda: 0.0, x0: 0.0, y0: 0.0 };

    #[test]
    fn unit_lattice_side_is_root_three() {
        assert!((lattice_side(1.0) - 3f64.sqrt()).abs() < 1e-15);
        // circumradius of an equilateral triangle is side/√3
        for r in [0.5, 1.0, 30.0, 60.0] {
            assert!((lattice_side(r) / 3f64.sqrt() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_vertices_cover_their_triangle() {
        let r = 1.0;
        let (e1, e2) = basis(lattice_side(r), 0.3);
        let tri = [Vec2::zeros(), e1, e2];
        let centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
        assert!(((centroid - tri[0]).norm() - r).abs() < 1e-12);
        for a in 0..=20 {
            for b in 0..=(20 - a) {
                let p = tri[0] + (e1 * a as f64 + e2 * b as f64) / 20.0;
                assert!(tri.iter().any(|v| (v - p).norm() <= r + 1e-12));
            }
        }
    }

    #[test]
    fn sole_coverage_matches_explicit_deletion() {
        let region = Region::rectangle(200.0, 150.0);
        let ws = triangulate_region(&region, 30.0, LatticeParams { lambda: 0.4, x0: 7.0, y0: -3.0 }, 30.0).unwrap();
        let counts = sole_coverage_counts(&ws, &region, 1.0);
        for (i, count) in counts.iter().enumerate() {
            assert_eq!(check_full_coverage(&ws.without(i), &region, 1.0).uncovered.len(), *count);
        }
    }

    #[test]
    fn square_region_is_covered() {
        let region = Region::rectangle(300.0, 300.0);
        let ws = triangulate_region(&region, 30.0, ORIGIN, 30.0).unwrap();
        let check = check_full_coverage(&ws, &region, 1.0);
        assert_eq!(check.samples, 301 * 301);
        assert!(check.covered, "{} uncovered", check.uncovered.len());
    }

    #[test]
    fn inscribed_disc_is_covered_by_its_center() {
        let center = Vec2::new(50.0, 50.0);
        let outline = ObstacleBoundary::regular_polygon(center, 20.0, 128, 0.0);
        let region = Region::new(outline, None).unwrap();
        let ws = WaypointSet {
            points: vec![Vec3::new(50.0, 50.0, 20.0)],
            coverage_radius: 20.0,
            lattice: ORIGIN,
        };
        assert!(check_full_coverage(&ws, &region, 0.5).covered);
    }

    #[test]
    fn removing_a_waypoint_uncovers_ground_around_it() {
        let region = Region::rectangle(300.0, 300.0);
        let ws = triangulate_region(&region, 30.0, ORIGIN, 30.0).unwrap();
        let inner = ws.points.iter().position(|p| (p.xy() - Vec2::new(150.0, 150.0)).norm() < 60.0).unwrap();
        let check = check_full_coverage(&ws.without(inner), &region, 1.0);
        assert!(!check.covered);
        let removed = ws.points[inner].xy();
        assert!(check.uncovered.iter().all(|p| (p - removed).norm() <= 30.0 + 1e-9));
    }

    #[test]
    fn shrunken_radius_leaves_triangle_centers_uncovered() {
        let region = Region::rectangle(300.0, 300.0);
        let mut ws = triangulate_region(&region, 30.0, ORIGIN, 30.0).unwrap();
        ws.coverage_radius *= 0.99;
        let check = check_full_coverage(&ws, &region, 0.25);
        assert!(!check.covered);
        // every gap sits near a triangle center, farther than 0.99 R from all vertices
        let side = lattice_side(30.0);
        for p in check.uncovered.iter().take(50) {
            let nearest = ws.planar().iter().map(|v| (v - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest > 0.99 * 30.0 && nearest <= side / 3f64.sqrt() + 1e-9);
        }
    }

    #[test]
    fn hidden_ground_is_not_covered() {
        let mut h = Heightmap::flat(Vec2::zeros(), 1.0, 41, 41, 0.0);
        // a tall wall between the waypoint and the far half
        for j in 0..41 {
            h.set(20, j, 50.0);
        }
        let region = Region::new(Region::rectangle(40.0, 40.0).outline, Some(h)).unwrap();
        let ws = WaypointSet { points: vec![Vec3::new(5.0, 20.0, 10.0)], coverage_radius: 100.0, lattice: ORIGIN };
        let check = check_full_coverage(&ws, &region, 2.0);
        assert!(check.uncovered.iter().all(|p| p.x >= 20.0));
        assert!(check.uncovered.iter().any(|p| p.x > 30.0));
    }

    #[test]
    fn search_never_uses_more_waypoints_than_the_origin_lattice() {
        let region = Region::rectangle(200.0, 120.0);
        let base = triangulate_region(&region, 30.0, ORIGIN, 30.0).unwrap();
        let best = minimal_triangulation(&region, 30.0, 30.0).unwrap();
        assert!(best.points.len() <= base.points.len());
        assert!(check_full_coverage(&best, &region, 1.0).covered);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn any_lattice_covers_any_star_region(
            radii in proptest::collection::vec(20.0f64..60.0, 5..12),
            lambda in 0.0f64..FRAC_PI_3,
            x0 in -50.0f64..50.0,
            y0 in -50.0f64..50.0,
            r in 8.0f64..25.0,
        ) {
            let n = radii.len();
            let vs: Vec<Vec2> = radii
                .iter()
                .enumerate()
                .map(|(k, rad)| {
                    let a = std::f64::consts::TAU * k as f64 / n as f64;
                    Vec2::new(60.0 + rad * a.cos(), 60.0 + rad * a.sin())
                })
                .collect();
            let region = Region::new(ObstacleBoundary::from_vertices(vs).unwrap(), None).unwrap();
            let ws = triangulate_region(&region, r, LatticeParams { lambda, x0, y0 }, 10.0).unwrap();
            prop_assert!(check_full_coverage(&ws, &region, 1.0).covered);
        }
    }
}
