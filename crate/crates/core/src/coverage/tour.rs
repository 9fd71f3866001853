//! Clustering and closed-tour ordering of waypoints.

use super::{CoverageError, WaypointSet};
use crate::geometry::{normalize_angle, Vec2, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

const KMEANS_ITERATIONS: usize = 100;

/// Seeded k-means (k-means++ start) on planar coordinates. Clusters are
/// returned ordered by their smallest member index.
pub fn cluster_waypoints(ws: &WaypointSet, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, CoverageError> {
    let pts = ws.planar();
    let n = pts.len();
    if k == 0 || k > n {
        return Err(CoverageError::KTooLarge { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![pts[rng.random_range(0..n)]];
    while centers.len() < k {
        let d2: Vec<f64> =
            pts.iter().map(|p| centers.iter().map(|c| (p - c).norm_squared()).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            centers.len()
        };
        centers.push(pts[next]);
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (i, p) in pts.iter().enumerate() {
            let best = (0..k)
                .min_by(|a, b| (p - centers[*a]).norm_squared().total_cmp(&(p - centers[*b]).norm_squared()))
                .expect("k >= 1");
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        // an emptied cluster takes the point farthest from its center
        for c in 0..k {
            if !assign.contains(&c) {
                let far = (0..n)
                    .max_by(|a, b| {
                        let da = (pts[*a] - centers[assign[*a]]).norm_squared();
                        let db = (pts[*b] - centers[assign[*b]]).norm_squared();
                        da.total_cmp(&db)
                    })
                    .expect("n >= 1");
                assign[far] = c;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec2> = pts.iter().zip(&assign).filter(|(_, a)| **a == c).map(|(p, _)| p).collect();
            *center = members.iter().copied().sum::<Vec2>() / members.len() as f64;
        }
        if !changed {
            break;
        }
    }
    let mut clusters: Vec<Vec<usize>> = (0..k).map(|c| (0..n).filter(|i| assign[*i] == c).collect()).collect();
    clusters.sort_by_key(|c| c[0]);
    Ok(clusters)
}

/// Closed tour length through `points` in `order`.
pub fn tour_length(points: &[Vec3], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    (0..order.len()).map(|i| (points[order[(i + 1) % order.len()]] - points[order[i]]).norm()).sum()
}

/// Ring sweep about the cluster centroid: rings are distance bands of
/// `ring_width`, outermost first; each ring is swept by angle starting where
/// the previous one ended, alternating counter-clockwise and clockwise.
pub fn spiral_alternating_tour(points: &[Vec3], start: &Vec3, ring_width: f64) -> Vec<usize> {
    if points.len() <= 1 {
        return (0..points.len()).collect();
    }
    let c = points.iter().map(|p| p.xy()).sum::<Vec2>() / points.len() as f64;
    let polar: Vec<(usize, f64, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = p.xy() - c;
            (i, d.norm(), d.y.atan2(d.x))
        })
        .collect();
    let ring_of = |r: f64| (r / ring_width).floor() as i64;
    let mut rings: Vec<i64> = polar.iter().map(|(_, r, _)| ring_of(*r)).collect();
    rings.sort_unstable();
    rings.dedup();
    let s = start.xy() - c;
    let mut phi = if s.norm() > 0.0 { s.y.atan2(s.x) } else { 0.0 };
    let mut order = Vec::with_capacity(points.len());
    for (k, ring) in rings.iter().rev().enumerate() {
        let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut members: Vec<&(usize, f64, f64)> = polar.iter().filter(|(_, r, _)| ring_of(*r) == *ring).collect();
        let sweep = |a: f64| (dir * normalize_angle(a - phi)).rem_euclid(TAU);
        members.sort_by(|a, b| sweep(a.2).total_cmp(&sweep(b.2)).then(b.1.total_cmp(&a.1)).then(a.0.cmp(&b.0)));
        order.extend(members.iter().map(|m| m.0));
        phi = members.last().expect("non-empty ring").2;
    }
    order
}

/// Greedy closed tour from `first`.
pub fn nearest_neighbor_tour(points: &[Vec3], first: usize) -> Vec<usize> {
    let mut left: Vec<usize> = (0..points.len()).filter(|i| *i != first).collect();
    let mut order = vec![first];
    while !left.is_empty() {
        let cur = points[*order.last().expect("seeded")];
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| (points[*a.1] - cur).norm().total_cmp(&(points[*b.1] - cur).norm()))
            .expect("non-empty");
        order.push(left.remove(pos));
    }
    order
}

/// Segment-reversal improvement until no move shortens the closed tour.
pub fn two_opt(points: &[Vec3], mut order: Vec<usize>) -> Vec<usize> {
    let n = order.len();
    if n < 4 {
        return order;
    }
    let d = |a: usize, b: usize| (points[a] - points[b]).norm();
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, e) = (order[i], order[i + 1], order[j], order[(j + 1) % n]);
                if d(a, c) + d(b, e) < d(a, b) + d(c, e) - 1e-12 {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::LatticeParams;

    fn ws(points: Vec<Vec3>) -> WaypointSet {
        WaypointSet { points, coverage_radius: 1.0, lattice: LatticeParams { lambda: 0.0, x0: 0.0, y0: 0.0 } }
    }

    fn brute_force(points: &[Vec3]) -> f64 {
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

    #[test]
    fn k_of_one_and_k_of_n() {
        let pts: Vec<Vec3> = (0..7).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, 0.0)).collect();
        assert_eq!(cluster_waypoints(&ws(pts.clone()), 1, 3).unwrap(), vec![(0..7).collect::<Vec<_>>()]);
        let singles = cluster_waypoints(&ws(pts.clone()), 7, 3).unwrap();
        assert_eq!(singles, (0..7).map(|i| vec![i]).collect::<Vec<_>>());
        assert_eq!(cluster_waypoints(&ws(pts), 8, 3).unwrap_err(), CoverageError::KTooLarge { k: 8, n: 7 });
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pts = Vec::new();
        for k in 0..40 {
            let c = if k % 2 == 0 { Vec2::new(0.0, 0.0) } else { Vec2::new(500.0, 300.0) };
            pts.push(Vec3::new(c.x + rng.random_range(-5.0..5.0), c.y + rng.random_range(-5.0..5.0), 60.0));
        }
        for seed in 0..5 {
            let cl = cluster_waypoints(&ws(pts.clone()), 2, seed).unwrap();
            assert_eq!(cl[0], (0..40).step_by(2).collect::<Vec<_>>());
            assert_eq!(cl[1], (1..40).step_by(2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn single_waypoint_tour_is_trivial() {
        assert_eq!(spiral_alternating_tour(&[Vec3::new(1.0, 2.0, 3.0)], &Vec3::zeros(), 1.0), vec![0]);
    }

    #[test]
    fn grid_cluster_beats_loose_nearest_neighbor_bound() {
        let side = 3f64.sqrt() * 60.0;
        let pts: Vec<Vec3> =
            (0..9).map(|k| Vec3::new((k % 3) as f64 * side, (k / 3) as f64 * side * 0.9, 60.0)).collect();
        let order = spiral_alternating_tour(&pts, &Vec3::new(-100.0, -100.0, 60.0), side);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
        let nn = nearest_neighbor_tour(&pts, order[0]);
        assert!(tour_length(&pts, &order) <= 1.25 * tour_length(&pts, &nn));
    }

    #[test]
    fn lattice_clusters_are_near_optimal() {
        use crate::coverage::{triangulate_region, Region};
        let region = Region::rectangle(600.0, 600.0);
        let ws = triangulate_region(&region, 60.0, LatticeParams { lambda: 0.0, x0: 0.0, y0: 0.0 }, 60.0).unwrap();
        let k = ws.points.len().div_ceil(6);
        let clusters = cluster_waypoints(&ws, k, 1).unwrap();
        let side = 3f64.sqrt() * 60.0;
        let mut checked = 0;
        for c in clusters.iter().filter(|c| c.len() <= 8 && c.len() >= 3) {
            let pts: Vec<Vec3> = c.iter().map(|i| ws.points[*i]).collect();
            let order = spiral_alternating_tour(&pts, &ws.points[0], side);
            assert!(tour_length(&pts, &order) <= 1.5 * brute_force(&pts) + 1e-9);
            checked += 1;
        }
        assert!(checked > 3);
    }

    #[test]
    fn two_opt_reaches_optimum_on_convex_sets() {
        let pts: Vec<Vec3> = (0..8)
            .map(|k| {
                let a = TAU * ((k * 3) % 8) as f64 / 8.0;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let order = two_opt(&pts, (0..8).collect());
        assert!((tour_length(&pts, &order) - brute_force(&pts)).abs() < 1e-9);
    }
}
