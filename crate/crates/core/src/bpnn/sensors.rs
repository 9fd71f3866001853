//! Nine-sonar front array, reading normalization and synthetic scenes.
//!
//! Robot frame: +Y forward, +Z up. S1 sits at the origin looking along +Y;
//! S2..S9 ring it on a convex front surface, set back and tilted outward.

use super::BpnnError;
use crate::geometry::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const SENSOR_COUNT: usize = 9;
/// Reading reported when nothing is hit.
pub const DEFAULT_MAX_RANGE: f64 = 6.0;
/// Distance of the calibration wall in front of S1 (m).
pub const DEFAULT_CALIBRATION_DISTANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    /// Position relative to S1.
    pub offset: Vec3,
    /// Unit boresight direction.
    pub boresight: Vec3,
}

/// Ring slot (0..8, counter-clockwise) of sensors S2..S9. Walking the ring
/// visits 2,4,6,8,9,7,5,3 so neighbouring sensors differ by at most two in
/// index, which keeps the index output smooth in the obstacle direction.
const RING_SLOT: [usize; 8] = [0, 7, 1, 6, 2, 5, 3, 4];

/// S1 in the center, the rest on a ring of `ring_radius`, `setback` behind S1
/// and tilted outward by `tilt`.
pub fn ring_layout(ring_radius: f64, setback: f64, tilt: f64) -> [SensorMount; SENSOR_COUNT] {
    let mut out = [SensorMount { offset: Vec3::zeros(), boresight: Vec3::y() }; SENSOR_COUNT];
    for (k, m) in out.iter_mut().enumerate().skip(1) {
        let az = RING_SLOT[k - 1] as f64 * TAU / 8.0;
        let radial = Vec3::new(az.cos(), 0.0, az.sin());
        m.offset = radial * ring_radius - Vec3::y() * setback;
        m.boresight = (Vec3::y() * tilt.cos() + radial * tilt.sin()).normalize();
    }
    out
}

pub fn default_layout() -> [SensorMount; SENSOR_COUNT] {
    ring_layout(0.15, 0.03, 15f64.to_radians())
}

/// Coefficients that map each sensor's reading of a wall facing S1 at
/// `reference` onto S1's own reading of that wall.
pub fn calibrate(mounts: &[SensorMount; SENSOR_COUNT], reference: f64) -> [f64; SENSOR_COUNT] {
    let mut coeffs = [1.0; SENSOR_COUNT];
    for (c, m) in coeffs.iter_mut().zip(mounts) {
        // wall plane y = reference
        let raw = (reference - m.offset.y) / m.boresight.y;
        *c = reference / raw;
    }
    coeffs[0] = 1.0;
    coeffs
}

/// Readings brought to S1's reference by the adaptive coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorArray {
    pub readings: [f64; SENSOR_COUNT],
    pub coefficients: [f64; SENSOR_COUNT],
}

impl SensorArray {
    /// Smallest reading and its 1-based sensor index; ties go to the lower index.
    pub fn min_reading(&self) -> (f64, usize) {
        let mut best = (self.readings[0], 1);
        for (i, r) in self.readings.iter().enumerate().skip(1) {
            if *r < best.0 {
                best = (*r, i + 1);
            }
        }
        best
    }
}

pub fn normalize_readings(raw: &[f64; SENSOR_COUNT], coeffs: &[f64; SENSOR_COUNT]) -> Result<SensorArray, BpnnError> {
    if let Some(i) = raw.iter().position(|r| !(*r >= 0.0)) {
        return Err(BpnnError::NegativeReading { sensor: i + 1, value: raw[i] });
    }
    let mut readings = [0.0; SENSOR_COUNT];
    for i in 0..SENSOR_COUNT {
        readings[i] = coeffs[i] * raw[i];
    }
    Ok(SensorArray { readings, coefficients: *coeffs })
}

/// Star-shaped blob: radius along unit direction `u` is
/// `base * (1 + amplitude * sin(lobes * azimuth + phase) * cos(elevation))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: Vec3,
    pub base_radius: f64,
    /// Relative deformation, at most 0.1.
    pub amplitude: f64,
    pub lobes: f64,
    pub phase: f64,
}

impl Blob {
    pub fn radius_along(&self, u: &Vec3) -> f64 {
        let az = u.y.atan2(u.x);
        let elev = u.z.clamp(-1.0, 1.0).asin();
        self.base_radius * (1.0 + self.amplitude * (self.lobes * az + self.phase).sin() * elev.cos())
    }

    fn inside_margin(&self, p: &Vec3) -> f64 {
        let d = p - self.center;
        let n = d.norm();
        if n == 0.0 {
            return -self.base_radius;
        }
        n - self.radius_along(&(d / n))
    }

    /// First hit distance along the ray, if any.
    pub fn ray_cast(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let bound = self.base_radius * (1.0 + self.amplitude.abs());
        let oc = origin - self.center;
        let b = dir.dot(&oc);
        let disc = b * b - (oc.norm_squared() - bound * bound);
        if disc < 0.0 {
            return None;
        }
        let t0 = (-b - disc.sqrt()).max(0.0);
        let t1 = -b + disc.sqrt();
        if t1 < 0.0 {
            return None;
        }
        let step = self.base_radius / 64.0;
        let mut prev = t0;
        if self.inside_margin(&(origin + dir * prev)) <= 0.0 {
            return Some(prev);
        }
        let mut t = t0;
        while t < t1 {
            t = (t + step).min(t1);
            if self.inside_margin(&(origin + dir * t)) <= 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.inside_margin(&(origin + dir * mid)) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(hi);
            }
            prev = t;
        }
        None
    }
}

/// Raw readings of the array against a set of blobs.
pub fn sense(mounts: &[SensorMount; SENSOR_COUNT], blobs: &[Blob], max_range: f64) -> [f64; SENSOR_COUNT] {
    let mut raw = [max_range; SENSOR_COUNT];
    for (r, m) in raw.iter_mut().zip(mounts) {
        for b in blobs {
            if let Some(t) = b.ray_cast(&m.offset, &m.boresight) {
                *r = r.min(t);
            }
        }
    }
    raw
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SceneKind {
    /// One deforming obstacle.
    Single,
    /// Two deforming obstacles in the way.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub mounts: [SensorMount; SENSOR_COUNT],
    pub calibration_distance: f64,
    pub max_range: f64,
    /// Forward distance of obstacle centers (m).
    pub depth: (f64, f64),
    /// Half-width of the lateral and vertical spread of obstacle centers (m).
    pub spread: f64,
    pub radius: (f64, f64),
    pub max_deformation: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            mounts: default_layout(),
            calibration_distance: DEFAULT_CALIBRATION_DISTANCE,
            max_range: DEFAULT_MAX_RANGE,
            depth: (3.0, 5.0),
            spread: 0.8,
            radius: (1.5, 2.5),
            max_deformation: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub readings: [f64; SENSOR_COUNT],
    pub d_min: f64,
    /// 1-based sensor index, stored as a real for regression.
    pub index: f64,
}

impl Sample {
    pub fn from_array(a: &SensorArray) -> Self {
        let (d, i) = a.min_reading();
        Self { readings: a.readings, d_min: d, index: i as f64 }
    }

    pub fn target(&self) -> [f64; 2] {
        [self.d_min, self.index]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub seed: u64,
    pub samples: Vec<Sample>,
}

fn random_blob(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> Blob {
    Blob {
        center: Vec3::new(
            rng.random_range(-cfg.spread..=cfg.spread),
            rng.random_range(cfg.depth.0..=cfg.depth.1),
            rng.random_range(-cfg.spread..=cfg.spread),
        ),
        base_radius: rng.random_range(cfg.radius.0..=cfg.radius.1),
        amplitude: rng.random_range(0.0..=cfg.max_deformation),
        lobes: rng.random_range(2..=5) as f64,
        phase: rng.random_range(0.0..TAU),
    }
}

const MAX_REDRAWS: usize = 100;

/// Scene for sample `k`: even samples hold one obstacle, odd samples two.
pub fn scene_kind(k: usize) -> SceneKind {
    if k.is_multiple_of(2) {
        SceneKind::Single
    } else {
        SceneKind::Pair
    }
}

/// Sonar samples of randomly placed deforming obstacles, labeled with the
/// minimum normalized reading and the sensor achieving it.
pub fn synth_dataset(cfg: &SceneConfig, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = calibrate(&cfg.mounts, cfg.calibration_distance);
    let samples = (0..n)
        .map(|k| {
            // the obstacle should fill the field of view; redraw scenes a sensor misses
            let mut raw = [cfg.max_range; SENSOR_COUNT];
            for _ in 0..MAX_REDRAWS {
                let blobs: Vec<Blob> = match scene_kind(k) {
                    SceneKind::Single => vec![random_blob(&mut rng, cfg)],
                    SceneKind::Pair => vec![random_blob(&mut rng, cfg), random_blob(&mut rng, cfg)],
                };
                raw = sense(&cfg.mounts, &blobs, cfg.max_range);
                if raw.iter().all(|r| *r < cfg.max_range) {
                    break;
                }
            }
            let arr = normalize_readings(&raw, &coeffs).expect("ray lengths are non-negative");
            Sample::from_array(&arr)
        })
        .collect();
    Dataset { seed, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_coefficients_are_identity() {
        let raw = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];
        assert_eq!(normalize_readings(&raw, &[1.0; 9]).unwrap().readings, raw);
        assert_eq!(normalize_readings(&[0.0; 9], &calibrate(&default_layout(), 2.0)).unwrap().readings, [0.0; 9]);
        let mut bad = raw;
        bad[4] = -0.1;
        assert!(matches!(normalize_readings(&bad, &[1.0; 9]), Err(BpnnError::NegativeReading { sensor: 5, .. })));
    }

    #[test]
    fn setback_sensor_reads_like_s1_on_the_calibration_wall() {
        let mut mounts = [SensorMount { offset: Vec3::zeros(), boresight: Vec3::y() }; SENSOR_COUNT];
        mounts[3].offset = Vec3::new(0.2, -0.1, 0.0);
        mounts[6] = default_layout()[6];
        let reference = 1.7;
        let coeffs = calibrate(&mounts, reference);
        // ray to the plane y = reference, computed independently
        let wall = |m: &SensorMount| {
            let n = Vec3::y();
            (reference - m.offset.dot(&n)) / m.boresight.dot(&n)
        };
        let raw: [f64; 9] = std::array::from_fn(|i| wall(&mounts[i]));
        assert!((raw[3] - (reference + 0.1)).abs() < 1e-12);
        let arr = normalize_readings(&raw, &coeffs).unwrap();
        for r in arr.readings {
            assert!((r - reference).abs() < 1e-9);
        }
        assert_eq!(coeffs[0], 1.0);
    }

    #[test]
    fn ray_cast_matches_sphere_formula() {
        let b = Blob { center: Vec3::new(0.3, 3.0, -0.2), base_radius: 1.0, amplitude: 0.0, lobes: 3.0, phase: 0.0 };
        let o = Vec3::new(0.1, 0.0, 0.0);
        let d = Vec3::new(0.05, 1.0, 0.02).normalize();
        let oc = o - b.center;
        let bb = d.dot(&oc);
        let exact = -bb - (bb * bb - oc.norm_squared() + 1.0).sqrt();
        assert!((b.ray_cast(&o, &d).unwrap() - exact).abs() < 1e-9);
        assert!(b.ray_cast(&o, &(-d)).is_none());
    }

    #[test]
    fn dead_ahead_obstacle_is_seen_first_by_s1() {
        let b = Blob { center: Vec3::new(0.0, 3.0, 0.0), base_radius: 1.0, amplitude: 0.0, lobes: 3.0, phase: 0.0 };
        let cfg = SceneConfig::default();
        let raw = sense(&cfg.mounts, &[b], cfg.max_range);
        let arr = normalize_readings(&raw, &calibrate(&cfg.mounts, cfg.calibration_distance)).unwrap();
        let s = Sample::from_array(&arr);
        assert_eq!(s.index, 1.0);
        assert!((s.d_min - 2.0).abs() < 1e-9);
    }

    #[test]
    fn labels_are_min_and_argmin() {
        let ds = synth_dataset(&SceneConfig::default(), 200, 4);
        for s in &ds.samples {
            let (mut d, mut i) = (s.readings[0], 1);
            for (k, r) in s.readings.iter().enumerate() {
                if *r < d {
                    d = *r;
                    i = k + 1;
                }
            }
            assert_eq!(s.d_min, d);
            assert_eq!(s.index, i as f64);
        }
    }

    #[test]
    fn all_sensors_win_somewhere() {
        let ds = synth_dataset(&SceneConfig::default(), 1000, 9);
        let mut hist = [0usize; SENSOR_COUNT];
        for s in &ds.samples {
            hist[s.index as usize - 1] += 1;
        }
        assert!(hist.iter().all(|h| *h > 0), "{hist:?}");
    }

    #[test]
    fn synthesis_is_seeded() {
        let cfg = SceneConfig::default();
        assert_eq!(synth_dataset(&cfg, 30, 5), synth_dataset(&cfg, 30, 5));
        assert_ne!(synth_dataset(&cfg, 30, 5), synth_dataset(&cfg, 30, 6));
    }
}
