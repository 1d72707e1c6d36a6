//! Synthetic signals and trajectories with known ground truth, plus an
//! exhaustive segmentation oracle for small instances.
//!
//! All randomness comes from `ChaCha8Rng` seeded with the spec's seed, so the
//! same spec produces the same output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::{
    effective_sigma_floor, improves, ParameterCount, Segmentation, SegmentationConfig,
    MIN_SEGMENT_LEN,
};
use crate::trajectory::{DataPoint, Trajectory};

/// Largest signal the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_LEN: usize = 40;
/// Largest segment count the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_SEGMENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPiece {
    pub len: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub segments: Vec<GaussianPiece>,
    pub seed: u64,
}

impl PiecewiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidConfig(
                "piecewise spec has no segments".into(),
            ));
        }
        for piece in &self.segments {
            if piece.len < MIN_SEGMENT_LEN
                || !piece.mean.is_finite()
                || !(piece.std.is_finite() && piece.std >= 0.0)
            {
                return Err(Error::InvalidConfig(format!("invalid piece {piece:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSignal {
    pub values: Vec<f64>,
    /// 1-based start index of every piece.
    pub truth_cuts: Vec<usize>,
}

pub fn gen_piecewise_gaussian(spec: &PiecewiseSpec) -> Result<SyntheticSignal> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.segments.iter().map(|p| p.len).sum());
    let mut truth_cuts = Vec::with_capacity(spec.segments.len());
    for piece in &spec.segments {
        truth_cuts.push(values.len() + 1);
        let normal = Normal::new(piece.mean, piece.std).expect("validated std");
        values.extend((0..piece.len).map(|_| normal.sample(&mut rng)));
    }
    Ok(SyntheticSignal { values, truth_cuts })
}

/// One driving regime, sampled at 1 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Number of points the regime lasts.
    pub duration_s: usize,
    pub target_speed_kmh: f64,
    /// Degrees per second, positive clockwise.
    pub turn_rate_deg_s: f64,
    /// Standard deviation of the acceleration noise, m/s².
    #[serde(default)]
    pub acc_noise: f64,
    /// Standard deviation of the per-second heading noise, degrees.
    #[serde(default)]
    pub heading_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regimes: Vec<Regime>,
    pub seed: u64,
    #[serde(default = "default_origin")]
    pub origin: (f64, f64),
    #[serde(default)]
    pub initial_heading: f64,
    /// Bound on |acceleration|, m/s².
    #[serde(default = "default_max_acc")]
    pub max_acc: f64,
}

fn default_origin() -> (f64, f64) {
    (40.0, -83.0)
}

fn default_max_acc() -> f64 {
    3.0
}

impl RegimeSpec {
    pub fn new(regimes: Vec<Regime>, seed: u64) -> Self {
        Self {
            regimes,
            seed,
            origin: default_origin(),
            initial_heading: 0.0,
            max_acc: default_max_acc(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::InvalidConfig("regime spec has no regimes".into()));
        }
        for r in &self.regimes {
            let finite = [
                r.target_speed_kmh,
                r.turn_rate_deg_s,
                r.acc_noise,
                r.heading_noise,
            ]
            .iter()
            .all(|v| v.is_finite());
            if r.duration_s < 2
                || !finite
                || r.target_speed_kmh < 0.0
                || r.acc_noise < 0.0
                || r.heading_noise < 0.0
            {
                return Err(Error::InvalidConfig(format!("invalid regime {r:?}")));
            }
        }
        if !(self.max_acc.is_finite() && self.max_acc > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "max_acc must be > 0, got {}",
                self.max_acc
            )));
        }
        let (lat, lng) = self.origin;
        if !((-80.0..=80.0).contains(&lat) && (-180.0..=180.0).contains(&lng)) {
            return Err(Error::InvalidConfig(format!(
                "origin {:?} out of range",
                self.origin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrajectory {
    pub trajectory: Trajectory,
    /// 0-based index of the first point of every regime after the first.
    pub boundaries: Vec<usize>,
}

impl SyntheticTrajectory {
    /// Where each regime change should appear in the PMD signal, as 1-based
    /// cut indexes (the first, 1, included).
    ///
    /// A regime starting at point `b` first acts on the transition `b -> b+1`,
    /// which is signal value `b + 1` (1-based).
    pub fn truth_signal_cuts(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.boundaries.iter().map(|b| b + 1))
            .collect()
    }
}

pub const METERS_PER_DEGREE_LAT: f64 = 111_320.0;

/// Dead-reckoned 1 Hz trajectory.
///
/// The point at `t` reports the speed and heading held during `t -> t+1` and
/// the acceleration that takes the speed to its value at `t+1`. Positions use
/// a flat-earth approximation around the origin latitude.
pub fn gen_synthetic_trajectory(spec: &RegimeSpec, id: &str) -> Result<SyntheticTrajectory> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lat0, lng0) = spec.origin;
    let meters_per_deg_lng = METERS_PER_DEGREE_LAT * lat0.to_radians().cos();

    let mut speed = spec.regimes[0].target_speed_kmh;
    let mut heading = spec.initial_heading.rem_euclid(360.0);
    let (mut north, mut east) = (0.0f64, 0.0f64);
    let mut points = Vec::new();
    let mut boundaries = Vec::new();

    for (r, regime) in spec.regimes.iter().enumerate() {
        if r > 0 {
            boundaries.push(points.len());
        }
        let acc_noise = Normal::new(0.0, regime.acc_noise).expect("validated");
        let heading_noise = Normal::new(0.0, regime.heading_noise).expect("validated");
        for _ in 0..regime.duration_s {
            let wanted = (regime.target_speed_kmh - speed) / 3.6 + acc_noise.sample(&mut rng);
            let mut acc = wanted.clamp(-spec.max_acc, spec.max_acc);
            if speed + acc * 3.6 < 0.0 {
                acc = -speed / 3.6;
            }

            points.push(DataPoint {
                t: points.len() as u64,
                lat: lat0 + north / METERS_PER_DEGREE_LAT,
                lng: lng0 + east / meters_per_deg_lng,
                speed,
                acc,
                heading,
            });

            let meters = speed / 3.6;
            north += meters * heading.to_radians().cos();
            east += meters * heading.to_radians().sin();
            speed = (speed + acc * 3.6).max(0.0);
            heading = (heading + regime.turn_rate_deg_s + heading_noise.sample(&mut rng))
                .rem_euclid(360.0);
            // rem_euclid can round up to exactly 360.0
            if heading >= 360.0 {
                heading = 0.0;
            }
        }
    }

    Ok(SyntheticTrajectory {
        trajectory: Trajectory::new(id, points),
        boundaries,
    })
}

/// A random 2 to 4 regime drive: cruising, speed changes and turns with mild
/// noise. Deterministic in `seed`.
pub fn random_regime_spec(seed: u64) -> RegimeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(2..=4);
    let regimes = (0..count)
        .map(|_| Regime {
            duration_s: rng.random_range(20..=60),
            target_speed_kmh: 10.0 * rng.random_range(1..=11) as f64,
            turn_rate_deg_s: [0.0, 0.0, 3.0, -3.0, 8.0, -8.0][rng.random_range(0..6)],
            acc_noise: rng.random_range(0.0..0.5),
            heading_noise: rng.random_range(0.0..2.0),
        })
        .collect();
    RegimeSpec {
        initial_heading: 5.0 * rng.random_range(0..72) as f64,
        ..RegimeSpec::new(regimes, seed)
    }
}

/// Exhaustive maximum-likelihood split into `n` segments.
///
/// Enumerates cut vectors in lexicographic order and keeps the first one that
/// no later vector strictly improves on, which matches the dynamic program's
/// tie rule.
pub fn brute_force_segment(
    values: &[f64],
    n: usize,
    cfg: &SegmentationConfig,
) -> Result<Segmentation> {
    cfg.validate()?;
    if values.len() > BRUTE_FORCE_MAX_LEN || n > BRUTE_FORCE_MAX_SEGMENTS {
        return Err(Error::TooLarge(format!(
            "N = {} (max {BRUTE_FORCE_MAX_LEN}), n = {n} (max {BRUTE_FORCE_MAX_SEGMENTS})",
            values.len()
        )));
    }
    if values.len() < MIN_SEGMENT_LEN {
        return Err(Error::TooShort {
            len: values.len(),
            min: MIN_SEGMENT_LEN,
        });
    }
    let max = values.len() / MIN_SEGMENT_LEN;
    if n == 0 || n > max {
        return Err(Error::InvalidSegmentCount { n, max });
    }

    let floor = effective_sigma_floor(values, cfg);
    let params: ParameterCount = cfg.parameter_count;
    let mut best: Option<Segmentation> = None;
    let mut cuts = vec![1];
    enumerate_cuts(values.len(), n, &mut cuts, &mut |cuts| {
        let seg = Segmentation::from_cuts(values, cuts.to_vec(), floor, n, params)
            .expect("enumerated cuts are feasible");
        let better = match &best {
            None => true,
            Some(b) => improves(seg.total_loglik, b.total_loglik),
        };
        if better {
            best = Some(seg);
        }
    });
    Ok(best.expect("n <= N/2 has a feasible cut vector"))
}

/// Visit every feasible 1-based cut vector of length `n` in lexicographic order.
fn enumerate_cuts(len: usize, n: usize, cuts: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if cuts.len() == n {
        if len + 1 - cuts[n - 1] >= MIN_SEGMENT_LEN {
            visit(cuts);
        }
        return;
    }
    let last = *cuts.last().expect("starts with 1");
    let remaining = n - cuts.len();
    // the new start leaves room for `remaining` segments after `last`
    let hi = len + 1 - remaining * MIN_SEGMENT_LEN;
    for start in (last + MIN_SEGMENT_LEN)..=hi {
        cuts.push(start);
        enumerate_cuts(len, n, cuts, visit);
        cuts.pop();
    }
}
