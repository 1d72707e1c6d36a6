//! Maximum-likelihood segmentation of a one-dimensional signal into Gaussian
//! pieces, with the number of pieces chosen by minimum description length.
//!
//! Cut indexes are 1-based: a segmentation into `n` pieces is
//! `[I_1 = 1, I_2, ..., I_n]`, where segment `i` covers `I_i..I_{i+1}` (end
//! exclusive). Every segment holds at least [`MIN_SEGMENT_LEN`] values.
//!
//! The dynamic program runs over suffixes: `best[i][k]` is the largest total
//! log-likelihood of cutting `values[i..]` into `k` segments. One table filled
//! up to `kmax` serves every `n <= kmax`, and each candidate segment's
//! likelihood costs O(1) through prefix sums of `x` and `x²`, so the full
//! sweep is O(kmax · N²).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmd::PmdSignal;

pub const MIN_SEGMENT_LEN: usize = 2;

/// Relative slack under which two log-likelihoods count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// How many free parameters a segmentation with `n` segments is charged for
/// in the description-length penalty `r_n / 2 · ln N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterCount {
    /// `r_n = 2n`: mean and standard deviation per segment.
    MeanAndSigma,
    /// `r_n = 3n - 1`: mean and standard deviation per segment plus the
    /// `n - 1` interior cut positions.
    #[default]
    MeanSigmaAndCuts,
}

impl ParameterCount {
    pub fn count(&self, n: usize) -> f64 {
        match self {
            ParameterCount::MeanAndSigma => 2.0 * n as f64,
            ParameterCount::MeanSigmaAndCuts => 3.0 * n as f64 - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Upper bound on the segment count is `floor(N / kmax_divisor)`.
    pub kmax_divisor: usize,
    /// Smallest upper bound on the segment count.
    pub kmax_floor: usize,
    /// Absolute lower bound on a segment's standard deviation.
    pub sigma_floor: f64,
    /// Multiplier on the signal's noise scale (see [`noise_scale`]) that also
    /// bounds a segment's standard deviation from below. Zero disables it.
    pub noise_floor_factor: f64,
    pub parameter_count: ParameterCount,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            kmax_divisor: 10,
            kmax_floor: 1,
            sigma_floor: 1e-6,
            noise_floor_factor: 1.0,
            parameter_count: ParameterCount::default(),
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kmax_divisor < 2 {
            return Err(Error::InvalidConfig(format!(
                "kmax_divisor must be >= 2, got {}",
                self.kmax_divisor
            )));
        }
        if !(self.sigma_floor.is_finite() && self.sigma_floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_floor must be finite and > 0, got {}",
                self.sigma_floor
            )));
        }
        if !(self.noise_floor_factor.is_finite() && self.noise_floor_factor >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_floor_factor must be finite and >= 0, got {}",
                self.noise_floor_factor
            )));
        }
        Ok(())
    }

    /// Largest segment count searched for a signal of `n_values` values.
    pub fn kmax(&self, n_values: usize) -> usize {
        let feasible = n_values / MIN_SEGMENT_LEN;
        self.kmax_floor
            .max((n_values / self.kmax_divisor).min(feasible))
            .min(feasible)
    }
}

/// Gaussian fit of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub mu: f64,
    /// Population (1/m) standard deviation, never below the floor in force.
    pub sigma: f64,
    pub len: usize,
    /// `Σ ln f(x | mu, sigma)` over the segment.
    pub loglik: f64,
}

fn gaussian_loglik(len: f64, sum_sq_dev: f64, sigma: f64) -> f64 {
    -len * (sigma.ln() + 0.5 * (2.0 * PI).ln()) - sum_sq_dev / (2.0 * sigma * sigma)
}

pub fn gaussian_mle(values: &[f64], sigma_floor: f64) -> Result<SegmentStats> {
    if values.len() < MIN_SEGMENT_LEN {
        return Err(Error::TooShort {
            len: values.len(),
            min: MIN_SEGMENT_LEN,
        });
    }
    let m = values.len() as f64;
    let mu = values.iter().sum::<f64>() / m;
    let sum_sq_dev: f64 = values.iter().map(|x| (x - mu).powi(2)).sum();
    let sigma = (sum_sq_dev / m).sqrt().max(sigma_floor);
    Ok(SegmentStats {
        mu,
        sigma,
        len: values.len(),
        loglik: gaussian_loglik(m, sum_sq_dev, sigma),
    })
}

/// Robust estimate of the point-to-point noise level.
///
/// `1.4826 · MAD(Δx) / √2` over first differences, which ignores the few large
/// differences at level shifts. When more than half the differences are
/// identical the MAD is zero and the RMS of the differences (over `√2`) is
/// used instead. Zero for constant signals.
pub fn noise_scale(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let center = median(&mut diffs);
    let mut deviations: Vec<f64> = diffs.iter().map(|d| (d - center).abs()).collect();
    let mad = median(&mut deviations);
    let scale = if mad > 0.0 {
        1.4826 * mad
    } else {
        (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt()
    };
    scale / std::f64::consts::SQRT_2
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

/// The standard-deviation floor actually applied to `values` under `cfg`.
pub fn effective_sigma_floor(values: &[f64], cfg: &SegmentationConfig) -> f64 {
    let relative = cfg.noise_floor_factor * noise_scale(values);
    if relative.is_finite() {
        cfg.sigma_floor.max(relative)
    } else {
        cfg.sigma_floor
    }
}

/// `candidate` beats `incumbent` by more than the tie tolerance.
pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    if incumbent == f64::NEG_INFINITY {
        return candidate > incumbent;
    }
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// 1-based start index of every segment; the first is always 1.
    pub cut_indexes: Vec<usize>,
    pub segments: Vec<SegmentStats>,
    pub total_loglik: f64,
    pub mdl: f64,
    /// Largest segment count that was searched.
    pub kmax: usize,
    /// Standard-deviation floor that was in force.
    pub sigma_floor: f64,
}

impl Segmentation {
    pub fn n(&self) -> usize {
        self.cut_indexes.len()
    }

    /// 0-based, end-exclusive value ranges of the segments.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let total: usize = self.segments.iter().map(|s| s.len).sum();
        ranges_of(&self.cut_indexes, total)
    }

    /// Build a segmentation from 1-based cuts, fitting each segment.
    pub(crate) fn from_cuts(
        values: &[f64],
        cut_indexes: Vec<usize>,
        sigma_floor: f64,
        kmax: usize,
        params: ParameterCount,
    ) -> Result<Self> {
        let segments = ranges_of(&cut_indexes, values.len())
            .into_iter()
            .map(|r| gaussian_mle(&values[r], sigma_floor))
            .collect::<Result<Vec<_>>>()?;
        let total_loglik = segments.iter().map(|s| s.loglik).sum();
        let mut seg = Segmentation {
            cut_indexes,
            segments,
            total_loglik,
            mdl: 0.0,
            kmax,
            sigma_floor,
        };
        seg.mdl = mdl_score(values.len(), &seg, params);
        Ok(seg)
    }

    /// Check the structural invariants against a signal of `n_values` values.
    pub fn validate(&self, n_values: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(format!("invalid segmentation: {msg}")));
        if self.cut_indexes.first() != Some(&1) {
            return fail("first cut index must be 1".into());
        }
        if self.cut_indexes.len() != self.segments.len() {
            return fail("cut and segment counts differ".into());
        }
        if self.n() > n_values / MIN_SEGMENT_LEN {
            return fail(format!("{} segments exceed floor(N/2)", self.n()));
        }
        let ranges = ranges_of(&self.cut_indexes, n_values);
        for (range, stats) in ranges.iter().zip(&self.segments) {
            if range.len() < MIN_SEGMENT_LEN || range.len() != stats.len {
                return fail(format!("segment {range:?} has bad length"));
            }
            if !stats.loglik.is_finite() || stats.sigma <= 0.0 {
                return fail(format!("segment {range:?} has degenerate statistics"));
            }
        }
        Ok(())
    }
}

fn ranges_of(cut_indexes: &[usize], n_values: usize) -> Vec<std::ops::Range<usize>> {
    cut_indexes
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let end = cut_indexes.get(i + 1).map_or(n_values, |&next| next - 1);
            (start - 1)..end
        })
        .collect()
}

/// `-(total log-likelihood) + r_n / 2 · ln N`.
pub fn mdl_score(n_values: usize, seg: &Segmentation, params: ParameterCount) -> f64 {
    -seg.total_loglik + params.count(seg.n()) / 2.0 * (n_values as f64).ln()
}

/// O(1) Gaussian log-likelihood of any slice, from prefix sums.
struct PrefixLikelihood {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    floor_sq: f64,
}

impl PrefixLikelihood {
    fn new(values: &[f64], sigma_floor: f64) -> Self {
        // centering keeps x² sums small and limits cancellation
        let center = values.iter().sum::<f64>() / values.len() as f64;
        let mut sum = Vec::with_capacity(values.len() + 1);
        let mut sum_sq = Vec::with_capacity(values.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        sum.push(s);
        sum_sq.push(q);
        for x in values {
            let y = x - center;
            s += y;
            q += y * y;
            sum.push(s);
            sum_sq.push(q);
        }
        Self {
            sum,
            sum_sq,
            floor_sq: sigma_floor * sigma_floor,
        }
    }

    /// Log-likelihood of `values[start..end]`.
    fn loglik(&self, start: usize, end: usize) -> f64 {
        let m = (end - start) as f64;
        let s = self.sum[end] - self.sum[start];
        let sum_sq_dev = (self.sum_sq[end] - self.sum_sq[start] - s * s / m).max(0.0);
        let var = (sum_sq_dev / m).max(self.floor_sq);
        -0.5 * m * (2.0 * PI * var).ln() - sum_sq_dev / (2.0 * var)
    }
}

/// Suffix dynamic program shared by every segment count up to `kmax`.
struct SegmentTable {
    n_values: usize,
    stride: usize,
    /// `best[i * stride + k]`: best log-likelihood of `values[i..]` in `k` segments.
    best: Vec<f64>,
    /// End (exclusive) of the first segment achieving `best`.
    next: Vec<u32>,
}

impl SegmentTable {
    fn build(values: &[f64], kmax: usize, sigma_floor: f64) -> Self {
        let n = values.len();
        let stride = kmax + 1;
        let mut best = vec![f64::NEG_INFINITY; (n + 1) * stride];
        let mut next = vec![0u32; (n + 1) * stride];
        best[n * stride] = 0.0;

        let lik = PrefixLikelihood::new(values, sigma_floor);
        for i in (0..=n.saturating_sub(MIN_SEGMENT_LEN)).rev() {
            let (head, tail) = best.split_at_mut((i + 1) * stride);
            let row = &mut head[i * stride..];
            let row_next = &mut next[i * stride..(i + 1) * stride];
            // ascending `end` plus strict improvement keeps the earliest cut on ties
            for end in (i + MIN_SEGMENT_LEN)..=n {
                let cost = lik.loglik(i, end);
                let rest = &tail[(end - i - 1) * stride..(end - i) * stride];
                let k_hi = kmax.min(1 + (n - end) / MIN_SEGMENT_LEN);
                for k in 1..=k_hi {
                    let tail_best = rest[k - 1];
                    if tail_best == f64::NEG_INFINITY {
                        continue;
                    }
                    let candidate = cost + tail_best;
                    if improves(candidate, row[k]) {
                        row[k] = candidate;
                        row_next[k] = end as u32;
                    }
                }
            }
        }
        Self {
            n_values: n,
            stride,
            best,
            next,
        }
    }

    /// 1-based cut indexes of the best `n`-segment split.
    fn cuts(&self, n: usize) -> Option<Vec<usize>> {
        if n == 0 || n >= self.stride || self.best[n] == f64::NEG_INFINITY {
            return None;
        }
        let mut cuts = Vec::with_capacity(n);
        let mut i = 0;
        for k in (1..=n).rev() {
            cuts.push(i + 1);
            i = self.next[i * self.stride + k] as usize;
        }
        debug_assert_eq!(i, self.n_values);
        Some(cuts)
    }
}

/// Globally optimal split of `values` into exactly `n` segments.
pub fn dp_segment(values: &[f64], n: usize, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    check_signal(values)?;
    let max = values.len() / MIN_SEGMENT_LEN;
    if n == 0 || n > max {
        return Err(Error::InvalidSegmentCount { n, max });
    }
    let floor = effective_sigma_floor(values, cfg);
    let table = SegmentTable::build(values, n, floor);
    let cuts = table.cuts(n).expect("n <= N/2 is always feasible");
    Segmentation::from_cuts(values, cuts, floor, n, cfg.parameter_count)
}

/// Run the DP for every `n` in `1..=kmax` and keep the smallest MDL; ties go
/// to the smaller `n`.
pub fn select_segments(values: &[f64], cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    check_signal(values)?;
    let kmax = cfg.kmax(values.len());
    let floor = effective_sigma_floor(values, cfg);
    let table = SegmentTable::build(values, kmax, floor);

    let mut chosen: Option<Segmentation> = None;
    for n in 1..=kmax {
        let Some(cuts) = table.cuts(n) else { continue };
        let seg = Segmentation::from_cuts(values, cuts, floor, kmax, cfg.parameter_count)?;
        if chosen.as_ref().is_none_or(|best| seg.mdl < best.mdl) {
            chosen = Some(seg);
        }
    }
    Ok(chosen.expect("n = 1 is always feasible"))
}

fn check_signal(values: &[f64]) -> Result<()> {
    if values.len() < MIN_SEGMENT_LEN {
        return Err(Error::TooShort {
            len: values.len(),
            min: MIN_SEGMENT_LEN,
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidPoint(format!(
            "signal value {i} is not finite"
        )));
    }
    Ok(())
}

/// Segment entry of the exported JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub start_t: u64,
    pub end_t: u64,
    pub mu: f64,
    pub sigma: f64,
    pub loglik: f64,
}

/// Exported segmentation of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub trajectory_id: String,
    pub n: usize,
    pub cut_indexes: Vec<usize>,
    pub cut_timestamps: Vec<u64>,
    pub segments: Vec<SegmentRecord>,
    pub mdl: f64,
    pub kmax: usize,
}

impl SegmentationRecord {
    pub fn new(signal: &PmdSignal, seg: &Segmentation) -> Self {
        let segments = seg
            .ranges()
            .into_iter()
            .zip(&seg.segments)
            .map(|(range, stats)| SegmentRecord {
                start_t: signal.timestamps[range.start],
                end_t: signal.timestamps[range.end - 1],
                mu: stats.mu,
                sigma: stats.sigma,
                loglik: stats.loglik,
            })
            .collect();
        Self {
            trajectory_id: signal.trajectory_id.clone(),
            n: seg.n(),
            cut_indexes: seg.cut_indexes.clone(),
            cut_timestamps: seg
                .cut_indexes
                .iter()
                .map(|&i| signal.timestamps[i - 1])
                .collect(),
            segments,
            mdl: seg.mdl,
            kmax: seg.kmax,
        }
    }
}
