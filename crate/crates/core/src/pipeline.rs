//! Transform-then-segment composition for one trajectory.

use crate::error::Result;
use crate::markov::MarkovModel;
use crate::pmd::{transform_with, PmdConfig, PmdSignal};
use crate::segmentation::{select_segments, Segmentation, SegmentationConfig};
use crate::trajectory::Trajectory;

/// Map `trajectory` to its PMD signal and pick the MDL-optimal segmentation.
pub fn segment_trajectory(
    model: &MarkovModel,
    trajectory: &Trajectory,
    cfg: &SegmentationConfig,
) -> Result<(PmdSignal, Segmentation)> {
    segment_trajectory_with(model, trajectory, &PmdConfig::default(), cfg)
}

pub fn segment_trajectory_with(
    model: &MarkovModel,
    trajectory: &Trajectory,
    pmd: &PmdConfig,
    cfg: &SegmentationConfig,
) -> Result<(PmdSignal, Segmentation)> {
    let signal = transform_with(model, trajectory, pmd)?;
    let segmentation = select_segments(&signal.values, cfg)?;
    Ok((signal, segmentation))
}
