//! Behavior-based driving pattern discovery.
//!
//! The pipeline has four stages:
//!
//! 1. [`trajectory`]: ingest per-second vehicle observations, drop out-of-range
//!    records and quantize acceleration, heading and speed.
//! 2. [`markov`]: count state transitions over a training population and derive
//!    empirical transition probabilities.
//! 3. [`pmd`]: map each trajectory to a one-dimensional Probabilistic Movement
//!    Dissimilarity (PMD) signal that scores how unlikely each step is.
//! 4. [`segmentation`]: cut the signal into Gaussian segments by dynamic
//!    programming and choose the number of segments by minimum description length.
//!
//! [`synthetic`] holds generators with known ground truth and a brute-force
//! segmentation oracle used to check the dynamic program.

pub mod error;
pub mod markov;
pub mod pipeline;
pub mod pmd;
pub mod segmentation;
pub mod synthetic;
pub mod trajectory;

pub use error::{Error, Result};
pub use markov::{build_model, load_model, merge_models, save_model, MarkovModel, State};
pub use pipeline::segment_trajectory;
pub use pmd::{pmd_value, state_distance, transform, DistanceWeights, PmdConfig, PmdSignal};
pub use segmentation::{
    dp_segment, gaussian_mle, mdl_score, select_segments, ParameterCount, SegmentStats,
    Segmentation, SegmentationConfig,
};
pub use trajectory::{
    load_dataset_dir, parse_trajectory_csv, preprocess, quantize_point, split_dataset,
    validate_point, DataPoint, PointCheck, QuantizationConfig, RejectReason, Trajectory,
    ValidationConfig,
};
