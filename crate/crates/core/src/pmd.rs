//! Trajectory to PMD (Probabilistic Movement Dissimilarity) signal.
//!
//! Each pair of consecutive points becomes one value that grows with how far
//! the observed next state lies from where the population model expected the
//! driver to go.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{state_of, MarkovModel, State};
use crate::trajectory::Trajectory;

/// Per-dimension multipliers applied before the Euclidean distance.
///
/// All ones (the default) mixes km/h, m/s² and degrees unscaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    pub speed: f64,
    pub acc: f64,
    pub heading: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        Self {
            speed: 1.0,
            acc: 1.0,
            heading: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PmdConfig {
    pub weights: DistanceWeights,
}

/// Unweighted distance between two states with circular heading difference.
pub fn state_distance(a: &State, b: &State) -> f64 {
    weighted_distance(a, b, &DistanceWeights::default())
}

pub fn weighted_distance(a: &State, b: &State, w: &DistanceWeights) -> f64 {
    let dh = (a.heading() - b.heading()).abs();
    let dh = dh.min(360.0 - dh);
    let ds = a.speed() - b.speed();
    let da = a.acc() - b.acc();
    ((w.speed * ds).powi(2) + (w.acc * da).powi(2) + (w.heading * dh).powi(2)).sqrt()
}

/// Outcome of scoring one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmdStep {
    pub value: f64,
    /// The source state had no outgoing transitions in the model.
    pub fallback: bool,
}

/// Unlikelihood of `from -> to` under the model.
///
/// Zero when the state does not change. Otherwise the probability-weighted
/// distance from `to` to every destination the population reached from
/// `from`, divided by the number of such destinations. A source state never
/// seen in training scores the raw distance `from -> to`.
pub fn pmd_step(model: &MarkovModel, from: &State, to: &State, w: &DistanceWeights) -> PmdStep {
    if from == to {
        return PmdStep {
            value: 0.0,
            fallback: false,
        };
    }
    let destinations = model.outgoing(from);
    if destinations.is_empty() {
        return PmdStep {
            value: weighted_distance(from, to, w),
            fallback: true,
        };
    }
    let weighted: f64 = destinations
        .iter()
        .map(|(r, p)| weighted_distance(to, r, w) * p)
        .sum();
    PmdStep {
        value: weighted / destinations.len() as f64,
        fallback: false,
    }
}

pub fn pmd_value(model: &MarkovModel, from: &State, to: &State) -> f64 {
    pmd_step(model, from, to, &DistanceWeights::default()).value
}

/// A trajectory in PMD space: one value per transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmdSignal {
    pub trajectory_id: String,
    pub values: Vec<f64>,
    /// `t` of the first point of each transition.
    pub timestamps: Vec<u64>,
    /// Transitions scored with the unseen-state fallback.
    pub fallback_count: usize,
}

impl PmdSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Share of transitions that hit the fallback.
    pub fn fallback_rate(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.fallback_count as f64 / self.values.len() as f64
        }
    }
}

pub fn transform(model: &MarkovModel, trajectory: &Trajectory) -> Result<PmdSignal> {
    transform_with(model, trajectory, &PmdConfig::default())
}

pub fn transform_with(
    model: &MarkovModel,
    trajectory: &Trajectory,
    cfg: &PmdConfig,
) -> Result<PmdSignal> {
    if trajectory.len() < 2 {
        return Err(Error::TooShort {
            len: trajectory.len(),
            min: 2,
        });
    }
    model.check_quantization(trajectory)?;

    let q = model.quantization();
    let states = trajectory
        .points
        .iter()
        .map(|p| state_of(p, q))
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(states.len() - 1);
    let mut fallback_count = 0;
    for pair in states.windows(2) {
        let step = pmd_step(model, &pair[0], &pair[1], &cfg.weights);
        fallback_count += usize::from(step.fallback);
        values.push(step.value);
    }

    Ok(PmdSignal {
        trajectory_id: trajectory.id.clone(),
        values,
        timestamps: trajectory.points[..trajectory.len() - 1]
            .iter()
            .map(|p| p.t)
            .collect(),
        fallback_count,
    })
}

/// Write `t,pmd` rows.
pub fn write_signal_csv<W: Write>(signal: &PmdSignal, mut sink: W) -> Result<()> {
    writeln!(sink, "t,pmd")?;
    for (t, v) in signal.timestamps.iter().zip(&signal.values) {
        writeln!(sink, "{t},{v}")?;
    }
    Ok(())
}
