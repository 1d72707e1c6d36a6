//! Population-level memory-less Markov model over quantized motion states.
//!
//! Only transition counts are stored. Probabilities are always derived at query
//! time as `count(from -> to) / total(from)`, so counts and probabilities can
//! never drift apart and independently built models merge by addition.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::trajectory::{quantize_point, DataPoint, QuantizationConfig, Trajectory};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Quantized `(speed, acceleration, heading)` triple.
///
/// Constructed only through a [`QuantizationConfig`], so every field is an
/// exact grid value and equality on the raw floats is meaningful.
#[derive(Debug, Clone, Copy)]
pub struct State {
    speed: f64,
    acc: f64,
    heading: f64,
}

impl State {
    /// Snap the three components onto the grid of `q`.
    pub fn new(speed: f64, acc: f64, heading: f64, q: &QuantizationConfig) -> Result<Self> {
        if !(speed.is_finite() && acc.is_finite() && heading.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "non-finite state ({speed}, {acc}, {heading})"
            )));
        }
        Ok(Self {
            speed: q.speed(speed),
            acc: q.acc(acc),
            heading: q.heading(heading),
        })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn acc(&self) -> f64 {
        self.acc
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn as_triple(&self) -> [f64; 3] {
        [self.speed, self.acc, self.heading]
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        self.speed
            .total_cmp(&other.speed)
            .then(self.acc.total_cmp(&other.acc))
            .then(self.heading.total_cmp(&other.heading))
    }
}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for v in self.as_triple() {
            v.to_bits().hash(state);
        }
    }
}

/// The state a data point occupies. Re-quantizing an already quantized point
/// is a no-op, so raw points are accepted too.
pub fn state_of(p: &DataPoint, q: &QuantizationConfig) -> Result<State> {
    if !p.is_finite() {
        return Err(Error::InvalidPoint(format!(
            "non-finite point at t={}",
            p.t
        )));
    }
    let p = quantize_point(p, q);
    State::new(p.speed, p.acc, p.heading, q)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Row {
    total: u64,
    to: BTreeMap<State, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    quantization: QuantizationConfig,
    rows: BTreeMap<State, Row>,
}

impl MarkovModel {
    pub fn new(quantization: QuantizationConfig) -> Self {
        Self {
            quantization,
            rows: BTreeMap::new(),
        }
    }

    pub fn quantization(&self) -> &QuantizationConfig {
        &self.quantization
    }

    pub fn record(&mut self, from: State, to: State) {
        self.add(from, to, 1);
    }

    fn add(&mut self, from: State, to: State, count: u64) {
        let row = self.rows.entry(from).or_default();
        row.total += count;
        *row.to.entry(to).or_insert(0) += count;
    }

    /// Count every consecutive pair of points, self-transitions included.
    pub fn record_trajectory(&mut self, trajectory: &Trajectory) -> Result<()> {
        self.check_quantization(trajectory)?;
        let states = trajectory
            .points
            .iter()
            .map(|p| state_of(p, &self.quantization))
            .collect::<Result<Vec<_>>>()?;
        for pair in states.windows(2) {
            self.record(pair[0], pair[1]);
        }
        Ok(())
    }

    pub(crate) fn check_quantization(&self, trajectory: &Trajectory) -> Result<()> {
        match trajectory.quantized_with {
            Some(q) if q != self.quantization => Err(Error::ConfigMismatch(format!(
                "trajectory `{}` was quantized with {:?}, model uses {:?}",
                trajectory.id, q, self.quantization
            ))),
            _ => Ok(()),
        }
    }

    /// Add all counts of `other` into `self`.
    pub fn merge(&mut self, other: &MarkovModel) -> Result<()> {
        if other.quantization != self.quantization {
            return Err(Error::ConfigMismatch(format!(
                "cannot merge models quantized with {:?} and {:?}",
                self.quantization, other.quantization
            )));
        }
        for (from, row) in &other.rows {
            for (to, &count) in &row.to {
                self.add(*from, *to, count);
            }
        }
        Ok(())
    }

    pub fn count(&self, from: &State, to: &State) -> u64 {
        self.rows
            .get(from)
            .and_then(|row| row.to.get(to))
            .copied()
            .unwrap_or(0)
    }

    /// Total number of observed transitions leaving `from`.
    pub fn out_total(&self, from: &State) -> u64 {
        self.rows.get(from).map_or(0, |row| row.total)
    }

    /// Empirical probability of `from -> to`; 0 for unseen pairs or sources.
    pub fn transition_prob(&self, from: &State, to: &State) -> f64 {
        match self.rows.get(from) {
            Some(row) => row.to.get(to).map_or(0.0, |&n| n as f64 / row.total as f64),
            None => 0.0,
        }
    }

    /// Every destination reachable from `from`, with its probability, sorted by
    /// `(speed, acc, heading)`. Empty for unseen states.
    pub fn outgoing(&self, from: &State) -> Vec<(State, f64)> {
        match self.rows.get(from) {
            Some(row) => row
                .to
                .iter()
                .map(|(to, &n)| (*to, n as f64 / row.total as f64))
                .collect(),
            None => Vec::new(),
        }
    }

    /// All states seen as a source or a destination.
    pub fn states(&self) -> BTreeSet<State> {
        let mut states: BTreeSet<State> = self.rows.keys().copied().collect();
        for row in self.rows.values() {
            states.extend(row.to.keys().copied());
        }
        states
    }

    /// Number of distinct `(from, to)` pairs.
    pub fn distinct_transitions(&self) -> usize {
        self.rows.values().map(|row| row.to.len()).sum()
    }

    /// Sum of all transition counts.
    pub fn total_transitions(&self) -> u64 {
        self.rows.values().map(|row| row.total).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(from, to, count)` in canonical order.
    pub fn transitions(&self) -> impl Iterator<Item = (State, State, u64)> + '_ {
        self.rows
            .iter()
            .flat_map(|(from, row)| row.to.iter().map(move |(to, &n)| (*from, *to, n)))
    }
}

/// Count transitions over a preprocessed training set.
pub fn build_model(trajectories: &[Trajectory], q: &QuantizationConfig) -> Result<MarkovModel> {
    q.validate()?;
    if trajectories.is_empty() {
        return Err(Error::EmptyInput("no training trajectories".into()));
    }
    let mut model = MarkovModel::new(*q);
    for trajectory in trajectories {
        model.record_trajectory(trajectory)?;
    }
    Ok(model)
}

pub fn merge_models(a: &MarkovModel, b: &MarkovModel) -> Result<MarkovModel> {
    let mut merged = a.clone();
    merged.merge(b)?;
    Ok(merged)
}

/// Integral values are written without a fractional part (`50`, not `50.0`).
fn number(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn triple(state: &State) -> Value {
    Value::Array(state.as_triple().into_iter().map(number).collect())
}

/// Write the model as JSON with transitions sorted by `(from, to)`.
pub fn save_model<W: Write>(model: &MarkovModel, mut sink: W) -> Result<()> {
    let q = &model.quantization;
    let transitions: Vec<Value> = model
        .transitions()
        .map(
            |(from, to, count)| json!({ "from": triple(&from), "to": triple(&to), "count": count }),
        )
        .collect();
    let doc = json!({
        "format_version": MODEL_FORMAT_VERSION,
        "quantization": {
            "acc_step": number(q.acc_step),
            "heading_step": number(q.heading_step),
            "speed_step": number(q.speed_step),
        },
        "transitions": transitions,
    });
    serde_json::to_writer_pretty(&mut sink, &doc).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    quantization: QuantizationConfig,
    transitions: Vec<TransitionRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionRecord {
    from: [f64; 3],
    to: [f64; 3],
    count: u64,
}

pub fn load_model<R: Read>(source: R) -> Result<MarkovModel> {
    let file: ModelFile =
        serde_json::from_reader(source).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::CorruptModel(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let q = file.quantization;
    q.validate()
        .map_err(|e| Error::CorruptModel(format!("quantization: {e}")))?;

    let on_grid = |[speed, acc, heading]: [f64; 3]| -> Result<State> {
        let state = State::new(speed, acc, heading, &q)?;
        let close = |a: f64, b: f64, step: f64| (a - b).abs() <= 1e-9 * step.max(1.0);
        if close(state.speed, speed, q.speed_step)
            && close(state.acc, acc, q.acc_step)
            && close(state.heading, heading, q.heading_step)
            && (0.0..360.0).contains(&heading)
        {
            Ok(state)
        } else {
            Err(Error::CorruptModel(format!(
                "state [{speed}, {acc}, {heading}] is not on the declared quantization grid"
            )))
        }
    };

    let mut model = MarkovModel::new(q);
    for record in file.transitions {
        if record.count == 0 {
            return Err(Error::CorruptModel("transition with count 0".into()));
        }
        let (from, to) = (on_grid(record.from)?, on_grid(record.to)?);
        if model.count(&from, &to) != 0 {
            return Err(Error::CorruptModel(format!(
                "duplicate transition {:?} -> {:?}",
                record.from, record.to
            )));
        }
        model.add(from, to, record.count);
    }
    Ok(model)
}
