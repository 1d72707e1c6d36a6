use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use drivepat::{
    load_dataset_dir, preprocess, segment_trajectory, QuantizationConfig, SegmentationConfig,
    ValidationConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::open_model;
use crate::error::CliError;
use crate::manifest::{parent_dir, ManifestBuilder};

/// Label for trajectories the sidecar index does not assign to a group.
pub const UNGROUPED: &str = "ungrouped";

#[derive(Debug, Serialize)]
pub struct TrajectoryRow {
    pub trajectory_id: String,
    pub group: String,
    /// Points after preprocessing.
    pub length: usize,
    pub signal_length: usize,
    pub n: usize,
    pub kmax: usize,
    pub cut_indexes: Vec<usize>,
    pub mdl: f64,
    pub fallback_count: usize,
}

#[derive(Debug, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub trajectories: usize,
    pub avg_length: f64,
    pub avg_segments: f64,
    pub std_segments: f64,
    pub fallback_rate: f64,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub groups: Vec<GroupSummary>,
    pub trajectories: Vec<TrajectoryRow>,
    pub failures: Vec<Failure>,
}

fn summarize(group: &str, rows: &[&TrajectoryRow]) -> GroupSummary {
    let count = rows.len() as f64;
    let avg_length = rows.iter().map(|r| r.length as f64).sum::<f64>() / count;
    let avg_segments = rows.iter().map(|r| r.n as f64).sum::<f64>() / count;
    let var = rows
        .iter()
        .map(|r| (r.n as f64 - avg_segments).powi(2))
        .sum::<f64>()
        / count;
    let transitions: usize = rows.iter().map(|r| r.signal_length).sum();
    let fallbacks: usize = rows.iter().map(|r| r.fallback_count).sum();
    GroupSummary {
        group: group.to_owned(),
        trajectories: rows.len(),
        avg_length,
        avg_segments,
        std_segments: var.sqrt(),
        fallback_rate: if transitions == 0 {
            0.0
        } else {
            fallbacks as f64 / transitions as f64
        },
    }
}

pub fn run(
    model_path: &Path,
    test_dir: &Path,
    output: &Path,
    v: &ValidationConfig,
    q: &QuantizationConfig,
    cfg: &SegmentationConfig,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("eval", &[model_path, test_dir]);
    cfg.validate()?;
    let model = open_model(model_path, q)?;
    let dataset = load_dataset_dir(test_dir).map_err(CliError::context(test_dir.display()))?;
    if dataset.trajectories.is_empty() {
        return Err(CliError::input(format!(
            "no trajectories in {}",
            test_dir.display()
        )));
    }

    let mut failures: Vec<Failure> = dataset
        .failures
        .iter()
        .map(|(path, err)| Failure {
            source: path.display().to_string(),
            error: err.to_string(),
        })
        .collect();

    let results: Vec<_> = dataset
        .trajectories
        .par_iter()
        .map(|raw| {
            let group = dataset
                .groups
                .get(&raw.id)
                .cloned()
                .unwrap_or_else(|| UNGROUPED.to_owned());
            let traj = preprocess(raw, v, q).map_err(|e| (raw.id.clone(), e))?;
            let (signal, seg) =
                segment_trajectory(&model, &traj, cfg).map_err(|e| (raw.id.clone(), e))?;
            Ok(TrajectoryRow {
                trajectory_id: raw.id.clone(),
                group,
                length: traj.len(),
                signal_length: signal.len(),
                n: seg.n(),
                kmax: seg.kmax,
                cut_indexes: seg.cut_indexes,
                mdl: seg.mdl,
                fallback_count: signal.fallback_count,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err((id, err)) => failures.push(Failure {
                source: id,
                error: err.to_string(),
            }),
        }
    }

    let mut by_group: BTreeMap<&str, Vec<&TrajectoryRow>> = BTreeMap::new();
    for row in &rows {
        by_group.entry(&row.group).or_default().push(row);
    }
    let groups: Vec<GroupSummary> = by_group
        .iter()
        .map(|(g, rows)| summarize(g, rows))
        .collect();

    println!(
        "{:<16} {:>6} {:>10} {:>8} {:>8} {:>9}",
        "group", "count", "avg_len", "avg_n", "std_n", "fallback"
    );
    for g in &groups {
        println!(
            "{:<16} {:>6} {:>10.1} {:>8.2} {:>8.2} {:>9.3}",
            g.group, g.trajectories, g.avg_length, g.avg_segments, g.std_segments, g.fallback_rate
        );
    }
    for f in &failures {
        eprintln!("warning: {}: {}", f.source, f.error);
    }

    let report = EvalReport {
        groups,
        trajectories: rows,
        failures,
    };
    let file =
        File::create(output).map_err(|e| CliError::input(format!("{}: {e}", output.display())))?;
    let mut sink = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut sink, &report).map_err(|e| CliError::input(e.to_string()))?;
    writeln!(sink)?;
    sink.flush()?;

    manifest.finish(
        &parent_dir(output),
        json!({ "quantization": q, "validation": v, "segmentation": cfg }),
        &[output.to_path_buf()],
        Some(model_path),
    )?;
    Ok(())
}
