use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use drivepat::markov::MarkovModel;
use drivepat::pmd::write_signal_csv;
use drivepat::segmentation::SegmentationRecord;
use drivepat::synthetic::{
    brute_force_segment, gen_synthetic_trajectory, random_regime_spec, RegimeSpec,
    BRUTE_FORCE_MAX_LEN, BRUTE_FORCE_MAX_SEGMENTS,
};
use drivepat::trajectory::{read_trajectory_file, write_trajectory_csv, VEHICLE_INDEX_FILE};
use drivepat::{
    dp_segment, load_dataset_dir, load_model, preprocess, save_model, segment_trajectory,
    split_dataset, transform, Error, QuantizationConfig, SegmentationConfig, Trajectory,
    ValidationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, EXIT_CHECK_FAILED};
use crate::manifest::{parent_dir, ManifestBuilder};
use crate::{eval, Command, GlobalArgs};

pub fn dispatch(global: &GlobalArgs, command: Command) -> Result<(), CliError> {
    let q = global.quantization();
    q.validate()?;
    match command {
        Command::Train {
            input,
            output,
            holdout,
            validation,
        } => train(
            &input,
            &output,
            holdout,
            &validation.config(),
            &q,
            global.seed,
        ),
        Command::Transform {
            model,
            trajectory,
            output,
            validation,
        } => transform_cmd(&model, &trajectory, &output, &validation.config(), &q),
        Command::Segment {
            model,
            trajectory,
            output,
            signal_output,
            validation,
            segmentation,
        } => {
            let signal_output = signal_output.unwrap_or_else(|| default_signal_path(&output));
            segment_cmd(
                &model,
                &trajectory,
                &output,
                &signal_output,
                &validation.config(),
                &q,
                &segmentation.config(),
            )
        }
        Command::Eval {
            model,
            test_dir,
            output,
            validation,
            segmentation,
        } => eval::run(
            &model,
            &test_dir,
            &output,
            &validation.config(),
            &q,
            &segmentation.config(),
        ),
        Command::Synth {
            output_dir,
            count,
            groups,
            spec,
            prefix,
        } => synth(
            &output_dir,
            count,
            groups,
            spec.as_deref(),
            &prefix,
            global.seed,
        ),
        Command::OracleCheck {
            trials,
            max_len,
            max_segments,
            segmentation,
        } => oracle_check(
            trials,
            max_len,
            max_segments,
            &segmentation.config(),
            global.seed,
        ),
    }
}

/// `out.json` -> `out.signal.csv`
fn default_signal_path(output: &Path) -> PathBuf {
    output.with_extension("signal.csv")
}

pub fn open_model(path: &Path, q: &QuantizationConfig) -> Result<MarkovModel, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let model = load_model(BufReader::new(file)).map_err(CliError::context(path.display()))?;
    if model.quantization() != q {
        return Err(Error::ConfigMismatch(format!(
            "model was built with {:?}, this run uses {:?}",
            model.quantization(),
            q
        ))
        .into());
    }
    Ok(model)
}

fn load_trajectory(
    path: &Path,
    v: &ValidationConfig,
    q: &QuantizationConfig,
) -> Result<Trajectory, CliError> {
    let raw = read_trajectory_file(path).map_err(CliError::context(path.display()))?;
    preprocess(&raw, v, q).map_err(CliError::context(path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn train(
    input: &Path,
    output: &Path,
    holdout: Option<f64>,
    v: &ValidationConfig,
    q: &QuantizationConfig,
    seed: u64,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("train", &[input]);
    let dataset = load_dataset_dir(input).map_err(CliError::context(input.display()))?;
    for (path, err) in &dataset.failures {
        eprintln!("warning: skipping {}: {err}", path.display());
    }

    let results: Vec<_> = dataset
        .trajectories
        .par_iter()
        .map(|t| (t.id.as_str(), preprocess(t, v, q)))
        .collect();
    let mut usable = Vec::with_capacity(results.len());
    for (id, result) in results {
        match result {
            Ok(t) => usable.push(t),
            Err(err) => eprintln!("warning: skipping {id}: {err}"),
        }
    }
    if usable.is_empty() {
        return Err(CliError::input(format!(
            "no trajectories in {}",
            input.display()
        )));
    }

    let mut outputs = vec![output.to_path_buf()];
    let training = match holdout {
        Some(fraction) => {
            let (train, test) = split_dataset(usable, fraction, seed)?;
            if train.is_empty() {
                return Err(CliError::input("holdout leaves no training trajectories"));
            }
            let ids_path = output.with_extension("holdout.txt");
            let mut sink = create(&ids_path)?;
            for t in &test {
                writeln!(sink, "{}", t.id)?;
            }
            sink.flush()?;
            outputs.push(ids_path);
            train
        }
        None => usable,
    };

    // counts are additive, so any chunking merges to the same model
    let model = training
        .par_chunks(16)
        .map(|chunk| {
            let mut partial = MarkovModel::new(*q);
            for t in chunk {
                partial.record_trajectory(t)?;
            }
            Ok(partial)
        })
        .try_reduce(
            || MarkovModel::new(*q),
            |mut a, b| {
                a.merge(&b)?;
                Ok::<_, Error>(a)
            },
        )?;

    let mut sink = create(output)?;
    save_model(&model, &mut sink)?;
    sink.flush()?;

    println!("trajectories: {}", training.len());
    println!("states: {}", model.states().len());
    println!("distinct transitions: {}", model.distinct_transitions());
    println!("total transitions: {}", model.total_transitions());

    manifest.finish(
        &parent_dir(output),
        json!({ "quantization": q, "validation": v, "holdout": holdout, "seed": seed }),
        &outputs,
        Some(output),
    )?;
    Ok(())
}

fn transform_cmd(
    model_path: &Path,
    trajectory: &Path,
    output: &Path,
    v: &ValidationConfig,
    q: &QuantizationConfig,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("transform", &[model_path, trajectory]);
    let model = open_model(model_path, q)?;
    let traj = load_trajectory(trajectory, v, q)?;
    let signal = transform(&model, &traj)?;
    if signal.fallback_count > 0 {
        eprintln!(
            "warning: {} of {} transitions start from states unseen in training",
            signal.fallback_count,
            signal.len()
        );
    }
    let mut sink = create(output)?;
    write_signal_csv(&signal, &mut sink)?;
    sink.flush()?;

    manifest.finish(
        &parent_dir(output),
        json!({ "quantization": q, "validation": v }),
        &[output.to_path_buf()],
        Some(model_path),
    )?;
    Ok(())
}

fn segment_cmd(
    model_path: &Path,
    trajectory: &Path,
    output: &Path,
    signal_output: &Path,
    v: &ValidationConfig,
    q: &QuantizationConfig,
    cfg: &SegmentationConfig,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("segment", &[model_path, trajectory]);
    cfg.validate()?;
    let model = open_model(model_path, q)?;
    let traj = load_trajectory(trajectory, v, q)?;
    let (signal, seg) = segment_trajectory(&model, &traj, cfg)?;
    seg.validate(signal.len())?;

    let record = SegmentationRecord::new(&signal, &seg);
    let mut sink = create(output)?;
    serde_json::to_writer_pretty(&mut sink, &record).map_err(|e| CliError::input(e.to_string()))?;
    writeln!(sink)?;
    sink.flush()?;

    let mut sink = create(signal_output)?;
    write_signal_csv(&signal, &mut sink)?;
    sink.flush()?;

    println!(
        "{}: {} values, {} segments (kmax {}), mdl {:.3}",
        signal.trajectory_id,
        signal.len(),
        seg.n(),
        seg.kmax,
        seg.mdl
    );

    manifest.finish(
        &parent_dir(output),
        json!({ "quantization": q, "validation": v, "segmentation": cfg }),
        &[output.to_path_buf(), signal_output.to_path_buf()],
        Some(model_path),
    )?;
    Ok(())
}

fn synth(
    dir: &Path,
    count: usize,
    groups: usize,
    spec_path: Option<&Path>,
    prefix: &str,
    seed: u64,
) -> Result<(), CliError> {
    if count == 0 || groups == 0 {
        return Err(CliError::input("--count and --groups must be positive"));
    }
    let base: Option<RegimeSpec> = match spec_path {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let spec: RegimeSpec = serde_json::from_reader(BufReader::new(file))
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            spec.validate()?;
            Some(spec)
        }
        None => None,
    };
    let inputs: Vec<&Path> = spec_path.into_iter().collect();
    let manifest = ManifestBuilder::start("synth", &inputs);
    std::fs::create_dir_all(dir)?;

    let mut index = csv::Writer::from_path(dir.join(VEHICLE_INDEX_FILE))
        .map_err(|e| CliError::input(e.to_string()))?;
    index
        .write_record(["trajectory_id", "vehicle_id", "group"])
        .map_err(|e| CliError::input(e.to_string()))?;

    let mut outputs = Vec::with_capacity(2 * count + 1);
    for i in 0..count {
        let item_seed = seed.wrapping_add(i as u64);
        let spec = match &base {
            Some(spec) => RegimeSpec {
                seed: item_seed,
                ..spec.clone()
            },
            None => random_regime_spec(item_seed),
        };
        let id = format!("{prefix}{i:04}");
        let synthetic = gen_synthetic_trajectory(&spec, &id)?;

        let csv_path = dir.join(format!("{id}.csv"));
        let mut sink = create(&csv_path)?;
        write_trajectory_csv(&synthetic.trajectory, &mut sink)?;
        sink.flush()?;

        let truth_path = dir.join(format!("{id}.truth.json"));
        let points = &synthetic.trajectory.points;
        let truth = json!({
            "trajectory_id": id,
            "spec": spec,
            "boundary_indexes": synthetic.boundaries,
            "boundary_timestamps": synthetic.boundaries.iter().map(|&b| points[b].t).collect::<Vec<_>>(),
            "signal_cut_indexes": synthetic.truth_signal_cuts(),
        });
        let mut sink = create(&truth_path)?;
        serde_json::to_writer_pretty(&mut sink, &truth)
            .map_err(|e| CliError::input(e.to_string()))?;
        writeln!(sink)?;
        sink.flush()?;

        let vehicle = format!("v{:02}", i % 8);
        let group = format!("group{}", i % groups);
        index
            .write_record([id.as_str(), vehicle.as_str(), group.as_str()])
            .map_err(|e| CliError::input(e.to_string()))?;
        outputs.push(csv_path);
        outputs.push(truth_path);
    }
    index.flush()?;
    outputs.push(dir.join(VEHICLE_INDEX_FILE));
    println!("wrote {count} trajectories to {}", dir.display());

    manifest.finish(
        dir,
        json!({ "count": count, "groups": groups, "prefix": prefix, "seed": seed }),
        &outputs,
        None,
    )?;
    Ok(())
}

fn oracle_check(
    trials: usize,
    max_len: usize,
    max_segments: usize,
    cfg: &SegmentationConfig,
    seed: u64,
) -> Result<(), CliError> {
    cfg.validate()?;
    if !(4..=BRUTE_FORCE_MAX_LEN).contains(&max_len) {
        return Err(CliError::input(format!(
            "--max-len must be in 4..={BRUTE_FORCE_MAX_LEN}"
        )));
    }
    if !(1..=BRUTE_FORCE_MAX_SEGMENTS).contains(&max_segments) {
        return Err(CliError::input(format!(
            "--max-segments must be in 1..={BRUTE_FORCE_MAX_SEGMENTS}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            let len = rng.random_range(4..=max_len);
            // a few levels with noise, sometimes repeated values to exercise ties
            let levels = rng.random_range(1..=4);
            let quantum = if rng.random_bool(0.3) { 1.0 } else { 0.0 };
            (0..len)
                .map(|i| {
                    let level = (i * levels / len) as f64 * 3.0;
                    let noise: f64 = rng.random_range(-1.0..1.0);
                    if quantum > 0.0 {
                        (level + 2.0 * noise).round()
                    } else {
                        level + noise
                    }
                })
                .collect()
        })
        .collect();

    let mismatches: Vec<String> = signals
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, values)| {
            let top = max_segments.min(values.len() / 2);
            (1..=top).filter_map(move |n| {
                let dp = dp_segment(values, n, cfg).ok()?;
                let brute = brute_force_segment(values, n, cfg).ok()?;
                let scale = brute.total_loglik.abs().max(1.0);
                let same = dp.cut_indexes == brute.cut_indexes
                    && (dp.total_loglik - brute.total_loglik).abs() <= 1e-9 * scale;
                (!same).then(|| {
                    format!(
                        "signal {i} n={n}: dp {:?} ({}) vs exhaustive {:?} ({})",
                        dp.cut_indexes, dp.total_loglik, brute.cut_indexes, brute.total_loglik
                    )
                })
            })
        })
        .collect();

    let pairs: usize = signals.iter().map(|v| max_segments.min(v.len() / 2)).sum();
    println!("checked {pairs} (signal, n) pairs over {trials} signals");
    for m in &mismatches {
        println!("mismatch: {m}");
    }
    if mismatches.is_empty() {
        println!("all agree");
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_CHECK_FAILED,
            message: format!("{} mismatches", mismatches.len()),
        })
    }
}
