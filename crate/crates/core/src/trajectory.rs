//! Trajectory data model, CSV ingestion, validation, quantization and
//! train/test splitting.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header expected on every trajectory CSV file.
pub const CSV_HEADER: [&str; 6] = ["t", "lat", "lng", "speed_kmh", "acc_ms2", "heading_deg"];

/// Name of the optional sidecar that maps trajectories to vehicles (and groups).
pub const VEHICLE_INDEX_FILE: &str = "vehicles.csv";

/// One per-second vehicle observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    /// Seconds since the trajectory started.
    pub t: u64,
    pub lat: f64,
    pub lng: f64,
    /// km/h
    pub speed: f64,
    /// m/s²
    pub acc: f64,
    /// Degrees clockwise from north, in `[0, 360)`.
    pub heading: f64,
}

impl DataPoint {
    pub fn is_finite(&self) -> bool {
        self.lat.is_finite()
            && self.lng.is_finite()
            && self.speed.is_finite()
            && self.acc.is_finite()
            && self.heading.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub vehicle_id: Option<String>,
    pub points: Vec<DataPoint>,
    /// Set by [`preprocess`]; records the grid the points were snapped to.
    pub quantized_with: Option<QuantizationConfig>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, points: Vec<DataPoint>) -> Self {
        Self {
            id: id.into(),
            vehicle_id: None,
            points,
            quantized_with: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of consecutive point pairs.
    pub fn transition_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

/// Quantization grid for the three state dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationConfig {
    /// m/s²
    pub acc_step: f64,
    /// degrees; 360 must be a whole multiple of it
    pub heading_step: f64,
    /// km/h
    pub speed_step: f64,
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        Self {
            acc_step: 0.25,
            heading_step: 5.0,
            speed_step: 1.0,
        }
    }
}

impl QuantizationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, step) in [
            ("acc_step", self.acc_step),
            ("heading_step", self.heading_step),
            ("speed_step", self.speed_step),
        ] {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {step}"
                )));
            }
        }
        let bins = 360.0 / self.heading_step;
        if (bins - bins.round()).abs() > 1e-9 || bins.round() < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "360 is not a whole multiple of heading_step {}",
                self.heading_step
            )));
        }
        Ok(())
    }

    pub(crate) fn heading_bins(&self) -> i64 {
        (360.0 / self.heading_step).round() as i64
    }

    /// Snap a speed to the grid.
    pub fn speed(&self, speed: f64) -> f64 {
        snap(speed, self.speed_step)
    }

    /// Snap an acceleration to the grid.
    pub fn acc(&self, acc: f64) -> f64 {
        snap(acc, self.acc_step)
    }

    /// Snap a heading to the grid and wrap it into `[0, 360)`.
    pub fn heading(&self, heading: f64) -> f64 {
        let k = (heading / self.heading_step).round() as i64;
        k.rem_euclid(self.heading_bins()) as f64 * self.heading_step
    }
}

/// Nearest multiple of `step`; ties round away from zero. Never returns `-0.0`.
fn snap(value: f64, step: f64) -> f64 {
    (value / step).round() * step + 0.0
}

/// Bounds used to discard noisy or out-of-range records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// km/h
    pub max_speed: f64,
    /// m/s²
    pub max_abs_acc: f64,
    /// Largest accepted step in `t` between consecutive points, in seconds.
    pub allow_gap: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            max_speed: 250.0,
            max_abs_acc: 12.0,
            allow_gap: 1,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed > 0.0 && self.max_abs_acc > 0.0 && self.allow_gap > 0) {
            return Err(Error::InvalidConfig(format!(
                "validation bounds must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Why a point was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    NonFinite,
    LatOutOfRange,
    LngOutOfRange,
    SpeedOutOfRange,
    AccOutOfRange,
    HeadingOutOfRange,
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::NonFinite => "non_finite",
            RejectReason::LatOutOfRange => "lat_out_of_range",
            RejectReason::LngOutOfRange => "lng_out_of_range",
            RejectReason::SpeedOutOfRange => "speed_out_of_range",
            RejectReason::AccOutOfRange => "acc_out_of_range",
            RejectReason::HeadingOutOfRange => "heading_out_of_range",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointCheck {
    Accept,
    Reject(RejectReason),
}

pub fn validate_point(p: &DataPoint, cfg: &ValidationConfig) -> PointCheck {
    use RejectReason::*;
    let reason = if !p.is_finite() {
        NonFinite
    } else if !(-90.0..=90.0).contains(&p.lat) {
        LatOutOfRange
    } else if !(-180.0..=180.0).contains(&p.lng) {
        LngOutOfRange
    } else if !(0.0..=cfg.max_speed).contains(&p.speed) {
        SpeedOutOfRange
    } else if p.acc.abs() > cfg.max_abs_acc {
        AccOutOfRange
    } else if !(0.0..360.0).contains(&p.heading) {
        HeadingOutOfRange
    } else {
        return PointCheck::Accept;
    };
    PointCheck::Reject(reason)
}

/// Snap speed, acceleration and heading to the grid; time and position are untouched.
pub fn quantize_point(p: &DataPoint, cfg: &QuantizationConfig) -> DataPoint {
    DataPoint {
        speed: cfg.speed(p.speed),
        acc: cfg.acc(p.acc),
        heading: cfg.heading(p.heading),
        ..*p
    }
}

/// Drop invalid points, quantize the survivors and keep the longest piece
/// whose time steps are all in `1..=allow_gap`.
pub fn preprocess(
    trajectory: &Trajectory,
    validation: &ValidationConfig,
    quantization: &QuantizationConfig,
) -> Result<Trajectory> {
    validation.validate()?;
    quantization.validate()?;

    let survivors: Vec<DataPoint> = trajectory
        .points
        .iter()
        .filter(|p| validate_point(p, validation) == PointCheck::Accept)
        .map(|p| quantize_point(p, quantization))
        .collect();

    let longest = contiguous_runs(&survivors, validation.allow_gap)
        .into_iter()
        .fold(
            0..0,
            |best, run| if run.len() > best.len() { run } else { best },
        );

    if longest.len() < 2 {
        return Err(Error::TooShort {
            len: longest.len(),
            min: 2,
        });
    }

    Ok(Trajectory {
        id: trajectory.id.clone(),
        vehicle_id: trajectory.vehicle_id.clone(),
        points: survivors[longest].to_vec(),
        quantized_with: Some(*quantization),
    })
}

fn contiguous_runs(points: &[DataPoint], allow_gap: u64) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=points.len() {
        let broken = i == points.len() || {
            let (prev, next) = (points[i - 1].t, points[i].t);
            next <= prev || next - prev > allow_gap
        };
        if broken {
            runs.push(start..i);
            start = i;
        }
    }
    runs
}

/// Deterministic shuffled split into `(train, test)`; the original order is
/// kept inside each side.
pub fn split_dataset(
    trajectories: Vec<Trajectory>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    if trajectories.is_empty() {
        return Err(Error::EmptyInput("no trajectories to split".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }

    let total = trajectories.len();
    let n_test = (test_fraction * total as f64).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut is_test = vec![false; total];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }

    let (test, train): (Vec<_>, Vec<_>) = trajectories
        .into_iter()
        .zip(is_test)
        .partition(|(_, test)| *test);
    Ok((
        train.into_iter().map(|(t, _)| t).collect(),
        test.into_iter().map(|(t, _)| t).collect(),
    ))
}

/// Parse a trajectory CSV. Ranges are not checked here; see [`validate_point`].
pub fn parse_trajectory_csv<R: Read>(input: R, id: impl Into<String>) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header = reader.headers().map_err(csv_error)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyInput("no header row".into()));
    }
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: header.position().map_or(1, |p| p.line()),
            message: format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    CSV_HEADER.len(),
                    record.len()
                ),
            });
        }
        let real = |col: usize| -> Result<f64> {
            record[col].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column `{}`: cannot parse `{}`",
                    CSV_HEADER[col], &record[col]
                ),
            })
        };
        let t = record[0].parse::<u64>().map_err(|_| Error::Parse {
            line,
            message: format!(
                "column `t`: expected a non-negative integer, found `{}`",
                &record[0]
            ),
        })?;
        points.push(DataPoint {
            t,
            lat: real(1)?,
            lng: real(2)?,
            speed: real(3)?,
            acc: real(4)?,
            heading: real(5)?,
        });
    }

    if points.is_empty() {
        return Err(Error::EmptyInput("no data rows".into()));
    }
    Ok(Trajectory::new(id, points))
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Write a trajectory in the CSV layout accepted by [`parse_trajectory_csv`].
pub fn write_trajectory_csv<W: std::io::Write>(trajectory: &Trajectory, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(e.into());
    writer.write_record(CSV_HEADER).map_err(io)?;
    for p in &trajectory.points {
        writer
            .write_record([
                p.t.to_string(),
                p.lat.to_string(),
                p.lng.to_string(),
                p.speed.to_string(),
                p.acc.to_string(),
                p.heading.to_string(),
            ])
            .map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a trajectory file; the file stem becomes the trajectory id.
pub fn read_trajectory_file(path: &Path) -> Result<Trajectory> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_trajectory_csv(std::fs::File::open(path)?, id)
}

/// One row of the `vehicles.csv` sidecar.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexEntry {
    pub vehicle_id: Option<String>,
    pub group: Option<String>,
}

/// Parse `trajectory_id,vehicle_id[,group]`.
pub fn read_vehicle_index<R: Read>(input: R) -> Result<HashMap<String, IndexEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let id_col = column("trajectory_id").ok_or_else(|| Error::Parse {
        line: 1,
        message: "vehicle index needs a `trajectory_id` column".into(),
    })?;
    let vehicle_col = column("vehicle_id");
    let group_col = column("group");

    let mut index = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let field = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
        };
        let Some(id) = field(Some(id_col)) else {
            continue;
        };
        index.insert(
            id,
            IndexEntry {
                vehicle_id: field(vehicle_col),
                group: field(group_col),
            },
        );
    }
    Ok(index)
}

/// Result of scanning a dataset directory.
#[derive(Debug, Default)]
pub struct Dataset {
    pub trajectories: Vec<Trajectory>,
    /// Group label per trajectory id, from the sidecar index.
    pub groups: HashMap<String, String>,
    /// Files that could not be read or parsed.
    pub failures: Vec<(PathBuf, Error)>,
}

/// Load every `*.csv` in `dir` (except the sidecar index) in file-name order.
pub fn load_dataset_dir(dir: &Path) -> Result<Dataset> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();

    let index_path = dir.join(VEHICLE_INDEX_FILE);
    let index = if index_path.is_file() {
        read_vehicle_index(std::fs::File::open(&index_path)?)?
    } else {
        HashMap::new()
    };

    let mut dataset = Dataset::default();
    for path in paths {
        if path.file_name().is_some_and(|n| n == VEHICLE_INDEX_FILE) {
            continue;
        }
        match read_trajectory_file(&path) {
            Ok(mut trajectory) => {
                if let Some(entry) = index.get(&trajectory.id) {
                    trajectory.vehicle_id = entry.vehicle_id.clone();
                    if let Some(group) = &entry.group {
                        dataset.groups.insert(trajectory.id.clone(), group.clone());
                    }
                }
                dataset.trajectories.push(trajectory);
            }
            Err(err) => dataset.failures.push((path, err)),
        }
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: u64) -> DataPoint {
        DataPoint {
            t,
            lat: 40.0,
            lng: -83.0,
            speed: 50.0,
            acc: 0.0,
            heading: 90.0,
        }
    }

    const HEADER: &str = "t,lat,lng,speed_kmh,acc_ms2,heading_deg\n";

    #[test]
    fn parses_two_rows() {
        let csv = format!("{HEADER}0,40.0,-83.0,50,0.0,90\n1,40.0,-83.0,51,0.25,90");
        let trajectory = parse_trajectory_csv(csv.as_bytes(), "a").unwrap();
        assert_eq!(trajectory.len(), 2);
        assert_eq!(trajectory.points[1].speed, 51.0);
        assert_eq!(trajectory.points[1].acc, 0.25);
        assert_eq!(trajectory.id, "a");
    }

    #[test]
    fn header_only_is_empty_input() {
        let err = parse_trajectory_csv(HEADER.as_bytes(), "a").unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
        let err = parse_trajectory_csv(&b""[..], "a").unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
    }

    #[test]
    fn bad_number_reports_line() {
        let csv =
            format!("{HEADER}0,40.0,-83.0,50,0,90\n1,40.0,-83.0,50,0,90\n2,40.0,-83.0,abc,0,90\n");
        match parse_trajectory_csv(csv.as_bytes(), "a").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let csv = format!("{HEADER}0,40.0,-83.0,50,0,90\n1,40.0,-83.0,50,0\n");
        match parse_trajectory_csv(csv.as_bytes(), "a").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn comment_lines_before_header() {
        let csv = format!("# exported by logger\n# vehicle 7\n{HEADER}0,40,-83,10,0,0\n");
        let trajectory = parse_trajectory_csv(csv.as_bytes(), "c").unwrap();
        assert_eq!(trajectory.len(), 1);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let csv = "time,lat,lng,speed,acc,heading\n0,40,-83,10,0,0\n";
        assert!(matches!(
            parse_trajectory_csv(csv.as_bytes(), "a"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn validation_outcomes() {
        let cfg = ValidationConfig::default();
        assert_eq!(validate_point(&point(0), &cfg), PointCheck::Accept);

        let p = DataPoint {
            lat: 95.0,
            ..point(0)
        };
        assert_eq!(
            validate_point(&p, &cfg),
            PointCheck::Reject(RejectReason::LatOutOfRange)
        );
        let p = DataPoint {
            speed: 400.0,
            ..point(0)
        };
        assert_eq!(
            validate_point(&p, &cfg),
            PointCheck::Reject(RejectReason::SpeedOutOfRange)
        );
        let p = DataPoint {
            heading: 360.0,
            ..point(0)
        };
        assert_eq!(
            validate_point(&p, &cfg),
            PointCheck::Reject(RejectReason::HeadingOutOfRange)
        );
        let p = DataPoint {
            acc: f64::NAN,
            ..point(0)
        };
        assert_eq!(
            validate_point(&p, &cfg),
            PointCheck::Reject(RejectReason::NonFinite)
        );
        let p = DataPoint {
            acc: -12.5,
            ..point(0)
        };
        assert_eq!(
            validate_point(&p, &cfg),
            PointCheck::Reject(RejectReason::AccOutOfRange)
        );
        assert_eq!(RejectReason::LatOutOfRange.code(), "lat_out_of_range");
    }

    #[test]
    fn quantization_examples() {
        let q = QuantizationConfig::default();
        let quantized = |acc: f64, heading: f64| {
            quantize_point(
                &DataPoint {
                    acc,
                    heading,
                    ..point(0)
                },
                &q,
            )
        };
        assert_eq!(quantized(0.37, 0.0).acc, 0.25);
        assert_eq!(quantized(0.125, 0.0).acc, 0.25);
        assert_eq!(quantized(-0.125, 0.0).acc, -0.25);
        assert_eq!(quantized(0.0, 357.0).heading, 355.0);
        assert_eq!(quantized(0.0, 359.0).heading, 0.0);
        assert_eq!(quantized(0.0, 2.5).heading, 5.0);

        let p = quantize_point(
            &DataPoint {
                speed: 50.5,
                ..point(3)
            },
            &q,
        );
        assert_eq!(p.speed, 51.0);
        assert_eq!((p.t, p.lat, p.lng), (3, 40.0, -83.0));
    }

    #[test]
    fn quantization_never_yields_negative_zero() {
        let q = QuantizationConfig::default();
        let p = quantize_point(
            &DataPoint {
                acc: -0.1,
                ..point(0)
            },
            &q,
        );
        assert!(p.acc.is_sign_positive());
    }

    #[test]
    fn config_validation() {
        assert!(QuantizationConfig::default().validate().is_ok());
        let bad = QuantizationConfig {
            heading_step: 7.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuantizationConfig {
            acc_step: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ValidationConfig {
            allow_gap: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn preprocess_keeps_contiguous_points() {
        let trajectory = Trajectory::new("x", (0..10).map(point).collect());
        let out = preprocess(&trajectory, &Default::default(), &Default::default()).unwrap();
        assert_eq!(out.len(), 10);
        assert_eq!(out.quantized_with, Some(QuantizationConfig::default()));
    }

    #[test]
    fn preprocess_keeps_longest_piece_after_gap() {
        let mut points: Vec<DataPoint> = (1..=10).map(point).collect();
        points[4].lat = 95.0; // point 5
        let trajectory = Trajectory::new("x", points);
        let out = preprocess(&trajectory, &Default::default(), &Default::default()).unwrap();
        let ts: Vec<u64> = out.points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![6, 7, 8, 9, 10]);
    }

    #[test]
    fn preprocess_splits_on_non_increasing_time() {
        let ts = [0, 1, 2, 2, 3, 4, 5, 6];
        let trajectory = Trajectory::new("x", ts.iter().map(|&t| point(t)).collect());
        let out = preprocess(&trajectory, &Default::default(), &Default::default()).unwrap();
        assert_eq!(
            out.points.iter().map(|p| p.t).collect::<Vec<_>>(),
            vec![2, 3, 4, 5, 6]
        );
    }

    #[test]
    fn preprocess_rejects_all_invalid() {
        let points = (0..5)
            .map(|t| DataPoint {
                lat: 95.0,
                ..point(t)
            })
            .collect();
        let err = preprocess(
            &Trajectory::new("x", points),
            &Default::default(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooShort { len: 0, .. }));
    }

    #[test]
    fn preprocess_rejects_single_survivor() {
        let err = preprocess(
            &Trajectory::new("x", vec![point(0), point(5)]),
            &Default::default(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooShort { len: 1, .. }));
    }

    fn named(n: usize) -> Vec<Trajectory> {
        (0..n)
            .map(|i| Trajectory::new(format!("t{i}"), vec![point(0), point(1)]))
            .collect()
    }

    #[test]
    fn split_sizes() {
        let (train, test) = split_dataset(named(100), 0.05, 7).unwrap();
        assert_eq!((train.len(), test.len()), (95, 5));
        let (train, test) = split_dataset(named(1), 0.05, 7).unwrap();
        assert_eq!((train.len(), test.len()), (1, 0));
    }

    #[test]
    fn split_is_deterministic_and_exhaustive() {
        let ids = |v: &[Trajectory]| v.iter().map(|t| t.id.clone()).collect::<Vec<_>>();
        let (a_train, a_test) = split_dataset(named(40), 0.25, 3).unwrap();
        let (b_train, b_test) = split_dataset(named(40), 0.25, 3).unwrap();
        assert_eq!(ids(&a_train), ids(&b_train));
        assert_eq!(ids(&a_test), ids(&b_test));

        let mut all = ids(&a_train);
        all.extend(ids(&a_test));
        all.sort();
        let mut expected = ids(&named(40));
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split_dataset(vec![], 0.1, 0),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            split_dataset(named(3), 1.0, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn vehicle_index_with_groups() {
        let index =
            read_vehicle_index("trajectory_id,vehicle_id,group\na,v1,I-70\nb,v2,\n".as_bytes())
                .unwrap();
        assert_eq!(index["a"].group.as_deref(), Some("I-70"));
        assert_eq!(index["b"].vehicle_id.as_deref(), Some("v2"));
        assert_eq!(index["b"].group, None);
    }

    #[test]
    fn csv_write_parse_roundtrip() {
        let trajectory = Trajectory::new(
            "r",
            vec![
                point(0),
                DataPoint {
                    acc: -0.25,
                    heading: 355.0,
                    ..point(1)
                },
            ],
        );
        let mut buf = Vec::new();
        write_trajectory_csv(&trajectory, &mut buf).unwrap();
        let back = parse_trajectory_csv(buf.as_slice(), "r").unwrap();
        assert_eq!(back.points, trajectory.points);
    }
}
