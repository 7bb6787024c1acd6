//! CSV and JSON persistence.
//!
//! Two CSV layouts are supported:
//!
//! * grid-wide: `feature,time,q_0,...,q_{M-1}`, one quantile grid per row;
//! * samples-long: `feature,time,value`, one raw observation per row, turned
//!   into empirical quantile grids.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so grid-wide files round-trip bit for bit.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};
use crate::estimate::{FitFlags, FitOptions, FitReport, GramPair};
use crate::linalg::SquareMatrix;
use crate::simulate::CoeffMatrix;
use crate::qfun::{empirical_quantile, frechet_mean, wasserstein, Grid, QuantileGrid, Role, MONOTONE_TOL};
use crate::series::DistSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    SamplesLong,
    GridWide,
}

/// Sidecar description of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: DatasetFormat,
    pub grid_h: f64,
    pub labels: Vec<String>,
    pub times: Vec<String>,
}

impl DatasetManifest {
    pub fn describe(series: &DistSeries, format: DatasetFormat) -> Self {
        DatasetManifest {
            format,
            grid_h: series.grid().h(),
            labels: series.labels().to_vec(),
            times: series.times().to_vec(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_h)
    }

    /// Format error unless `series` has this manifest's grid and labels.
    pub fn check(&self, series: &DistSeries) -> Result<()> {
        let grid = self.grid()?;
        if grid != series.grid() {
            return Err(WmarError::Format(format!(
                "manifest grid has {} points, data has {}",
                grid.len(),
                series.grid().len()
            )));
        }
        if self.labels != series.labels() {
            return Err(WmarError::Format("feature labels differ from manifest".into()));
        }
        if self.times != series.times() {
            return Err(WmarError::Format("time labels differ from manifest".into()));
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| WmarError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| WmarError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(manifest)? + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create(path)?
        .write_all(text.as_bytes())
        .map_err(|e| WmarError::io(path, e))
}

/// Labels, times and cells indexed `[feature][time]`.
type Rows<T> = (Vec<String>, Vec<String>, Vec<Vec<T>>);

/// Collects cells keyed by `(feature, time)` and arranges them as a complete
/// panel, ordering features and times by first appearance.
struct Panel<T> {
    labels: Vec<String>,
    times: Vec<String>,
    label_index: HashMap<String, usize>,
    time_index: HashMap<String, usize>,
    cells: HashMap<(usize, usize), T>,
}

impl<T> Panel<T> {
    fn new() -> Self {
        Panel {
            labels: Vec::new(),
            times: Vec::new(),
            label_index: HashMap::new(),
            time_index: HashMap::new(),
            cells: HashMap::new(),
        }
    }

    fn key(&mut self, feature: &str, time: &str) -> (usize, usize) {
        let i = *self.label_index.entry(feature.to_string()).or_insert_with(|| {
            self.labels.push(feature.to_string());
            self.labels.len() - 1
        });
        let t = *self.time_index.entry(time.to_string()).or_insert_with(|| {
            self.times.push(time.to_string());
            self.times.len() - 1
        });
        (i, t)
    }

    fn into_rows(mut self) -> Result<Rows<T>> {
        if self.labels.is_empty() {
            return Err(WmarError::Empty("data rows"));
        }
        let mut rows = Vec::with_capacity(self.labels.len());
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = Vec::with_capacity(self.times.len());
            for (t, time) in self.times.iter().enumerate() {
                let cell = self.cells.remove(&(i, t)).ok_or_else(|| {
                    WmarError::Format(format!("missing cell feature={label} time={time}"))
                })?;
                row.push(cell);
            }
            rows.push(row);
        }
        Ok((self.labels, self.times, rows))
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.len() != expected.len() || found.iter().zip(expected).any(|(a, b)| a.trim() != *b) {
        return Err(WmarError::Format(format!(
            "header {:?}, expected {}",
            found.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }
    Ok(())
}

fn parse_f64(field: &str, row: usize, column: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| WmarError::Format(format!("row {row}: {column} = {field:?} is not a number")))
}

/// Raw observations in `feature,time,value` form, turned into empirical
/// quantile grids. Row numbers in errors count the header as row 1.
pub fn read_samples_long<R: Read>(reader: R, grid: Grid) -> Result<DistSeries> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    check_header(rdr.headers()?, &["feature", "time", "value"])?;
    let mut panel: Panel<Vec<f64>> = Panel::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(WmarError::Format(format!("row {row}: {} fields, expected 3", rec.len())));
        }
        let value = parse_f64(&rec[2], row, "value")?;
        if !(0.0..=1.0).contains(&value) {
            return Err(WmarError::Format(format!(
                "row {row}: value {value} outside [0, 1]"
            )));
        }
        let key = panel.key(rec[0].trim(), rec[1].trim());
        panel.cells.entry(key).or_default().push(value);
    }
    let (labels, times, rows) = panel.into_rows()?;
    let data = rows
        .into_iter()
        .map(|row| row.iter().map(|s| empirical_quantile(s, grid)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    DistSeries::new(grid, labels, times, data)
}

pub fn read_samples_long_path(path: &Path, grid: Grid) -> Result<DistSeries> {
    read_samples_long(open(path)?, grid)
}

/// Grid-wide CSV. The grid size is the number of `q_` columns; when `expect`
/// is given it must match.
pub fn read_grid_wide<R: Read>(reader: R, expect: Option<Grid>) -> Result<DistSeries> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 {
        return Err(WmarError::Format("header needs feature,time and q columns".into()));
    }
    let m = header.len() - 2;
    let expected: Vec<String> = ["feature".to_string(), "time".to_string()]
        .into_iter()
        .chain((0..m).map(|k| format!("q_{k}")))
        .collect();
    check_header(&header, &expected.iter().map(String::as_str).collect::<Vec<_>>())?;
    let grid = Grid::with_size(m)?;
    if let Some(g) = expect {
        if g != grid {
            return Err(WmarError::Format(format!(
                "file has {m} quantile columns, expected {}",
                g.len()
            )));
        }
    }
    let mut panel: Panel<QuantileGrid> = Panel::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        if rec.len() != m + 2 {
            return Err(WmarError::Format(format!(
                "row {row}: {} fields, expected {}",
                rec.len(),
                m + 2
            )));
        }
        let values = (0..m)
            .map(|j| parse_f64(&rec[j + 2], row, &expected[j + 2]))
            .collect::<Result<Vec<_>>>()?;
        let q = QuantileGrid::quantile(grid, values)
            .map_err(|e| WmarError::Format(format!("row {row}: {e}")))?;
        let key = panel.key(rec[0].trim(), rec[1].trim());
        if panel.cells.insert(key, q).is_some() {
            return Err(WmarError::Format(format!(
                "row {row}: duplicate cell feature={} time={}",
                &rec[0], &rec[1]
            )));
        }
    }
    let (labels, times, data) = panel.into_rows()?;
    DistSeries::new(grid, labels, times, data)
}

pub fn read_grid_wide_path(path: &Path, expect: Option<Grid>) -> Result<DistSeries> {
    read_grid_wide(open(path)?, expect)
}

/// Rows are written feature by feature, each in time order.
pub fn write_grid_wide<W: Write>(series: &DistSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let m = series.grid().len();
    let mut header = vec!["feature".to_string(), "time".to_string()];
    header.extend((0..m).map(|k| format!("q_{k}")));
    w.write_record(&header)?;
    for (i, label) in series.labels().iter().enumerate() {
        for (t, time) in series.times().iter().enumerate() {
            let mut rec = Vec::with_capacity(m + 2);
            rec.push(label.clone());
            rec.push(time.clone());
            rec.extend(series.get(i, t).values().iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| WmarError::Format(e.to_string()))?;
    Ok(())
}

pub fn grid_wide_to_string(series: &DistSeries) -> Result<String> {
    let mut buf = Vec::new();
    write_grid_wide(series, &mut buf)?;
    String::from_utf8(buf).map_err(|e| WmarError::Format(e.to_string()))
}

pub fn write_grid_wide_path(series: &DistSeries, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(create(path)?);
    write_grid_wide(series, &mut f)?;
    f.flush().map_err(|e| WmarError::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Decreasing,
    OutOfRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub feature: String,
    pub time: String,
    pub index: usize,
    pub value: f64,
    pub kind: ViolationKind,
}

/// Distance between the Fréchet means of the first and second half of a feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub feature: String,
    pub wasserstein: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub drift: Vec<Drift>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Report cells that are not quantile functions, and a per-feature check of
/// whether the mean stays put over time.
pub fn validate(series: &DistSeries) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, label) in series.labels().iter().enumerate() {
        for (t, time) in series.times().iter().enumerate() {
            let v = series.get(i, t).values();
            let mut push = |index: usize, kind: ViolationKind| {
                violations.push(Violation {
                    feature: label.clone(),
                    time: time.clone(),
                    index,
                    value: v[index],
                    kind,
                })
            };
            for k in 0..v.len() {
                if !(-MONOTONE_TOL..=1.0 + MONOTONE_TOL).contains(&v[k]) {
                    push(k, ViolationKind::OutOfRange);
                }
                if k > 0 && v[k] < v[k - 1] - MONOTONE_TOL {
                    push(k, ViolationKind::Decreasing);
                }
            }
        }
    }
    let half = series.len() / 2;
    let drift = series
        .labels()
        .iter()
        .zip(series.data())
        .map(|(label, row)| {
            let d = if half == 0 {
                0.0
            } else {
                let a = frechet_mean(&row[..half]).expect("nonempty, same grid");
                let b = frechet_mean(&row[half..]).expect("nonempty, same grid");
                wasserstein(&a, &b).expect("same grid")
            };
            Drift {
                feature: label.clone(),
                wasserstein: d,
            }
        })
        .collect();
    ValidationReport { violations, drift }
}

/// One-instant series holding `grids` under `time`, for writing means and forecasts.
pub fn snapshot(labels: &[String], time: &str, grids: &[QuantileGrid]) -> Result<DistSeries> {
    let grid = grids.first().ok_or(WmarError::Empty("snapshot grids"))?.grid();
    let data = grids
        .iter()
        .map(|g| {
            let q = if g.role() == Role::Quantile {
                g.clone()
            } else {
                QuantileGrid::quantile(grid, g.values().to_vec())?
            };
            Ok(vec![q])
        })
        .collect::<Result<Vec<_>>>()?;
    DistSeries::new(grid, labels.to_vec(), vec![time.to_string()], data)
}

/// On-disk form of a [`FitReport`]. Matrices are row-major with explicit `n`;
/// the removed means travel as an embedded grid-wide CSV block.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitReportFile {
    n: usize,
    labels: Vec<String>,
    grid_size: usize,
    grid_h: f64,
    options: FitOptions,
    coefficients: SquareMatrix,
    unconstrained: Option<SquareMatrix>,
    gram: GramPair,
    means_csv: String,
    iters: Vec<usize>,
    objective: Vec<f64>,
    converged: Vec<bool>,
    flags: FitFlags,
}

pub fn fit_report_to_json(report: &FitReport) -> Result<String> {
    let means = snapshot(&report.labels, "mean", &report.means)?;
    let file = FitReportFile {
        n: report.n(),
        labels: report.labels.clone(),
        grid_size: report.grid.len(),
        grid_h: report.grid.h(),
        options: report.options.clone(),
        coefficients: report.coeffs.matrix().clone(),
        unconstrained: report.unconstrained.clone(),
        gram: report.gram.clone(),
        means_csv: grid_wide_to_string(&means)?,
        iters: report.iters.clone(),
        objective: report.objective.clone(),
        converged: report.converged.clone(),
        flags: report.flags.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn fit_report_from_json(text: &str) -> Result<FitReport> {
    let file: FitReportFile = serde_json::from_str(text)?;
    let grid = Grid::with_size(file.grid_size)?;
    let means = read_grid_wide(file.means_csv.as_bytes(), Some(grid))?;
    if means.labels() != file.labels.as_slice() || means.len() != 1 {
        return Err(WmarError::Format("means block does not match the labels".into()));
    }
    let n = file.n;
    if file.labels.len() != n
        || file.coefficients.n() != n
        || file.gram.n() != n
        || file.iters.len() != n
        || file.objective.len() != n
        || file.converged.len() != n
    {
        return Err(WmarError::Format(format!("fields disagree with n = {n}")));
    }
    Ok(FitReport {
        labels: file.labels,
        grid,
        coeffs: CoeffMatrix::new(file.coefficients)?,
        unconstrained: file.unconstrained,
        gram: file.gram,
        means: means.instant(0),
        iters: file.iters,
        objective: file.objective,
        converged: file.converged,
        flags: file.flags,
        options: file.options,
    })
}

pub fn read_fit_report(path: &Path) -> Result<FitReport> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| WmarError::io(path, e))?;
    fit_report_from_json(&text)
}
