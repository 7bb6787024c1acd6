//! Command-line front end.
//!
//! Every command writes its outputs into `--out-dir` and prints the written
//! paths, one per line. Failures print a single JSON line
//! `{"error": <kind>, "message": <text>}` on stderr and exit nonzero.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{self, DatasetFormat, DatasetManifest};
use crate::error::{Result, WmarError};
use crate::estimate::{self, FitOptions};
use crate::graphx;
use crate::qfun::{wasserstein, Grid};
use crate::series::DistSeries;
use crate::simulate::{self, coeff_rng, gen_coeffs, SimConfig};
use crate::svg::{quantile_fan, Chart, Line};

#[derive(Debug, Parser)]
#[command(
    name = "wmar",
    version,
    about = "Wasserstein autoregression for time series of distributions on [0, 1]"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic dataset with a random coefficient matrix.
    Simulate(SimulateArgs),
    /// Estimate the coefficient matrix from a series.
    Fit(FitArgs),
    /// Estimation error against the truth over replicates and series lengths.
    RmsdStudy(StudyArgs),
    /// Forecast the next instants from a fitted model.
    Forecast(ForecastArgs),
    /// Export the dependency graph of a fitted model.
    Graph(GraphArgs),
    /// Remove each feature's Fréchet mean.
    Center(CenterArgs),
    /// Pairwise Wasserstein distances.
    Distance(DistanceArgs),
    /// Quantile fan chart of one feature.
    Fan(FanArgs),
    /// Check a series for invalid cells and drifting means.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
    Dot,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    GridWide,
    SamplesLong,
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Series CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::GridWide)]
    pub input_format: InputFormat,
    /// Grid spacing; required for samples-long input unless a manifest gives it.
    #[arg(long)]
    pub grid_h: Option<f64>,
    /// Dataset manifest JSON to check the input against.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// JSON file with simulation settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of features N.
    #[arg(long)]
    pub features: Option<usize>,
    /// Number of transitions T (the series has T + 1 instants).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Transitions simulated and discarded before the recorded series.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Spectral norm of the coefficient matrix is 1 / (2 + alpha).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Probability of a nonzero off-diagonal coefficient.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quantile grid spacing.
    #[arg(long)]
    pub grid_h: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    /// Stop a row once consecutive iterates move less than this.
    #[arg(long, default_value_t = FitOptions::default().tol)]
    pub tol: f64,
    /// Iteration cap per row.
    #[arg(long, default_value_t = FitOptions::default().max_iter)]
    pub max_iter: usize,
    /// Diagonal ridge used only when the lag-0 Gram matrix is singular.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
}

impl FitFlags {
    fn options(&self) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ridge: self.ridge,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    /// The input is already centered; skip mean removal.
    #[arg(long)]
    pub centered: bool,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5])]
    pub alpha: Vec<f64>,
    /// Comma-separated series lengths T.
    #[arg(long, value_delimiter = ',', default_values_t = [200, 500, 1000, 2000])]
    pub t_schedule: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = SimConfig::default().burn_in)]
    pub burn_in: usize,
    #[arg(long, default_value_t = SimConfig::default().density)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = SimConfig::default().grid_h)]
    pub grid_h: f64,
    #[command(flatten)]
    pub fit: FitFlags,
    /// `svg` writes charts next to the CSV tables; `csv` writes tables only.
    #[arg(long, value_enum, default_value_t = OutFormat::Svg)]
    pub format: OutFormat,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Fit report JSON written by `fit`.
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Fit report JSON written by `fit`.
    #[arg(long)]
    pub report: PathBuf,
    /// Keep coefficients strictly above this.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Dot)]
    pub format: OutFormat,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct CenterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Between {
    /// All feature pairs at each instant.
    Features,
    /// All instant pairs within each feature.
    Times,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Between::Features)]
    pub between: Between,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct FanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Feature label; defaults to the first feature.
    #[arg(long)]
    pub series: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutDir,
}

/// Entry point used by the binary.
pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match execute(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{line}");
}

pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::RmsdStudy(a) => cmd_rmsd_study(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Center(a) => cmd_center(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Fan(a) => cmd_fan(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn require_format(found: OutFormat, allowed: &[OutFormat]) -> Result<()> {
    if allowed.contains(&found) {
        return Ok(());
    }
    Err(WmarError::InvalidArgument(format!(
        "--format {} not supported here (use one of {})",
        format_name(found),
        allowed.iter().map(|f| format_name(*f)).collect::<Vec<_>>().join(", ")
    )))
}

fn format_name(f: OutFormat) -> &'static str {
    match f {
        OutFormat::Csv => "csv",
        OutFormat::Json => "json",
        OutFormat::Dot => "dot",
        OutFormat::Svg => "svg",
    }
}

fn prepare(out: &OutDir) -> Result<&Path> {
    std::fs::create_dir_all(&out.out_dir).map_err(|e| WmarError::io(&out.out_dir, e))?;
    Ok(&out.out_dir)
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(out: &'a OutDir) -> Result<Self> {
        Ok(Outputs {
            dir: prepare(out)?,
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        dataio::write_text(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn series(&mut self, name: &str, series: &DistSeries) -> Result<()> {
        let path = self.dir.join(name);
        dataio::write_grid_wide_path(series, &path)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn load_series(a: &InputArgs) -> Result<DistSeries> {
    let manifest = a.manifest.as_deref().map(dataio::read_manifest).transpose()?;
    let grid = match (a.grid_h, &manifest) {
        (Some(h), _) => Some(Grid::new(h)?),
        (None, Some(m)) => Some(m.grid()?),
        (None, None) => None,
    };
    let series = match a.input_format {
        InputFormat::GridWide => dataio::read_grid_wide_path(&a.input, grid)?,
        InputFormat::SamplesLong => {
            let grid = grid.ok_or_else(|| {
                WmarError::InvalidArgument("samples-long input needs --grid-h or --manifest".into())
            })?;
            dataio::read_samples_long_path(&a.input, grid)?
        }
    };
    if let Some(m) = manifest {
        let expected = match a.input_format {
            InputFormat::GridWide => DatasetFormat::GridWide,
            InputFormat::SamplesLong => DatasetFormat::SamplesLong,
        };
        if m.format != expected {
            return Err(WmarError::Format(format!(
                "manifest declares {:?}, input read as {expected:?}",
                m.format
            )));
        }
        m.check(&series)?;
    }
    Ok(series)
}

impl SimArgs {
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| WmarError::io(path, e))?;
                serde_json::from_str(&text)?
            }
            None => SimConfig::default(),
        };
        if let Some(v) = self.features {
            cfg.n = v;
        }
        if let Some(v) = self.steps {
            cfg.t = v;
        }
        if let Some(v) = self.burn_in {
            cfg.burn_in = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.density {
            cfg.density = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.grid_h {
            cfg.grid_h = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    require_format(a.format, &[OutFormat::Csv])?;
    let cfg = a.sim.resolve()?;
    let data = simulate::simulate_dataset(&cfg)?;
    let mut out = Outputs::new(&a.out)?;
    out.json("config.json", &cfg)?;
    out.json("coeffs.json", &data.coeffs)?;
    out.series("raw.csv", &data.raw)?;
    out.series("centered.csv", &data.centered)?;
    out.series(
        "means.csv",
        &dataio::snapshot(data.raw.labels(), "mean", &data.means)?,
    )?;
    out.json(
        "manifest.json",
        &DatasetManifest::describe(&data.raw, DatasetFormat::GridWide),
    )?;
    Ok(out.written)
}

fn cmd_fit(a: &FitArgs) -> Result<Vec<PathBuf>> {
    require_format(a.format, &[OutFormat::Json])?;
    let series = load_series(&a.input)?;
    let opts = a.fit.options();
    let report = if a.centered {
        estimate::fit_centered(&series, &opts)?
    } else {
        estimate::fit(&series, &opts)?
    };
    let mut out = Outputs::new(&a.out)?;
    out.text("fit.json", &dataio::fit_report_to_json(&report)?)?;
    Ok(out.written)
}

/// Settings of a simulation study of the estimation error.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyParams {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub t_schedule: Vec<usize>,
    pub replicates: usize,
    pub burn_in: usize,
    pub density: f64,
    pub seed: u64,
    pub grid_h: f64,
    pub fit: FitOptions,
}

/// Relative error statistics for one `(alpha, T)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub alpha: f64,
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    /// Mean wall-clock seconds per fit; not reproducible.
    pub seconds: f64,
}

/// For each alpha one coefficient matrix is drawn from `seed`; replicate `r`
/// simulates a series of length `max(T)` from seed `seed + r` and fits every
/// prefix in the schedule. Replicates run in parallel; results do not depend
/// on the thread count.
pub fn rmsd_study(p: &StudyParams) -> Result<Vec<StudyRow>> {
    if p.replicates == 0 || p.alphas.is_empty() || p.t_schedule.is_empty() {
        return Err(WmarError::InvalidArgument(
            "need at least one replicate, alpha and T".into(),
        ));
    }
    let t_max = *p.t_schedule.iter().max().expect("nonempty");
    if p.t_schedule.contains(&0) {
        return Err(WmarError::InvalidArgument("T must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &alpha in &p.alphas {
        let base = SimConfig {
            n: p.n,
            t: t_max,
            burn_in: p.burn_in,
            alpha,
            density: p.density,
            seed: p.seed,
            grid_h: p.grid_h,
        };
        let coeffs = gen_coeffs(&base, &mut coeff_rng(p.seed))?;
        let per_rep = (0..p.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let cfg = SimConfig {
                    seed: p.seed.wrapping_add(r),
                    ..base.clone()
                };
                let data = simulate::simulate_with_coeffs(coeffs.clone(), &cfg)?;
                p.t_schedule
                    .iter()
                    .map(|&t| {
                        let start = Instant::now();
                        let fit = estimate::fit(&data.raw.prefix(t + 1)?, &p.fit)?;
                        let secs = start.elapsed().as_secs_f64();
                        Ok((estimate::rmsd(fit.coeffs.matrix(), coeffs.matrix())?, secs))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, &t) in p.t_schedule.iter().enumerate() {
            let vals: Vec<f64> = per_rep.iter().map(|v| v[k].0).collect();
            let r = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / r;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0)).sqrt()
            } else {
                0.0
            };
            let seconds = per_rep.iter().map(|v| v[k].1).sum::<f64>() / r;
            rows.push(StudyRow {
                alpha,
                t,
                mean,
                std,
                seconds,
            });
        }
    }
    Ok(rows)
}

fn study_chart(rows: &[StudyRow], title: &str, y_label: &str, pick: fn(&StudyRow) -> f64) -> Chart {
    let mut alphas: Vec<f64> = Vec::new();
    for r in rows {
        if !alphas.contains(&r.alpha) {
            alphas.push(r.alpha);
        }
    }
    let lines = alphas
        .iter()
        .map(|&a| Line {
            name: format!("alpha = {a}"),
            points: rows
                .iter()
                .filter(|r| r.alpha == a)
                .map(|r| (r.t as f64, pick(r)))
                .collect(),
            color: None,
        })
        .collect();
    Chart {
        title: title.into(),
        x_label: "T".into(),
        y_label: y_label.into(),
        lines,
        legend: true,
    }
}

fn cmd_rmsd_study(a: &StudyArgs) -> Result<Vec<PathBuf>> {
    require_format(a.format, &[OutFormat::Svg, OutFormat::Csv])?;
    let params = StudyParams {
        n: a.features,
        alphas: a.alpha.clone(),
        t_schedule: a.t_schedule.clone(),
        replicates: a.replicates,
        burn_in: a.burn_in,
        density: a.density,
        seed: a.seed,
        grid_h: a.grid_h,
        fit: a.fit.options(),
    };
    params.fit.validate()?;
    let rows = rmsd_study(&params)?;
    let mut out = Outputs::new(&a.out)?;
    let mut table = String::from("alpha,T,mean,std\n");
    let mut timing = String::from("alpha,T,seconds\n");
    for r in &rows {
        table.push_str(&format!("{},{},{},{}\n", r.alpha, r.t, r.mean, r.std));
        timing.push_str(&format!("{},{},{}\n", r.alpha, r.t, r.seconds));
    }
    out.text("rmsd.csv", &table)?;
    out.text("timing.csv", &timing)?;
    if a.format == OutFormat::Svg {
        out.text(
            "rmsd_mean.svg",
            &study_chart(&rows, "Mean RMSD", "mean RMSD", |r| r.mean).render(),
        )?;
        out.text(
            "rmsd_std.svg",
            &study_chart(&rows, "Standard deviation of RMSD", "sd RMSD", |r| r.std).render(),
        )?;
        out.text(
            "timing.svg",
            &study_chart(&rows, "Fit time", "seconds", |r| r.seconds).render(),
        )?;
    }
    Ok(out.written)
}

#[derive(Serialize)]
struct ForecastJson<'a> {
    labels: &'a [String],
    grid_size: usize,
    steps: Vec<ForecastStep>,
}

#[derive(Serialize)]
struct ForecastStep {
    step: usize,
    values: Vec<Vec<f64>>,
}

fn cmd_forecast(a: &ForecastArgs) -> Result<Vec<PathBuf>> {
    require_format(a.format, &[OutFormat::Csv, OutFormat::Json])?;
    let report = dataio::read_fit_report(&a.report)?;
    let series = load_series(&a.input)?;
    if series.labels() != report.labels.as_slice() {
        return Err(WmarError::InvalidArgument(
            "series features differ from the fitted model".into(),
        ));
    }
    let last = series.instant(series.len() - 1);
    let steps = estimate::forecast_horizon(&report, &last, a.horizon)?;
    let mut out = Outputs::new(&a.out)?;
    match a.format {
        OutFormat::Json => {
            let doc = ForecastJson {
                labels: &report.labels,
                grid_size: report.grid.len(),
                steps: steps
                    .iter()
                    .enumerate()
                    .map(|(h, grids)| ForecastStep {
                        step: h + 1,
                        values: grids.iter().map(|g| g.values().to_vec()).collect(),
                    })
                    .collect(),
            };
            out.json("forecast.json", &doc)?;
        }
        _ => {
            let n = report.n();
            let data = (0..n)
                .map(|i| steps.iter().map(|s| s[i].clone()).collect())
                .collect();
            let times = (1..=a.horizon).map(|h| format!("+{h}")).collect();
            let fc = DistSeries::new(report.grid, report.labels.clone(), times, data)?;
            out.series("forecast.csv", &fc)?;
        }
    }
    Ok(out.written)
}

fn cmd_graph(a: &GraphArgs) -> Result<Vec<PathBuf>> {
    require_format(a.format, &[OutFormat::Dot, OutFormat::Json, OutFormat::Csv])?;
    let report = dataio::read_fit_report(&a.report)?;
    let list = graphx::to_edges(&report.coeffs, &report.labels, a.threshold)?;
    let mut out = Outputs::new(&a.out)?;
    match a.format {
        OutFormat::Dot => out.text("graph.dot", &graphx::export_dot(&list))?,
        OutFormat::Json => out.text("graph.json", &(graphx::export_json(&list)? + "\n"))?,
        _ => out.text("edges.csv", &graphx::export_csv(&list.edges)?)?,
    }
    let top = graphx::top_k(&report.coeffs, &report.labels, a.top_k)?;
    out.text("top_edges.csv", &graphx::export_csv(&top)?)?;
    Ok(out.written)
}

fn cmd_center(a: &CenterArgs) -> Result<Vec<PathBuf>> {
    let series = load_series(&a.input)?;
    let c = estimate::center_series(&series)?;
    let mut out = Outputs::new(&a.out)?;
    out.series("centered.csv", &c.series)?;
    out.series("means.csv", &dataio::snapshot(series.labels(), "mean", &c.means)?)?;
    Ok(out.written)
}

fn cmd_distance(a: &DistanceArgs) -> Result<Vec<PathBuf>> {
    let s = load_series(&a.input)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match a.between {
        Between::Features => {
            w.write_record(["time", "from", "to", "distance"])?;
            for (t, time) in s.times().iter().enumerate() {
                for i in 0..s.n_features() {
                    for j in i + 1..s.n_features() {
                        let d = wasserstein(s.get(i, t), s.get(j, t))?;
                        w.write_record([time, &s.labels()[i], &s.labels()[j], &d.to_string()])?;
                    }
                }
            }
        }
        Between::Times => {
            w.write_record(["feature", "from", "to", "distance"])?;
            for (i, label) in s.labels().iter().enumerate() {
                for t in 0..s.len() {
                    for u in t + 1..s.len() {
                        let d = wasserstein(s.get(i, t), s.get(i, u))?;
                        w.write_record([label, &s.times()[t], &s.times()[u], &d.to_string()])?;
                    }
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| WmarError::Format(e.to_string()))?;
    let mut out = Outputs::new(&a.out)?;
    out.text(
        "distances.csv",
        &String::from_utf8(bytes).map_err(|e| WmarError::Format(e.to_string()))?,
    )?;
    Ok(out.written)
}

fn cmd_fan(a: &FanArgs) -> Result<Vec<PathBuf>> {
    let s = load_series(&a.input)?;
    let i = match &a.series {
        Some(label) => s.index_of(label).ok_or_else(|| {
            WmarError::InvalidArgument(format!("no feature labelled {label:?}"))
        })?,
        None => 0,
    };
    let chart = quantile_fan(&s.labels()[i], s.feature(i), s.times());
    let mut out = Outputs::new(&a.out)?;
    out.text("fan.svg", &chart.render())?;
    out.text("fan.csv", &chart.to_csv())?;
    Ok(out.written)
}

fn cmd_validate(a: &ValidateArgs) -> Result<Vec<PathBuf>> {
    let s = load_series(&a.input)?;
    let report = dataio::validate(&s);
    let mut out = Outputs::new(&a.out)?;
    out.json("validation.json", &report)?;
    Ok(out.written)
}
