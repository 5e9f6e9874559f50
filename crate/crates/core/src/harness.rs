//! Parameter sweeps over seeded replications, with CSV and SVG output.
//!
//! Each replication places nodes, runs the consensus phase and schedules the
//! exchange phase on its own random streams. The streams depend only on the
//! seed and the replication index, so every sweep value sees the same draws
//! wherever the swept parameter does not change what is drawn.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Fading, SimConfig};
use crate::consensus::run_sync;
use crate::error::{Error, Result};
use crate::scheduler::schedule_exchange;
use crate::topology::place_nodes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// P0 in dBm.
    PowerThreshold,
    NumNodes,
    NumSubbands,
    /// Mean of the exponential power gain.
    FadingMean,
    /// Nakagami shape with unit mean power.
    NakagamiM,
}

impl SweepParam {
    pub fn apply(self, base: &SimConfig, value: f64) -> SimConfig {
        let mut c = base.clone();
        match self {
            SweepParam::PowerThreshold => c.power_threshold_dbm = value,
            SweepParam::NumNodes => c.num_nodes = value.round() as usize,
            SweepParam::NumSubbands => c.num_subbands = value.round() as usize,
            SweepParam::FadingMean => c.fading = Fading::Rayleigh { mean: value },
            SweepParam::NakagamiM => c.fading = Fading::Nakagami { m: value },
        }
        c
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            SweepParam::PowerThreshold => "Power threshold P0 (dBm)",
            SweepParam::NumNodes => "Number of SBSs K",
            SweepParam::NumSubbands => "Number of sub-bands N",
            SweepParam::FadingMean => "Mean Rayleigh power gain",
            SweepParam::NakagamiM => "Nakagami shape m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub sweep: SweepParam,
    pub values: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub base: SimConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig(format!("{}: no sweep values", self.name)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(format!("{}: replications must be >= 1", self.name)));
        }
        for &v in &self.values {
            let c = self.sweep.apply(&self.base, v);
            c.validate()?;
            if c.num_nodes < 3 {
                return Err(Error::InsufficientNodes(c.num_nodes));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads and validates a scenario file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let spec = Self::from_toml_str(&text).map_err(|source| Error::Toml {
            path: path.to_owned(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome of one network draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub cf: f64,
    pub n_avg: f64,
    pub converged: bool,
    pub algorithmic_time: f64,
    pub exchange_noma: f64,
    pub exchange_oma: f64,
    pub alpha_strong: f64,
    pub swap_iterations: usize,
}

impl Replication {
    pub fn t_sync_noma(&self) -> f64 {
        self.algorithmic_time + self.exchange_noma
    }

    pub fn t_sync_oma(&self) -> f64 {
        self.algorithmic_time + self.exchange_oma
    }
}

/// RNG for one phase of one replication. Streams are disjoint across both.
pub fn phase_rng(seed: u64, replication: usize, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64 * 3 + phase);
    rng
}

pub fn run_replication(config: &SimConfig, replication: usize) -> Result<Replication> {
    let seed = config.rng_seed;
    let topology = place_nodes(config, &mut phase_rng(seed, replication, 0))?;
    let trace = run_sync(config, &topology, &mut phase_rng(seed, replication, 1))?;
    let exchange = schedule_exchange(&topology, config, &mut phase_rng(seed, replication, 2))?;
    Ok(Replication {
        cf: trace.mean_cf(),
        n_avg: trace.mean_iterations(),
        converged: trace.all_converged(),
        algorithmic_time: trace.algorithmic_time,
        exchange_noma: exchange.noma.exchange_delay_total,
        exchange_oma: exchange.oma.exchange_delay_total,
        alpha_strong: exchange.noma.alpha_strong,
        swap_iterations: exchange.noma.swap_iterations_used,
    })
}

/// One CSV row per sweep value. Columns follow field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub cf_mean: f64,
    pub n_avg: f64,
    pub algorithmic_time_s: f64,
    pub exchange_delay_noma_s: f64,
    pub exchange_delay_oma_s: f64,
    pub t_sync_noma_s: f64,
    pub t_sync_oma_s: f64,
    /// Relative saving of NOMA in total synchronization time.
    pub noma_gain_pct: f64,
    pub n_avg_ci95: f64,
    pub t_sync_noma_ci95_s: f64,
    pub t_sync_oma_ci95_s: f64,
    pub noma_gain_ci95_pct: f64,
    /// Relative saving of NOMA in exchange delay alone.
    pub exchange_gain_pct: f64,
    pub swap_iterations_mean: f64,
    pub alpha_strong_mean: f64,
    pub converged_fraction: f64,
    pub replications: usize,
    /// Empty unless the sweep point failed.
    pub error: String,
}

/// Sum of the values in ascending order, so the result does not depend on
/// the order replications finished in.
fn sorted_sum(xs: impl IntoIterator<Item = f64>) -> (f64, usize) {
    let mut v: Vec<f64> = xs.into_iter().collect();
    v.sort_by(f64::total_cmp);
    (v.iter().sum(), v.len())
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = sorted_sum(xs);
    s / n as f64
}

/// Half-width `1.96 * s / sqrt(n)`; zero for a single sample.
fn ci95(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    let (ss, _) = sorted_sum(xs.iter().map(|x| (x - m).powi(2)));
    1.96 * (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
}

fn gain_pct(noma: f64, oma: f64) -> f64 {
    100.0 * (oma - noma) / oma
}

impl ResultRow {
    pub fn aggregate(sweep_value: f64, reps: &[Replication]) -> Self {
        let col = |f: fn(&Replication) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
        let algorithmic_time_s = mean(col(|r| r.algorithmic_time));
        let exchange_delay_noma_s = mean(col(|r| r.exchange_noma));
        let exchange_delay_oma_s = mean(col(|r| r.exchange_oma));
        let t_sync_noma_s = algorithmic_time_s + exchange_delay_noma_s;
        let t_sync_oma_s = algorithmic_time_s + exchange_delay_oma_s;
        let gains = col(|r| gain_pct(r.t_sync_noma(), r.t_sync_oma()));
        ResultRow {
            sweep_value,
            cf_mean: mean(col(|r| r.cf)),
            n_avg: mean(col(|r| r.n_avg)),
            algorithmic_time_s,
            exchange_delay_noma_s,
            exchange_delay_oma_s,
            t_sync_noma_s,
            t_sync_oma_s,
            noma_gain_pct: gain_pct(t_sync_noma_s, t_sync_oma_s),
            n_avg_ci95: ci95(&col(|r| r.n_avg)),
            t_sync_noma_ci95_s: ci95(&col(Replication::t_sync_noma)),
            t_sync_oma_ci95_s: ci95(&col(Replication::t_sync_oma)),
            noma_gain_ci95_pct: ci95(&gains),
            exchange_gain_pct: gain_pct(exchange_delay_noma_s, exchange_delay_oma_s),
            swap_iterations_mean: mean(col(|r| r.swap_iterations as f64)),
            alpha_strong_mean: mean(col(|r| r.alpha_strong)),
            converged_fraction: mean(col(|r| if r.converged { 1.0 } else { 0.0 })),
            replications: reps.len(),
            error: String::new(),
        }
    }

    pub fn failed(sweep_value: f64, replications: usize, error: &Error) -> Self {
        ResultRow {
            sweep_value,
            cf_mean: f64::NAN,
            n_avg: f64::NAN,
            algorithmic_time_s: f64::NAN,
            exchange_delay_noma_s: f64::NAN,
            exchange_delay_oma_s: f64::NAN,
            t_sync_noma_s: f64::NAN,
            t_sync_oma_s: f64::NAN,
            noma_gain_pct: f64::NAN,
            n_avg_ci95: f64::NAN,
            t_sync_noma_ci95_s: f64::NAN,
            t_sync_oma_ci95_s: f64::NAN,
            noma_gain_ci95_pct: f64::NAN,
            exchange_gain_pct: f64::NAN,
            swap_iterations_mean: f64::NAN,
            alpha_strong_mean: f64::NAN,
            converged_fraction: f64::NAN,
            replications,
            error: error.to_string(),
        }
    }
}

/// All replications of one sweep value, in replication order.
pub fn run_point(config: &SimConfig, replications: usize) -> Result<Vec<Replication>> {
    config.validate()?;
    (0..replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect()
}

/// Per-value replications; a failed sweep point keeps its error.
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<Vec<(f64, Result<Vec<Replication>>)>> {
    if spec.values.is_empty() {
        return Err(Error::InvalidConfig(format!("{}: no sweep values", spec.name)));
    }
    if spec.replications == 0 {
        return Err(Error::InvalidConfig(format!("{}: replications must be >= 1", spec.name)));
    }
    Ok(spec
        .values
        .iter()
        .map(|&v| {
            log::info!("{}: {:?} = {v}", spec.name, spec.sweep);
            (v, run_point(&spec.sweep.apply(&spec.base, v), spec.replications))
        })
        .collect())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_detailed(spec)?
        .into_iter()
        .map(|(v, reps)| match reps {
            Ok(reps) => ResultRow::aggregate(v, &reps),
            Err(e) => {
                log::error!("{}: sweep value {v} failed: {e}", spec.name);
                ResultRow::failed(v, spec.replications, &e)
            }
        })
        .collect())
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Writes the rows with a header line; an empty slice gives a header-only file.
pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error(path))?;
    w.write_record(result_columns()).map_err(csv_error(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Header of the results CSV.
pub fn result_columns() -> [&'static str; 19] {
    [
        "sweep_value",
        "cf_mean",
        "n_avg",
        "algorithmic_time_s",
        "exchange_delay_noma_s",
        "exchange_delay_oma_s",
        "t_sync_noma_s",
        "t_sync_oma_s",
        "noma_gain_pct",
        "n_avg_ci95",
        "t_sync_noma_ci95_s",
        "t_sync_oma_ci95_s",
        "noma_gain_ci95_pct",
        "exchange_gain_pct",
        "swap_iterations_mean",
        "alpha_strong_mean",
        "converged_fraction",
        "replications",
        "error",
    ]
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    r.deserialize().collect::<csv::Result<_>>().map_err(csv_error(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl PlotStyle {
    pub fn for_sweep(name: &str, sweep: SweepParam) -> Self {
        PlotStyle {
            title: name.to_owned(),
            x_label: sweep.axis_label().to_owned(),
            y_label: "Network synchronization time (s)".to_owned(),
        }
    }
}

/// Line chart of NOMA and OMA total synchronization time against the sweep value.
pub fn emit_plot(rows: &[ResultRow], path: impl AsRef<Path>, style: &PlotStyle) -> Result<()> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let series = |name: &str, f: fn(&ResultRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| {
                let (x, y) = (r.sweep_value, f(r));
                if x.is_finite() && y.is_finite() {
                    Some((x, y))
                } else {
                    log::warn!("{name}: skipping non-finite point ({x}, {y})");
                    None
                }
            })
            .collect()
    };
    let noma = series("NOMA", |r| r.t_sync_noma_s);
    let oma = series("OMA", |r| r.t_sync_oma_s);
    let points = || noma.iter().chain(&oma);
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points() {
        (x_lo, x_hi, y_lo, y_hi) = (x_lo.min(x), x_hi.max(x), y_lo.min(y), y_hi.max(y));
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1e-12) };
        (lo - d, hi + d)
    };
    let (x_lo, x_hi) = pad(x_lo, x_hi);
    let (y_lo, y_hi) = pad(y_lo, y_hi);

    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(format!("{}: {e}", path.as_ref().display()));
    let root = SVGBackend::new(path.as_ref(), (800, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&style.title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc(style.x_label.as_str())
        .y_desc(style.y_label.as_str())
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (label, data, color) in [("NOMA", &noma, BLUE), ("OMA", &oma, RED)] {
        chart
            .draw_series(LineSeries::new(data.iter().copied(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Empirical CDF of swap iterations per sweep value, as
/// `sweep_value,swap_iterations,cdf` rows.
pub fn emit_swap_cdf(points: &[(f64, Vec<Replication>)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["sweep_value", "swap_iterations", "cdf"]).map_err(csv_error(path))?;
    for (v, reps) in points {
        let mut counts: Vec<usize> = reps.iter().map(|r| r.swap_iterations).collect();
        counts.sort_unstable();
        let n = counts.len() as f64;
        for (i, c) in counts.iter().enumerate() {
            if counts.get(i + 1) != Some(c) {
                w.write_record([v.to_string(), c.to_string(), ((i + 1) as f64 / n).to_string()])
                    .map_err(csv_error(path))?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Built-in sweep scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Power threshold sweep at two network sizes.
    Fig4,
    /// Sub-band sweep at two network sizes.
    Fig5,
    /// Rayleigh mean sweep.
    Fig6,
    /// Nakagami m = 1 against m = 3.
    Fig7,
    /// Swap-iteration distribution for 2, 3 and 4 sub-bands.
    Fig8,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            "fig6" => Ok(Preset::Fig6),
            "fig7" => Ok(Preset::Fig7),
            "fig8" => Ok(Preset::Fig8),
            _ => Err(Error::InvalidConfig(format!("unknown preset {s:?}; expected fig4..fig8"))),
        }
    }
}

impl Preset {
    /// Full scale raises the snapshot and iteration budgets and runs the
    /// single-size scenarios at 250 nodes.
    pub fn specs(self, full_scale: bool) -> Vec<ExperimentSpec> {
        let base = if full_scale {
            SimConfig::full_scale()
        } else {
            SimConfig::default()
        };
        let with_nodes = |k: usize| SimConfig {
            num_nodes: k,
            ..base.clone()
        };
        let single = if full_scale { 250 } else { 60 };
        let spec = |name: String, sweep, values: Vec<f64>, base: SimConfig| ExperimentSpec {
            name,
            sweep,
            values,
            replications: 50,
            base,
            output_dir: default_output_dir(),
        };
        match self {
            Preset::Fig4 => [60, 100]
                .into_iter()
                .map(|k| {
                    spec(
                        format!("fig4_k{k}"),
                        SweepParam::PowerThreshold,
                        vec![-130.0, -120.0, -110.0, -100.0, -90.0],
                        with_nodes(k),
                    )
                })
                .collect(),
            Preset::Fig5 => [90, if full_scale { 200 } else { 120 }]
                .into_iter()
                .map(|k| spec(format!("fig5_k{k}"), SweepParam::NumSubbands, vec![5.0, 10.0, 15.0], with_nodes(k)))
                .collect(),
            Preset::Fig6 => vec![spec(
                "fig6".into(),
                SweepParam::FadingMean,
                vec![1.0, 2.0, 4.0, 8.0],
                with_nodes(single),
            )],
            Preset::Fig7 => vec![spec(
                "fig7".into(),
                SweepParam::NakagamiM,
                vec![1.0, 3.0],
                with_nodes(single),
            )],
            Preset::Fig8 => vec![ExperimentSpec {
                replications: 200,
                ..spec(
                    "fig8".into(),
                    SweepParam::NumSubbands,
                    vec![2.0, 3.0, 4.0],
                    SimConfig {
                        max_snapshots: 1,
                        ..with_nodes(single)
                    },
                )
            }],
        }
    }
}

/// Runs an experiment and writes `<name>.csv` and `<name>.svg` under `out_dir`,
/// plus `<name>_swap_cdf.csv` for sub-band sweeps. Returns the written paths.
pub fn run_and_emit(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_owned(),
        source,
    })?;
    let detailed = run_experiment_detailed(spec)?;
    let mut rows = Vec::new();
    let mut ok_points = Vec::new();
    for (v, reps) in detailed {
        match reps {
            Ok(reps) => {
                rows.push(ResultRow::aggregate(v, &reps));
                ok_points.push((v, reps));
            }
            Err(e) => {
                log::error!("{}: sweep value {v} failed: {e}", spec.name);
                rows.push(ResultRow::failed(v, spec.replications, &e));
            }
        }
    }
    let mut written = Vec::new();
    let csv_path = out_dir.join(format!("{}.csv", spec.name));
    emit_csv(&rows, &csv_path)?;
    written.push(csv_path);
    if rows.len() >= 2 {
        let svg_path = out_dir.join(format!("{}.svg", spec.name));
        emit_plot(&rows, &svg_path, &PlotStyle::for_sweep(&spec.name, spec.sweep))?;
        written.push(svg_path);
    }
    if spec.sweep == SweepParam::NumSubbands {
        let cdf_path = out_dir.join(format!("{}_swap_cdf.csv", spec.name));
        emit_swap_cdf(&ok_points, &cdf_path)?;
        written.push(cdf_path);
    }
    Ok(written)
}
