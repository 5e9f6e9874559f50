//! Interference-weighted consensus clock synchronization.
//!
//! Each iteration redraws the fading, rebuilds the interference graph and
//! moves every clock towards a weighted average of its neighbours. The
//! proposed rule blends the current incoming weights `a_kj(n)` with the
//! outgoing weights `a_jk` remembered from the end of the previous snapshot.
//! The memory is only refreshed between snapshots.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;

use crate::channel::{sample_interference, GainSampler};
use crate::config::{SimConfig, UpdateRule};
use crate::error::{Error, Result};
use crate::graph::{build_graph, InterferenceGraph};
use crate::topology::{init_clocks, Topology};

/// Adjacency weights and incoming-neighbour sets of the last synchronized snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMemory {
    weights: Array2<f64>,
    incoming: Array2<bool>,
}

impl AdjacencyMemory {
    /// No memory: every remembered weight reads as zero.
    pub fn empty(num_nodes: usize) -> Self {
        AdjacencyMemory {
            weights: Array2::zeros((num_nodes, num_nodes)),
            incoming: Array2::from_elem((num_nodes, num_nodes), false),
        }
    }

    pub fn from_graph(graph: &InterferenceGraph) -> Self {
        let k = graph.num_nodes();
        let mut incoming = Array2::from_elem((k, k), false);
        for (i, nbrs) in graph.incoming.iter().enumerate() {
            for &j in nbrs {
                incoming[[i, j]] = true;
            }
        }
        AdjacencyMemory {
            weights: graph.adjacency.clone(),
            incoming,
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Remembered weight `a_jk` that node `k` may use for neighbour `j`.
    ///
    /// Zero unless `j` was both an outgoing and an incoming neighbour of `k`.
    pub fn recalled(&self, j: usize, k: usize) -> f64 {
        if self.incoming[[j, k]] && self.incoming[[k, j]] {
            self.weights[[j, k]]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockState {
    /// Local clock readings, seconds.
    pub times: Vec<f64>,
    /// Oscillator frequency errors, ppm.
    pub skews: Vec<f64>,
    pub memory: AdjacencyMemory,
}

/// Sample standard deviation of the clock readings (divisor `K - 1`).
pub fn timing_sd(times: &[f64]) -> Result<f64> {
    let k = times.len();
    if k < 2 {
        return Err(Error::TooFewNodes(k));
    }
    let mean = times.iter().sum::<f64>() / k as f64;
    let ss: f64 = times.iter().map(|t| (t - mean).powi(2)).sum();
    Ok((ss / (k - 1) as f64).sqrt())
}

/// Jacobi step `t_k + eps * sum_j w(k, j) * (t_j - t_k)`, summing over `j` in index order.
fn averaging_step(times: &[f64], step: f64, weight: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let k = times.len();
    (0..k)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..k {
                if j != i {
                    acc += weight(i, j) * (times[j] - times[i]);
                }
            }
            times[i] + step * acc
        })
        .collect()
}

/// Update driven by incoming (RSSI-measured) weights only.
pub fn update_baseline(state: &ClockState, graph: &InterferenceGraph, step: f64) -> Vec<f64> {
    averaging_step(&state.times, step, |k, j| graph.adjacency[[k, j]])
}

/// Update with weights `(a_kj(n) + a_jk(n-1)) / 2`, the second term read from memory.
pub fn update_proposed(state: &ClockState, graph: &InterferenceGraph, step: f64) -> Vec<f64> {
    averaging_step(&state.times, step, |k, j| {
        (graph.adjacency[[k, j]] + state.memory.recalled(j, k)) / 2.0
    })
}

/// Supplies the interference graph for each consensus iteration.
pub trait GraphSource {
    fn next_graph<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<InterferenceGraph>;
}

/// Redraws every interference gain on each call.
#[derive(Debug, Clone)]
pub struct FadingGraphs {
    sampler: GainSampler,
    threshold_w: f64,
    /// `p_t * d_ij^-alpha`, so each draw only multiplies in the fading.
    mean_power: Array2<f64>,
}

impl FadingGraphs {
    pub fn new(config: &SimConfig, topology: &Topology) -> Result<Self> {
        let ones = Array2::from_elem((topology.num_nodes(), topology.num_nodes()), 1.0);
        let unfaded = build_graph(config.tx_power_w(), topology, &ones, config.path_loss_exp, 0.0)?;
        Ok(FadingGraphs {
            sampler: GainSampler::new(config.fading)?,
            threshold_w: config.power_threshold_w(),
            mean_power: unfaded.power,
        })
    }
}

impl GraphSource for FadingGraphs {
    fn next_graph<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<InterferenceGraph> {
        let gains = sample_interference(self.mean_power.nrows(), &self.sampler, rng);
        Ok(InterferenceGraph::from_power(gains * &self.mean_power, self.threshold_w))
    }
}

/// The same graph every iteration.
#[derive(Debug, Clone)]
pub struct StaticGraph(pub InterferenceGraph);

impl GraphSource for StaticGraph {
    fn next_graph<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Result<InterferenceGraph> {
        Ok(self.0.clone())
    }
}

/// Outcome of one synchronization snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    /// Timing SD after each simulated iteration.
    pub sd_per_iteration: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Mean connectivity factor over the simulated graphs.
    pub mean_cf: f64,
}

impl SnapshotRecord {
    pub fn final_sd(&self) -> f64 {
        *self.sd_per_iteration.last().expect("a snapshot runs at least once")
    }
}

/// Iterates until the timing SD drops to `sd_tolerance` or the budget runs out.
///
/// On exit the adjacency memory is replaced by the last graph and every clock
/// drifts by its skew over the snapshot's elapsed time. Once the clocks blow
/// up to non-finite values the tolerance can never be met, so the rest of the
/// budget is charged without simulating it.
pub fn run_snapshot<S: GraphSource, R: Rng + ?Sized>(
    state: &mut ClockState,
    config: &SimConfig,
    source: &mut S,
    rng: &mut R,
) -> Result<SnapshotRecord> {
    if config.max_iters == 0 {
        return Err(Error::NoIterationBudget);
    }
    let mut sds = Vec::new();
    let mut cf_sum = 0.0;
    let mut last_graph = None;
    while sds.len() < config.max_iters {
        let graph = source.next_graph(rng)?;
        cf_sum += graph.connectivity_factor()?;
        state.times = match config.update_rule {
            UpdateRule::Proposed => update_proposed(state, &graph, config.step_size),
            UpdateRule::Baseline => update_baseline(state, &graph, config.step_size),
        };
        let sd = timing_sd(&state.times)?;
        sds.push(sd);
        last_graph = Some(graph);
        if sd <= config.sd_tolerance || !sd.is_finite() {
            break;
        }
    }
    let diverged = sds.last().is_some_and(|sd| !sd.is_finite());
    let simulated = sds.len();
    let iterations = if diverged { config.max_iters } else { simulated };
    if let Some(graph) = &last_graph {
        state.memory = AdjacencyMemory::from_graph(graph);
    }
    let elapsed = iterations as f64 * config.iter_period;
    for (t, skew) in state.times.iter_mut().zip(&state.skews) {
        *t += skew * 1e-6 * elapsed;
    }
    let converged = sds.last().is_some_and(|&sd| sd <= config.sd_tolerance);
    Ok(SnapshotRecord {
        sd_per_iteration: sds,
        iterations,
        converged,
        mean_cf: cf_sum / simulated as f64,
    })
}

/// Per-snapshot results of a synchronization run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyncTrace {
    pub snapshots: Vec<SnapshotRecord>,
    /// `mean_iterations() * iter_period`.
    pub algorithmic_time: f64,
}

impl SyncTrace {
    pub fn push(&mut self, record: SnapshotRecord, iter_period: f64) {
        self.snapshots.push(record);
        self.algorithmic_time = self.mean_iterations() * iter_period;
    }

    fn mean_of(&self, f: impl Fn(&SnapshotRecord) -> f64) -> f64 {
        if self.snapshots.is_empty() {
            return f64::NAN;
        }
        self.snapshots.iter().map(f).sum::<f64>() / self.snapshots.len() as f64
    }

    pub fn mean_iterations(&self) -> f64 {
        self.mean_of(|s| s.iterations as f64)
    }

    pub fn mean_final_sd(&self) -> f64 {
        self.mean_of(SnapshotRecord::final_sd)
    }

    pub fn mean_cf(&self) -> f64 {
        self.mean_of(|s| s.mean_cf)
    }

    pub fn iterations_used(&self) -> Vec<usize> {
        self.snapshots.iter().map(|s| s.iterations).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.snapshots.iter().all(|s| s.converged)
    }

    /// CSV with columns `snapshot,iteration,sd_seconds`; both indices start at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snapshot", "iteration", "sd_seconds"])?;
        for (s, snap) in self.snapshots.iter().enumerate() {
            for (n, sd) in snap.sd_per_iteration.iter().enumerate() {
                w.write_record([(s + 1).to_string(), (n + 1).to_string(), sd.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `max_snapshots` snapshots on an explicit state and graph source.
pub fn run_sync_with<S: GraphSource, R: Rng + ?Sized>(
    state: &mut ClockState,
    config: &SimConfig,
    source: &mut S,
    rng: &mut R,
) -> Result<SyncTrace> {
    let mut trace = SyncTrace::default();
    for _ in 0..config.max_snapshots {
        let record = run_snapshot(state, config, source, rng)?;
        trace.push(record, config.iter_period);
    }
    Ok(trace)
}

/// Full synchronization run over fading graphs.
///
/// Clocks are drawn with [`init_clocks`]; the memory starts from one
/// independent graph draw, standing in for an initially synchronized network.
pub fn run_sync<R: Rng + ?Sized>(
    config: &SimConfig,
    topology: &Topology,
    rng: &mut R,
) -> Result<SyncTrace> {
    config.validate()?;
    let mut source = FadingGraphs::new(config, topology)?;
    let mut state = init_clocks(config, rng);
    state.memory = AdjacencyMemory::from_graph(&source.next_graph(rng)?);
    run_sync_with(&mut state, config, &mut source, rng)
}
