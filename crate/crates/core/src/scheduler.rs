//! Sub-band scheduling for the information exchange phase.
//!
//! Triplets propose to sub-bands by deferred acceptance, both sides ranking
//! by the pair completion time. Pareto swaps then refine each round until no
//! exchange or relocation helps a triplet without hurting another. Triplets
//! left unmatched wait for the next round, and the exchange delay is the sum
//! of the per-round maxima. The strong-receiver power share is one global
//! value per schedule, picked from a grid.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{noise_power, sample_links, GainSampler, LinkGains};
use crate::config::{OmaPower, SimConfig};
use crate::error::{Error, Result};
use crate::noma::{pair_completion_noma, pair_completion_oma, PairLink, PairTimes};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Noma,
    Oma(OmaPower),
}

const UNREACHABLE: PairTimes = PairTimes {
    t_strong: f64::INFINITY,
    t_weak: f64::INFINITY,
    t_pair: f64::INFINITY,
};

/// Completion times of every triplet on every sub-band, `[triplet][sub_band]`.
/// Zero-rate links read as infinitely slow.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTable {
    pub times: Vec<Vec<PairTimes>>,
}

impl TimeTable {
    pub fn new(times: Vec<Vec<PairTimes>>) -> Self {
        TimeTable { times }
    }

    /// Table from bare pair times; strong and weak legs copy the pair time.
    pub fn from_pair_times(t_pair: Vec<Vec<f64>>) -> Self {
        let times = t_pair
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|t| PairTimes {
                        t_strong: t,
                        t_weak: t,
                        t_pair: t,
                    })
                    .collect()
            })
            .collect();
        TimeTable { times }
    }

    pub fn compute(links: &[Vec<LinkGains>], config: &SimConfig, alpha_strong: f64, scheme: Scheme) -> Self {
        let noise = noise_power(config);
        let (power, bandwidth) = (config.tx_power_w(), config.subband_bandwidth_hz());
        let times = links
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| {
                        let link = PairLink::ordered(
                            g.strong,
                            g.weak,
                            alpha_strong,
                            noise,
                            power,
                            bandwidth,
                            config.payload_bits,
                        );
                        let t = match scheme {
                            Scheme::Noma => pair_completion_noma(&link),
                            Scheme::Oma(p) => pair_completion_oma(&link, p),
                        };
                        t.unwrap_or(UNREACHABLE)
                    })
                    .collect()
            })
            .collect();
        TimeTable { times }
    }

    pub fn num_triplets(&self) -> usize {
        self.times.len()
    }

    pub fn num_subbands(&self) -> usize {
        self.times.first().map_or(0, Vec::len)
    }

    pub fn t_pair(&self, triplet: usize, sub_band: usize) -> f64 {
        self.times[triplet][sub_band].t_pair
    }
}

/// One scheduling round: sub-band index to the triplet transmitting on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub sub_bands: Vec<Option<usize>>,
    pub round: usize,
}

impl Assignment {
    pub fn empty(num_subbands: usize, round: usize) -> Self {
        Assignment {
            sub_bands: vec![None; num_subbands],
            round,
        }
    }

    pub fn sub_band_of(&self, triplet: usize) -> Option<usize> {
        self.sub_bands.iter().position(|&t| t == Some(triplet))
    }

    pub fn matched(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sub_bands
            .iter()
            .enumerate()
            .filter_map(|(sb, t)| t.map(|t| (sb, t)))
    }

    pub fn num_matched(&self) -> usize {
        self.sub_bands.iter().flatten().count()
    }

    /// At most one sub-band per triplet; one triplet per sub-band holds by construction.
    pub fn is_injective(&self) -> bool {
        let mut seen: Vec<usize> = self.sub_bands.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Largest pair time among the occupied sub-bands; 0 when empty.
    pub fn max_time(&self, table: &TimeTable) -> f64 {
        self.matched()
            .map(|(sb, t)| table.t_pair(t, sb))
            .fold(0.0, f64::max)
    }
}

/// Two-sided preference lists over a subset of triplets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preferences {
    /// Triplets taking part, in increasing index order.
    pub triplets: Vec<usize>,
    /// Sub-bands in order of preference, aligned with `triplets`.
    pub triplet_lists: Vec<Vec<usize>>,
    /// Triplets in order of preference for each sub-band.
    pub subband_lists: Vec<Vec<usize>>,
}

fn by_time_then_index(a: (f64, usize), b: (f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Both sides rank by ascending pair time, ties to the lower index.
pub fn build_preferences(table: &TimeTable, triplets: &[usize]) -> Preferences {
    let mut triplets = triplets.to_vec();
    triplets.sort_unstable();
    let n = table.num_subbands();
    let triplet_lists = triplets
        .iter()
        .map(|&t| {
            let mut sbs: Vec<usize> = (0..n).collect();
            sbs.sort_by(|&a, &b| by_time_then_index((table.t_pair(t, a), a), (table.t_pair(t, b), b)));
            sbs
        })
        .collect();
    let subband_lists = (0..n)
        .map(|sb| {
            let mut ts = triplets.clone();
            ts.sort_by(|&a, &b| by_time_then_index((table.t_pair(a, sb), a), (table.t_pair(b, sb), b)));
            ts
        })
        .collect();
    Preferences {
        triplets,
        triplet_lists,
        subband_lists,
    }
}

/// Triplet-proposing deferred acceptance.
pub fn stable_marriage(prefs: &Preferences, round: usize) -> Assignment {
    let n = prefs.subband_lists.len();
    let mut assignment = Assignment::empty(n, round);
    let max_id = prefs.triplets.iter().copied().max().map_or(0, |m| m + 1);
    // rank[sb][triplet]: position in the sub-band's list.
    let rank: Vec<Vec<usize>> = prefs
        .subband_lists
        .iter()
        .map(|list| {
            let mut r = vec![usize::MAX; max_id];
            for (pos, &t) in list.iter().enumerate() {
                r[t] = pos;
            }
            r
        })
        .collect();
    let mut next = vec![0usize; prefs.triplets.len()];
    let mut free: Vec<usize> = (0..prefs.triplets.len()).rev().collect();
    while let Some(i) = free.pop() {
        let Some(&sb) = prefs.triplet_lists[i].get(next[i]) else {
            continue;
        };
        next[i] += 1;
        let t = prefs.triplets[i];
        match assignment.sub_bands[sb] {
            None => assignment.sub_bands[sb] = Some(t),
            Some(held) if rank[sb][t] < rank[sb][held] => {
                assignment.sub_bands[sb] = Some(t);
                let j = prefs.triplets.binary_search(&held).expect("held triplet is listed");
                free.push(j);
            }
            Some(_) => free.push(i),
        }
    }
    assignment
}

/// An exchange of two occupied sub-bands, or a move to an idle one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swap {
    Exchange { a: usize, b: usize },
    Relocate { from: usize, to: usize },
}

impl Swap {
    pub fn apply(&self, assignment: &Assignment) -> Assignment {
        let mut out = assignment.clone();
        match *self {
            Swap::Exchange { a, b } => out.sub_bands.swap(a, b),
            Swap::Relocate { from, to } => {
                out.sub_bands[to] = out.sub_bands[from].take();
            }
        }
        out
    }

    /// Pareto test over the triplets the swap touches.
    pub fn is_admissible(&self, assignment: &Assignment, table: &TimeTable) -> bool {
        let moves: Vec<(usize, usize, usize)> = match *self {
            Swap::Exchange { a, b } => {
                let (Some(ta), Some(tb)) = (assignment.sub_bands[a], assignment.sub_bands[b]) else {
                    return false;
                };
                vec![(ta, a, b), (tb, b, a)]
            }
            Swap::Relocate { from, to } => match (assignment.sub_bands[from], assignment.sub_bands[to]) {
                (Some(t), None) => vec![(t, from, to)],
                _ => return false,
            },
        };
        let mut improves = false;
        for (t, old, new) in moves {
            let (before, after) = (table.t_pair(t, old), table.t_pair(t, new));
            if after > before {
                return false;
            }
            improves |= after < before;
        }
        improves
    }
}

/// Every swap of the assignment: exchanges in `(a, b)` order, then relocations.
pub fn candidate_swaps(assignment: &Assignment) -> (Vec<Swap>, Vec<Swap>) {
    let occupied: Vec<usize> = assignment.matched().map(|(sb, _)| sb).collect();
    let idle: Vec<usize> = (0..assignment.sub_bands.len())
        .filter(|&sb| assignment.sub_bands[sb].is_none())
        .collect();
    let mut exchanges = Vec::new();
    for (i, &a) in occupied.iter().enumerate() {
        for &b in &occupied[i + 1..] {
            exchanges.push(Swap::Exchange { a, b });
        }
    }
    let mut relocations = Vec::new();
    for &from in &occupied {
        for &to in &idle {
            relocations.push(Swap::Relocate { from, to });
        }
    }
    (exchanges, relocations)
}

/// Result of one pass over all candidate swaps.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapStep {
    pub assignment: Assignment,
    pub applied: Option<Swap>,
    pub exchanges_evaluated: usize,
    pub relocations_evaluated: usize,
}

/// Applies the admissible swap giving the smallest round maximum, the first
/// one in enumeration order on ties. Leaves the assignment unchanged if none.
pub fn swap_matching_round(assignment: &Assignment, table: &TimeTable) -> SwapStep {
    let (exchanges, relocations) = candidate_swaps(assignment);
    let mut best: Option<(f64, Swap)> = None;
    for swap in exchanges.iter().chain(&relocations) {
        if !swap.is_admissible(assignment, table) {
            continue;
        }
        let value = swap.apply(assignment).max_time(table);
        if best.is_none_or(|(v, _)| value < v) {
            best = Some((value, *swap));
        }
    }
    let applied = best.map(|(_, s)| s);
    SwapStep {
        assignment: applied.map_or_else(|| assignment.clone(), |s| s.apply(assignment)),
        applied,
        exchanges_evaluated: exchanges.len(),
        relocations_evaluated: relocations.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub assignment: Assignment,
    /// Round maximum after deferred acceptance and after each accepted swap.
    pub max_time_trace: Vec<f64>,
    pub swap_iterations: usize,
    /// Exchange candidates evaluated in each pass, the final empty pass included.
    pub exchanges_per_pass: Vec<usize>,
    pub relocations_evaluated: usize,
}

impl RoundOutcome {
    pub fn max_time(&self) -> f64 {
        *self.max_time_trace.last().expect("trace starts with the initial maximum")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub scheme: Scheme,
    pub alpha_strong: f64,
    pub rounds: Vec<RoundOutcome>,
    /// Completion times of every triplet on every sub-band at `alpha_strong`.
    pub table: TimeTable,
    pub exchange_delay_total: f64,
    /// Accepted swaps over all rounds; bounded by the swap budget.
    pub swap_iterations_used: usize,
    pub candidate_swaps_evaluated: usize,
    pub relocations_evaluated: usize,
}

impl ScheduleOutcome {
    pub fn t_max_per_round(&self) -> Vec<f64> {
        self.rounds.iter().map(RoundOutcome::max_time).collect()
    }

    /// Times on each sub-band, round by round; idle sub-bands are `None`.
    pub fn per_sb_times(&self) -> Vec<Vec<Option<PairTimes>>> {
        self.rounds
            .iter()
            .map(|r| {
                r.assignment
                    .sub_bands
                    .iter()
                    .enumerate()
                    .map(|(sb, t)| t.map(|t| self.table.times[t][sb]))
                    .collect()
            })
            .collect()
    }

    /// Largest number of exchange candidates seen in a single pass.
    pub fn max_exchanges_per_pass(&self) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| r.exchanges_per_pass.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn num_scheduled(&self) -> usize {
        self.table.num_triplets()
    }

    /// CSV with columns `round,sub_band,triplet,alpha,t_strong,t_weak,t_pair`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "sub_band", "triplet", "alpha", "t_strong", "t_weak", "t_pair"])?;
        for r in &self.rounds {
            for (sb, t) in r.assignment.matched() {
                let times = self.table.times[t][sb];
                w.write_record([
                    r.assignment.round.to_string(),
                    sb.to_string(),
                    t.to_string(),
                    self.alpha_strong.to_string(),
                    times.t_strong.to_string(),
                    times.t_weak.to_string(),
                    times.t_pair.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Swaps until no admissible swap remains or `budget` swaps have been applied.
pub fn swap_until_stable(initial: Assignment, table: &TimeTable, budget: usize) -> RoundOutcome {
    let mut out = RoundOutcome {
        max_time_trace: vec![initial.max_time(table)],
        assignment: initial,
        swap_iterations: 0,
        exchanges_per_pass: Vec::new(),
        relocations_evaluated: 0,
    };
    while out.swap_iterations < budget {
        let step = swap_matching_round(&out.assignment, table);
        out.exchanges_per_pass.push(step.exchanges_evaluated);
        out.relocations_evaluated += step.relocations_evaluated;
        if step.applied.is_none() {
            break;
        }
        debug_assert!(step.assignment.is_injective());
        out.assignment = step.assignment;
        out.max_time_trace.push(out.assignment.max_time(table));
        out.swap_iterations += 1;
    }
    out
}

/// Schedules every triplet of `table` round by round with a shared swap budget.
pub fn schedule_table(table: TimeTable, scheme: Scheme, alpha_strong: f64, swap_budget: usize) -> Result<ScheduleOutcome> {
    if table.num_triplets() == 0 {
        return Err(Error::NothingToSchedule);
    }
    if table.num_subbands() == 0 {
        return Err(Error::InvalidConfig("no sub-bands to schedule on".into()));
    }
    let mut waiting: Vec<usize> = (0..table.num_triplets()).collect();
    let mut rounds = Vec::new();
    let mut budget = swap_budget;
    while !waiting.is_empty() {
        let prefs = build_preferences(&table, &waiting);
        let initial = stable_marriage(&prefs, rounds.len());
        let round = swap_until_stable(initial, &table, budget);
        budget -= round.swap_iterations;
        waiting.retain(|&t| round.assignment.sub_band_of(t).is_none());
        rounds.push(round);
    }
    let exchange_delay_total = rounds.iter().map(RoundOutcome::max_time).sum();
    Ok(ScheduleOutcome {
        scheme,
        alpha_strong,
        exchange_delay_total,
        swap_iterations_used: rounds.iter().map(|r| r.swap_iterations).sum(),
        candidate_swaps_evaluated: rounds.iter().flat_map(|r| &r.exchanges_per_pass).sum(),
        relocations_evaluated: rounds.iter().map(|r| r.relocations_evaluated).sum(),
        rounds,
        table,
    })
}

pub fn schedule_at_alpha(
    links: &[Vec<LinkGains>],
    config: &SimConfig,
    alpha_strong: f64,
    scheme: Scheme,
) -> Result<ScheduleOutcome> {
    let table = TimeTable::compute(links, config, alpha_strong, scheme);
    schedule_table(table, scheme, alpha_strong, config.swap_max_iters)
}

/// The inclusive grid `{0, step, ..., 1}`.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::EmptyGrid);
    }
    let cells = (1.0 / step).round() as usize;
    Ok((0..=cells).map(|i| (i as f64 * step).min(1.0)).collect())
}

/// NOMA schedule at the grid value of the strong power share giving the
/// smallest exchange delay; the lowest share wins ties.
pub fn grid_search_alpha(links: &[Vec<LinkGains>], config: &SimConfig) -> Result<ScheduleOutcome> {
    let grid = alpha_grid(config.power_grid_step)?;
    let outcomes = grid
        .par_iter()
        .map(|&a| schedule_at_alpha(links, config, a, Scheme::Noma))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<ScheduleOutcome> = None;
    for o in outcomes {
        if best.as_ref().is_none_or(|b| o.exchange_delay_total < b.exchange_delay_total) {
            best = Some(o);
        }
    }
    best.ok_or(Error::EmptyGrid)
}

/// NOMA and OMA schedules on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeComparison {
    pub noma: ScheduleOutcome,
    pub oma: ScheduleOutcome,
}

/// Schedules given link gains. The OMA comparator runs the same matching at
/// the power split NOMA selected.
pub fn schedule_links(links: &[Vec<LinkGains>], config: &SimConfig) -> Result<ExchangeComparison> {
    let noma = grid_search_alpha(links, config)?;
    let oma = schedule_at_alpha(links, config, noma.alpha_strong, Scheme::Oma(config.oma_power))?;
    Ok(ExchangeComparison { noma, oma })
}

/// Draws per-sub-band link gains for every triplet and schedules them.
pub fn schedule_exchange<R: Rng + ?Sized>(
    topology: &Topology,
    config: &SimConfig,
    rng: &mut R,
) -> Result<ExchangeComparison> {
    if topology.triplets.is_empty() {
        return Err(Error::NothingToSchedule);
    }
    let sampler = GainSampler::new(config.fading)?;
    let links = sample_links(topology, config.num_subbands, config.path_loss_exp, &sampler, rng);
    schedule_links(&links, config)
}
