//! Node placement, TX/RX triplets and initial clock state.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;

use crate::config::SimConfig;
use crate::consensus::{AdjacencyMemory, ClockState};
use crate::error::{Error, Result};

/// Drift-free reference temperature of the oscillator model, degrees Celsius.
pub const TURNOVER_TEMP_C: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A transmitter and its two receivers for the information exchange phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub tx: usize,
    pub strong_rx: usize,
    pub weak_rx: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub positions: Vec<Point>,
    pub distances: Array2<f64>,
    pub triplets: Vec<Triplet>,
}

impl Topology {
    /// Builds a topology from explicit positions. Fails if two nodes coincide.
    pub fn from_positions(positions: Vec<Point>, triplets: Vec<Triplet>) -> Result<Self> {
        let n = positions.len();
        let mut distances = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = positions[i].distance(&positions[j]);
                if !(d > 0.0) {
                    return Err(Error::NonPositiveDistance(d));
                }
                distances[[i, j]] = d;
                distances[[j, i]] = d;
            }
        }
        Ok(Topology {
            positions,
            distances,
            triplets,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[[i, j]]
    }
}

fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point {
        x: r * theta.cos(),
        y: r * theta.sin(),
    }
}

fn offset<R: Rng + ?Sized>(from: Point, dist: f64, rng: &mut R) -> Point {
    let theta = 2.0 * PI * rng.random::<f64>();
    Point {
        x: from.x + dist * theta.cos(),
        y: from.y + dist * theta.sin(),
    }
}

/// Places `num_nodes` nodes in a disk of radius `far_radius_m`.
///
/// Nodes `3t, 3t+1, 3t+2` form triplet `t`: a transmitter placed uniformly in
/// the disk, a strong receiver at a uniform distance in `(0, near]` from it
/// and a weak receiver at a uniform distance in `(near, far]`. The
/// `num_nodes % 3` leftover nodes are placed uniformly in the disk and take
/// part only in consensus.
pub fn place_nodes<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Topology> {
    let k = config.num_nodes;
    if k < 3 {
        return Err(Error::InsufficientNodes(k));
    }
    let (near, far) = (config.near_radius_m, config.far_radius_m);
    if !(near > 0.0 && near < far && far.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "degenerate radii: near {near} m, far {far} m"
        )));
    }
    loop {
        let mut positions = Vec::with_capacity(k);
        let mut triplets = Vec::with_capacity(k / 3);
        for t in 0..k / 3 {
            let tx = uniform_in_disk(far, rng);
            // 1 - u lies in (0, 1], keeping the strong RX off the TX.
            let strong = offset(tx, near * (1.0 - rng.random::<f64>()), rng);
            let weak = offset(tx, far - (far - near) * rng.random::<f64>(), rng);
            positions.extend([tx, strong, weak]);
            triplets.push(Triplet {
                tx: 3 * t,
                strong_rx: 3 * t + 1,
                weak_rx: 3 * t + 2,
            });
        }
        while positions.len() < k {
            positions.push(uniform_in_disk(far, rng));
        }
        // Coincident nodes have probability zero; redraw if it ever happens.
        if let Ok(topology) = Topology::from_positions(positions, triplets) {
            return Ok(topology);
        }
    }
}

/// Oscillator frequency error in ppm at temperature `temp_c`.
pub fn skew_ppm(beta_ppm_c2: f64, temp_c: f64) -> f64 {
    beta_ppm_c2 * (temp_c - TURNOVER_TEMP_C).powi(2)
}

/// Draws initial offsets uniformly in `[0, init_offset_max]` and a
/// temperature-driven skew per node. The adjacency memory starts empty.
pub fn init_clocks<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> ClockState {
    let k = config.num_nodes;
    let times = (0..k)
        .map(|_| config.init_offset_max * rng.random::<f64>())
        .collect();
    let [lo, hi] = config.temp_range_c;
    let skews = (0..k)
        .map(|_| {
            let temp = lo + (hi - lo) * rng.random::<f64>();
            skew_ppm(config.temp_coeff_ppm_c2, temp)
        })
        .collect();
    ClockState {
        times,
        skews,
        memory: AdjacencyMemory::empty(k),
    }
}
