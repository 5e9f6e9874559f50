//! Fading gains, path loss and thermal noise.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::config::{dbm_to_watts, Fading, SimConfig};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// A validated sampler of small-scale power gains.
#[derive(Debug, Clone, Copy)]
pub enum GainSampler {
    Rayleigh(Exp<f64>),
    Nakagami(Gamma<f64>),
}

impl GainSampler {
    pub fn new(fading: Fading) -> Result<Self> {
        match fading {
            Fading::Rayleigh { mean } => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::InvalidFading(format!(
                        "Rayleigh mean must be positive and finite, got {mean}"
                    )));
                }
                Exp::new(1.0 / mean)
                    .map(GainSampler::Rayleigh)
                    .map_err(|e| Error::InvalidFading(e.to_string()))
            }
            Fading::Nakagami { m } => {
                if !(m >= 0.5 && m.is_finite()) {
                    return Err(Error::InvalidFading(format!(
                        "Nakagami shape must be >= 0.5, got {m}"
                    )));
                }
                // Power domain: Gamma(m, 1/m) has unit mean for every m.
                Gamma::new(m, 1.0 / m)
                    .map(GainSampler::Nakagami)
                    .map_err(|e| Error::InvalidFading(e.to_string()))
            }
        }
    }
}

impl Distribution<f64> for GainSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GainSampler::Rayleigh(d) => d.sample(rng),
            GainSampler::Nakagami(d) => d.sample(rng),
        }
    }
}

/// Draws one power gain `|h|^2`.
pub fn sample_gain<R: Rng + ?Sized>(fading: Fading, rng: &mut R) -> Result<f64> {
    Ok(GainSampler::new(fading)?.sample(rng))
}

/// `p_t * gain * dist^-alpha`.
pub fn received_power(p_t: f64, gain: f64, dist: f64, alpha: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::NonPositiveDistance(dist));
    }
    Ok(p_t * gain * dist.powf(-alpha))
}

/// Thermal noise power over one sub-band, watts.
pub fn noise_power(config: &SimConfig) -> f64 {
    dbm_to_watts(config.noise_density_dbm_hz) * config.subband_bandwidth_hz()
}

/// Composite power gains `|f|^2` (path loss times fading) from a TX to its two RXs on one sub-band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub strong: f64,
    pub weak: f64,
}

/// One draw of every random channel in the network.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Small-scale gains between node pairs; row = receiver, column = transmitter.
    pub interference: Array2<f64>,
    /// Indexed `[triplet][sub_band]`.
    pub links: Vec<Vec<LinkGains>>,
}

impl ChannelRealization {
    pub fn sample<R: Rng + ?Sized>(
        topology: &Topology,
        config: &SimConfig,
        sampler: &GainSampler,
        rng: &mut R,
    ) -> Self {
        ChannelRealization {
            interference: sample_interference(topology.num_nodes(), sampler, rng),
            links: sample_links(topology, config.num_subbands, config.path_loss_exp, sampler, rng),
        }
    }
}

/// Independent gains for every ordered node pair; the diagonal is zero.
pub fn sample_interference<R: Rng + ?Sized>(
    num_nodes: usize,
    sampler: &GainSampler,
    rng: &mut R,
) -> Array2<f64> {
    let mut g = Array2::zeros((num_nodes, num_nodes));
    for i in 0..num_nodes {
        for j in 0..num_nodes {
            if i != j {
                g[[i, j]] = sampler.sample(rng);
            }
        }
    }
    g
}

/// Independent per-sub-band link gains for every triplet, path loss included.
pub fn sample_links<R: Rng + ?Sized>(
    topology: &Topology,
    num_subbands: usize,
    path_loss_exp: f64,
    sampler: &GainSampler,
    rng: &mut R,
) -> Vec<Vec<LinkGains>> {
    topology
        .triplets
        .iter()
        .map(|t| {
            let strong_pl = topology.distance(t.tx, t.strong_rx).powf(-path_loss_exp);
            let weak_pl = topology.distance(t.tx, t.weak_rx).powf(-path_loss_exp);
            (0..num_subbands)
                .map(|_| LinkGains {
                    strong: strong_pl * sampler.sample(rng),
                    weak: weak_pl * sampler.sample(rng),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn rayleigh_mean_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = GainSampler::new(Fading::Rayleigh { mean: 2.0 }).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 2.0).abs() < 0.01, "mean {m}");
        assert!(xs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn tiny_mean_gives_tiny_gains() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let g = sample_gain(Fading::Rayleigh { mean: 1e-12 }, &mut rng).unwrap();
            assert!((0.0..1e-9).contains(&g));
        }
    }

    #[test]
    fn nakagami_unit_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [0.5, 1.0, 3.0] {
            let s = GainSampler::new(Fading::Nakagami { m }).unwrap();
            let xs: Vec<f64> = (0..400_000).map(|_| s.sample(&mut rng)).collect();
            let (mean, var) = mean_var(&xs);
            assert!((mean - 1.0).abs() < 0.01, "m={m} mean {mean}");
            // Gamma(m, 1/m) has variance 1/m.
            assert!((var - 1.0 / m).abs() < 0.05 / m, "m={m} var {var}");
        }
    }

    /// Two-sample Kolmogorov-Smirnov test: Nakagami m=1 against Exponential(1).
    #[test]
    fn nakagami_one_matches_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let a = GainSampler::new(Fading::Nakagami { m: 1.0 }).unwrap();
        let b = GainSampler::new(Fading::Rayleigh { mean: 1.0 }).unwrap();
        let mut xs: Vec<f64> = (0..n).map(|_| a.sample(&mut rng)).collect();
        let mut ys: Vec<f64> = (0..n).map(|_| b.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
        while i < n && j < n {
            if xs[i] <= ys[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        // Critical value at alpha = 0.001 is 1.95 * sqrt(2/n).
        let crit = 1.95 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} >= {crit}");
    }

    #[test]
    fn rejects_invalid_fading() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_gain(Fading::Rayleigh { mean: -1.0 }, &mut rng).is_err());
        assert!(sample_gain(Fading::Nakagami { m: 0.49 }, &mut rng).is_err());
        assert!(sample_gain(Fading::Nakagami { m: f64::NAN }, &mut rng).is_err());
    }

    #[test]
    fn received_power_examples() {
        assert_eq!(received_power(0.2, 1.0, 1.0, 4.0).unwrap(), 0.2);
        let p = received_power(dbm_to_watts(23.0), 1.0, 10.0, 4.0).unwrap();
        assert!((p - 1.9953e-5).abs() / 1.9953e-5 < 1e-4, "{p}");
        assert_eq!(received_power(0.2, 0.0, 5.0, 4.0).unwrap(), 0.0);
        assert!(received_power(0.2, 1.0, 0.0, 4.0).is_err());
        assert!(received_power(0.2, 1.0, -1.0, 4.0).is_err());
    }

    #[test]
    fn received_power_decreases_with_distance() {
        let mut last = f64::INFINITY;
        for d in [0.5, 1.0, 2.0, 10.0, 100.0] {
            let p = received_power(0.2, 0.7, d, 3.5).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn noise_examples() {
        let mut c = SimConfig {
            noise_density_dbm_hz: -174.0,
            system_bandwidth_hz: 5e6,
            num_subbands: 5,
            ..SimConfig::default()
        };
        let n1 = noise_power(&c);
        assert!((n1 - 3.98e-15).abs() / 3.98e-15 < 1e-3, "{n1}");
        c.system_bandwidth_hz *= 2.0;
        assert!((noise_power(&c) - 2.0 * n1).abs() < 1e-28);
        c.noise_density_dbm_hz = f64::NEG_INFINITY;
        assert_eq!(noise_power(&c), 0.0);
    }

    #[test]
    fn gains_across_links_are_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = GainSampler::new(Fading::Rayleigh { mean: 1.0 }).unwrap();
        let n = 50_000;
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let g = sample_interference(3, &s, &mut rng);
            pairs.push((g[[0, 1]], g[[1, 0]]));
        }
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n as f64;
        // Standard error of the covariance of two unit exponentials is ~1/sqrt(n).
        assert!(cov.abs() < 5.0 / (n as f64).sqrt(), "cov {cov}");
    }
}
