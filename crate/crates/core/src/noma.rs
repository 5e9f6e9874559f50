//! Two-receiver NOMA and serial OMA completion times on one sub-band.
//!
//! A transmitter superposes messages for a strong and a weak receiver with
//! power split `alpha_strong + alpha_weak <= 1`. The strong receiver sees the
//! weak receiver's signal as interference; the weak receiver decodes
//! interference-free. Once the weak message is done, the strong receiver
//! continues alone at its interference-free rate with the same power share.

use crate::config::OmaPower;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLink {
    /// `|f_i|^2` of the strong receiver.
    pub gain_strong: f64,
    /// `|f_j|^2` of the weak receiver.
    pub gain_weak: f64,
    pub alpha_strong: f64,
    pub alpha_weak: f64,
    /// Noise power, watts.
    pub noise: f64,
    /// Total transmit power `P_s`, watts.
    pub tx_power: f64,
    /// Sub-band bandwidth, Hz.
    pub bandwidth: f64,
    /// Bits sent to each receiver.
    pub payload: f64,
}

impl PairLink {
    /// Builds a link with the power split `(alpha_strong, 1 - alpha_strong)`,
    /// giving the strong role to whichever receiver has the larger gain.
    pub fn ordered(
        gain_a: f64,
        gain_b: f64,
        alpha_strong: f64,
        noise: f64,
        tx_power: f64,
        bandwidth: f64,
        payload: f64,
    ) -> Self {
        PairLink {
            gain_strong: gain_a.max(gain_b),
            gain_weak: gain_a.min(gain_b),
            alpha_strong,
            alpha_weak: 1.0 - alpha_strong,
            noise,
            tx_power,
            bandwidth,
            payload,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gain_weak >= 0.0
            && self.gain_strong >= self.gain_weak
            && self.alpha_strong >= 0.0
            && self.alpha_weak >= 0.0
            && self.alpha_strong + self.alpha_weak <= 1.0 + 1e-12
            && self.noise >= 0.0
            && self.tx_power >= 0.0
            && self.bandwidth > 0.0
            && self.payload > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid pair link {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTimes {
    pub t_strong: f64,
    pub t_weak: f64,
    pub t_pair: f64,
}

fn ratio(signal: f64, denominator: f64) -> Result<f64> {
    if denominator > 0.0 {
        Ok(signal / denominator)
    } else if signal > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::UndefinedSinr)
    }
}

/// SINR of the strong receiver while the weak message is still on air.
pub fn sinr_strong(link: &PairLink) -> Result<f64> {
    let signal = link.gain_strong * link.alpha_strong * link.tx_power;
    let interference = link.gain_strong * link.alpha_weak * link.tx_power;
    ratio(signal, interference + link.noise)
}

/// SINR of the weak receiver; no interference term.
pub fn sinr_weak(link: &PairLink) -> Result<f64> {
    if !(link.noise > 0.0) {
        return Err(Error::UndefinedSinr);
    }
    Ok(link.gain_weak * link.alpha_weak * link.tx_power / link.noise)
}

/// SINR of the strong receiver alone on the sub-band with its own power share.
pub fn sinr_strong_alone(link: &PairLink) -> Result<f64> {
    if !(link.noise > 0.0) {
        return Err(Error::UndefinedSinr);
    }
    Ok(link.gain_strong * link.alpha_strong * link.tx_power / link.noise)
}

/// Shannon rate in bits/s.
pub fn rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Completion time of the strong receiver: rate `shared` until `weak_done`,
/// then `alone` for the remaining bits.
pub fn strong_completion(payload: f64, shared: f64, alone: f64, weak_done: f64) -> f64 {
    let by_shared = payload / shared;
    if by_shared <= weak_done {
        by_shared
    } else {
        weak_done + (payload - shared * weak_done) / alone
    }
}

pub fn pair_completion_noma(link: &PairLink) -> Result<PairTimes> {
    let r_strong = rate(sinr_strong(link)?, link.bandwidth);
    let r_weak = rate(sinr_weak(link)?, link.bandwidth);
    let r_alone = rate(sinr_strong_alone(link)?, link.bandwidth);
    if !(r_weak > 0.0) {
        return Err(Error::InfiniteCompletion("weak"));
    }
    if !(r_strong > 0.0 && r_alone > 0.0) {
        return Err(Error::InfiniteCompletion("strong"));
    }
    let t_weak = link.payload / r_weak;
    let t_strong = strong_completion(link.payload, r_strong, r_alone, t_weak);
    Ok(PairTimes {
        t_strong,
        t_weak,
        t_pair: t_strong.max(t_weak),
    })
}

/// Serial transmission: the strong message, then the weak one, each alone
/// on the sub-band.
pub fn pair_completion_oma(link: &PairLink, power: OmaPower) -> Result<PairTimes> {
    if !(link.noise > 0.0) {
        return Err(Error::UndefinedSinr);
    }
    let (share_strong, share_weak) = match power {
        OmaPower::Split => (link.alpha_strong, link.alpha_weak),
        OmaPower::Full => (1.0, 1.0),
    };
    let snr = link.tx_power / link.noise;
    let r_strong = rate(link.gain_strong * share_strong * snr, link.bandwidth);
    let r_weak = rate(link.gain_weak * share_weak * snr, link.bandwidth);
    if !(r_strong > 0.0) {
        return Err(Error::InfiniteCompletion("strong"));
    }
    if !(r_weak > 0.0) {
        return Err(Error::InfiniteCompletion("weak"));
    }
    let t_strong = link.payload / r_strong;
    let t_weak = link.payload / r_weak;
    Ok(PairTimes {
        t_strong,
        t_weak,
        t_pair: t_strong + t_weak,
    })
}
