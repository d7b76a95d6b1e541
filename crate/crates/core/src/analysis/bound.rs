//! Lower bounds on the error floor of expurgated ensembles.
//!
//! For large N the ensemble-average SER is at least
//!
//! ```text
//! (1 / 2N) * sum_{s >= s_g} mu^s Pr(Z_1 + ... + Z_{sm} <= 0)
//! ```
//!
//! The series converges when r = mu * B^m < 1, B the Bhattacharyya functional,
//! since each probability is at most B^{sm}; the same fact bounds the tail.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::graph::EnsembleSpec;

/// Auto truncation stops once the tail bound is below this fraction of the partial sum.
pub const TAIL_FRACTION: f64 = 1e-3;
const MAX_TERMS: usize = 100_000;
/// Terms reported for a divergent series when no truncation is given.
const DIVERGENT_TERMS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorBound {
    /// (1/2N) times the sum of `terms`; a partial sum when not convergent.
    pub value: f64,
    /// (s, mu^s P_s), unscaled.
    pub terms: Vec<(usize, f64)>,
    pub s_max: usize,
    /// Upper bound on the omitted tail, scaled like `value`; infinite when divergent.
    pub tail_estimate: f64,
    pub convergent: bool,
    /// mu * B^m
    pub ratio: f64,
}

impl FloorBound {
    pub fn scaled_terms(&self, n: usize) -> Vec<(usize, f64)> {
        let k = 1.0 / (2.0 * n as f64);
        self.terms.iter().map(|&(s, t)| (s, t * k)).collect()
    }

    /// value + tail_estimate
    pub fn upper(&self) -> f64 {
        self.value + self.tail_estimate
    }
}

/// Sums mu^s p(s) from s_g, to `s_max` or until the tail bound r^{S+1}/(1-r)
/// is small enough.
fn series(
    spec: &EnsembleSpec,
    bhattacharyya: f64,
    s_max: Option<usize>,
    mut p: impl FnMut(usize) -> f64,
) -> Result<FloorBound> {
    spec.degrees.validate()?;
    if spec.n == 0 || spec.s_g == 0 {
        return Err(Error::Config("bound needs N >= 1 and s_g >= 1".into()));
    }
    let mu = spec.degrees.mu();
    let m = spec.m as f64;
    let scale = 1.0 / (2.0 * spec.n as f64);
    let ratio = mu * bhattacharyya.powf(m);
    if let Some(s) = s_max {
        if s < spec.s_g {
            return Err(Error::Config(format!("truncation weight {s} is below s_g = {}", spec.s_g)));
        }
    }
    if mu == 0.0 || bhattacharyya == 0.0 {
        return Ok(FloorBound {
            value: 0.0,
            terms: vec![],
            s_max: s_max.unwrap_or(spec.s_g),
            tail_estimate: 0.0,
            convergent: true,
            ratio,
        });
    }
    let convergent = ratio < 1.0;
    let tail = |s: usize| if convergent { ratio.powf(s as f64 + 1.0) / (1.0 - ratio) } else { f64::INFINITY };
    let mut terms = Vec::new();
    let mut partial = 0.0;
    let mut s = spec.s_g;
    loop {
        let t = mu.powi(s as i32) * p(s);
        terms.push((s, t));
        partial += t;
        let done = match s_max {
            Some(limit) => s >= limit,
            None if convergent => {
                (partial > 0.0 && tail(s) <= TAIL_FRACTION * partial) || tail(s) == 0.0 || s - spec.s_g >= MAX_TERMS
            }
            None => s - spec.s_g + 1 >= DIVERGENT_TERMS,
        };
        if done {
            break;
        }
        s += 1;
    }
    if !convergent {
        log::warn!("floor bound series diverges: mu * B^m = {ratio:.4} >= 1");
    }
    Ok(FloorBound {
        value: partial * scale,
        terms,
        s_max: s,
        tail_estimate: tail(s) * scale,
        convergent,
        ratio,
    })
}

/// The bound for one of the built-in channels, with exact tail probabilities.
pub fn floor_bound_general(spec: &EnsembleSpec, ch: &ChannelModel, s_max: Option<usize>) -> Result<FloorBound> {
    let m = spec.m as usize;
    series(spec, ch.bhattacharyya(), s_max, |s| ch.tail_prob(s * m))
}

/// BSC: terms mu^s sum_{i <= ms/2} C(ms,i) eps^{ms-i} (1-eps)^i.
pub fn floor_bound_bsc(spec: &EnsembleSpec, eps: f64, s_max: Option<usize>) -> Result<FloorBound> {
    floor_bound_general(spec, &ChannelModel::bsc(eps)?, s_max)
}

/// AWGN: terms mu^s Q(sqrt(sm) / sigma).
pub fn floor_bound_awgn(spec: &EnsembleSpec, sigma2: f64, s_max: Option<usize>) -> Result<FloorBound> {
    floor_bound_general(spec, &ChannelModel::awgn(sigma2)?, s_max)
}

/// Largest BSC crossover probability for which the series converges.
pub fn epsilon_star(mu: f64, m: u32) -> f64 {
    if mu <= 1.0 {
        0.5
    } else {
        (1.0 - (1.0 - mu.powf(-2.0 / m as f64)).sqrt()) / 2.0
    }
}

/// Largest AWGN noise standard deviation for which the series converges.
pub fn sigma_star(mu: f64, m: u32) -> f64 {
    if mu <= 1.0 {
        f64::INFINITY
    } else {
        (m as f64 / (2.0 * mu.ln())).sqrt()
    }
}

/// Bound for an arbitrary L-density given only a sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFloorBound {
    pub bound: FloorBound,
    /// Estimated Bhattacharyya functional.
    pub bhattacharyya: f64,
    /// 95% Wilson interval on each P_s, same order as `bound.terms`.
    pub term_ci: Vec<(f64, f64)>,
    pub samples_per_term: usize,
}

/// Estimates every P_s by Monte Carlo with `samples` sums of s*m draws.
/// Truncation must be explicit since the tail bound itself is estimated.
pub fn floor_bound_sampled<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    mut sample_llr: impl FnMut(&mut R) -> f64,
    samples: usize,
    s_max: usize,
    rng: &mut R,
) -> Result<SampledFloorBound> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let m = spec.m as usize;
    let b: f64 = (0..samples).map(|_| (-sample_llr(rng) / 2.0).exp()).sum::<f64>() / samples as f64;
    let mut cis = Vec::new();
    let bound = series(spec, b, Some(s_max), |s| {
        let hits = (0..samples)
            .filter(|_| (0..s * m).map(|_| sample_llr(rng)).sum::<f64>() <= 0.0)
            .count();
        let (lo, hi) = crate::sim::wilson_interval(hits as u64, samples as u64);
        cis.push((lo, hi));
        hits as f64 / samples as f64
    })?;
    Ok(SampledFloorBound { bound, bhattacharyya: b, term_ci: cis, samples_per_term: samples })
}
