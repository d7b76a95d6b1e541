//! Memoryless binary-input output-symmetric channels.
//!
//! Every channel is described through its L-density: the law of the
//! log-likelihood ratio `log p(y|+1)/p(y|-1)` when +1 is sent. All sampling
//! assumes the all-zero codeword (every bit mapped to +1).

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::gf::FieldParams;

/// BEC, BSC or binary-input AWGN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    /// Erasure probability in [0, 1].
    Bec { eps: f64 },
    /// Crossover probability in [0, 1/2].
    Bsc { eps: f64 },
    /// Noise variance > 0 for unit-energy BPSK.
    #[serde(rename = "awgn")]
    BiAwgn { sigma2: f64 },
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Bec { eps } => write!(f, "BEC(eps={eps})"),
            ChannelModel::Bsc { eps } => write!(f, "BSC(eps={eps})"),
            ChannelModel::BiAwgn { sigma2 } => write!(f, "AWGN(sigma2={sigma2})"),
        }
    }
}

impl ChannelModel {
    pub fn bec(eps: f64) -> Result<Self> {
        ChannelModel::Bec { eps }.validated()
    }

    pub fn bsc(eps: f64) -> Result<Self> {
        ChannelModel::Bsc { eps }.validated()
    }

    pub fn awgn(sigma2: f64) -> Result<Self> {
        ChannelModel::BiAwgn { sigma2 }.validated()
    }

    /// AWGN channel at a given Eb/N0 (dB) and code rate, unit-energy BPSK:
    /// sigma^2 = 1 / (2 R 10^(EbN0/10)).
    pub fn awgn_ebno_db(ebno_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("code rate {rate} outside (0, 1]")));
        }
        Self::awgn(1.0 / (2.0 * rate * 10f64.powf(ebno_db / 10.0)))
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            ChannelModel::Bec { eps } => (0.0..=1.0).contains(&eps),
            ChannelModel::Bsc { eps } => (0.0..=0.5).contains(&eps),
            ChannelModel::BiAwgn { sigma2 } => sigma2 > 0.0 && sigma2.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Config(format!("invalid channel parameters: {self}")))
        }
    }

    /// The scalar parameter (eps or sigma^2).
    pub fn param(&self) -> f64 {
        match *self {
            ChannelModel::Bec { eps } | ChannelModel::Bsc { eps } => eps,
            ChannelModel::BiAwgn { sigma2 } => sigma2,
        }
    }

    /// Same channel family with a different parameter.
    pub fn with_param(&self, p: f64) -> Result<Self> {
        match self {
            ChannelModel::Bec { .. } => Self::bec(p),
            ChannelModel::Bsc { .. } => Self::bsc(p),
            ChannelModel::BiAwgn { .. } => Self::awgn(p),
        }
    }

    /// One LLR draw under +1 transmission.
    #[inline]
    pub fn sample_llr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ChannelModel::Bec { eps } => {
                if rng.gen::<f64>() < eps {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ChannelModel::Bsc { eps } => {
                let l = bsc_llr(eps);
                if rng.gen::<f64>() < eps {
                    -l
                } else {
                    l
                }
            }
            ChannelModel::BiAwgn { sigma2 } => {
                // y ~ N(1, sigma2), LLR = 2y / sigma2.
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                2.0 * (1.0 + sigma2.sqrt() * z) / sigma2
            }
        }
    }

    /// Bhattacharyya functional: integral of a(x) exp(-x/2).
    pub fn bhattacharyya(&self) -> f64 {
        match *self {
            ChannelModel::Bec { eps } => eps,
            ChannelModel::Bsc { eps } => 2.0 * (eps * (1.0 - eps)).sqrt(),
            ChannelModel::BiAwgn { sigma2 } => (-1.0 / (2.0 * sigma2)).exp(),
        }
    }

    /// Pr(Z_1 + ... + Z_k <= 0) for i.i.d. LLRs Z_i.
    ///
    /// A BSC sum of exactly zero counts as failure.
    pub fn tail_prob(&self, k: usize) -> f64 {
        assert!(k >= 1, "tail_prob needs at least one term");
        match *self {
            ChannelModel::Bec { eps } => eps.powi(k as i32),
            ChannelModel::Bsc { eps } => bsc_tail(eps, k),
            ChannelModel::BiAwgn { sigma2 } => q_function((k as f64).sqrt() / sigma2.sqrt()),
        }
    }
}

/// Magnitude of the BSC LLR, log((1-eps)/eps); infinite for eps = 0.
#[inline]
pub fn bsc_llr(eps: f64) -> f64 {
    ((1.0 - eps) / eps).ln()
}

/// Sum over i <= k/2 of C(k,i) eps^(k-i) (1-eps)^i, where i counts unflipped bits.
fn bsc_tail(eps: f64, k: usize) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let half = k / 2;
    if k <= 64 {
        // C(k, i) by the exact multiplicative recurrence; powers by powi.
        let mut binom = 1.0f64;
        let mut total = 0.0;
        for i in 0..=half {
            if i > 0 {
                binom = binom * (k - i + 1) as f64 / i as f64;
            }
            total += binom * eps.powi((k - i) as i32) * (1.0 - eps).powi(i as i32);
        }
        total
    } else {
        let (le, lf) = (eps.ln(), (1.0 - eps).ln());
        let mut ln_binom = 0.0f64;
        let mut total = 0.0;
        for i in 0..=half {
            if i > 0 {
                ln_binom += ((k - i + 1) as f64).ln() - (i as f64).ln();
            }
            total += (ln_binom + (k - i) as f64 * le + i as f64 * lf).exp();
        }
        total
    }
}

/// Upper tail of the standard normal, Q(y) = erfc(y / sqrt 2) / 2.
pub fn q_function(y: f64) -> f64 {
    if y == f64::INFINITY {
        return 0.0;
    }
    if y == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * erfc(y / std::f64::consts::SQRT_2)
}

/// Per-bit LLRs for a block of `n_symbols` symbols of `m` bits each.
/// Bit `i` of symbol `v` is at `v * m + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    m: usize,
    values: Vec<f64>,
}

impl LlrBlock {
    pub fn from_values(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() % m != 0 {
            return Err(Error::Config(format!(
                "{} LLRs do not split into symbols of {m} bits",
                values.len()
            )));
        }
        Ok(Self { m, values })
    }

    pub fn n_symbols(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The m LLRs of symbol `v`.
    pub fn symbol(&self, v: usize) -> &[f64] {
        &self.values[v * self.m..(v + 1) * self.m]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Draws `n_symbols * m` i.i.d. LLRs under the all-zero codeword.
pub fn sample_llr_block<R: Rng + ?Sized>(
    ch: &ChannelModel,
    n_symbols: usize,
    m: usize,
    rng: &mut R,
) -> Result<LlrBlock> {
    let ch = ch.validated()?;
    if n_symbols == 0 || m == 0 {
        return Err(Error::Config("LLR block needs at least one symbol and one bit".into()));
    }
    let n = n_symbols * m;
    let values = match ch {
        ChannelModel::BiAwgn { sigma2 } => {
            let normal = Normal::new(2.0 / sigma2, 2.0 / sigma2.sqrt())
                .map_err(|e| Error::Config(e.to_string()))?;
            normal.sample_iter(&mut *rng).take(n).collect()
        }
        _ => (0..n).map(|_| ch.sample_llr(rng)).collect(),
    };
    Ok(LlrBlock { m, values })
}

/// A probability vector over the q field elements, indexed by bit representation.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageVector {
    pub probs: Vec<f64>,
}

impl MessageVector {
    pub fn uniform(q: usize) -> Self {
        Self { probs: vec![1.0 / q as f64; q] }
    }

    /// Point mass on element `at`.
    pub fn delta(q: usize, at: usize) -> Self {
        let mut probs = vec![0.0; q];
        probs[at] = 1.0;
        Self { probs }
    }

    /// Normalizes a nonnegative vector; fails if it carries no mass.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::Numeric(format!("cannot normalize vector with mass {sum}")));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

impl std::ops::Index<usize> for MessageVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Initial message of a symbol: C(gamma) proportional to exp(-sum of Z_i over set bits of gamma).
///
/// This is the product of per-bit likelihoods divided by the likelihood of the
/// all-zero symbol. A +inf LLR zeroes every gamma with that bit set.
pub fn initial_message(llrs: &[f64], field: &FieldParams) -> Result<MessageVector> {
    let m = field.m() as usize;
    if llrs.len() != m {
        return Err(Error::Config(format!("expected {m} LLRs per symbol, got {}", llrs.len())));
    }
    let mut out = vec![0.0; field.q()];
    initial_message_into(llrs, &mut out)?;
    Ok(MessageVector { probs: out })
}

/// Slice version of [`initial_message`]; `out.len()` must be 2^llrs.len().
pub fn initial_message_into(llrs: &[f64], out: &mut [f64]) -> Result<()> {
    debug_assert_eq!(out.len(), 1 << llrs.len());
    if llrs.iter().any(|z| z.is_nan() || *z == f64::NEG_INFINITY) {
        return Err(Error::Numeric("initial message from a NaN or -inf LLR".into()));
    }
    // Log-weights built bit by bit; subtract the max before exponentiating.
    out[0] = 0.0;
    let mut len = 1;
    for &z in llrs {
        for g in 0..len {
            out[g + len] = out[g] - z;
        }
        len <<= 1;
    }
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for w in out.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    out.iter_mut().for_each(|w| *w /= sum);
    Ok(())
}
