//! Decodability of zigzag cycle codes.
//!
//! For a cycle with ratios gamma_1..gamma_s, beta = prod gamma_i of order
//! sigma, and chi_k = gamma_1 ... gamma_{k-1}, define
//!
//! ```text
//! B(x) = prod_{t < sigma} prod_k C_k(beta^t x chi_k^{-1})
//! ```
//!
//! BP makes every symbol eventually correct iff B(0) > B(x) for each coset
//! representative x = alpha^j, j < (q-1)/sigma; otherwise no symbol is.

use serde::{Deserialize, Serialize};

use crate::channel::{initial_message, ChannelModel, LlrBlock, MessageVector};
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldParams};
use crate::graph::TannerGraph;

/// Default relative tie band for predicate comparisons.
pub const PREDICATE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    AllCorrect,
    NoneCorrect,
}

impl Verdict {
    pub fn is_success(self) -> bool {
        self == Verdict::AllCorrect
    }
}

/// How the argument of C_k is built from chi_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiConvention {
    /// C_k(beta^t x chi_k^{-1}); agrees with BP.
    #[default]
    Inverse,
    /// C_k(beta^t x chi_k).
    Direct,
}

#[derive(Debug, Clone)]
pub struct ZigzagInstance {
    field: FieldParams,
    gammas: Vec<FieldElement>,
    beta: FieldElement,
    sigma_ord: usize,
    init: Vec<MessageVector>,
}

impl ZigzagInstance {
    pub fn new(field: FieldParams, gammas: Vec<FieldElement>, init: Vec<MessageVector>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Domain("a zigzag cycle needs at least one symbol".into()));
        }
        if gammas.iter().any(|g| g.is_zero() || g.index() >= field.q()) {
            return Err(Error::Domain("gammas must be nonzero field elements".into()));
        }
        if init.len() != gammas.len() || init.iter().any(|c| c.len() != field.q()) {
            return Err(Error::Domain(format!(
                "need {} initial messages of length {}",
                gammas.len(),
                field.q()
            )));
        }
        let beta = gammas.iter().fold(FieldElement::ONE, |acc, g| field.mul(acc, *g));
        let sigma_ord = field.order(beta)?;
        Ok(Self { field, gammas, beta, sigma_ord, init })
    }

    /// Ratios from labels (h_{i,i}, h_{i,i+1}): gamma_i = h_{i,i}^{-1} h_{i,i+1}.
    pub fn from_labels(
        field: FieldParams,
        labels: &[(FieldElement, FieldElement)],
        init: Vec<MessageVector>,
    ) -> Result<Self> {
        let gammas = labels
            .iter()
            .map(|&(a, b)| Ok(field.mul(field.inv(a)?, b)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(field, gammas, init)
    }

    /// gamma_1 = alpha^k and gamma_i = 1 otherwise, so beta = alpha^k.
    pub fn with_beta_exponent(field: FieldParams, s: usize, k: usize, init: Vec<MessageVector>) -> Result<Self> {
        let mut gammas = vec![FieldElement::ONE; s];
        if s > 0 {
            gammas[0] = field.alpha_pow(k);
        }
        Self::new(field, gammas, init)
    }

    /// Initial messages computed from `s * m` channel LLRs.
    pub fn with_llrs(field: FieldParams, gammas: Vec<FieldElement>, llrs: &LlrBlock) -> Result<Self> {
        let init = (0..llrs.n_symbols())
            .map(|v| initial_message(llrs.symbol(v), &field))
            .collect::<Result<Vec<_>>>()?;
        Self::new(field, gammas, init)
    }

    pub fn s(&self) -> usize {
        self.gammas.len()
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn gammas(&self) -> &[FieldElement] {
        &self.gammas
    }

    pub fn beta(&self) -> FieldElement {
        self.beta
    }

    pub fn sigma_ord(&self) -> usize {
        self.sigma_ord
    }

    pub fn init(&self) -> &[MessageVector] {
        &self.init
    }

    /// Same cycle, different channel observation.
    pub fn with_init(&self, init: Vec<MessageVector>) -> Result<Self> {
        Self::new(self.field.clone(), self.gammas.clone(), init)
    }

    /// chi_k = gamma_1 ... gamma_{k-1}, k = 1..=s.
    pub fn chis(&self) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(self.s());
        let mut acc = FieldElement::ONE;
        for g in &self.gammas {
            out.push(acc);
            acc = self.field.mul(acc, *g);
        }
        out
    }

    /// Labels h_{i,i} = 1, h_{i,i+1} = gamma_i.
    pub fn labels(&self) -> Vec<(FieldElement, FieldElement)> {
        self.gammas.iter().map(|g| (FieldElement::ONE, *g)).collect()
    }

    /// The Tanner graph of this zigzag cycle code.
    pub fn graph(&self) -> Result<TannerGraph> {
        TannerGraph::zigzag_code(self.field.clone(), &self.labels())
    }
}

/// Result of evaluating the predicate, with the quantities needed to judge it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredicateOutcome {
    pub verdict: Verdict,
    /// min over x of ln B(0) - ln B(x); may be infinite.
    pub margin: f64,
    /// Sum of |ln C| terms entering the tightest comparison, at least 1.
    pub scale: f64,
    /// The coset representative attaining the margin.
    pub worst_x: FieldElement,
}

impl PredicateOutcome {
    /// Whether the comparison is a tie at relative tolerance `tol`.
    pub fn is_borderline(&self, tol: f64) -> bool {
        self.margin.is_finite() && self.margin.abs() <= tol * self.scale
    }
}

fn log_tables(z: &ZigzagInstance) -> Vec<Vec<f64>> {
    z.init
        .iter()
        .map(|c| {
            let sum = c.sum();
            c.probs.iter().map(|p| (p / sum).ln()).collect()
        })
        .collect()
}

/// ln B(x) and the sum of magnitudes of its terms.
fn log_b(z: &ZigzagInstance, logs: &[Vec<f64>], factors: &[FieldElement], x: FieldElement) -> (f64, f64) {
    let f = &z.field;
    let (mut total, mut mag) = (0.0, 0.0);
    let mut bt = x;
    for _ in 0..z.sigma_ord {
        for (k, fk) in factors.iter().enumerate() {
            let l = logs[k][f.mul(bt, *fk).index()];
            total += l;
            mag += l.abs();
        }
        bt = f.mul(bt, z.beta);
    }
    (total, mag)
}

/// Theorem 1 with margin information, ties at relative tolerance `tol`.
pub fn theorem1_outcome(z: &ZigzagInstance, convention: ChiConvention, tol: f64) -> PredicateOutcome {
    let f = &z.field;
    let logs = log_tables(z);
    let sigma = z.sigma_ord as f64;
    let log_b0: f64 = logs.iter().map(|l| l[0]).sum::<f64>() * sigma;
    let mag0: f64 = logs.iter().map(|l| l[0].abs()).sum::<f64>() * sigma;
    if log_b0 == f64::NEG_INFINITY {
        return PredicateOutcome {
            verdict: Verdict::NoneCorrect,
            margin: f64::NEG_INFINITY,
            scale: 1.0,
            worst_x: FieldElement::ONE,
        };
    }
    let factors: Vec<FieldElement> = match convention {
        ChiConvention::Direct => z.chis(),
        ChiConvention::Inverse => z.chis().into_iter().map(|c| f.inv(c).expect("nonzero")).collect(),
    };
    let n_cosets = (f.group_order() / z.sigma_ord) as usize;
    let mut best = PredicateOutcome {
        verdict: Verdict::AllCorrect,
        margin: f64::INFINITY,
        scale: 1.0,
        worst_x: FieldElement::ONE,
    };
    for j in 0..n_cosets {
        let x = f.alpha_pow(j);
        let (lb, mag) = log_b(z, &logs, &factors, x);
        let margin = log_b0 - lb;
        if margin < best.margin {
            best.margin = margin;
            best.scale = (mag0 + if mag.is_finite() { mag } else { 0.0 }).max(1.0);
            best.worst_x = x;
        }
    }
    best.verdict = if best.margin > tol * best.scale { Verdict::AllCorrect } else { Verdict::NoneCorrect };
    best
}

/// Theorem 1 verdict, with ties at relative tolerance 1e-12 counted as failure.
pub fn theorem1_predicate(z: &ZigzagInstance) -> Verdict {
    theorem1_outcome(z, ChiConvention::Inverse, PREDICATE_TIE_TOLERANCE).verdict
}

/// Success iff the total LLR over the cycle is positive. Valid when beta has
/// maximal order. A sum within 1e-12 of its magnitude counts as zero.
pub fn corollary2_predicate(llrs: &[f64]) -> Verdict {
    if llrs.iter().any(|l| l.is_nan()) {
        return Verdict::NoneCorrect;
    }
    let has_pos_inf = llrs.iter().any(|l| *l == f64::INFINITY);
    let has_neg_inf = llrs.iter().any(|l| *l == f64::NEG_INFINITY);
    match (has_pos_inf, has_neg_inf) {
        (true, false) => return Verdict::AllCorrect,
        (false, true) | (true, true) => return Verdict::NoneCorrect,
        _ => {}
    }
    let sum: f64 = llrs.iter().sum();
    let mag: f64 = llrs.iter().map(|l| l.abs()).sum();
    if sum > PREDICATE_TIE_TOLERANCE * mag {
        Verdict::AllCorrect
    } else {
        Verdict::NoneCorrect
    }
}

/// Checks "low-order cycle succeeds implies max-order cycle succeeds" for two
/// cycles seeing the same channel output.
pub fn corollary1_check(low: &ZigzagInstance, high: &ZigzagInstance) -> Result<bool> {
    if low.s() != high.s() || low.field.m() != high.field.m() || low.init != high.init {
        return Err(Error::Domain("corollary 1 compares cycles on the same channel output".into()));
    }
    let a = theorem1_predicate(low).is_success();
    let b = theorem1_predicate(high).is_success();
    Ok(!a || b)
}

/// sum over x in A_beta of ln B(0) - ln B(x).
pub fn aggregate_margin(z: &ZigzagInstance) -> f64 {
    let f = &z.field;
    let logs = log_tables(z);
    let log_b0: f64 = logs.iter().map(|l| l[0]).sum::<f64>() * z.sigma_ord as f64;
    let factors: Vec<FieldElement> = z.chis().into_iter().map(|c| f.inv(c).expect("nonzero")).collect();
    (0..(f.group_order() / z.sigma_ord) as usize)
        .map(|j| log_b0 - log_b(z, &logs, &factors, f.alpha_pow(j)).0)
        .sum()
}

/// The same total written without beta: sum over k of
/// (q-1) ln C_k(0) - sum over y != 0 of ln C_k(y).
pub fn aggregate_margin_direct(init: &[MessageVector]) -> f64 {
    init.iter()
        .map(|c| {
            let sum = c.sum();
            let l: Vec<f64> = c.probs.iter().map(|p| (p / sum).ln()).collect();
            (l.len() - 1) as f64 * l[0] - l[1..].iter().sum::<f64>()
        })
        .sum()
}

/// Theorem 1 for one fixed cycle, evaluated directly on channel LLRs.
///
/// Uses unnormalized log weights w_k(y) = -sum of the LLRs of the set bits of y;
/// each C_k enters B(0) and B(x) equally often, so normalization cancels.
#[derive(Debug, Clone)]
pub struct CyclePredicate {
    m: usize,
    s: usize,
    /// Per coset representative: flat indices k * q + y of the sigma * s factors.
    orbits: Vec<Vec<usize>>,
}

impl CyclePredicate {
    pub fn new(field: &FieldParams, gammas: &[FieldElement]) -> Result<Self> {
        let z = ZigzagInstance::new(field.clone(), gammas.to_vec(), vec![MessageVector::uniform(field.q()); gammas.len()])?;
        let q = field.q();
        let inv_chis: Vec<FieldElement> = z.chis().into_iter().map(|c| field.inv(c).expect("nonzero")).collect();
        let orbits = (0..field.group_order() / z.sigma_ord)
            .map(|j| {
                let mut idx = Vec::with_capacity(z.sigma_ord * z.s());
                let mut bt = field.alpha_pow(j);
                for _ in 0..z.sigma_ord {
                    for (k, c) in inv_chis.iter().enumerate() {
                        idx.push(k * q + field.mul(bt, *c).index());
                    }
                    bt = field.mul(bt, z.beta);
                }
                idx
            })
            .collect();
        Ok(Self { m: field.m() as usize, s: gammas.len(), orbits })
    }

    /// `llrs` holds s*m values, bit i of symbol k at k*m + i. `scratch` is reused.
    pub fn evaluate(&self, llrs: &[f64], scratch: &mut Vec<f64>) -> Verdict {
        assert_eq!(llrs.len(), self.s * self.m, "wrong number of LLRs");
        let q = 1usize << self.m;
        scratch.clear();
        scratch.resize(self.s * q, 0.0);
        for k in 0..self.s {
            let w = &mut scratch[k * q..(k + 1) * q];
            for y in 1..q {
                let low = y.trailing_zeros() as usize;
                w[y] = w[y & (y - 1)] - llrs[k * self.m + low];
            }
        }
        for orbit in &self.orbits {
            let (mut total, mut mag) = (0.0, 0.0);
            for &i in orbit {
                total += scratch[i];
                mag += scratch[i].abs();
            }
            if total == f64::NEG_INFINITY {
                continue;
            }
            if total.is_nan() || total >= -PREDICATE_TIE_TOLERANCE * mag.max(1.0) {
                return Verdict::NoneCorrect;
            }
        }
        Verdict::AllCorrect
    }
}

/// Symbol error rate of a weight-s zigzag cycle with beta of maximal order:
/// Pr(sum of s*m LLRs <= 0).
pub fn p_zz(s: usize, m: u32, ch: &ChannelModel) -> f64 {
    ch.tail_prob(s * m as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_llr_block;
    use crate::decoder::{Decoder, DecoderConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(m: u32) -> FieldParams {
        FieldParams::new(m).unwrap()
    }

    fn random_gammas(f: &FieldParams, s: usize, rng: &mut ChaCha8Rng) -> Vec<FieldElement> {
        (0..s).map(|_| f.alpha_pow(rng.gen_range(0..f.group_order() as usize))).collect()
    }

    #[test]
    fn trivial_examples() {
        let f = field(3);
        let gam = vec![f.alpha(), f.alpha_pow(2), FieldElement::ONE];
        let z = ZigzagInstance::new(f.clone(), gam.clone(), vec![MessageVector::delta(8, 0); 3]).unwrap();
        assert_eq!(theorem1_predicate(&z), Verdict::AllCorrect);
        let z = ZigzagInstance::new(f.clone(), gam.clone(), vec![MessageVector::uniform(8); 3]).unwrap();
        assert_eq!(theorem1_predicate(&z), Verdict::NoneCorrect);
        assert_eq!(z.beta(), f.alpha_pow(3));
        assert_eq!(z.sigma_ord(), 7);
        let mut c = MessageVector::uniform(8);
        c.probs[0] = 0.0;
        let z = ZigzagInstance::new(f, gam, vec![c, MessageVector::delta(8, 0), MessageVector::delta(8, 0)]).unwrap();
        assert_eq!(theorem1_predicate(&z), Verdict::NoneCorrect);
    }

    #[test]
    fn invalid_instances() {
        let f = field(2);
        assert!(ZigzagInstance::new(f.clone(), vec![], vec![]).is_err());
        assert!(ZigzagInstance::new(f.clone(), vec![FieldElement::ZERO], vec![MessageVector::uniform(4)]).is_err());
        assert!(ZigzagInstance::new(f, vec![FieldElement::ONE], vec![MessageVector::uniform(8)]).is_err());
    }

    #[test]
    fn corollary2_examples() {
        assert_eq!(corollary2_predicate(&[f64::INFINITY; 12]), Verdict::AllCorrect);
        let l = crate::channel::bsc_llr(0.1);
        let half: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { l } else { -l }).collect();
        assert_eq!(corollary2_predicate(&half), Verdict::NoneCorrect);
        assert_eq!(corollary2_predicate(&[0.5, -0.2]), Verdict::AllCorrect);
        assert_eq!(corollary2_predicate(&[0.5, -0.7]), Verdict::NoneCorrect);
    }

    #[test]
    fn theorem1_matches_corollary2_at_max_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let channels = [ChannelModel::awgn(1.0).unwrap(), ChannelModel::awgn(2.0).unwrap(), ChannelModel::bsc(0.1).unwrap()];
        let mut checked = 0;
        for i in 0..10_000 {
            let m = [2, 3, 4][i % 3];
            let f = field(m);
            let s = 1 + i % 4;
            let gammas = random_gammas(&f, s, &mut rng);
            let ch = &channels[i % channels.len()];
            let llrs = sample_llr_block(ch, s, m as usize, &mut rng).unwrap();
            let z = ZigzagInstance::with_llrs(f.clone(), gammas, &llrs).unwrap();
            if !f.is_max_order(z.beta()).unwrap() {
                continue;
            }
            assert_eq!(theorem1_predicate(&z), corollary2_predicate(llrs.values()), "instance {i}");
            checked += 1;
        }
        assert!(checked > 3000);
    }

    #[test]
    fn corollary1_holds_on_paired_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let f = field(4);
        let ch = ChannelModel::awgn(1.5).unwrap();
        let (mut low_ok, mut high_ok) = (0, 0);
        for i in 0..10_000 {
            let s = 1 + i % 4;
            let llrs = sample_llr_block(&ch, s, 4, &mut rng).unwrap();
            let low_k = [0, 3, 5, 6, 9, 10, 12][i % 7];
            let high_k = [1, 2, 4, 7, 8, 11, 13, 14][i % 8];
            let base = ZigzagInstance::with_llrs(f.clone(), vec![FieldElement::ONE; s], &llrs).unwrap();
            let mut g_low = vec![FieldElement::ONE; s];
            g_low[0] = f.alpha_pow(low_k);
            let mut g_high = vec![FieldElement::ONE; s];
            g_high[s - 1] = f.alpha_pow(high_k);
            let low = ZigzagInstance::new(f.clone(), g_low, base.init().to_vec()).unwrap();
            let high = ZigzagInstance::new(f.clone(), g_high, base.init().to_vec()).unwrap();
            assert!(!f.is_max_order(low.beta()).unwrap() && f.is_max_order(high.beta()).unwrap());
            assert!(corollary1_check(&low, &high).unwrap());
            low_ok += theorem1_predicate(&low).is_success() as usize;
            high_ok += theorem1_predicate(&high).is_success() as usize;
        }
        assert!(high_ok > low_ok);
        // Same order on both sides is trivially fine.
        let z = ZigzagInstance::with_beta_exponent(f.clone(), 2, 1, vec![MessageVector::uniform(16); 2]).unwrap();
        assert!(corollary1_check(&z, &z).unwrap());
    }

    #[test]
    fn aggregate_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ch = ChannelModel::awgn(0.8).unwrap();
        for i in 0..2000 {
            let m = 2 + (i % 4) as u32;
            let f = field(m);
            let s = 1 + i % 4;
            let gammas = random_gammas(&f, s, &mut rng);
            let llrs = sample_llr_block(&ch, s, m as usize, &mut rng).unwrap();
            let z = ZigzagInstance::with_llrs(f, gammas, &llrs).unwrap();
            let a = aggregate_margin(&z);
            let b = aggregate_margin_direct(z.init());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn cycle_predicate_matches_theorem1() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let channels = [ChannelModel::awgn(1.0).unwrap(), ChannelModel::bsc(0.1).unwrap(), ChannelModel::bec(0.4).unwrap()];
        let mut scratch = Vec::new();
        for i in 0..5000 {
            let m = 2 + (i % 3) as u32;
            let f = field(m);
            let s = 1 + i % 4;
            let gammas = random_gammas(&f, s, &mut rng);
            let ch = &channels[i % 3];
            let llrs = sample_llr_block(ch, s, m as usize, &mut rng).unwrap();
            let z = ZigzagInstance::with_llrs(f.clone(), gammas.clone(), &llrs).unwrap();
            let fast = CyclePredicate::new(&f, &gammas).unwrap();
            assert_eq!(fast.evaluate(llrs.values(), &mut scratch), theorem1_predicate(&z), "instance {i}");
        }
    }

    #[test]
    fn p_zz_examples() {
        assert_relative_eq!(p_zz(3, 4, &ChannelModel::awgn(1.0).unwrap()), 2.660_027_525_696e-4, max_relative = 1e-9);
        assert_relative_eq!(p_zz(2, 3, &ChannelModel::bec(0.3).unwrap()), 0.3f64.powi(6), max_relative = 1e-14);
        let ch = ChannelModel::awgn(0.8).unwrap();
        let v: Vec<f64> = (1..30).map(|k| p_zz(k, 2, &ch)).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    /// Decodes the zigzag code with BP over enough periods for the margin to
    /// dominate the transient.
    fn bp_verdict(z: &ZigzagInstance, margin: f64) -> bool {
        let g = z.graph().unwrap();
        let period = z.s() * z.sigma_ord();
        let spread: f64 = z.init().iter().map(|c| {
            let l: Vec<f64> = c.probs.iter().map(|p| p.ln()).collect();
            l.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - l.iter().cloned().fold(f64::INFINITY, f64::min)
        }).sum();
        let periods = if margin.is_finite() { (2.0 * spread / margin.abs()).ceil() as usize + 3 } else { 3 };
        let window = 2 * period + 1;
        let cfg = DecoderConfig { max_iter: period * periods + window, ec_window: window, ..Default::default() };
        let r = Decoder::new(&g).decode(z.init(), &cfg).unwrap();
        let all = r.eventually_correct.iter().all(|b| *b);
        let none = r.eventually_correct.iter().all(|b| !*b);
        assert!(all || none, "mixed outcome on a zigzag code");
        all
    }

    #[test]
    fn inverse_convention_agrees_with_bp() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let ch = ChannelModel::awgn(1.0).unwrap();
        let (mut direct_disagrees, mut tested) = (0, 0);
        for i in 0..300 {
            let m = 2 + (i % 3) as u32;
            let f = field(m);
            let s = 2 + i % 3;
            let gammas = random_gammas(&f, s, &mut rng);
            let llrs = sample_llr_block(&ch, s, m as usize, &mut rng).unwrap();
            let z = ZigzagInstance::with_llrs(f, gammas, &llrs).unwrap();
            let inv = theorem1_outcome(&z, ChiConvention::Inverse, 1e-9);
            let dir = theorem1_outcome(&z, ChiConvention::Direct, 1e-9);
            if inv.is_borderline(1e-6) || inv.margin.abs() < 1e-3 {
                continue;
            }
            tested += 1;
            let bp = bp_verdict(&z, inv.margin);
            assert_eq!(bp, inv.verdict.is_success(), "instance {i}");
            direct_disagrees += (dir.verdict != inv.verdict) as usize;
        }
        assert!(tested > 250);
        assert!(direct_disagrees > 0, "conventions never differed; the test is not discriminating");
    }
}
