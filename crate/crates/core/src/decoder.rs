//! Probability-domain q-ary belief propagation with a flooding schedule.
//!
//! Messages are length-q probability vectors indexed by the bit representation
//! of field elements. Check nodes convolve over the additive group of GF(2^m)
//! (XOR of bit vectors), computed with the Walsh-Hadamard transform.
//!
//! Iteration 0 decides from the channel alone; each later iteration runs all
//! check updates, then all variable updates, then a decision at every symbol.
//! A symbol is reported eventually correct when its decision was uniquely 0 in
//! each of the last `ec_window` decisions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::MessageVector;
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldParams};
use crate::graph::TannerGraph;

/// Relative band within which two beliefs count as tied for the argmax.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iter: usize,
    pub ec_window: usize,
    pub tie_break_seed: u64,
    /// Message entries are clamped to at least this value before renormalizing.
    pub floor: f64,
    /// Keep every iteration's decisions in the result.
    #[serde(default)]
    pub trace: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { max_iter: 200, ec_window: 8, tie_break_seed: 0, floor: 1e-300, trace: false }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ec_window < 1 || self.ec_window > self.max_iter {
            return Err(Error::Config(format!(
                "need 1 <= ec_window <= max_iter, got {} and {}",
                self.ec_window, self.max_iter
            )));
        }
        if !(self.floor > 0.0 && self.floor < 1e-12) {
            return Err(Error::Config(format!("normalization floor {} out of range", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Decision at the last iteration.
    pub decisions: Vec<FieldElement>,
    pub eventually_correct: Vec<bool>,
    pub iterations: usize,
    /// Messages that lost all probability mass and were reset to uniform.
    pub extinctions: usize,
    /// Whether the final decisions form a codeword. Reported only.
    pub syndrome_ok: bool,
    /// First iteration after which the messages stopped changing, if any;
    /// later iterations are identical and were not recomputed.
    pub fixed_point: Option<usize>,
    /// Decisions at iterations 0..=iterations, when tracing.
    pub trace: Option<Vec<Vec<FieldElement>>>,
}

impl DecodeResult {
    pub fn symbol_errors(&self) -> usize {
        self.eventually_correct.iter().filter(|ok| !**ok).count()
    }

    /// One JSON object per traced iteration.
    pub fn trace_json_lines(&self) -> String {
        let Some(trace) = &self.trace else { return String::new() };
        trace
            .iter()
            .enumerate()
            .map(|(it, d)| {
                let vals: Vec<u16> = d.iter().map(|x| x.0).collect();
                serde_json::json!({ "iteration": it, "decisions": vals }).to_string() + "\n"
            })
            .collect()
    }
}

/// In-place unnormalized Walsh-Hadamard transform; length must be a power of two.
/// Applying it twice multiplies by the length.
pub fn wht(buf: &mut [f64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in buf.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// [a (+) b](x) = sum over y ^ z = x of a(y) b(z), via the transform.
pub fn xor_convolve(a: &MessageVector, b: &MessageVector) -> MessageVector {
    assert_eq!(a.len(), b.len());
    let q = a.len();
    let mut ta = a.probs.clone();
    let mut tb = b.probs.clone();
    wht(&mut ta);
    wht(&mut tb);
    for (x, y) in ta.iter_mut().zip(&tb) {
        *x *= y;
    }
    wht(&mut ta);
    let scale = 1.0 / q as f64;
    MessageVector { probs: ta.into_iter().map(|x| (x * scale).max(0.0)).collect() }
}

/// O(q^2) double sum; the reference for [`xor_convolve`].
pub fn xor_convolve_direct(a: &MessageVector, b: &MessageVector) -> MessageVector {
    let q = a.len();
    let mut out = vec![0.0; q];
    for y in 0..q {
        for z in 0..q {
            out[y ^ z] += a.probs[y] * b.probs[z];
        }
    }
    MessageVector { probs: out }
}

/// Normalizes `buf` in place, clamps entries below `floor`, renormalizes.
/// Returns false (and leaves `buf` uniform) when there is no mass.
fn normalize_with_floor(buf: &mut [f64], floor: f64) -> bool {
    let sum: f64 = buf.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        let u = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|x| *x = u);
        return false;
    }
    let inv = 1.0 / sum;
    let mut clamped = false;
    for x in buf.iter_mut() {
        *x *= inv;
        if *x < floor {
            *x = floor;
            clamped = true;
        }
    }
    if clamped {
        let inv = 1.0 / buf.iter().sum::<f64>();
        buf.iter_mut().for_each(|x| *x *= inv);
    }
    true
}

/// Psi(x) = C(x) * product of the other incoming check messages, normalized.
///
/// Returns the message and `false` if the product had no mass (the message is
/// then uniform).
pub fn variable_update(c_v: &MessageVector, others: &[&MessageVector], floor: f64) -> (MessageVector, bool) {
    let mut out = c_v.probs.clone();
    for phi in others {
        for (o, p) in out.iter_mut().zip(&phi.probs) {
            *o *= p;
        }
    }
    let ok = normalize_with_floor(&mut out, floor);
    (MessageVector { probs: out }, ok)
}

/// Check-to-variable message on the edge with label `h_out`, from the other
/// edges' (message, label) pairs: Phi(x) = [conv of Psi_j(h_j^{-1} .)](h_out x).
pub fn check_update(
    field: &FieldParams,
    incoming: &[(MessageVector, FieldElement)],
    h_out: FieldElement,
) -> MessageVector {
    let q = field.q();
    let mut acc = MessageVector::delta(q, 0);
    for (psi, h) in incoming {
        let mut permuted = vec![0.0; q];
        for y in 0..q {
            permuted[field.mul(*h, FieldElement(y as u16)).index()] = psi.probs[y];
        }
        acc = xor_convolve(&acc, &MessageVector { probs: permuted });
    }
    let mut out: Vec<f64> = (0..q).map(|x| acc.probs[field.mul(h_out, FieldElement(x as u16)).index()]).collect();
    normalize_with_floor(&mut out, 0.0);
    MessageVector { probs: out }
}

fn argmax_set(d: &[f64], set: &mut Vec<usize>) {
    set.clear();
    let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = if max > 0.0 { max * (1.0 - TIE_TOLERANCE) } else { max };
    set.extend(d.iter().enumerate().filter(|(_, &x)| x >= cut).map(|(i, _)| i));
}

/// Decision from D = C * product of all incoming messages: the argmax, with
/// ties broken uniformly. Returns the decision and the size of the argmax set.
pub fn decide<R: Rng + ?Sized>(c_v: &MessageVector, incoming: &[&MessageVector], rng: &mut R) -> (FieldElement, usize) {
    let mut d = c_v.probs.clone();
    for phi in incoming {
        for (o, p) in d.iter_mut().zip(&phi.probs) {
            *o *= p;
        }
    }
    let mut set = Vec::new();
    argmax_set(&d, &mut set);
    let pick = if set.len() == 1 { set[0] } else { set[rng.gen_range(0..set.len())] };
    (FieldElement(pick as u16), set.len())
}

/// Reusable flooding decoder bound to one graph.
pub struct Decoder<'g> {
    graph: &'g TannerGraph,
    q: usize,
    /// perm[e * q + y] = h_e * y
    perm: Vec<u16>,
    /// inv_perm[e * q + z] = h_e^{-1} * z
    inv_perm: Vec<u16>,
    psi: Vec<f64>,
    phi: Vec<f64>,
    init: Vec<f64>,
    scratch: Vec<f64>,
    suffix: Vec<f64>,
    transforms: Vec<f64>,
    prefix: Vec<f64>,
    ties: Vec<usize>,
    /// Stop iterating at an exact fixed point; off only in tests.
    shortcut: bool,
}

impl<'g> Decoder<'g> {
    pub fn new(graph: &'g TannerGraph) -> Self {
        let f = graph.field();
        let q = f.q();
        let mut rows: Vec<Option<(Vec<u16>, Vec<u16>)>> = vec![None; q];
        let mut perm = Vec::with_capacity(graph.edges().len() * q);
        let mut inv_perm = Vec::with_capacity(graph.edges().len() * q);
        for e in graph.edges() {
            let (p, ip) = rows[e.label.index()].get_or_insert_with(|| {
                let inv = f.inv(e.label).expect("labels are nonzero");
                (f.mul_row(e.label), f.mul_row(inv))
            });
            perm.extend_from_slice(p);
            inv_perm.extend_from_slice(ip);
        }
        let n_edges = graph.edges().len();
        let max_dc = (0..graph.n_checks()).map(|c| graph.check_degree(c)).max().unwrap_or(0);
        Self {
            graph,
            q,
            perm,
            inv_perm,
            psi: vec![0.0; n_edges * q],
            phi: vec![0.0; n_edges * q],
            init: vec![0.0; graph.n_vars() * q],
            scratch: vec![0.0; q],
            suffix: vec![0.0; q],
            transforms: vec![0.0; max_dc * q],
            prefix: vec![0.0; (max_dc + 1) * q],
            ties: Vec::with_capacity(q),
            shortcut: true,
        }
    }

    /// Runs `cfg.max_iter` flooding iterations from the given initial messages.
    pub fn decode(&mut self, init: &[MessageVector], cfg: &DecoderConfig) -> Result<DecodeResult> {
        if init.len() != self.graph.n_vars() || init.iter().any(|c| c.len() != self.q) {
            return Err(Error::Config(format!(
                "need {} initial messages of length {}",
                self.graph.n_vars(),
                self.q
            )));
        }
        for (v, c) in init.iter().enumerate() {
            self.init[v * self.q..(v + 1) * self.q].copy_from_slice(&c.probs);
        }
        self.decode_loaded(cfg)
    }

    /// Initial messages as one flat slice of `n_vars * q` values.
    pub fn decode_flat(&mut self, init: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
        if init.len() != self.init.len() {
            return Err(Error::Config("initial message buffer has the wrong length".into()));
        }
        self.init.copy_from_slice(init);
        self.decode_loaded(cfg)
    }

    fn decode_loaded(&mut self, cfg: &DecoderConfig) -> Result<DecodeResult> {
        cfg.validate()?;
        let g = self.graph;
        let q = self.q;
        let n = g.n_vars();
        let mut extinctions = 0;
        for v in 0..n {
            let c = &mut self.init[v * q..(v + 1) * q];
            if c.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::Numeric(format!("initial message of symbol {v} is not a distribution")));
            }
            if !normalize_with_floor(c, 0.0) {
                return Err(Error::Numeric(format!("initial message of symbol {v} has no mass")));
            }
        }
        // Psi^(0) = C_v on every edge; Phi^(0) is uniform and never read.
        for (e, edge) in g.edges().iter().enumerate() {
            let src = edge.var * q;
            self.psi[e * q..(e + 1) * q].copy_from_slice(&self.init[src..src + q]);
        }
        self.phi.iter_mut().for_each(|x| *x = 1.0 / q as f64);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.tie_break_seed);
        let mut decisions = vec![FieldElement::ZERO; n];
        // Last iteration whose decision was not uniquely 0.
        let mut last_bad: Vec<Option<usize>> = vec![None; n];
        let mut trace = cfg.trace.then(Vec::new);

        let mut prev_psi = self.psi.clone();
        let mut fixed_point = None;
        for it in 0..=cfg.max_iter {
            let mut step_extinctions = 0;
            if it > 0 {
                for c in 0..g.n_checks() {
                    self.update_check(c, cfg.floor);
                }
                for v in 0..n {
                    step_extinctions += self.update_var(v, cfg.floor);
                }
                extinctions += step_extinctions;
            }
            let mut any_tie = false;
            for v in 0..n {
                let (x, ties) = self.decide_var(v, &mut rng);
                decisions[v] = x;
                any_tie |= ties != 1;
                if ties != 1 || !x.is_zero() {
                    last_bad[v] = Some(it);
                }
            }
            if let Some(t) = trace.as_mut() {
                t.push(decisions.clone());
            }
            // Psi unchanged means every later iteration repeats this one
            // exactly; without ties no random draw can differ either.
            if self.shortcut && it > 0 && it < cfg.max_iter && !any_tie && self.psi == prev_psi {
                let rest = cfg.max_iter - it;
                fixed_point = Some(it);
                extinctions += step_extinctions * rest;
                for (v, x) in decisions.iter().enumerate() {
                    if !x.is_zero() {
                        last_bad[v] = Some(cfg.max_iter);
                    }
                }
                if let Some(t) = trace.as_mut() {
                    t.extend(std::iter::repeat(decisions.clone()).take(rest));
                }
                break;
            }
            prev_psi.copy_from_slice(&self.psi);
        }
        let window_start = cfg.max_iter + 1 - cfg.ec_window;
        let eventually_correct = last_bad.iter().map(|b| b.map_or(true, |i| i < window_start)).collect();
        Ok(DecodeResult {
            syndrome_ok: g.is_codeword(&decisions),
            decisions,
            eventually_correct,
            iterations: cfg.max_iter,
            extinctions,
            fixed_point,
            trace,
        })
    }

    fn update_check(&mut self, c: usize, floor: f64) {
        let g = self.graph;
        let q = self.q;
        let edges = g.check_edges(c);
        match edges.len() {
            0 => {}
            1 => {
                let e = edges[0];
                let out = &mut self.phi[e * q..(e + 1) * q];
                out.iter_mut().for_each(|x| *x = 0.0);
                out[0] = 1.0;
                normalize_with_floor(out, floor);
            }
            2 => {
                // Phi_a(x) = Psi_b(h_b^{-1} h_a x): a pure permutation.
                for (a, b) in [(edges[0], edges[1]), (edges[1], edges[0])] {
                    let (pa, ib) = (&self.perm[a * q..(a + 1) * q], &self.inv_perm[b * q..(b + 1) * q]);
                    let src = &self.psi[b * q..(b + 1) * q];
                    let out = &mut self.phi[a * q..(a + 1) * q];
                    for x in 0..q {
                        out[x] = src[ib[pa[x] as usize] as usize];
                    }
                }
            }
            d => {
                // Transform every permuted input, then products of all-but-one
                // from prefix and suffix products.
                for (j, &e) in edges.iter().enumerate() {
                    let t = &mut self.transforms[j * q..(j + 1) * q];
                    let src = &self.psi[e * q..(e + 1) * q];
                    for (&p, &x) in self.perm[e * q..(e + 1) * q].iter().zip(src) {
                        t[p as usize] = x;
                    }
                    wht(t);
                }
                // prefix[j] = product of transforms 0..j
                self.prefix[..q].iter_mut().for_each(|x| *x = 1.0);
                for j in 0..d {
                    let (done, rest) = self.prefix.split_at_mut((j + 1) * q);
                    let prev = &done[j * q..];
                    let t = &self.transforms[j * q..(j + 1) * q];
                    for x in 0..q {
                        rest[x] = prev[x] * t[x];
                    }
                }
                let inv_q = 1.0 / q as f64;
                let suffix = &mut self.suffix;
                suffix.iter_mut().for_each(|x| *x = 1.0);
                for j in (0..d).rev() {
                    let e = edges[j];
                    let pre = &self.prefix[j * q..(j + 1) * q];
                    for ((s, p), f) in self.scratch.iter_mut().zip(pre).zip(suffix.iter()) {
                        *s = p * f;
                    }
                    wht(&mut self.scratch);
                    let out = &mut self.phi[e * q..(e + 1) * q];
                    for (o, &p) in out.iter_mut().zip(&self.perm[e * q..(e + 1) * q]) {
                        *o = (self.scratch[p as usize] * inv_q).max(0.0);
                    }
                    normalize_with_floor(out, floor);
                    let t = &self.transforms[j * q..(j + 1) * q];
                    for (f, x) in suffix.iter_mut().zip(t) {
                        *f *= x;
                    }
                }
            }
        }
    }

    /// Returns the number of extinct messages (0 or more).
    fn update_var(&mut self, v: usize, floor: f64) -> usize {
        let g = self.graph;
        let q = self.q;
        let edges = g.var_edges(v);
        let c = &self.init[v * q..(v + 1) * q];
        let mut extinct = 0;
        for &e in edges {
            let out = &mut self.psi[e * q..(e + 1) * q];
            out.copy_from_slice(c);
            for &o in edges {
                if o != e {
                    let phi = &self.phi[o * q..(o + 1) * q];
                    for x in 0..q {
                        out[x] *= phi[x];
                    }
                }
            }
            if !normalize_with_floor(out, floor) {
                log::debug!("message extinction at variable {v}, edge {e}");
                extinct += 1;
            }
        }
        extinct
    }

    fn decide_var(&mut self, v: usize, rng: &mut ChaCha8Rng) -> (FieldElement, usize) {
        let g = self.graph;
        let q = self.q;
        let edges = g.var_edges(v);
        let d = &mut self.scratch;
        d.copy_from_slice(&self.init[v * q..(v + 1) * q]);
        for &e in edges {
            let phi = &self.phi[e * q..(e + 1) * q];
            for x in 0..q {
                d[x] *= phi[x];
            }
        }
        let max = d.iter().cloned().fold(0.0, f64::max);
        if !(max > 1e-250 && max.is_finite()) {
            // Underflow: redo in the log domain.
            let c = &self.init[v * q..(v + 1) * q];
            for x in 0..q {
                d[x] = c[x].ln() + edges.iter().map(|&e| self.phi[e * q + x].ln()).sum::<f64>();
            }
            let top = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            d.iter_mut().for_each(|x| *x = (*x - top).exp());
        }
        argmax_set(d, &mut self.ties);
        let pick = if self.ties.len() == 1 { self.ties[0] } else { self.ties[rng.gen_range(0..self.ties.len())] };
        (FieldElement(pick as u16), self.ties.len())
    }
}

/// One-shot decode of `g` from initial messages.
pub fn decode(g: &TannerGraph, init: &[MessageVector], cfg: &DecoderConfig) -> Result<DecodeResult> {
    Decoder::new(g).decode(init, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::initial_message;
    use crate::graph::{sample_graph, DegreeDistPair, EnsembleSpec, ForbiddenSet};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn random_message(q: usize, rng: &mut ChaCha8Rng) -> MessageVector {
        MessageVector::normalized((0..q).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn convolution_examples() {
        let q = 8;
        let u = MessageVector::delta(q, 3);
        let w = MessageVector::delta(q, 6);
        let c = xor_convolve(&u, &w);
        assert_relative_eq!(c.probs[5], 1.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = random_message(q, &mut rng);
        let c = xor_convolve(&MessageVector::uniform(q), &r);
        c.probs.iter().for_each(|p| assert_relative_eq!(*p, 1.0 / 8.0, epsilon = 1e-15));
    }

    #[test]
    fn convolution_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 2..=6 {
            let q = 1 << m;
            for _ in 0..50 {
                let (a, b) = (random_message(q, &mut rng), random_message(q, &mut rng));
                let fast = xor_convolve(&a, &b);
                let slow = xor_convolve_direct(&a, &b);
                for (x, y) in fast.probs.iter().zip(&slow.probs) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variable_update_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = 16;
        let c = random_message(q, &mut rng);
        let u = MessageVector::uniform(q);
        let (out, ok) = variable_update(&c, &[&u, &u], 1e-300);
        assert!(ok);
        for (a, b) in out.probs.iter().zip(&c.probs) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
        let phi = random_message(q, &mut rng);
        let (out, _) = variable_update(&c, &[&phi], 1e-300);
        let prod: Vec<f64> = c.probs.iter().zip(&phi.probs).map(|(a, b)| a * b).collect();
        let want = MessageVector::normalized(prod).unwrap();
        for (a, b) in out.probs.iter().zip(&want.probs) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
        let point = MessageVector::delta(q, 0);
        let (out, _) = variable_update(&point, &[&phi], 1e-300);
        assert!(out.probs[0] > 1.0 - 1e-12);
        // Disjoint supports: no mass left.
        let (out, ok) = variable_update(&MessageVector::delta(q, 0), &[&MessageVector::delta(q, 1)], 0.0);
        assert!(!ok);
        assert_eq!(out, MessageVector::uniform(q));
    }

    #[test]
    fn check_update_examples() {
        let f = FieldParams::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (h1, h2) = (f.alpha_pow(3), f.alpha_pow(11));
        let psi2 = random_message(16, &mut rng);
        // Degree 2: Phi_1(x) = Psi_2(h2^{-1} h1 x)
        let phi1 = check_update(&f, &[(psi2.clone(), h2)], h1);
        let g = f.mul(f.inv(h2).unwrap(), h1);
        for x in 0..16u16 {
            let want = psi2.probs[f.mul(g, FieldElement(x)).index()];
            assert_relative_eq!(phi1.probs[x as usize], want, epsilon = 1e-14);
        }
        let zero = MessageVector::delta(16, 0);
        let out = check_update(&f, &[(zero.clone(), h1), (zero.clone(), h2)], f.alpha());
        assert_relative_eq!(out.probs[0], 1.0, epsilon = 1e-14);
        let (a, b) = (random_message(16, &mut rng), random_message(16, &mut rng));
        let out = check_update(&f, &[(a.clone(), FieldElement::ONE), (b.clone(), FieldElement::ONE)], FieldElement::ONE);
        let want = xor_convolve_direct(&a, &b);
        for (x, y) in out.probs.iter().zip(&want.probs) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decide_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = MessageVector::uniform(4);
        c.probs[0] = 0.5;
        assert_eq!(decide(&c, &[], &mut rng), (FieldElement::ZERO, 1));
        let u = MessageVector::uniform(16);
        let mut counts = [0usize; 16];
        for _ in 0..16_000 {
            let (x, t) = decide(&u, &[&u], &mut rng);
            assert_eq!(t, 16);
            counts[x.index()] += 1;
        }
        assert!(counts.iter().all(|&k| (k as f64 - 1000.0).abs() < 4.0 * 968f64.sqrt()));
        let tie = MessageVector { probs: vec![0.4, 0.1, 0.4, 0.1] };
        let n = 10_000;
        let zeros = (0..n).filter(|_| decide(&tie, &[], &mut rng).0.is_zero()).count();
        assert!((zeros as f64 - 5000.0).abs() < 4.0 * 50.0, "{zeros}");
    }

    fn run_graph<'a>(g: &'a TannerGraph, init: &[MessageVector], cfg: &DecoderConfig) -> (DecodeResult, Decoder<'a>) {
        let mut dec = Decoder::new(g);
        let r = dec.decode(init, cfg).unwrap();
        (r, dec)
    }

    #[test]
    fn noiseless_decode_is_correct() {
        let spec = EnsembleSpec {
            n: 90, m: 4, degrees: DegreeDistPair::regular(2, 3).unwrap(),
            s_g: 1, s_c: 1, forbidden: ForbiddenSet::Identity,
        };
        let g = sample_graph(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let init = vec![MessageVector::delta(16, 0); 90];
        let cfg = DecoderConfig { max_iter: 5, ec_window: 5, ..Default::default() };
        let (r, _) = run_graph(&g, &init, &cfg);
        assert!(r.eventually_correct.iter().all(|b| *b));
        assert!(r.syndrome_ok);
        assert_eq!(r.symbol_errors(), 0);
    }

    #[test]
    fn messages_stay_normalized_and_scaling_is_irrelevant() {
        let spec = EnsembleSpec {
            n: 100, m: 3,
            degrees: DegreeDistPair::from_terms(&[(2, 0.5), (3, 0.5)], &[(4, 0.5), (6, 0.5)]).unwrap(),
            s_g: 1, s_c: 1, forbidden: ForbiddenSet::Identity,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = sample_graph(&spec, &mut rng).unwrap();
        let f = g.field().clone();
        let ch = crate::channel::ChannelModel::awgn(1.2).unwrap();
        let llrs = crate::channel::sample_llr_block(&ch, 100, 3, &mut rng).unwrap();
        let init: Vec<MessageVector> = (0..100).map(|v| initial_message(llrs.symbol(v), &f).unwrap()).collect();
        let cfg = DecoderConfig { max_iter: 30, ec_window: 5, trace: true, ..Default::default() };
        let (r1, dec) = run_graph(&g, &init, &cfg);
        for chunk in dec.psi.chunks(8).chain(dec.phi.chunks(8)) {
            let s: f64 = chunk.iter().sum();
            assert!((s - 1.0).abs() < 1e-9 && chunk.iter().all(|x| *x >= 0.0));
        }
        let scaled: Vec<MessageVector> = init
            .iter()
            .enumerate()
            .map(|(i, c)| MessageVector { probs: c.probs.iter().map(|p| p * (1.0 + i as f64)).collect() })
            .collect();
        let (r2, _) = run_graph(&g, &scaled, &cfg);
        assert_eq!(r1.trace, r2.trace);
        assert_eq!(r1.trace.as_ref().unwrap().len(), 31);
        assert_eq!(r1.trace_json_lines().lines().count(), 31);
    }

    #[test]
    fn fixed_point_shortcut_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let spec = EnsembleSpec {
            n: 120,
            m: 4,
            degrees: DegreeDistPair::regular(2, 3).unwrap(),
            s_g: 1,
            s_c: 1,
            forbidden: ForbiddenSet::BadParams,
        };
        let f = FieldParams::new(4).unwrap();
        let cfg = DecoderConfig { max_iter: 120, trace: true, ..Default::default() };
        let mut shortcuts = 0;
        for (i, sigma2) in [0.3, 0.6, 0.9, 1.3].iter().cycle().take(24).enumerate() {
            let g = sample_graph(&spec, &mut rng).unwrap();
            let ch = crate::channel::ChannelModel::awgn(*sigma2).unwrap();
            let init: Vec<MessageVector> = (0..g.n_vars())
                .map(|_| {
                    let l: Vec<f64> = (0..4).map(|_| ch.sample_llr(&mut rng)).collect();
                    initial_message(&l, &f).unwrap()
                })
                .collect();
            let mut fast = Decoder::new(&g);
            let a = fast.decode(&init, &cfg).unwrap();
            let mut slow = Decoder::new(&g);
            slow.shortcut = false;
            let b = slow.decode(&init, &cfg).unwrap();
            assert_eq!(a.decisions, b.decisions, "graph {i}");
            assert_eq!(a.eventually_correct, b.eventually_correct, "graph {i}");
            assert_eq!(a.extinctions, b.extinctions, "graph {i}");
            assert_eq!(a.trace, b.trace, "graph {i}");
            assert!(b.fixed_point.is_none());
            shortcuts += a.fixed_point.is_some() as usize;
        }
        assert!(shortcuts > 0, "no run reached a fixed point early");
    }

    #[test]
    fn identity_degree_two_check_forwards() {
        let f = FieldParams::new(3).unwrap();
        let one = FieldElement::ONE;
        let g = TannerGraph::zigzag_code(f.clone(), &[(one, one); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init: Vec<MessageVector> = (0..2).map(|_| random_message(8, &mut rng)).collect();
        let cfg = DecoderConfig { max_iter: 1, ec_window: 1, ..Default::default() };
        let mut dec = Decoder::new(&g);
        dec.decode(&init, &cfg).unwrap();
        // After one iteration each Phi equals the neighbour's C exactly.
        for (e, edge) in g.edges().iter().enumerate() {
            let other = 1 - edge.var;
            assert_eq!(&dec.phi[e * 8..(e + 1) * 8], &init[other].probs[..]);
        }
    }

    #[test]
    fn invalid_inputs() {
        let f = FieldParams::new(2).unwrap();
        let g = TannerGraph::zigzag_code(f, &[(FieldElement::ONE, FieldElement::ONE); 2]).unwrap();
        let cfg = DecoderConfig { max_iter: 4, ec_window: 5, ..Default::default() };
        assert!(decode(&g, &vec![MessageVector::uniform(4); 2], &cfg).is_err());
        assert!(decode(&g, &vec![MessageVector::uniform(4); 3], &DecoderConfig::default()).is_err());
        let zero = MessageVector { probs: vec![0.0; 4] };
        assert!(matches!(
            decode(&g, &[zero.clone(), zero], &DecoderConfig::default()),
            Err(Error::Numeric(_))
        ));
    }
}
