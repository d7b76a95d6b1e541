//! Labeled Tanner graphs and the expurgated ensembles built on them.

mod alist;
mod expurgate;
mod stopping;
mod zigzag;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::gf::{FieldElement, FieldParams};

pub use alist::{export_code, import_code};
pub use expurgate::{expurgate, expurgate_with, ExpurgationLimits, ExpurgationStats};
pub use stopping::{find_stopping_sets, is_stopping_set, STOPPING_SET_LIMIT};
pub use zigzag::{cycle_parameter, find_zigzag_cycles, ZigzagCycle};

/// Edge-perspective degree distribution pair.
///
/// `lambda[i]` is the coefficient of x^(i-1), i.e. the fraction of edges attached
/// to degree-i variable nodes; likewise `rho` for check nodes. Index 0 is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistPair {
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
}

impl DegreeDistPair {
    /// Builds from `(degree, coefficient)` pairs.
    pub fn from_terms(lambda: &[(usize, f64)], rho: &[(usize, f64)]) -> Result<Self> {
        let dense = |terms: &[(usize, f64)]| {
            let max = terms.iter().map(|t| t.0).max().unwrap_or(0);
            let mut v = vec![0.0; max + 1];
            for &(d, c) in terms {
                v[d] += c;
            }
            v
        };
        let dd = Self { lambda: dense(lambda), rho: dense(rho) };
        dd.validate()?;
        Ok(dd)
    }

    /// (dv, dc)-regular pair: lambda = x^(dv-1), rho = x^(dc-1).
    pub fn regular(dv: usize, dc: usize) -> Result<Self> {
        Self::from_terms(&[(dv, 1.0)], &[(dc, 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, poly) in [("lambda", &self.lambda), ("rho", &self.rho)] {
            if poly.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return config_err(format!("{name} has a negative or non-finite coefficient"));
            }
            if poly.first().copied().unwrap_or(0.0) != 0.0 {
                return config_err(format!("{name} has mass on degree 0"));
            }
            let sum: f64 = poly.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return config_err(format!("{name}(1) = {sum}, expected 1"));
            }
        }
        Ok(())
    }

    /// lambda'(0) * rho'(1) = lambda_2 * sum_i (i-1) rho_i.
    pub fn mu(&self) -> f64 {
        let lambda2 = self.lambda.get(2).copied().unwrap_or(0.0);
        let rho_prime: f64 = self.rho.iter().enumerate().map(|(i, r)| (i as f64 - 1.0) * r).sum();
        lambda2 * rho_prime
    }

    /// Design rate 1 - (integral rho)/(integral lambda).
    pub fn design_rate(&self) -> f64 {
        1.0 - integral(&self.rho) / integral(&self.lambda)
    }

    /// Node-perspective fractions: fraction of variable nodes of each degree.
    pub fn var_node_fractions(&self) -> Vec<f64> {
        node_fractions(&self.lambda)
    }

    pub fn check_node_fractions(&self) -> Vec<f64> {
        node_fractions(&self.rho)
    }

    /// Integer node counts for `n` variable nodes: (variable counts, check counts),
    /// both indexed by degree.
    pub fn node_counts(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let var = integral_counts(&self.var_node_fractions(), n as f64, "variable")?;
        let edges: usize = var.iter().enumerate().map(|(d, k)| d * k).sum();
        let ratio: Vec<f64> = self.rho.iter().enumerate()
            .map(|(d, r)| if d == 0 { 0.0 } else { r / d as f64 })
            .collect();
        let check = integral_counts(&ratio, edges as f64, "check")?;
        let check_edges: usize = check.iter().enumerate().map(|(d, k)| d * k).sum();
        if check_edges != edges {
            return config_err(format!("socket mismatch: {edges} variable vs {check_edges} check"));
        }
        if edges == 0 || check.iter().sum::<usize>() == 0 {
            return config_err("empty degree classes");
        }
        Ok((var, check))
    }
}

fn integral(poly: &[f64]) -> f64 {
    poly.iter().enumerate().skip(1).map(|(i, c)| c / i as f64).sum()
}

fn node_fractions(poly: &[f64]) -> Vec<f64> {
    let total = integral(poly);
    poly.iter()
        .enumerate()
        .map(|(i, c)| if i == 0 { 0.0 } else { c / i as f64 / total })
        .collect()
}

fn integral_counts(fractions: &[f64], scale: f64, what: &str) -> Result<Vec<usize>> {
    fractions
        .iter()
        .enumerate()
        .map(|(d, f)| {
            let x = f * scale;
            let r = x.round();
            if (x - r).abs() > 1e-6 {
                Err(Error::Config(format!(
                    "non-integer number of degree-{d} {what} nodes ({x})"
                )))
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

/// Which zigzag cycle parameters the label design must avoid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForbiddenSet {
    /// All elements of non-maximal order (proposed label design).
    BadParams,
    /// {1}: cycle cancellation.
    Identity,
    /// Explicit exponents k of alpha^k.
    Exponents(Vec<usize>),
}

impl ForbiddenSet {
    /// Membership mask over field values, closed under inversion.
    pub fn mask(&self, field: &FieldParams) -> Vec<bool> {
        let mut mask = vec![false; field.q()];
        match self {
            ForbiddenSet::BadParams => {
                for b in field.bad_cycle_params() {
                    mask[b.index()] = true;
                }
            }
            ForbiddenSet::Identity => mask[1] = true,
            ForbiddenSet::Exponents(exps) => {
                let mut added = false;
                for &k in exps {
                    let b = field.alpha_pow(k);
                    let inv = field.inv(b).expect("alpha^k is nonzero");
                    mask[b.index()] = true;
                    if !exps.iter().any(|&j| field.alpha_pow(j) == inv) {
                        added = true;
                        mask[inv.index()] = true;
                    }
                }
                if added {
                    log::warn!("forbidden cycle parameter set is not closed under inversion; closing it");
                }
            }
        }
        mask
    }
}

/// Parameters of an expurgated ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Number of variable nodes (symbol code length).
    pub n: usize,
    /// Field extension degree.
    pub m: u32,
    pub degrees: DegreeDistPair,
    /// No stopping sets of weight below `s_g`.
    pub s_g: usize,
    /// No zigzag cycle of weight in `s_g..s_c` with a forbidden cycle parameter.
    pub s_c: usize,
    pub forbidden: ForbiddenSet,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.degrees.validate()?;
        if self.s_g < 1 || self.s_g > self.s_c {
            return config_err(format!("need 1 <= s_g <= s_c, got s_g={} s_c={}", self.s_g, self.s_c));
        }
        if self.n == 0 {
            return config_err("ensemble needs at least one variable node");
        }
        self.degrees.node_counts(self.n)?;
        Ok(())
    }

    pub fn field(&self) -> Result<FieldParams> {
        FieldParams::new(self.m)
    }
}

/// One edge: variable node, check node and its nonzero label h_{c,v}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub var: usize,
    pub check: usize,
    pub label: FieldElement,
}

/// Labeled bipartite graph. Multi-edges are allowed.
///
/// Edges are kept sorted by variable node, so edge ids are stable across
/// export and import.
#[derive(Debug, Clone, PartialEq)]
pub struct TannerGraph {
    field: FieldParams,
    n_checks: usize,
    edges: Vec<Edge>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn new(field: FieldParams, n_vars: usize, n_checks: usize, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.var >= n_vars || e.check >= n_checks {
                return config_err(format!("edge ({}, {}) out of range", e.var, e.check));
            }
            if e.label.is_zero() || e.label.index() >= field.q() {
                return config_err(format!("invalid label {} on edge ({}, {})", e.label.0, e.var, e.check));
            }
        }
        edges.sort_by_key(|e| e.var);
        let mut var_edges = vec![Vec::new(); n_vars];
        let mut check_edges = vec![Vec::new(); n_checks];
        for (i, e) in edges.iter().enumerate() {
            var_edges[e.var].push(i);
            check_edges[e.check].push(i);
        }
        Ok(Self { field, n_checks, edges, var_edges, check_edges })
    }

    /// The zigzag cycle code of weight `s`: check i joins variables i and i+1 (mod s),
    /// with `labels[i] = (h_{i,i}, h_{i,i+1})`.
    pub fn zigzag_code(field: FieldParams, labels: &[(FieldElement, FieldElement)]) -> Result<Self> {
        let s = labels.len();
        if s == 0 {
            return config_err("zigzag code needs at least one check");
        }
        let mut edges = Vec::with_capacity(2 * s);
        for (i, &(own, next)) in labels.iter().enumerate() {
            edges.push(Edge { var: i, check: i, label: own });
            edges.push(Edge { var: (i + 1) % s, check: i, label: next });
        }
        Self::new(field, s, s, edges)
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn n_vars(&self) -> usize {
        self.var_edges.len()
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[v]
    }

    pub fn check_edges(&self, c: usize) -> &[usize] {
        &self.check_edges[c]
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_edges[v].len()
    }

    pub fn check_degree(&self, c: usize) -> usize {
        self.check_edges[c].len()
    }

    pub fn set_label(&mut self, e: usize, label: FieldElement) {
        assert!(!label.is_zero(), "labels must be nonzero");
        self.edges[e].label = label;
    }

    /// True iff the symbol vector satisfies every check.
    pub fn is_codeword(&self, x: &[FieldElement]) -> bool {
        (0..self.n_checks).all(|c| {
            self.check_edges[c]
                .iter()
                .map(|&e| self.field.mul(self.edges[e].label, x[self.edges[e].var]))
                .fold(FieldElement::ZERO, |a, b| self.field.add(a, b))
                .is_zero()
        })
    }
}

/// Uniformly random nonzero field element.
pub fn random_label<R: Rng + ?Sized>(field: &FieldParams, rng: &mut R) -> FieldElement {
    FieldElement(rng.gen_range(1..field.q()) as u16)
}

/// Draws from LDPC(N, m, lambda, rho): a uniform socket matching with
/// i.i.d. uniform nonzero labels.
pub fn sample_graph<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<TannerGraph> {
    spec.validate()?;
    let field = spec.field()?;
    sample_unlabeled_then_label(spec.n, &spec.degrees, field, rng)
}

pub(crate) fn sample_unlabeled_then_label<R: Rng + ?Sized>(
    n: usize,
    degrees: &DegreeDistPair,
    field: FieldParams,
    rng: &mut R,
) -> Result<TannerGraph> {
    let (var_counts, check_counts) = degrees.node_counts(n)?;
    let mut var_sockets = Vec::new();
    let mut v = 0;
    for (d, &k) in var_counts.iter().enumerate() {
        for _ in 0..k {
            var_sockets.extend(std::iter::repeat(v).take(d));
            v += 1;
        }
    }
    let mut check_sockets = Vec::with_capacity(var_sockets.len());
    let mut c = 0;
    for (d, &k) in check_counts.iter().enumerate() {
        for _ in 0..k {
            check_sockets.extend(std::iter::repeat(c).take(d));
            c += 1;
        }
    }
    check_sockets.shuffle(rng);
    let edges = var_sockets
        .into_iter()
        .zip(check_sockets)
        .map(|(var, check)| Edge { var, check, label: random_label(&field, rng) })
        .collect();
    TannerGraph::new(field, v, c, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize, dd: DegreeDistPair) -> EnsembleSpec {
        EnsembleSpec { n, m: 4, degrees: dd, s_g: 1, s_c: 1, forbidden: ForbiddenSet::BadParams }
    }

    #[test]
    fn regular_2_3_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = sample_graph(&spec(315, DegreeDistPair::regular(2, 3).unwrap()), &mut rng).unwrap();
        assert_eq!(g.n_vars(), 315);
        assert_eq!(g.n_checks(), 210);
        assert_eq!(g.edges().len(), 630);
        assert!((0..315).all(|v| g.var_degree(v) == 2));
        assert!((0..210).all(|c| g.check_degree(c) == 3));
        assert!(g.edges().iter().all(|e| !e.label.is_zero()));
    }

    #[test]
    fn regular_2_4_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = sample_graph(&spec(4, DegreeDistPair::regular(2, 4).unwrap()), &mut rng).unwrap();
        assert_eq!(g.n_checks(), 2);
        assert_eq!(g.edges().len(), 8);
    }

    #[test]
    fn irregular_counts() {
        let dd = DegreeDistPair::from_terms(&[(2, 0.5), (3, 0.5)], &[(4, 0.5), (6, 0.5)]).unwrap();
        let (var, check) = dd.node_counts(1000).unwrap();
        assert_eq!(var[2], 600);
        assert_eq!(var[3], 400);
        assert_eq!(check[4], 300);
        assert_eq!(check[6], 200);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = sample_graph(&spec(1000, dd), &mut rng).unwrap();
        assert_eq!(g.edges().len(), 2400);
        assert_eq!(g.n_checks(), 500);
        let deg2 = (0..1000).filter(|&v| g.var_degree(v) == 2).count();
        assert_eq!(deg2, 600);
    }

    #[test]
    fn non_integer_counts_rejected() {
        let dd = DegreeDistPair::regular(2, 3).unwrap();
        assert!(matches!(dd.node_counts(100), Err(Error::Config(_))));
        let bad = DegreeDistPair { lambda: vec![0.0, 0.0, 0.7], rho: vec![0.0, 0.0, 0.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(DegreeDistPair::regular(2, 3).unwrap().mu(), 2.0);
        let dd = DegreeDistPair::from_terms(&[(2, 0.5), (3, 0.5)], &[(4, 0.5), (6, 0.5)]).unwrap();
        assert!((dd.mu() - 2.0).abs() < 1e-15);
        assert_eq!(DegreeDistPair::regular(3, 6).unwrap().mu(), 0.0);
        assert!((DegreeDistPair::regular(2, 3).unwrap().design_rate() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zigzag_code_shape() {
        let f = FieldParams::new(4).unwrap();
        let labels = vec![(FieldElement::ONE, f.alpha()); 3];
        let g = TannerGraph::zigzag_code(f, &labels).unwrap();
        assert_eq!(g.n_vars(), 3);
        assert!((0..3).all(|v| g.var_degree(v) == 2));
        assert!(g.is_codeword(&[FieldElement::ZERO; 3]));
    }

    #[test]
    fn forbidden_masks() {
        let f = FieldParams::new(4).unwrap();
        let m = ForbiddenSet::BadParams.mask(&f);
        assert_eq!(m.iter().filter(|b| **b).count(), 7);
        let m = ForbiddenSet::Identity.mask(&f);
        assert_eq!(m.iter().filter(|b| **b).count(), 1);
        // alpha^2 alone gets its inverse alpha^13 added.
        let m = ForbiddenSet::Exponents(vec![2]).mask(&f);
        assert!(m[f.alpha_pow(13).index()]);
        assert_eq!(m.iter().filter(|b| **b).count(), 2);
    }
}
