//! Zigzag cycles: cycles whose variable nodes all have degree two.
//!
//! Contracting every degree-2 variable node into an edge between its two
//! checks turns zigzag cycles into simple cycles of a check-node multigraph.
//! A variable attached twice to one check becomes a self-loop (weight 1) and
//! two variables sharing the same pair of checks give a weight-2 cycle.

use crate::gf::{FieldElement, FieldParams};

use super::TannerGraph;

/// A zigzag cycle in canonical form.
///
/// Check `checks[i]` sits between `vars[i]` and `vars[(i+1) % s]`; its edge to
/// `vars[i]` is `edges[i].0` (label h_{i,i}) and its edge to the next variable
/// is `edges[i].1` (label h_{i,i+1}). `vars[0]` is the lowest variable index
/// and for s >= 3 the traversal goes toward the smaller of its two neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZigzagCycle {
    pub vars: Vec<usize>,
    pub checks: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub labels: Vec<(FieldElement, FieldElement)>,
    pub beta: FieldElement,
}

impl ZigzagCycle {
    pub fn weight(&self) -> usize {
        self.vars.len()
    }

    /// gamma_i = h_{i,i}^{-1} h_{i,i+1}.
    pub fn gammas(&self, field: &FieldParams) -> Vec<FieldElement> {
        self.labels
            .iter()
            .map(|&(own, next)| field.mul(field.inv(own).expect("labels are nonzero"), next))
            .collect()
    }

    /// Re-reads labels from `g` and recomputes beta.
    pub fn refresh(&mut self, g: &TannerGraph) {
        self.labels = self
            .edges
            .iter()
            .map(|&(a, b)| (g.edge(a).label, g.edge(b).label))
            .collect();
        self.beta = cycle_parameter(self, g.field());
    }

    /// Every edge on the cycle.
    pub fn all_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().flat_map(|&(a, b)| [a, b])
    }
}

/// beta = product of gamma_i around the cycle. Reversing the traversal gives beta^{-1}.
pub fn cycle_parameter(z: &ZigzagCycle, field: &FieldParams) -> FieldElement {
    z.gammas(field).into_iter().fold(FieldElement::ONE, |acc, g| field.mul(acc, g))
}

/// One step of a contracted path: variable, edge at the check we came from,
/// edge at the check we go to, and that check.
#[derive(Clone, Copy)]
struct Step {
    var: usize,
    e_from: usize,
    e_to: usize,
    to: usize,
}

/// All zigzag cycles of weight <= `max_weight`, each reported once.
pub fn find_zigzag_cycles(g: &TannerGraph, max_weight: usize) -> Vec<ZigzagCycle> {
    if max_weight == 0 {
        return Vec::new();
    }
    // adjacency[c] = contracted edges leaving c: (var, edge at c, edge at other end, other check)
    let mut adjacency: Vec<Vec<Step>> = vec![Vec::new(); g.n_checks()];
    let mut cycles = Vec::new();
    for v in 0..g.n_vars() {
        let es = g.var_edges(v);
        if es.len() != 2 {
            continue;
        }
        let (a, b) = (es[0], es[1]);
        let (ca, cb) = (g.edge(a).check, g.edge(b).check);
        if ca == cb {
            // Self-loop: h_{1,1} on the first edge, h_{1,2} on the second.
            cycles.push(build(g, &[Step { var: v, e_from: b, e_to: a, to: ca }]));
            continue;
        }
        adjacency[ca].push(Step { var: v, e_from: a, e_to: b, to: cb });
        adjacency[cb].push(Step { var: v, e_from: b, e_to: a, to: ca });
    }
    if max_weight < 2 {
        return cycles;
    }

    let mut path: Vec<Step> = Vec::with_capacity(max_weight);
    let mut on_path = vec![false; g.n_checks()];
    for start in 0..g.n_checks() {
        on_path[start] = true;
        dfs(&adjacency, start, start, max_weight, &mut path, &mut on_path, &mut |p| {
            cycles.push(build(g, p))
        });
        on_path[start] = false;
    }
    cycles
}

fn dfs(
    adjacency: &[Vec<Step>],
    start: usize,
    at: usize,
    max_weight: usize,
    path: &mut Vec<Step>,
    on_path: &mut [bool],
    emit: &mut impl FnMut(&[Step]),
) {
    for &step in &adjacency[at] {
        if path.iter().any(|p| p.var == step.var) {
            continue;
        }
        if step.to == start {
            // Closing: each cycle is seen in both directions; keep one.
            if !path.is_empty() && path[0].var < step.var {
                path.push(step);
                emit(path);
                path.pop();
            }
            continue;
        }
        if step.to < start || on_path[step.to] || path.len() + 1 >= max_weight {
            continue;
        }
        on_path[step.to] = true;
        path.push(step);
        dfs(adjacency, start, step.to, max_weight, path, on_path, emit);
        path.pop();
        on_path[step.to] = false;
    }
}

/// Canonical form of the cycle traced by `steps` (step j enters var j via
/// `e_from` and leaves via `e_to` toward check `to`).
fn build(g: &TannerGraph, steps: &[Step]) -> ZigzagCycle {
    let s = steps.len();
    // Per variable in traversal order: (var, edge to previous check, edge to next check).
    let mut seq: Vec<(usize, usize, usize)> = steps.iter().map(|st| (st.var, st.e_from, st.e_to)).collect();
    let start = (0..s).min_by_key(|&i| seq[i].0).unwrap();
    seq.rotate_left(start);
    let reverse = match s {
        1 => false,
        2 => g.edge(seq[0].2).check > g.edge(seq[0].1).check,
        _ => seq[1].0 > seq[s - 1].0,
    };
    if reverse {
        seq[1..].reverse();
        for item in seq.iter_mut() {
            *item = (item.0, item.2, item.1);
        }
    }
    let vars: Vec<usize> = seq.iter().map(|t| t.0).collect();
    let edges: Vec<(usize, usize)> = (0..s).map(|i| (seq[i].2, seq[(i + 1) % s].1)).collect();
    let checks = edges.iter().map(|&(a, _)| g.edge(a).check).collect();
    let mut z = ZigzagCycle { vars, checks, edges, labels: Vec::new(), beta: FieldElement::ONE };
    z.refresh(g);
    z
}
