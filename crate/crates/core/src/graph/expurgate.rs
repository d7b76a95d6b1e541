//! Sampling from the expurgated ensembles.
//!
//! Two phases. Graph phase: resample the configuration-model graph until it has
//! no stopping set of weight below `s_g`. Label phase: while some zigzag cycle of
//! weight in `s_g..s_c` has a forbidden cycle parameter, redraw one uniformly
//! chosen label on that cycle. A single redraw makes that cycle's beta uniform
//! over the nonzero elements, so each offending cycle is cleared with
//! probability 1 - |H|/(q-1) per sweep. A graph whose labels are not fixed
//! within the sweep budget is dropped and the graph phase starts over.

use rand::Rng;

use crate::error::{Error, Result};

use super::{
    find_stopping_sets, find_zigzag_cycles, random_label, sample_unlabeled_then_label, EnsembleSpec,
    TannerGraph,
};

/// Retry budgets for [`expurgate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpurgationLimits {
    pub max_graph_draws: usize,
    pub max_label_sweeps: usize,
}

impl Default for ExpurgationLimits {
    fn default() -> Self {
        Self { max_graph_draws: 10_000, max_label_sweeps: 1_000 }
    }
}

/// What the construction had to do.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpurgationStats {
    pub graph_draws: usize,
    pub label_sweeps: usize,
    pub labels_redrawn: usize,
    /// Zigzag cycles with weight in `s_g..s_c` in the returned graph.
    pub cycles_checked: usize,
    /// Graphs dropped because the label sweeps ran out.
    pub graphs_rejected_by_labels: usize,
}

/// Draws one code from E(N, m, lambda, rho, s_g, s_c, H).
pub fn expurgate<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<TannerGraph> {
    expurgate_with(spec, ExpurgationLimits::default(), rng).map(|(g, _)| g)
}

pub fn expurgate_with<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    limits: ExpurgationLimits,
    rng: &mut R,
) -> Result<(TannerGraph, ExpurgationStats)> {
    spec.validate()?;
    let field = spec.field()?;
    let mut stats = ExpurgationStats::default();

    let forbidden = spec.forbidden.mask(&field);
    loop {
        if stats.graph_draws == limits.max_graph_draws {
            return Err(Error::Construction(format!(
                "no valid code after {} graph draws (N={}, s_g={}, s_c={}, {} graphs had unfixable labels)",
                stats.graph_draws, spec.n, spec.s_g, spec.s_c, stats.graphs_rejected_by_labels
            )));
        }
        stats.graph_draws += 1;
        let mut graph = sample_unlabeled_then_label(spec.n, &spec.degrees, field.clone(), rng)?;
        if spec.s_g > 1 && !find_stopping_sets(&graph, spec.s_g - 1)?.is_empty() {
            continue;
        }
        if spec.s_c <= spec.s_g || relabel(&mut graph, spec, &forbidden, limits, &mut stats, rng) {
            return Ok((graph, stats));
        }
        // Some cycle structures admit no valid labels at all, e.g. a subdivided
        // K4 of short zigzag cycles under H_4: draw another graph.
        stats.graphs_rejected_by_labels += 1;
        log::debug!("labels not fixed after {} sweeps; redrawing the graph", limits.max_label_sweeps);
    }
}

/// Label phase on one graph; false if the sweep budget runs out.
fn relabel<R: Rng + ?Sized>(
    graph: &mut TannerGraph,
    spec: &EnsembleSpec,
    forbidden: &[bool],
    limits: ExpurgationLimits,
    stats: &mut ExpurgationStats,
    rng: &mut R,
) -> bool {
    let field = graph.field().clone();
    let mut cycles: Vec<_> = find_zigzag_cycles(graph, spec.s_c - 1)
        .into_iter()
        .filter(|z| z.weight() >= spec.s_g)
        .collect();
    stats.cycles_checked = cycles.len();
    for _ in 0..=limits.max_label_sweeps {
        let mut violations = 0;
        for z in cycles.iter_mut() {
            z.refresh(graph);
            if !forbidden[z.beta.index()] {
                continue;
            }
            violations += 1;
            let on_cycle: Vec<usize> = z.all_edges().collect();
            let e = on_cycle[rng.gen_range(0..on_cycle.len())];
            graph.set_label(e, random_label(&field, rng));
            stats.labels_redrawn += 1;
        }
        if violations == 0 {
            return true;
        }
        stats.label_sweeps += 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{FieldElement, FieldParams};
    use crate::graph::{cycle_parameter, DegreeDistPair, Edge, ForbiddenSet, TannerGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize, s_g: usize, s_c: usize, forbidden: ForbiddenSet) -> EnsembleSpec {
        EnsembleSpec { n, m: 4, degrees: DegreeDistPair::regular(2, 3).unwrap(), s_g, s_c, forbidden }
    }

    fn verify(g: &TannerGraph, spec: &EnsembleSpec) {
        let field = FieldParams::new(spec.m).unwrap();
        if spec.s_g > 1 {
            assert!(find_stopping_sets(g, spec.s_g - 1).unwrap().is_empty());
        }
        let mask = spec.forbidden.mask(&field);
        for z in find_zigzag_cycles(g, spec.s_c.saturating_sub(1)) {
            if z.weight() >= spec.s_g {
                assert!(!mask[cycle_parameter(&z, &field).index()], "cycle {:?}", z.vars);
            }
        }
    }

    #[test]
    fn bad_params_expurgated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sp = spec(315, 1, 8, ForbiddenSet::BadParams);
        for _ in 0..5 {
            let (g, stats) = expurgate_with(&sp, ExpurgationLimits::default(), &mut rng).unwrap();
            verify(&g, &sp);
            assert!(stats.cycles_checked > 0);
            let field = FieldParams::new(4).unwrap();
            for z in find_zigzag_cycles(&g, 7) {
                assert_eq!(field.order(z.beta).unwrap(), 15);
            }
        }
    }

    #[test]
    fn cycle_cancellation_expurgated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sp = spec(315, 1, 8, ForbiddenSet::Identity);
        let g = expurgate(&sp, &mut rng).unwrap();
        verify(&g, &sp);
    }

    #[test]
    fn stopping_set_expurgation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = spec(120, 3, 6, ForbiddenSet::BadParams);
        let g = expurgate(&sp, &mut rng).unwrap();
        verify(&g, &sp);
        assert!(find_zigzag_cycles(&g, 2).is_empty());
    }

    #[test]
    fn equal_parameters_skip_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sp = spec(60, 2, 2, ForbiddenSet::BadParams);
        let (_, stats) = expurgate_with(&sp, ExpurgationLimits::default(), &mut rng).unwrap();
        assert_eq!(stats.labels_redrawn, 0);
        assert_eq!(stats.label_sweeps, 0);
    }

    /// Four checks joined pairwise by six degree-2 variables.
    fn k4(field: &FieldParams) -> TannerGraph {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let edges = pairs
            .iter()
            .enumerate()
            .flat_map(|(v, &(a, b))| {
                [Edge { var: v, check: a, label: FieldElement::ONE }, Edge { var: v, check: b, label: FieldElement::ONE }]
            })
            .collect();
        TannerGraph::new(field.clone(), 6, 4, edges).unwrap()
    }

    #[test]
    fn k4_has_no_valid_labels_under_h4() {
        let field = FieldParams::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let limits = ExpurgationLimits { max_graph_draws: 1, max_label_sweeps: 2000 };
        let mut stats = ExpurgationStats::default();
        let sp = spec(6, 1, 8, ForbiddenSet::BadParams);
        let mask = sp.forbidden.mask(&field);
        let mut g = k4(&field);
        assert!(!relabel(&mut g, &sp, &mask, limits, &mut stats, &mut rng));
        assert_eq!(stats.cycles_checked, 7);
        // Cycle cancellation alone is easy to satisfy on the same graph.
        let sp = spec(6, 1, 8, ForbiddenSet::Identity);
        let mask = sp.forbidden.mask(&field);
        let mut g = k4(&field);
        assert!(relabel(&mut g, &sp, &mask, limits, &mut stats, &mut rng));
        verify(&g, &sp);
    }

    #[test]
    fn unfixable_graphs_are_redrawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sp = spec(315, 1, 8, ForbiddenSet::BadParams);
        let mut rejected = 0;
        for _ in 0..400 {
            let (g, stats) = expurgate_with(&sp, ExpurgationLimits::default(), &mut rng).unwrap();
            rejected += stats.graphs_rejected_by_labels;
            assert_eq!(stats.graph_draws, stats.graphs_rejected_by_labels + 1);
            verify(&g, &sp);
        }
        assert!(rejected > 0);
    }

    #[test]
    fn exhausted_budget_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Forbidding every element cannot succeed once a cycle exists.
        let sp = spec(60, 1, 8, ForbiddenSet::Exponents((0..15).collect()));
        let limits = ExpurgationLimits { max_graph_draws: 10, max_label_sweeps: 5 };
        assert!(matches!(expurgate_with(&sp, limits, &mut rng), Err(Error::Construction(_))));
        // Stopping sets of weight 1 and 2 in a tiny dense graph: give up quickly.
        let sp = EnsembleSpec { n: 6, ..spec(6, 5, 5, ForbiddenSet::Identity) };
        let limits = ExpurgationLimits { max_graph_draws: 3, max_label_sweeps: 5 };
        assert!(matches!(expurgate_with(&sp, limits, &mut rng), Err(Error::Construction(_))));
    }

    #[test]
    fn single_redraw_makes_beta_uniform() {
        // Chi-square over 1e5 redraws of one label on a weight-3 cycle.
        let field = FieldParams::new(4).unwrap();
        let labels = [(field.alpha_pow(1), field.alpha_pow(4)); 3];
        let mut g = TannerGraph::zigzag_code(field.clone(), &labels).unwrap();
        let mut z = find_zigzag_cycles(&g, 3).remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mut counts = vec![0usize; 16];
        for i in 0..n {
            let e = [0, 3, 5][i % 3];
            g.set_label(e, random_label(&field, &mut rng));
            z.refresh(&g);
            counts[z.beta.index()] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = n as f64 / 15.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 14 degrees of freedom, 99.9% quantile ~ 36.1
        assert!(chi2 < 36.1, "chi2={chi2}");
    }
}
