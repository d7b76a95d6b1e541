//! Stopping sets: variable sets whose every neighbouring check is hit at least twice.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::TannerGraph;

/// Largest weight [`find_stopping_sets`] accepts; the search is exponential.
pub const STOPPING_SET_LIMIT: usize = 8;

/// True iff every check adjacent to `set` has at least two edges into it.
pub fn is_stopping_set(g: &TannerGraph, set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let mut hits = std::collections::HashMap::new();
    for &v in set {
        for &e in g.var_edges(v) {
            *hits.entry(g.edge(e).check).or_insert(0usize) += 1;
        }
    }
    hits.values().all(|&h| h >= 2)
}

/// All nonempty stopping sets of size <= `max_weight`, each sorted, in
/// lexicographic order.
///
/// Connected stopping sets are grown from every seed variable: while some check
/// is hit exactly once the next variable must be one of that check's other
/// neighbours; once the set is stopping it is recorded and grown further through
/// its neighbourhood. Disconnected stopping sets are unions of connected ones.
pub fn find_stopping_sets(g: &TannerGraph, max_weight: usize) -> Result<Vec<Vec<usize>>> {
    if max_weight > STOPPING_SET_LIMIT {
        return Err(Error::Config(format!(
            "stopping set search limited to weight {STOPPING_SET_LIMIT}, asked for {max_weight}"
        )));
    }
    let mut connected = BTreeSet::new();
    let mut visited = std::collections::HashSet::new();
    let mut hits = vec![0usize; g.n_checks()];
    for seed in 0..g.n_vars() {
        if max_weight == 0 || g.var_degree(seed) == 0 {
            continue;
        }
        let mut set = vec![seed];
        add(g, seed, &mut hits, 1);
        grow(g, &mut set, &mut hits, max_weight, &mut connected, &mut visited);
        add(g, seed, &mut hits, -1);
    }

    // Close under disjoint unions within the weight limit.
    let base: Vec<Vec<usize>> = connected.into_iter().collect();
    let mut all: BTreeSet<Vec<usize>> = base.iter().cloned().collect();
    // (union, index of the last component used)
    let mut frontier: Vec<(Vec<usize>, usize)> = base.iter().cloned().zip(0..).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (s, last) in &frontier {
            for (j, b) in base.iter().enumerate().skip(last + 1) {
                if s.len() + b.len() > max_weight || b.iter().any(|v| s.binary_search(v).is_ok()) {
                    continue;
                }
                let mut u = s.clone();
                u.extend_from_slice(b);
                u.sort_unstable();
                all.insert(u.clone());
                next.push((u, j));
            }
        }
        frontier = next;
    }
    let mut out: Vec<Vec<usize>> = all.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

fn add(g: &TannerGraph, v: usize, hits: &mut [usize], delta: isize) {
    for &e in g.var_edges(v) {
        let c = g.edge(e).check;
        hits[c] = (hits[c] as isize + delta) as usize;
    }
}

fn grow(
    g: &TannerGraph,
    set: &mut Vec<usize>,
    hits: &mut [usize],
    max_weight: usize,
    found: &mut BTreeSet<Vec<usize>>,
    visited: &mut std::collections::HashSet<Vec<usize>>,
) {
    let mut key = set.clone();
    key.sort_unstable();
    if !visited.insert(key.clone()) {
        return;
    }
    // Lowest deficient check, if any.
    let deficient = set
        .iter()
        .flat_map(|&v| g.var_edges(v).iter().map(|&e| g.edge(e).check))
        .filter(|&c| hits[c] == 1)
        .min();
    let candidates: Vec<usize> = match deficient {
        Some(c) => {
            if set.len() == max_weight {
                return;
            }
            g.check_edges(c).iter().map(|&e| g.edge(e).var).filter(|v| !set.contains(v)).collect()
        }
        None => {
            found.insert(key);
            if set.len() == max_weight {
                return;
            }
            // Connected extensions: any outside variable sharing a check with the set.
            let mut ext: Vec<usize> = set
                .iter()
                .flat_map(|&v| g.var_edges(v).iter().map(|&e| g.edge(e).check))
                .flat_map(|c| g.check_edges(c).iter().map(|&e| g.edge(e).var))
                .filter(|v| !set.contains(v))
                .collect();
            ext.sort_unstable();
            ext.dedup();
            ext
        }
    };
    let mut candidates = candidates;
    candidates.sort_unstable();
    candidates.dedup();
    for v in candidates {
        set.push(v);
        add(g, v, hits, 1);
        grow(g, set, hits, max_weight, found, visited);
        add(g, v, hits, -1);
        set.pop();
    }
}
