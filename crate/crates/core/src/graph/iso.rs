//! Labeled graph isomorphism for small graphs.
//!
//! Nodes are first partitioned by an iteratively refined colour (own state,
//! then the multiset of `(edge state, neighbour colour)` pairs). The search
//! then maps nodes colour class by colour class, checking every edge state
//! against already-mapped nodes.

use super::CategoricalGraph;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

pub const DEFAULT_ISO_CAP: usize = 12;

pub fn are_isomorphic(g1: &CategoricalGraph, g2: &CategoricalGraph) -> Result<bool> {
    are_isomorphic_with_cap(g1, g2, DEFAULT_ISO_CAP)
}

pub fn are_isomorphic_with_cap(
    g1: &CategoricalGraph,
    g2: &CategoricalGraph,
    cap: usize,
) -> Result<bool> {
    for g in [g1, g2] {
        if g.n_nodes() > cap {
            return Err(Error::TooLarge {
                n: g.n_nodes(),
                cap,
            });
        }
    }
    if g1.x_card() != g2.x_card() || g1.e_card() != g2.e_card() {
        return Err(Error::DimensionMismatch(
            "graphs have different state cardinalities".into(),
        ));
    }
    let n = g1.n_nodes();
    if n != g2.n_nodes() {
        return Ok(false);
    }
    let mut h1 = g1.edge_states().to_vec();
    let mut h2 = g2.edge_states().to_vec();
    h1.sort_unstable();
    h2.sort_unstable();
    if h1 != h2 {
        return Ok(false);
    }

    let (c1, c2) = joint_refinement(g1, g2);
    let mut s1 = c1.clone();
    let mut s2 = c2.clone();
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return Ok(false);
    }

    // Map g1 nodes in order of increasing class size to cut the branching early.
    let mut class_size: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &c1 {
        *class_size.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (class_size[&c1[v]], c1[v], v));

    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(g1, g2, &c1, &c2, &order, 0, &mut mapping, &mut used))
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g1: &CategoricalGraph,
    g2: &CategoricalGraph,
    c1: &[usize],
    c2: &[usize],
    order: &[usize],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for w in 0..g2.n_nodes() {
        if used[w] || c2[w] != c1[v] {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .all(|&u| g1.edge(u, v) == g2.edge(mapping[u], w));
        if !consistent {
            continue;
        }
        mapping[v] = w;
        used[w] = true;
        if extend(g1, g2, c1, c2, order, depth + 1, mapping, used) {
            return true;
        }
        used[w] = false;
        mapping[v] = usize::MAX;
    }
    false
}

/// Colour refinement run on both graphs with a shared colour dictionary so
/// that equal colours mean equal refined signatures across the two graphs.
fn joint_refinement(g1: &CategoricalGraph, g2: &CategoricalGraph) -> (Vec<usize>, Vec<usize>) {
    let n = g1.n_nodes();
    let mut c1: Vec<usize> = g1.node_states().to_vec();
    let mut c2: Vec<usize> = g2.node_states().to_vec();
    for _ in 0..n {
        let mut dict: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
        let sig = |g: &CategoricalGraph, c: &[usize], v: usize| {
            let mut nb: Vec<(usize, usize)> = (0..n)
                .filter(|&u| u != v)
                .map(|u| (g.edge(u, v), c[u]))
                .collect();
            nb.sort_unstable();
            (c[v], nb)
        };
        let sig1: Vec<_> = (0..n).map(|v| sig(g1, &c1, v)).collect();
        let sig2: Vec<_> = (0..n).map(|v| sig(g2, &c2, v)).collect();
        for s in sig1.iter().chain(&sig2) {
            let next = dict.len();
            dict.entry(s.clone()).or_insert(next);
        }
        let n1: Vec<usize> = sig1.iter().map(|s| dict[s]).collect();
        let n2: Vec<usize> = sig2.iter().map(|s| dict[s]).collect();
        let stable = count_classes(&n1, &n2) == count_classes(&c1, &c2);
        c1 = n1;
        c2 = n2;
        if stable {
            break;
        }
    }
    (c1, c2)
}

fn count_classes(a: &[usize], b: &[usize]) -> usize {
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}
