//! Evaluation: validity predicates, V.U.N., MMD statistics and the exact
//! generated-distribution enumerator.

mod enumerate;
mod planarity;
mod stats;

pub use enumerate::{exact_generated_distribution, GeneratedDistribution, MAX_ENUMERATED_STATES};
pub use planarity::{has_kuratowski_subdivision, is_planar};
pub use stats::{
    descriptors, graph_stats, median_bandwidth, mmd2, mmd2_biased, mmd_report, mmd_values,
    ratio_from_mmds, ratio_metric, statistic_mmd, statistic_mmd_biased, symmetric_eigenvalues, GraphStats, MmdReport,
    Statistic,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{are_isomorphic, CategoricalGraph};

/// Connected skeleton with exactly `N - 1` edges. The empty graph is not a tree.
pub fn is_tree(g: &CategoricalGraph) -> bool {
    let n = g.n_nodes();
    n > 0 && g.n_edges() == n - 1 && is_connected(g)
}

pub fn is_connected(g: &CategoricalGraph) -> bool {
    let adj = g.adjacency();
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Connected and planar.
pub fn is_connected_planar(g: &CategoricalGraph) -> bool {
    is_connected(g) && is_planar(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VunReport {
    pub valid_frac: f64,
    pub unique_frac: f64,
    pub novel_frac: f64,
    pub vun_frac: f64,
}

/// Cheap isomorphism invariant used to skip hopeless comparisons.
fn fingerprint(g: &CategoricalGraph) -> (usize, Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut deg = g.degrees();
    deg.sort_unstable();
    let mut nodes = g.node_states().to_vec();
    nodes.sort_unstable();
    let mut edges = g.edge_states().to_vec();
    edges.sort_unstable();
    (g.n_nodes(), deg, nodes, edges)
}

/// Valid, unique and novel fractions. A graph counts towards V.U.N. when
/// it is valid, novel and the first member of its isomorphism class.
pub fn vun<F>(generated: &[CategoricalGraph], train: &[CategoricalGraph], validity: F) -> Result<VunReport>
where
    F: Fn(&CategoricalGraph) -> bool,
{
    if generated.is_empty() {
        return Ok(VunReport {
            valid_frac: 0.0,
            unique_frac: 0.0,
            novel_frac: 0.0,
            vun_frac: 0.0,
        });
    }
    let train_fp: Vec<_> = train.iter().map(fingerprint).collect();
    let gen_fp: Vec<_> = generated.iter().map(fingerprint).collect();

    let mut representatives: Vec<usize> = Vec::new();
    let (mut valid, mut novel, mut counted) = (0usize, 0usize, 0usize);
    for (i, g) in generated.iter().enumerate() {
        let mut first = true;
        for &r in &representatives {
            if gen_fp[r] == gen_fp[i] && are_isomorphic(&generated[r], g)? {
                first = false;
                break;
            }
        }
        if first {
            representatives.push(i);
        }
        let mut is_novel = true;
        for (t, fp) in train.iter().zip(&train_fp) {
            if *fp == gen_fp[i] && are_isomorphic(t, g)? {
                is_novel = false;
                break;
            }
        }
        let ok = validity(g);
        valid += usize::from(ok);
        novel += usize::from(is_novel);
        counted += usize::from(ok && is_novel && first);
    }
    let n = generated.len() as f64;
    Ok(VunReport {
        valid_frac: valid as f64 / n,
        unique_frac: representatives.len() as f64 / n,
        novel_frac: novel as f64 / n,
        vun_frac: counted as f64 / n,
    })
}

/// Flat `(metric, value)` rows for CSV output.
pub fn report_rows(vun: Option<&VunReport>, mmd: Option<&MmdReport>) -> Vec<(String, f64)> {
    let mut rows = Vec::new();
    if let Some(v) = vun {
        rows.push(("valid".to_string(), v.valid_frac));
        rows.push(("unique".to_string(), v.unique_frac));
        rows.push(("novel".to_string(), v.novel_frac));
        rows.push(("vun".to_string(), v.vun_frac));
    }
    if let Some(m) = mmd {
        for stat in Statistic::ALL {
            rows.push((format!("mmd_{}", stat.name()), m.get(stat)));
        }
        if let Some(r) = m.ratio {
            rows.push(("ratio".to_string(), r));
        }
    }
    rows
}

pub fn rows_to_csv(rows: &[(String, f64)]) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}
