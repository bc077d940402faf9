//! Exact Bayes posterior over an empirical dataset.
//!
//! `p(z1^d | G_t) ∝ Σ_{G1} 1[G1^d = z1^d] · Π_{d'} p_{t|1}(G_t^{d'} | G1^{d'})`,
//! with the product taken in log space. Only dataset graphs with the same
//! node count (and label, when one is requested) are atoms.

use super::{Denoiser, ProbGraph};
use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, GraphDataset};
use crate::initial::InitialDistribution;

#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    dataset: GraphDataset,
    p0: InitialDistribution,
}

impl OracleDenoiser {
    pub fn new(dataset: GraphDataset, p0: InitialDistribution) -> Self {
        Self { dataset, p0 }
    }

    pub fn dataset(&self) -> &GraphDataset {
        &self.dataset
    }
}

impl Denoiser for OracleDenoiser {
    fn posterior(&self, g_t: &CategoricalGraph, t: f64, label: Option<usize>) -> Result<ProbGraph> {
        let atoms: Vec<&CategoricalGraph> = self
            .dataset
            .graphs()
            .iter()
            .enumerate()
            .filter(|(i, _)| label.is_none() || self.dataset.label(*i) == label)
            .map(|(_, g)| g)
            .collect();
        posterior_over(g_t, t, &atoms, &self.p0)
    }
}

pub fn oracle_posterior(
    g_t: &CategoricalGraph,
    t: f64,
    dataset: &GraphDataset,
    p0: &InitialDistribution,
) -> Result<ProbGraph> {
    let atoms: Vec<&CategoricalGraph> = dataset.graphs().iter().collect();
    posterior_over(g_t, t, &atoms, p0)
}

fn log_lik(z_t: usize, z1: usize, p0: &[f64], t: f64) -> f64 {
    let p = if z_t == z1 { t + (1.0 - t) * p0[z_t] } else { (1.0 - t) * p0[z_t] };
    p.ln()
}

fn posterior_over(
    g_t: &CategoricalGraph,
    t: f64,
    atoms: &[&CategoricalGraph],
    p0: &InitialDistribution,
) -> Result<ProbGraph> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    let n = g_t.n_nodes();
    let atoms: Vec<&CategoricalGraph> = atoms.iter().copied().filter(|g| g.n_nodes() == n).collect();
    if atoms.is_empty() {
        return Err(Error::NoMatchingGraphs(n));
    }
    if g_t.x_card() != p0.x_states() || g_t.e_card() != p0.e_states() {
        return Err(Error::DimensionMismatch(
            "noisy graph does not live in the prior's state space".into(),
        ));
    }
    let log_w: Vec<f64> = atoms
        .iter()
        .map(|g1| {
            let nodes: f64 = g_t
                .node_states()
                .iter()
                .zip(g1.node_states())
                .map(|(&z, &z1)| log_lik(z, z1, p0.node_p0(), t))
                .sum();
            let edges: f64 = g_t
                .edge_states()
                .iter()
                .zip(g1.edge_states())
                .map(|(&z, &z1)| log_lik(z, z1, p0.edge_p0(), t))
                .sum();
            nodes + edges
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Every atom impossible (a sampler may leave the support through clamping
    // or the detailed-balance term): fall back to the prior over atoms.
    let weights: Vec<f64> = if max == f64::NEG_INFINITY {
        vec![1.0; atoms.len()]
    } else {
        log_w.iter().map(|&l| (l - max).exp()).collect()
    };
    let total: f64 = weights.iter().sum();

    let mut node_probs = vec![vec![0.0; p0.x_card()]; n];
    let mut edge_probs = vec![vec![0.0; p0.e_card()]; g_t.edge_states().len()];
    for (g1, &w) in atoms.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        let w = w / total;
        for (p, &z1) in node_probs.iter_mut().zip(g1.node_states()) {
            p[z1] += w;
        }
        for (p, &z1) in edge_probs.iter_mut().zip(g1.edge_states()) {
            p[z1] += w;
        }
    }
    Ok(ProbGraph::new_unchecked(node_probs, edge_probs))
}
