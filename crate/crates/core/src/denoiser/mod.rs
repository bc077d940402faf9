//! Posterior predictors `p_{1|t}(· | G_t)`.
//!
//! [`OracleDenoiser`] is the exact Bayes posterior over a finite dataset and
//! serves as a zero-estimation-error reference. [`FeaturizedDenoiser`] is a
//! small trainable predictor over one-hot states and RRWP features.

mod featurized;
mod oracle;
mod rrwp;

pub use featurized::{
    loss_and_grad, predict, DenoiserParams, DenoiserShape, FeaturizedDenoiser, TrainingExample,
    CHECKPOINT_VERSION,
};
pub use oracle::{oracle_posterior, OracleDenoiser};
pub use rrwp::{rrwp, rrwp_with_presence, walk_matrix, RrwpFeatures, DEFAULT_RRWP_DEPTH};

use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, Permutation};

/// Per-dimension categorical predictions over the data states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGraph {
    node_probs: Vec<Vec<f64>>,
    edge_probs: Vec<Vec<f64>>,
}

impl ProbGraph {
    pub fn new(node_probs: Vec<Vec<f64>>, edge_probs: Vec<Vec<f64>>) -> Result<Self> {
        let n = node_probs.len();
        if edge_probs.len() != crate::graph::n_pairs(n) {
            return Err(Error::DimensionMismatch(format!(
                "{} edge simplexes for {n} nodes",
                edge_probs.len()
            )));
        }
        for (k, p) in node_probs.iter().chain(&edge_probs).enumerate() {
            let s: f64 = p.iter().sum();
            if p.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!(
                    "dimension {k} is not a simplex (sum {s})"
                )));
            }
        }
        Ok(Self {
            node_probs,
            edge_probs,
        })
    }

    pub(crate) fn new_unchecked(node_probs: Vec<Vec<f64>>, edge_probs: Vec<Vec<f64>>) -> Self {
        Self {
            node_probs,
            edge_probs,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_probs.len()
    }

    pub fn node_probs(&self) -> &[Vec<f64>] {
        &self.node_probs
    }

    pub fn edge_probs(&self) -> &[Vec<f64>] {
        &self.edge_probs
    }

    /// Nodes first, then edges in storage order.
    pub fn dims(&self) -> impl Iterator<Item = &[f64]> {
        self.node_probs
            .iter()
            .chain(&self.edge_probs)
            .map(Vec::as_slice)
    }

    pub fn permute(&self, sigma: &Permutation) -> Result<Self> {
        if sigma.len() != self.n_nodes() {
            return Err(Error::SizeMismatch {
                perm: sigma.len(),
                nodes: self.n_nodes(),
            });
        }
        Ok(Self {
            node_probs: sigma.permute_nodes(&self.node_probs),
            edge_probs: sigma.permute_pairs(&self.edge_probs),
        })
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.dims()
            .zip(other.dims())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Anything that maps a noisy graph to per-dimension clean-state posteriors.
pub trait Denoiser: Sync {
    fn posterior(
        &self,
        g_t: &CategoricalGraph,
        t: f64,
        label: Option<usize>,
    ) -> Result<ProbGraph>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn posterior(&self, g_t: &CategoricalGraph, t: f64, label: Option<usize>) -> Result<ProbGraph> {
        (**self).posterior(g_t, t, label)
    }
}
