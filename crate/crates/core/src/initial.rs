//! Factorized initial distributions.
//!
//! Every node shares one simplex and every edge slot shares another. The
//! masking prior appends a virtual state (index `X` for nodes, `E` for
//! edges) holding all of the mass.

use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, GraphDataset};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Uniform,
    Masking,
    Marginal,
    Absorbing,
}

impl FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "masking" => Ok(Self::Masking),
            "marginal" => Ok(Self::Marginal),
            "absorbing" => Ok(Self::Absorbing),
            other => Err(Error::Config(format!("unknown initial distribution '{other}'"))),
        }
    }
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Uniform => "uniform",
            Self::Masking => "masking",
            Self::Marginal => "marginal",
            Self::Absorbing => "absorbing",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDistribution {
    kind: InitialKind,
    node_p0: Vec<f64>,
    edge_p0: Vec<f64>,
    x_card: usize,
    e_card: usize,
}

impl InitialDistribution {
    /// `x_card`/`e_card` are the data cardinalities; only needed for the
    /// dataset-free kinds (and checked against the dataset otherwise).
    pub fn build(
        kind: InitialKind,
        dataset: Option<&GraphDataset>,
        x_card: usize,
        e_card: usize,
    ) -> Result<Self> {
        let (node_p0, edge_p0) = match kind {
            InitialKind::Uniform => (
                vec![1.0 / x_card as f64; x_card],
                vec![1.0 / e_card as f64; e_card],
            ),
            InitialKind::Masking => (one_hot(x_card, x_card + 1), one_hot(e_card, e_card + 1)),
            InitialKind::Marginal | InitialKind::Absorbing => {
                let ds = dataset.ok_or_else(|| {
                    Error::Config(format!("the {kind} prior needs a dataset"))
                })?;
                let (nodes, edges) = marginals(ds)?;
                if kind == InitialKind::Marginal {
                    (nodes, edges)
                } else {
                    (one_hot(argmax(&nodes), nodes.len()), one_hot(argmax(&edges), edges.len()))
                }
            }
        };
        let x_card = dataset.map_or(x_card, |d| d.x_card());
        let e_card = dataset.map_or(e_card, |d| d.e_card());
        let dist = Self {
            kind,
            node_p0,
            edge_p0,
            x_card,
            e_card,
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn from_dataset(kind: InitialKind, dataset: &GraphDataset) -> Result<Self> {
        Self::build(kind, Some(dataset), dataset.x_card(), dataset.e_card())
    }

    /// Explicit vectors, e.g. for tests. Lengths must equal the state-space
    /// sizes (data cardinality, plus one for masking).
    pub fn from_parts(
        kind: InitialKind,
        node_p0: Vec<f64>,
        edge_p0: Vec<f64>,
    ) -> Result<Self> {
        let extra = usize::from(kind == InitialKind::Masking);
        let dist = Self {
            kind,
            x_card: node_p0.len().saturating_sub(extra),
            e_card: edge_p0.len().saturating_sub(extra),
            node_p0,
            edge_p0,
        };
        dist.validate()?;
        Ok(dist)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("node", &self.node_p0), ("edge", &self.edge_p0)] {
            if v.is_empty() {
                return Err(Error::InvalidDistribution(format!("{name} simplex is empty")));
            }
            if v.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "{name} simplex has a negative or non-finite entry"
                )));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} simplex sums to {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> InitialKind {
        self.kind
    }

    pub fn node_p0(&self) -> &[f64] {
        &self.node_p0
    }

    pub fn edge_p0(&self) -> &[f64] {
        &self.edge_p0
    }

    /// Data cardinality of nodes (excludes the mask state).
    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn e_card(&self) -> usize {
        self.e_card
    }

    /// Size of the node state space seen by the chain (`X + 1` under masking).
    pub fn x_states(&self) -> usize {
        self.node_p0.len()
    }

    pub fn e_states(&self) -> usize {
        self.edge_p0.len()
    }

    pub fn is_masking(&self) -> bool {
        self.kind == InitialKind::Masking
    }

    /// Draw `G₀` with every dimension independent.
    pub fn sample<R: Rng + ?Sized>(&self, n_nodes: usize, rng: &mut R) -> Result<CategoricalGraph> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("cannot sample a graph with 0 nodes".into()));
        }
        let nodes = (0..n_nodes)
            .map(|_| crate::rng::categorical(rng, &self.node_p0))
            .collect();
        let edges = (0..crate::graph::n_pairs(n_nodes))
            .map(|_| crate::rng::categorical(rng, &self.edge_p0))
            .collect();
        CategoricalGraph::new(nodes, edges, self.x_states(), self.e_states())
    }
}

fn one_hot(i: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[i] = 1.0;
    v
}

/// First index of the maximum; ties go to the lower index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Raw state frequencies over all nodes and all upper-triangular slots.
fn marginals(ds: &GraphDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut nodes = vec![0u64; ds.x_card()];
    let mut edges = vec![0u64; ds.e_card()];
    for g in ds.graphs() {
        for &s in g.node_states() {
            nodes[s] += 1;
        }
        for &s in g.edge_states() {
            edges[s] += 1;
        }
    }
    let normalize = |c: Vec<u64>, what: &str| -> Result<Vec<f64>> {
        let total: u64 = c.iter().sum();
        if total == 0 {
            // e.g. every graph has a single node, so there are no edge slots
            return Err(Error::InvalidDistribution(format!(
                "dataset has no {what} to estimate a marginal from"
            )));
        }
        Ok(c.into_iter().map(|k| k as f64 / total as f64).collect())
    };
    Ok((normalize(nodes, "nodes")?, normalize(edges, "edge slots")?))
}
