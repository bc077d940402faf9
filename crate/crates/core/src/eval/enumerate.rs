//! Exact law of the generated graph on tiny state spaces.
//!
//! The joint state space of an `N`-node graph is enumerated; starting from
//! the product prior, each scheduled step pushes the distribution through
//! the exact Euler kernel (rates averaged over the posterior, every
//! dimension independent given the current joint state).

use crate::ctmc::transition_probs;
use crate::denoiser::Denoiser;
use crate::distortion::step_schedule;
use crate::error::{Error, Result};
use crate::graph::{n_pairs, CategoricalGraph, GraphDataset};
use crate::initial::InitialDistribution;
use crate::sampling::{posterior_for, SampleConfig};

pub const MAX_ENUMERATED_STATES: u128 = 1 << 16;

/// A distribution over every joint state of an `N`-node graph. Index
/// digits run over nodes first, then edges, least significant first.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDistribution {
    n_nodes: usize,
    x_states: usize,
    e_states: usize,
    probs: Vec<f64>,
    /// Total mass after each step.
    step_masses: Vec<f64>,
}

impl GeneratedDistribution {
    fn radix(&self) -> Vec<usize> {
        let mut r = vec![self.x_states; self.n_nodes];
        r.extend(std::iter::repeat(self.e_states).take(n_pairs(self.n_nodes)));
        r
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn step_masses(&self) -> &[f64] {
        &self.step_masses
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn encode(&self, g: &CategoricalGraph) -> Option<usize> {
        if g.n_nodes() != self.n_nodes {
            return None;
        }
        let mut idx = 0;
        let mut stride = 1;
        for (&s, r) in g.node_states().iter().chain(g.edge_states()).zip(self.radix()) {
            if s >= r {
                return None;
            }
            idx += s * stride;
            stride *= r;
        }
        Some(idx)
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        self.radix()
            .into_iter()
            .map(|r| {
                let s = idx % r;
                idx /= r;
                s
            })
            .collect()
    }

    /// The joint state at `idx` as a graph over the chain's state space.
    pub fn graph(&self, idx: usize) -> CategoricalGraph {
        let states = self.decode(idx);
        let (nodes, edges) = states.split_at(self.n_nodes);
        CategoricalGraph::new(nodes.to_vec(), edges.to_vec(), self.x_states, self.e_states)
            .expect("decoded states lie inside the radix")
    }

    /// Probability of one labelled graph (0 outside the state space).
    pub fn prob_of(&self, g: &CategoricalGraph) -> f64 {
        self.encode(g).map_or(0.0, |i| self.probs[i])
    }

    /// `½ Σ |p - p_data|` against the empirical law of the dataset graphs
    /// with the same node count.
    pub fn tv_to_dataset(&self, dataset: &GraphDataset) -> Result<f64> {
        let mut data = vec![0.0; self.probs.len()];
        let mut count = 0usize;
        for g in dataset.graphs().iter().filter(|g| g.n_nodes() == self.n_nodes) {
            let i = self.encode(g).ok_or_else(|| {
                Error::DimensionMismatch("dataset graph outside the enumerated state space".into())
            })?;
            data[i] += 1.0;
            count += 1;
        }
        if count == 0 {
            return Err(Error::NoMatchingGraphs(self.n_nodes));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&data)
                .map(|(p, q)| (p - q / count as f64).abs())
                .sum::<f64>())
    }
}

/// Exact distribution of the sampler's output for `n_nodes`-node graphs.
/// `cfg.n_steps = 0` returns the prior itself.
pub fn exact_generated_distribution<D: Denoiser + ?Sized>(
    denoiser: &D,
    p0: &InitialDistribution,
    n_nodes: usize,
    cfg: &SampleConfig,
) -> Result<GeneratedDistribution> {
    let dims = n_nodes + n_pairs(n_nodes);
    let size = (p0.x_states() as u128).pow(n_nodes as u32) * (p0.e_states() as u128).pow(n_pairs(n_nodes) as u32);
    if size > MAX_ENUMERATED_STATES {
        return Err(Error::StateSpaceTooLarge(size));
    }
    let mut dist = GeneratedDistribution {
        n_nodes,
        x_states: p0.x_states(),
        e_states: p0.e_states(),
        probs: vec![0.0; size as usize],
        step_masses: Vec::new(),
    };
    for idx in 0..dist.probs.len() {
        let states = dist.decode(idx);
        dist.probs[idx] = states
            .iter()
            .enumerate()
            .map(|(d, &s)| if d < n_nodes { p0.node_p0()[s] } else { p0.edge_p0()[s] })
            .product();
    }
    if cfg.n_steps == 0 {
        return Ok(dist);
    }
    cfg.validate()?;
    let radix = dist.radix();
    for (t, dt) in step_schedule(cfg.sample_distortion, cfg.n_steps)? {
        let mut next = vec![0.0; dist.probs.len()];
        for idx in 0..dist.probs.len() {
            let mass = dist.probs[idx];
            if mass == 0.0 {
                continue;
            }
            let g = dist.graph(idx);
            let post = posterior_for(denoiser, &g, t, cfg)?;
            let kernels = g
                .node_states()
                .iter()
                .zip(post.node_probs())
                .map(|(&z, p)| transition_probs(z, p, p0.node_p0(), t, dt, &cfg.rate))
                .chain(
                    g.edge_states()
                        .iter()
                        .zip(post.edge_probs())
                        .map(|(&z, p)| transition_probs(z, p, p0.edge_p0(), t, dt, &cfg.rate)),
                )
                .collect::<Result<Vec<_>>>()?;
            spread(&kernels, &radix, 0, 0, 1, mass, &mut next);
        }
        debug_assert_eq!(radix.len(), dims);
        dist.step_masses.push(next.iter().sum());
        dist.probs = next;
    }
    Ok(dist)
}

/// Add `mass · Π_d kernels[d][s_d]` to every joint state `s`.
fn spread(kernels: &[Vec<f64>], radix: &[usize], d: usize, idx: usize, stride: usize, mass: f64, out: &mut [f64]) {
    if d == kernels.len() {
        out[idx] += mass;
        return;
    }
    for (s, &p) in kernels[d].iter().enumerate().take(radix[d]) {
        if p > 0.0 {
            spread(kernels, radix, d + 1, idx + s * stride, stride * radix[d], mass * p, out);
        }
    }
}
