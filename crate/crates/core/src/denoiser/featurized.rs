//! Trainable per-dimension predictor.
//!
//! Each node and each edge gets its own feature vector built only from
//! permutation-invariant quantities (its own state, RRWP entries, symmetric
//! endpoint aggregates, degrees, global edge density, time and label), so
//! the predictor is equivariant by construction. One tanh hidden layer per
//! branch, softmax output.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rrwp::rrwp_with_presence;
use super::{Denoiser, ProbGraph};
use crate::error::{Error, Result};
use crate::graph::{pairs, CategoricalGraph};
use crate::initial::InitialDistribution;
use crate::rng::substream;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Structural extras per node: degree fraction, global edge density.
const NODE_EXTRAS: usize = 2;
/// Per edge: endpoint degree sum, global edge density.
const EDGE_EXTRAS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiserShape {
    /// Node states seen on input (includes the mask state under masking).
    pub x_in: usize,
    /// Clean node states predicted.
    pub x_out: usize,
    pub e_in: usize,
    pub e_out: usize,
    pub rrwp_depth: usize,
    pub hidden: usize,
    /// 0 for an unconditional model.
    pub n_classes: usize,
}

impl DenoiserShape {
    pub fn for_prior(p0: &InitialDistribution, rrwp_depth: usize, hidden: usize, n_classes: usize) -> Self {
        Self {
            x_in: p0.x_states(),
            x_out: p0.x_card(),
            e_in: p0.e_states(),
            e_out: p0.e_card(),
            rrwp_depth,
            hidden,
            n_classes,
        }
    }

    fn node_base(&self) -> usize {
        self.x_in + self.rrwp_depth + NODE_EXTRAS + 1
    }

    fn edge_base(&self) -> usize {
        self.e_in + 2 * self.rrwp_depth + self.x_in + EDGE_EXTRAS + 1
    }

    pub fn node_in(&self) -> usize {
        self.node_base() + self.n_classes
    }

    pub fn edge_in(&self) -> usize {
        self.edge_base() + self.n_classes
    }

    fn layout(&self) -> Layout {
        let h = self.hidden;
        let mut off = 0;
        let mut take = |len: usize| {
            let start = off;
            off += len;
            start
        };
        let node = Branch {
            w1: take(h * self.node_in()),
            b1: take(h),
            w2: take(self.x_out * h),
            b2: take(self.x_out),
            n_in: self.node_in(),
            n_out: self.x_out,
            hidden: h,
        };
        let edge = Branch {
            w1: take(h * self.edge_in()),
            b1: take(h),
            w2: take(self.e_out * h),
            b2: take(self.e_out),
            n_in: self.edge_in(),
            n_out: self.e_out,
            hidden: h,
        };
        Layout { node, edge, len: off }
    }

    pub fn n_params(&self) -> usize {
        self.layout().len
    }

    fn validate(&self) -> Result<()> {
        if self.x_out == 0 || self.e_out == 0 || self.x_in < self.x_out || self.e_in < self.e_out {
            return Err(Error::Config(format!("invalid state cardinalities in {self:?}")));
        }
        if self.rrwp_depth == 0 || self.hidden == 0 {
            return Err(Error::Config("RRWP depth and hidden width must be positive".into()));
        }
        Ok(())
    }
}

/// Offsets of one branch inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Branch {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    n_in: usize,
    n_out: usize,
    hidden: usize,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    node: Branch,
    edge: Branch,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    shape: DenoiserShape,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    shape: DenoiserShape,
    n_params: usize,
    values: Vec<f64>,
}

impl DenoiserParams {
    pub fn zeros(shape: DenoiserShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            values: vec![0.0; shape.n_params()],
            shape,
        })
    }

    /// Weights `U(±1/√fan_in)`, zero biases. Label-embedding columns come
    /// from their own stream and are excluded from `fan_in`, so adding
    /// classes leaves every other initial weight unchanged.
    pub fn init(shape: DenoiserShape, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        let layout = shape.layout();
        let mut main = substream(seed, 0);
        let mut labels = substream(seed, 1);
        for (branch, base) in [(layout.node, shape.node_base()), (layout.edge, shape.edge_base())] {
            let a1 = 1.0 / (base as f64).sqrt();
            for r in 0..branch.hidden {
                for c in 0..branch.n_in {
                    let rng = if c < base { &mut main } else { &mut labels };
                    p.values[branch.w1 + r * branch.n_in + c] = rng.gen_range(-a1..a1);
                }
            }
            let a2 = 1.0 / (branch.hidden as f64).sqrt();
            for k in 0..branch.n_out * branch.hidden {
                p.values[branch.w2 + k] = main.gen_range(-a2..a2);
            }
        }
        Ok(p)
    }

    pub fn from_values(shape: DenoiserShape, values: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if values.len() != shape.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters given, shape needs {}",
                values.len(),
                shape.n_params()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &DenoiserShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(serde_json::to_string(&Checkpoint {
            version: CHECKPOINT_VERSION,
            shape: self.shape,
            n_params: self.values.len(),
            values: self.values.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        if ck.n_params != ck.values.len() {
            return Err(Error::Checkpoint(format!(
                "header says {} parameters, file holds {}",
                ck.n_params,
                ck.values.len()
            )));
        }
        Self::from_values(ck.shape, ck.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Input vectors for every node and edge of `g_t`.
fn features(
    shape: &DenoiserShape,
    g_t: &CategoricalGraph,
    t: f64,
    label: Option<usize>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if g_t.x_card() != shape.x_in || g_t.e_card() != shape.e_in {
        return Err(Error::DimensionMismatch(format!(
            "graph cardinalities ({}, {}) but the predictor expects ({}, {})",
            g_t.x_card(),
            g_t.e_card(),
            shape.x_in,
            shape.e_in
        )));
    }
    if let Some(l) = label {
        if l >= shape.n_classes {
            return Err(Error::DimensionMismatch(format!(
                "label {l} for a predictor with {} classes",
                shape.n_classes
            )));
        }
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    let n = g_t.n_nodes();
    let e_out = shape.e_out;
    let present = |s: usize| s != 0 && s < e_out;
    let rw = rrwp_with_presence(g_t, shape.rrwp_depth, present);

    let mut degree = vec![0usize; n];
    for ((i, j), &s) in pairs(n).zip(g_t.edge_states()) {
        if present(s) {
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    let scale = (n.max(2) - 1) as f64;
    let n_present: usize = degree.iter().sum::<usize>() / 2;
    let density = n_present as f64 / scale;

    let push_label = |u: &mut Vec<f64>| {
        let start = u.len();
        u.resize(start + shape.n_classes, 0.0);
        if let Some(l) = label {
            u[start + l] = 1.0;
        }
    };

    let nodes = (0..n)
        .map(|i| {
            let mut u = vec![0.0; shape.x_in];
            u[g_t.node(i)] = 1.0;
            u.extend_from_slice(&rw.node_feats[i]);
            u.push(degree[i] as f64 / scale);
            u.push(density);
            u.push(t);
            push_label(&mut u);
            u
        })
        .collect();
    let edges = pairs(n)
        .zip(g_t.edge_states())
        .zip(&rw.edge_feats)
        .map(|(((i, j), &s), ef)| {
            let mut u = vec![0.0; shape.e_in];
            u[s] = 1.0;
            u.extend_from_slice(ef);
            u.extend(rw.node_feats[i].iter().zip(&rw.node_feats[j]).map(|(a, b)| a + b));
            let base = u.len();
            u.resize(base + shape.x_in, 0.0);
            u[base + g_t.node(i)] += 1.0;
            u[base + g_t.node(j)] += 1.0;
            u.push((degree[i] + degree[j]) as f64 / scale);
            u.push(density);
            u.push(t);
            push_label(&mut u);
            u
        })
        .collect();
    Ok((nodes, edges))
}

struct Forward {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    /// `log softmax`
    log_probs: Vec<f64>,
}

fn forward(params: &[f64], b: &Branch, u: &[f64]) -> Forward {
    let hidden: Vec<f64> = (0..b.hidden)
        .map(|r| {
            let row = &params[b.w1 + r * b.n_in..b.w1 + (r + 1) * b.n_in];
            let a: f64 = row.iter().zip(u).map(|(w, x)| w * x).sum::<f64>() + params[b.b1 + r];
            a.tanh()
        })
        .collect();
    let logits: Vec<f64> = (0..b.n_out)
        .map(|o| {
            let row = &params[b.w2 + o * b.hidden..b.w2 + (o + 1) * b.hidden];
            row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + params[b.b2 + o]
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let log_probs: Vec<f64> = logits.iter().map(|z| z - lse).collect();
    let probs = log_probs.iter().map(|l| l.exp()).collect();
    Forward {
        hidden,
        probs,
        log_probs,
    }
}

/// Adds `weight · ∂(−log p[target])/∂θ` for one dimension into `grad`.
fn backward(params: &[f64], b: &Branch, u: &[f64], f: &Forward, target: usize, weight: f64, grad: &mut [f64]) {
    let dz: Vec<f64> = f
        .probs
        .iter()
        .enumerate()
        .map(|(o, &p)| weight * (p - if o == target { 1.0 } else { 0.0 }))
        .collect();
    let mut dh = vec![0.0; b.hidden];
    for (o, &d) in dz.iter().enumerate() {
        grad[b.b2 + o] += d;
        let base = b.w2 + o * b.hidden;
        for r in 0..b.hidden {
            grad[base + r] += d * f.hidden[r];
            dh[r] += d * params[base + r];
        }
    }
    for r in 0..b.hidden {
        let da = dh[r] * (1.0 - f.hidden[r] * f.hidden[r]);
        if da == 0.0 {
            continue;
        }
        grad[b.b1 + r] += da;
        let base = b.w1 + r * b.n_in;
        for (c, &x) in u.iter().enumerate() {
            if x != 0.0 {
                grad[base + c] += da * x;
            }
        }
    }
}

/// Per-dimension posteriors over the clean states.
pub fn predict(
    params: &DenoiserParams,
    g_t: &CategoricalGraph,
    t: f64,
    label: Option<usize>,
) -> Result<ProbGraph> {
    let layout = params.shape.layout();
    let (nodes, edges) = features(&params.shape, g_t, t, label)?;
    let node_probs = nodes
        .iter()
        .map(|u| forward(&params.values, &layout.node, u).probs)
        .collect();
    let edge_probs = edges
        .iter()
        .map(|u| forward(&params.values, &layout.edge, u).probs)
        .collect();
    Ok(ProbGraph::new_unchecked(node_probs, edge_probs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub clean: CategoricalGraph,
    pub noisy: CategoricalGraph,
    pub t: f64,
    pub label: Option<usize>,
}

fn example_loss_and_grad(
    params: &DenoiserParams,
    layout: &Layout,
    ex: &TrainingExample,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    if ex.clean.n_nodes() != ex.noisy.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "clean graph has {} nodes, noisy graph {}",
            ex.clean.n_nodes(),
            ex.noisy.n_nodes()
        )));
    }
    if ex.clean.x_card() != params.shape.x_out || ex.clean.e_card() != params.shape.e_out {
        return Err(Error::DimensionMismatch(
            "clean graph cardinalities differ from the predictor outputs".into(),
        ));
    }
    let (nodes, edges) = features(&params.shape, &ex.noisy, ex.t, ex.label)?;
    let mut grad = vec![0.0; layout.len];
    let mut loss = 0.0;
    let dims = nodes
        .iter()
        .zip(ex.clean.node_states())
        .map(|(u, &y)| (u, y, &layout.node, 1.0))
        .chain(
            edges
                .iter()
                .zip(ex.clean.edge_states())
                .map(|(u, &y)| (u, y, &layout.edge, lambda)),
        );
    for (u, y, branch, w) in dims {
        let f = forward(&params.values, branch, u);
        loss -= w * f.log_probs[y];
        backward(&params.values, branch, u, &f, y, w, &mut grad);
    }
    Ok((loss, grad))
}

/// Mean weighted cross-entropy over the batch and its exact gradient.
/// Edge terms carry weight `lambda`.
pub fn loss_and_grad(
    params: &DenoiserParams,
    batch: &[TrainingExample],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("edge weight must be positive, got {lambda}")));
    }
    let layout = params.shape.layout();
    let mut total = 0.0;
    let mut grad = vec![0.0; layout.len];
    if batch.is_empty() {
        return Ok((total, grad));
    }
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|ex| example_loss_and_grad(params, &layout, ex, lambda))
        .collect::<Result<_>>()?;
    // fixed reduction order keeps results independent of thread scheduling
    for (l, g) in parts {
        total += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let m = batch.len() as f64;
    for g in grad.iter_mut() {
        *g /= m;
    }
    Ok((total / m, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizedDenoiser {
    params: DenoiserParams,
}

impl FeaturizedDenoiser {
    pub fn new(params: DenoiserParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &DenoiserParams {
        &self.params
    }

    pub fn into_params(self) -> DenoiserParams {
        self.params
    }
}

impl Denoiser for FeaturizedDenoiser {
    fn posterior(&self, g_t: &CategoricalGraph, t: f64, label: Option<usize>) -> Result<ProbGraph> {
        predict(&self.params, g_t, t, label)
    }
}
