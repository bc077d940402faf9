//! Generation loop and classifier-free guidance.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::ctmc::{euler_step, RateConfig};
use crate::denoiser::{Denoiser, ProbGraph};
use crate::distortion::{step_schedule, DistortionKind};
use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, GraphDataset};
use crate::initial::InitialDistribution;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n_steps: usize,
    pub sample_distortion: DistortionKind,
    pub rate: RateConfig,
    /// Guidance weight; only used when `label` is set.
    pub gamma: f64,
    pub label: Option<usize>,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n_steps: 100,
            sample_distortion: DistortionKind::Identity,
            rate: RateConfig::default(),
            gamma: 1.0,
            label: None,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub const KEYS: [&'static str; 11] = [
        "n_steps",
        "sample_distortion",
        "omega",
        "eta",
        "db_design",
        "exact_expectation",
        "max_overshoot",
        "gamma",
        "label",
        "sample_seed",
        "n_samples",
    ];

    /// Overwrite fields named in `kv`. `n_samples` is read by callers.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.apply("n_steps", &mut self.n_steps)?;
        kv.apply("sample_distortion", &mut self.sample_distortion)?;
        kv.apply("omega", &mut self.rate.omega)?;
        kv.apply("eta", &mut self.rate.eta)?;
        kv.apply("db_design", &mut self.rate.db_design)?;
        kv.apply("exact_expectation", &mut self.rate.exact_expectation)?;
        kv.apply("max_overshoot", &mut self.rate.max_overshoot)?;
        kv.apply("gamma", &mut self.gamma)?;
        kv.apply("sample_seed", &mut self.seed)?;
        if let Some(l) = kv.get::<usize>("label")? {
            self.label = Some(l);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be >= 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config("gamma must be finite and >= 0".into()));
        }
        self.rate.validate()
    }
}

/// Empirical node-count distribution of a training set, unsmoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCountHistogram {
    /// `(node count, number of graphs)`, sorted by node count.
    pub counts: Vec<(usize, usize)>,
}

impl NodeCountHistogram {
    pub fn from_dataset(dataset: &GraphDataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut map = std::collections::BTreeMap::new();
        for g in dataset.graphs() {
            *map.entry(g.n_nodes()).or_insert(0) += 1;
        }
        Ok(Self {
            counts: map.into_iter().collect(),
        })
    }

    /// Every graph has `n` nodes.
    pub fn fixed(n: usize) -> Self {
        Self { counts: vec![(n, 1)] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let w: Vec<f64> = self.counts.iter().map(|&(_, c)| c as f64).collect();
        self.counts[crate::rng::categorical(rng, &w)].0
    }
}

/// Entries `∝ cond^γ · uncond^(1-γ)` per dimension. `γ = 1` and `γ = 0`
/// return the respective input untouched.
pub fn guided_posterior(cond: &ProbGraph, uncond: &ProbGraph, gamma: f64) -> Result<ProbGraph> {
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    let same_shape = cond.n_nodes() == uncond.n_nodes()
        && cond.dims().zip(uncond.dims()).all(|(a, b)| a.len() == b.len());
    if !same_shape {
        return Err(Error::DimensionMismatch("guided posteriors differ in shape".into()));
    }
    if gamma == 1.0 {
        return Ok(cond.clone());
    }
    if gamma == 0.0 {
        return Ok(uncond.clone());
    }
    let mut dim = 0;
    let mut mix = |c: &[f64], u: &[f64]| -> Result<Vec<f64>> {
        let raw: Vec<f64> = c
            .iter()
            .zip(u)
            .map(|(&c, &u)| {
                if c == 0.0 || u == 0.0 {
                    0.0
                } else {
                    (gamma * c.ln() + (1.0 - gamma) * u.ln()).exp()
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegeneratePosterior(dim));
        }
        dim += 1;
        Ok(raw.into_iter().map(|x| x / s).collect())
    };
    let mut nodes = Vec::with_capacity(cond.n_nodes());
    for (c, u) in cond.node_probs().iter().zip(uncond.node_probs()) {
        nodes.push(mix(c, u)?);
    }
    let mut edges = Vec::with_capacity(cond.edge_probs().len());
    for (c, u) in cond.edge_probs().iter().zip(uncond.edge_probs()) {
        edges.push(mix(c, u)?);
    }
    Ok(ProbGraph::new_unchecked(nodes, edges))
}

/// A conditional predictor queried at a fixed label and blended with its
/// unconditional output.
#[derive(Debug, Clone)]
pub struct GuidedDenoiser<D> {
    pub inner: D,
    pub label: usize,
    pub gamma: f64,
}

impl<D: Denoiser> Denoiser for GuidedDenoiser<D> {
    fn posterior(&self, g_t: &CategoricalGraph, t: f64, _label: Option<usize>) -> Result<ProbGraph> {
        if self.gamma == 1.0 {
            return self.inner.posterior(g_t, t, Some(self.label));
        }
        if self.gamma == 0.0 {
            return self.inner.posterior(g_t, t, None);
        }
        let cond = self.inner.posterior(g_t, t, Some(self.label))?;
        let uncond = self.inner.posterior(g_t, t, None)?;
        guided_posterior(&cond, &uncond, self.gamma)
    }
}

/// Run the chain for one graph with `n_nodes` nodes.
pub fn sample_one<D, R>(
    denoiser: &D,
    p0: &InitialDistribution,
    cfg: &SampleConfig,
    n_nodes: usize,
    rng: &mut R,
) -> Result<CategoricalGraph>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    let schedule = step_schedule(cfg.sample_distortion, cfg.n_steps)?;
    let mut g = p0.sample(n_nodes, rng)?;
    for (t, dt) in schedule {
        let post = posterior_for(denoiser, &g, t, cfg)?;
        g = euler_step(&g, &post, p0, t, dt, &cfg.rate, rng)?;
    }
    Ok(g)
}

pub(crate) fn posterior_for<D: Denoiser + ?Sized>(
    denoiser: &D,
    g: &CategoricalGraph,
    t: f64,
    cfg: &SampleConfig,
) -> Result<ProbGraph> {
    match cfg.label {
        None => denoiser.posterior(g, t, None),
        Some(label) => GuidedDenoiser {
            inner: denoiser,
            label,
            gamma: cfg.gamma,
        }
        .posterior(g, t, None),
    }
}

/// Generate `n_graphs` graphs. Graph `i` uses its own stream derived from
/// `cfg.seed`, so the output does not depend on thread scheduling.
pub fn sample<D: Denoiser + ?Sized>(
    denoiser: &D,
    p0: &InitialDistribution,
    cfg: &SampleConfig,
    node_counts: &NodeCountHistogram,
    n_graphs: usize,
) -> Result<Vec<CategoricalGraph>> {
    cfg.validate()?;
    (0..n_graphs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, i as u64);
            let n = node_counts.sample(&mut rng);
            sample_one(denoiser, p0, cfg, n, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::OracleDenoiser;
    use crate::graph::are_isomorphic;
    use crate::initial::InitialKind;

    fn one(p: Vec<Vec<f64>>) -> ProbGraph {
        ProbGraph::new(p, vec![]).unwrap()
    }

    #[test]
    fn guidance_endpoints_and_example() {
        let c = one(vec![vec![0.8, 0.2]]);
        let u = one(vec![vec![0.5, 0.5]]);
        assert_eq!(guided_posterior(&c, &u, 1.0).unwrap(), c);
        assert_eq!(guided_posterior(&c, &u, 0.0).unwrap(), u);
        let g = guided_posterior(&c, &u, 2.0).unwrap();
        let expect = [0.64 / 0.5, 0.04 / 0.5];
        let s = expect[0] + expect[1];
        assert!((g.node_probs()[0][0] - expect[0] / s).abs() < 1e-12);
        assert!((g.node_probs()[0][0] - 0.941).abs() < 1e-3);
    }

    #[test]
    fn guidance_keeps_zeros_and_flags_empty_dimensions() {
        let c = one(vec![vec![0.0, 1.0, 0.0]]);
        let u = one(vec![vec![0.2, 0.3, 0.5]]);
        assert_eq!(guided_posterior(&c, &u, 0.5).unwrap().node_probs()[0], vec![0.0, 1.0, 0.0]);
        let c = one(vec![vec![1.0, 0.0]]);
        let u = one(vec![vec![0.0, 1.0]]);
        assert!(matches!(guided_posterior(&c, &u, 0.5), Err(Error::DegeneratePosterior(0))));
    }

    #[test]
    fn single_graph_dataset_reproduced() {
        let g = CategoricalGraph::from_skeleton(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let ds = GraphDataset::unlabeled(vec![g.clone()]).unwrap();
        let p0 = InitialDistribution::from_dataset(InitialKind::Marginal, &ds).unwrap();
        let oracle = OracleDenoiser::new(ds.clone(), p0.clone());
        let cfg = SampleConfig { n_steps: 1000, ..SampleConfig::default() };
        let hist = NodeCountHistogram::from_dataset(&ds).unwrap();
        let out = sample(&oracle, &p0, &cfg, &hist, 8).unwrap();
        for s in &out {
            assert!(are_isomorphic(s, &g).unwrap());
        }
    }

    #[test]
    fn fixed_seed_is_reproducible_and_mask_free() {
        let ds = GraphDataset::unlabeled(vec![
            CategoricalGraph::new(vec![0, 0], vec![1], 2, 2).unwrap(),
            CategoricalGraph::new(vec![1, 1, 0], vec![0, 1, 1], 2, 2).unwrap(),
        ])
        .unwrap();
        let p0 = InitialDistribution::from_dataset(InitialKind::Masking, &ds).unwrap();
        let oracle = OracleDenoiser::new(ds.clone(), p0.clone());
        let cfg = SampleConfig { n_steps: 20, seed: 4, ..SampleConfig::default() };
        let hist = NodeCountHistogram::from_dataset(&ds).unwrap();
        let a = sample(&oracle, &p0, &cfg, &hist, 16).unwrap();
        let b = sample(&oracle, &p0, &cfg, &hist, 16).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| g.x_card() == 2 && g.e_card() == 2));
    }

    #[test]
    fn node_counts_follow_histogram_support() {
        let ds = GraphDataset::unlabeled(vec![
            CategoricalGraph::from_skeleton(3, &[]).unwrap(),
            CategoricalGraph::from_skeleton(5, &[]).unwrap(),
        ])
        .unwrap();
        let h = NodeCountHistogram::from_dataset(&ds).unwrap();
        let mut rng = crate::rng::seeded(0);
        let draws: Vec<usize> = (0..200).map(|_| h.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&n| n == 3 || n == 5));
        assert!(draws.contains(&3) && draws.contains(&5));
    }

    #[test]
    fn guided_oracle_selects_class() {
        let ds = GraphDataset::new(
            vec![
                CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2)]).unwrap(),
                CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
            ],
            Some(vec![0, 1]),
            1,
            2,
        )
        .unwrap();
        let p0 = InitialDistribution::from_dataset(InitialKind::Uniform, &ds).unwrap();
        let oracle = OracleDenoiser::new(ds.clone(), p0.clone());
        let cfg = SampleConfig { n_steps: 200, label: Some(1), gamma: 2.0, ..SampleConfig::default() };
        let out = sample(&oracle, &p0, &cfg, &NodeCountHistogram::fixed(3), 10).unwrap();
        assert!(out.iter().all(|g| g.n_edges() == 3));
    }
}
