//! Training loop: draw a clean graph, draw `t' = f(U)`, noise, predict,
//! score with the weighted cross-entropy and take an SGD step.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::ctmc::noise_graph;
use crate::denoiser::{
    loss_and_grad, DenoiserParams, DenoiserShape, Denoiser, ProbGraph, TrainingExample,
    DEFAULT_RRWP_DEPTH,
};
use crate::distortion::{distort, DistortionKind};
use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, GraphDataset};
use crate::initial::{InitialDistribution, InitialKind};
use crate::rng::substream;

/// Probability floor applied before taking logs.
pub const PROB_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Edge-term weight of the cross-entropy.
    pub lambda: f64,
    pub train_distortion: DistortionKind,
    pub initial: InitialKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub hidden: usize,
    pub rrwp_depth: usize,
    /// Independent noisy copies of each graph per epoch.
    pub draws_per_graph: usize,
    pub conditional: bool,
    /// Probability of hiding a graph's label from the predictor.
    pub label_drop: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            train_distortion: DistortionKind::Identity,
            initial: InitialKind::Marginal,
            epochs: 100,
            batch_size: 16,
            learning_rate: 0.003,
            momentum: 0.9,
            seed: 0,
            hidden: 32,
            rrwp_depth: DEFAULT_RRWP_DEPTH,
            draws_per_graph: 8,
            conditional: false,
            label_drop: 0.1,
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 13] = [
        "lambda",
        "train_distortion",
        "initial",
        "epochs",
        "batch_size",
        "learning_rate",
        "momentum",
        "seed",
        "hidden",
        "rrwp_depth",
        "draws_per_graph",
        "conditional",
        "label_drop",
    ];

    /// Overwrite fields named in `kv`; other keys are ignored.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.apply("lambda", &mut self.lambda)?;
        kv.apply("train_distortion", &mut self.train_distortion)?;
        kv.apply("initial", &mut self.initial)?;
        kv.apply("epochs", &mut self.epochs)?;
        kv.apply("batch_size", &mut self.batch_size)?;
        kv.apply("learning_rate", &mut self.learning_rate)?;
        kv.apply("momentum", &mut self.momentum)?;
        kv.apply("seed", &mut self.seed)?;
        kv.apply("hidden", &mut self.hidden)?;
        kv.apply("rrwp_depth", &mut self.rrwp_depth)?;
        kv.apply("draws_per_graph", &mut self.draws_per_graph)?;
        kv.apply("conditional", &mut self.conditional)?;
        kv.apply("label_drop", &mut self.label_drop)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config("lambda must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.label_drop) {
            return Err(Error::Config("label_drop must lie in [0, 1]".into()));
        }
        if self.batch_size == 0 || self.draws_per_graph == 0 {
            return Err(Error::Config("batch_size and draws_per_graph must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("need learning_rate >= 0 and momentum in [0, 1)".into()));
        }
        if self.hidden == 0 || self.rrwp_depth == 0 {
            return Err(Error::Config("hidden and rrwp_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// `-Σ_n log p(x_n) - λ Σ_{i<j} log p(e_ij)` with probabilities floored.
pub fn ce_lambda(g1: &CategoricalGraph, pred: &ProbGraph, lambda: f64) -> Result<f64> {
    if pred.n_nodes() != g1.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "prediction has {} nodes, graph {}",
            pred.n_nodes(),
            g1.n_nodes()
        )));
    }
    let term = |p: &[f64], z: usize| -> Result<f64> {
        let q = p.get(z).ok_or_else(|| {
            Error::DimensionMismatch(format!("state {z} outside a simplex of size {}", p.len()))
        })?;
        Ok(-q.max(PROB_FLOOR).ln())
    };
    let mut nodes = 0.0;
    for (p, &z) in pred.node_probs().iter().zip(g1.node_states()) {
        nodes += term(p, z)?;
    }
    let mut edges = 0.0;
    for (p, &z) in pred.edge_probs().iter().zip(g1.edge_states()) {
        edges += term(p, z)?;
    }
    Ok(nodes + lambda * edges)
}

/// SGD with heavy-ball momentum: `v ← μv + g`, `θ ← θ - lr·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(n_params: usize, learning_rate: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut DenoiserParams, grad: &[f64]) {
        for ((p, v), g) in params.values_mut().iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: DenoiserParams,
    pub p0: InitialDistribution,
    /// Mean training loss of every epoch.
    pub epoch_losses: Vec<f64>,
    /// Distorted times `t'` drawn in each epoch.
    pub sampled_times: Vec<Vec<f64>>,
}

pub fn train(dataset: &GraphDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(dataset, cfg, |_, _, _| {})
}

/// As [`train`], calling `observer(epoch, params, mean_loss)` after each epoch.
pub fn train_with_observer<F>(dataset: &GraphDataset, cfg: &TrainConfig, mut observer: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &DenoiserParams, f64),
{
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_classes = if cfg.conditional {
        if dataset.labels().is_none() {
            return Err(Error::Config("conditional training needs a labeled dataset".into()));
        }
        dataset.n_classes()
    } else {
        0
    };
    let p0 = InitialDistribution::from_dataset(cfg.initial, dataset)?;
    let shape = DenoiserShape::for_prior(&p0, cfg.rrwp_depth, cfg.hidden, n_classes);
    let mut params = DenoiserParams::init(shape, cfg.seed)?;
    let mut opt = Sgd::new(params.len(), cfg.learning_rate, cfg.momentum);

    let mut order_rng = substream(cfg.seed, 2);
    let mut noise_rng = substream(cfg.seed, 3);
    // label dropping has its own stream so it never shifts the noise draws
    let mut drop_rng = substream(cfg.seed, 4);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut sampled_times = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len())
            .flat_map(|i| std::iter::repeat(i).take(cfg.draws_per_graph))
            .collect();
        order.shuffle(&mut order_rng);
        let mut times = Vec::with_capacity(order.len());
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let clean = &dataset.graphs()[i];
                let t = distort(cfg.train_distortion, noise_rng.gen::<f64>())?;
                let noisy = noise_graph(clean, &p0, t, &mut noise_rng)?;
                let label = if cfg.conditional {
                    let dropped = drop_rng.gen::<f64>() < cfg.label_drop;
                    if dropped {
                        None
                    } else {
                        dataset.label(i)
                    }
                } else {
                    None
                };
                times.push(t);
                batch.push(TrainingExample {
                    clean: clean.clone(),
                    noisy,
                    t,
                    label,
                });
            }
            let (loss, grad) = loss_and_grad(&params, &batch, cfg.lambda)?;
            loss_sum += loss * chunk.len() as f64;
            opt.step(&mut params, &grad);
        }
        let mean = loss_sum / order.len() as f64;
        observer(epoch, &params, mean);
        epoch_losses.push(mean);
        sampled_times.push(times);
    }
    Ok(TrainOutcome {
        params,
        p0,
        epoch_losses,
        sampled_times,
    })
}

/// Mean weighted cross-entropy of `denoiser` at each time of `t_grid`.
///
/// Draw `k` of graph `i` reuses the same random stream at every grid point,
/// so the curve compares times under common random numbers.
pub fn loss_vs_time<D: Denoiser + ?Sized>(
    denoiser: &D,
    dataset: &GraphDataset,
    p0: &InitialDistribution,
    t_grid: &[f64],
    n_draws: usize,
    lambda: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_draws == 0 {
        return Err(Error::Config("n_draws must be >= 1".into()));
    }
    t_grid
        .iter()
        .map(|&t| {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::TimeOutOfRange(t));
            }
            let mut total = 0.0;
            for k in 0..n_draws {
                for (i, g1) in dataset.graphs().iter().enumerate() {
                    let mut rng = substream(seed, (k * dataset.len() + i) as u64);
                    let g_t = noise_graph(g1, p0, t, &mut rng)?;
                    let pred = denoiser.posterior(&g_t, t, None)?;
                    total += ce_lambda(g1, &pred, lambda)?;
                }
            }
            Ok((t, total / (n_draws * dataset.len()) as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{predict, OracleDenoiser};
    use crate::graph::Permutation;
    use crate::rng::seeded;

    fn toy4() -> GraphDataset {
        let gs = vec![
            CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2)]).unwrap(),
            CategoricalGraph::from_skeleton(3, &[(0, 1), (0, 2)]).unwrap(),
            CategoricalGraph::from_skeleton(3, &[(0, 2), (1, 2)]).unwrap(),
            CategoricalGraph::from_skeleton(4, &[(0, 1), (1, 2), (2, 3)]).unwrap(),
        ];
        GraphDataset::new(gs, Some(vec![0, 1, 0, 1]), 1, 2).unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 2,
            hidden: 8,
            rrwp_depth: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn ce_examples() {
        let g = CategoricalGraph::new(vec![0, 1], vec![1], 2, 2).unwrap();
        let uniform = ProbGraph::new(vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]]).unwrap();
        let ln2 = 2f64.ln();
        assert!((ce_lambda(&g, &uniform, 1.0).unwrap() - 3.0 * ln2).abs() < 1e-12);
        // doubling lambda adds the edge term again
        assert!((ce_lambda(&g, &uniform, 2.0).unwrap() - 4.0 * ln2).abs() < 1e-12);
        let exact = ProbGraph::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(ce_lambda(&g, &exact, 5.0).unwrap(), 0.0);
        // a zero at the truth is floored rather than infinite
        let wrong = ProbGraph::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0]]).unwrap();
        assert!((ce_lambda(&g, &wrong, 1.0).unwrap() + PROB_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn ce_is_permutation_invariant() {
        let mut rng = seeded(3);
        let p = DenoiserParams::init(
            DenoiserShape { x_in: 2, x_out: 2, e_in: 2, e_out: 2, rrwp_depth: 3, hidden: 4, n_classes: 0 },
            1,
        )
        .unwrap();
        let p0 = InitialDistribution::build(InitialKind::Uniform, None, 2, 2).unwrap();
        for _ in 0..20 {
            let g1 = p0.sample(5, &mut rng).unwrap();
            let g_t = noise_graph(&g1, &p0, 0.5, &mut rng).unwrap();
            let s = Permutation::random(5, &mut rng);
            let a = ce_lambda(&g1, &predict(&p, &g_t, 0.5, None).unwrap(), 5.0).unwrap();
            let b = ce_lambda(
                &g1.permute(&s).unwrap(),
                &predict(&p, &g_t.permute(&s).unwrap(), 0.5, None).unwrap(),
                5.0,
            )
            .unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = train(&toy4(), &small_cfg()).unwrap();
        let b = train(&toy4(), &small_cfg()).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn loss_decreases_on_toy() {
        let cfg = TrainConfig { epochs: 200, draws_per_graph: 16, batch_size: 8, ..small_cfg() };
        let out = train(&toy4(), &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);
    }

    #[test]
    fn zero_learning_rate_leaves_params() {
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, ..small_cfg() };
        let out = train(&toy4(), &cfg).unwrap();
        let p0 = InitialDistribution::from_dataset(cfg.initial, &toy4()).unwrap();
        let shape = DenoiserShape::for_prior(&p0, cfg.rrwp_depth, cfg.hidden, 0);
        assert_eq!(out.params, DenoiserParams::init(shape, cfg.seed).unwrap());
    }

    #[test]
    fn full_label_drop_matches_unconditional() {
        let uncond = train(&toy4(), &small_cfg()).unwrap();
        let cond = train(
            &toy4(),
            &TrainConfig { conditional: true, label_drop: 1.0, ..small_cfg() },
        )
        .unwrap();
        assert_eq!(uncond.epoch_losses, cond.epoch_losses);
    }

    #[test]
    fn config_validation_and_overrides() {
        assert!(TrainConfig { label_drop: 1.5, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { lambda: 0.0, ..TrainConfig::default() }.validate().is_err());
        let mut cfg = TrainConfig::default();
        let kv = KeyValues::parse("lambda = 2\ntrain_distortion = polydec\ninitial = masking").unwrap();
        cfg.apply(&kv).unwrap();
        assert_eq!(cfg.lambda, 2.0);
        assert_eq!(cfg.train_distortion, DistortionKind::Polydec);
        assert_eq!(cfg.initial, InitialKind::Masking);
    }

    #[test]
    fn oracle_loss_curve() {
        let ds = GraphDataset::unlabeled(vec![
            CategoricalGraph::new(vec![0, 0], vec![1], 2, 2).unwrap(),
            CategoricalGraph::new(vec![1, 1], vec![0], 2, 2).unwrap(),
        ])
        .unwrap();
        let p0 = InitialDistribution::from_dataset(InitialKind::Marginal, &ds).unwrap();
        let oracle = OracleDenoiser::new(ds.clone(), p0.clone());
        let grid: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
        let curve = loss_vs_time(&oracle, &ds, &p0, &grid, 200, 1.0, 9).unwrap();
        assert_eq!(curve.len(), 20);
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12, "{:?} -> {:?}", w[0], w[1]);
        }
        let late = loss_vs_time(&oracle, &ds, &p0, &[1.0 - 1e-12], 50, 1.0, 9).unwrap();
        assert!(late[0].1 < 1e-9);
        assert!(loss_vs_time(&oracle, &ds, &p0, &[1.0], 1, 1.0, 9).is_err());
    }
}
