//! Small synthetic datasets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CategoricalGraph, GraphDataset};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Uniform random recursive trees.
    Tree,
    /// Delaunay triangulations of uniform points in the unit square.
    Planar,
    /// Two-block stochastic block model.
    SbmLike,
    /// Fixed two-node fixture small enough to enumerate.
    ToyEnumerable,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Self::Tree),
            "planar" => Ok(Self::Planar),
            "sbm-like" => Ok(Self::SbmLike),
            "toy-enumerable" => Ok(Self::ToyEnumerable),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tree => "tree",
            Self::Planar => "planar",
            Self::SbmLike => "sbm-like",
            Self::ToyEnumerable => "toy-enumerable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub family: Family,
    pub n_graphs: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Attach binary labels: 1 when a graph's edge density exceeds the
    /// median density of the generated set.
    pub density_labels: bool,
}

impl SynthSpec {
    pub fn new(family: Family, n_graphs: usize, n_min: usize, n_max: usize, seed: u64) -> Self {
        Self {
            family,
            n_graphs,
            n_min,
            n_max,
            seed,
            density_labels: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_min > self.n_max {
            return Err(Error::Config(format!("n_min {} > n_max {}", self.n_min, self.n_max)));
        }
        match self.family {
            Family::Tree | Family::SbmLike if self.n_min == 0 => {
                Err(Error::Config("graphs need at least one node".into()))
            }
            Family::Planar if self.n_min < 3 => {
                Err(Error::Config("the planar generator needs at least 3 nodes".into()))
            }
            _ => Ok(()),
        }
    }
}

/// The enumerable fixture: `([0, 0], edge 1)` and `([1, 1], edge 0)`.
pub fn toy_fixture() -> GraphDataset {
    GraphDataset::unlabeled(vec![
        CategoricalGraph::new(vec![0, 0], vec![1], 2, 2).expect("valid fixture"),
        CategoricalGraph::new(vec![1, 1], vec![0], 2, 2).expect("valid fixture"),
    ])
    .expect("non-empty fixture")
}

pub fn generate(spec: &SynthSpec) -> Result<GraphDataset> {
    spec.validate()?;
    if spec.family == Family::ToyEnumerable {
        return Ok(toy_fixture());
    }
    let mut rng = seeded(spec.seed);
    let graphs = (0..spec.n_graphs)
        .map(|_| {
            let n = rng.gen_range(spec.n_min..=spec.n_max);
            match spec.family {
                Family::Tree => random_tree(n, &mut rng),
                Family::Planar => delaunay_graph(n, &mut rng),
                Family::SbmLike => two_block_sbm(n, 0.7, 0.05, &mut rng),
                Family::ToyEnumerable => unreachable!(),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if graphs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = spec.density_labels.then(|| density_labels(&graphs));
    GraphDataset::new(graphs, labels, 1, 2)
}

fn density(g: &CategoricalGraph) -> f64 {
    let pairs = crate::graph::n_pairs(g.n_nodes());
    if pairs == 0 {
        0.0
    } else {
        g.n_edges() as f64 / pairs as f64
    }
}

/// 1 for graphs strictly denser than the median graph, else 0.
pub fn density_labels(graphs: &[CategoricalGraph]) -> Vec<usize> {
    let mut d: Vec<f64> = graphs.iter().map(density).collect();
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    let median = if d.len() % 2 == 1 { d[m] } else { 0.5 * (d[m - 1] + d[m]) };
    graphs.iter().map(|g| usize::from(density(g) > median)).collect()
}

/// Each new node attaches to a uniformly chosen earlier node.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CategoricalGraph> {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    CategoricalGraph::from_skeleton(n, &edges)
}

pub fn two_block_sbm<R: Rng + ?Sized>(n: usize, p_in: f64, p_out: f64, rng: &mut R) -> Result<CategoricalGraph> {
    let block: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let edges: Vec<(usize, usize)> = crate::graph::pairs(n)
        .filter(|&(i, j)| {
            let p = if block[i] == block[j] { p_in } else { p_out };
            rng.gen::<f64>() < p
        })
        .collect();
    CategoricalGraph::from_skeleton(n, &edges)
}

pub fn delaunay_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CategoricalGraph> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let edges: Vec<(usize, usize)> = delaunay_edges(&pts).into_iter().collect();
    CategoricalGraph::from_skeleton(n, &edges)
}

/// Edges of the Delaunay triangulation (Bowyer–Watson). Points are
/// nudged by a deterministic amount of order `1e-9` so cocircular and
/// collinear inputs still triangulate.
pub fn delaunay_edges(points: &[(f64, f64)]) -> BTreeSet<(usize, usize)> {
    let n = points.len();
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let k = i as f64 + 1.0;
            (x + 1e-9 * (k * 0.618_033_988_75).fract(), y + 1e-9 * (k * 0.414_213_562_37).fract())
        })
        .collect();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &pts {
        lo_x = lo_x.min(x);
        lo_y = lo_y.min(y);
        hi_x = hi_x.max(x);
        hi_y = hi_y.max(y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-6);
    let (cx, cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
    pts.push((cx - 20.0 * span, cy - 10.0 * span));
    pts.push((cx + 20.0 * span, cy - 10.0 * span));
    pts.push((cx, cy + 20.0 * span));

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for p in 0..n {
        let (bad, good): (Vec<[usize; 3]>, Vec<[usize; 3]>) =
            tris.into_iter().partition(|t| in_circumcircle(&pts, *t, pts[p]));
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for t in &bad {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let shared = bad
                    .iter()
                    .filter(|u| *u != t)
                    .any(|u| u.contains(&a) && u.contains(&b));
                if !shared {
                    boundary.push((a, b));
                }
            }
        }
        tris = good;
        tris.extend(boundary.into_iter().map(|(a, b)| [a, b, p]));
    }
    let mut edges = BTreeSet::new();
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if a < n && b < n {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    edges
}

fn in_circumcircle(pts: &[(f64, f64)], t: [usize; 3], p: (f64, f64)) -> bool {
    let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
    let orient = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let (ax, ay) = (a.0 - p.0, a.1 - p.1);
    let (bx, by) = (b.0 - p.0, b.1 - p.1);
    let (cx, cy) = (c.0 - p.0, c.1 - p.1);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    if orient > 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{is_connected, is_planar, is_tree};

    #[test]
    fn trees_are_trees() {
        for seed in 0..5 {
            let ds = generate(&SynthSpec::new(Family::Tree, 30, 1, 12, seed)).unwrap();
            assert!(ds.graphs().iter().all(is_tree));
            assert!(ds.graphs().iter().all(|g| (1..=12).contains(&g.n_nodes())));
        }
    }

    #[test]
    fn planar_graphs_are_connected_planar_triangulations() {
        let ds = generate(&SynthSpec::new(Family::Planar, 30, 3, 20, 3)).unwrap();
        for g in ds.graphs() {
            assert!(is_planar(g));
            assert!(is_connected(g));
            let n = g.n_nodes();
            // a triangulation of points in general position has 2n - 2 - h triangles
            assert!(g.n_edges() >= 2 * n - 3 && g.n_edges() <= 3 * n - 6);
        }
    }

    #[test]
    fn delaunay_of_square_and_grid() {
        // four cocircular corners still give a triangulated square
        let e = delaunay_edges(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(e.len(), 5);
        let grid: Vec<(f64, f64)> = (0..16).map(|k| ((k % 4) as f64, (k / 4) as f64)).collect();
        let e = delaunay_edges(&grid);
        // 9 unit squares, each split once: 24 sides + 9 diagonals
        assert_eq!(e.len(), 33);
    }

    #[test]
    fn deterministic_and_bounded() {
        let spec = SynthSpec::new(Family::SbmLike, 20, 6, 10, 9);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert!(generate(&SynthSpec::new(Family::Tree, 5, 4, 3, 0)).is_err());
        assert!(generate(&SynthSpec::new(Family::Planar, 5, 2, 4, 0)).is_err());
    }

    #[test]
    fn toy_fixture_contents() {
        let ds = generate(&SynthSpec::new(Family::ToyEnumerable, 0, 2, 2, 0)).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs()[0].node_states(), &[0, 0]);
        assert_eq!(ds.graphs()[0].edge_states(), &[1]);
        assert_eq!(ds.graphs()[1].node_states(), &[1, 1]);
        assert_eq!(ds.graphs()[1].edge_states(), &[0]);
    }

    #[test]
    fn density_labels_split_at_median() {
        let spec = SynthSpec { density_labels: true, ..SynthSpec::new(Family::SbmLike, 21, 6, 12, 1) };
        let ds = generate(&spec).unwrap();
        let ones = ds.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert!(ones <= 10 && ones > 0);
    }
}
