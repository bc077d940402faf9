//! Categorical graph data model.
//!
//! A graph on `N` nodes stores one state per node and one state per
//! unordered pair `i < j`, packed row-major over the strict upper triangle.
//! Edge state 0 means "no edge". There is no slot for self-loops.

mod io;
mod iso;

pub use io::{read_dataset, write_dataset, DatasetFile, GraphRecord};
pub use iso::{are_isomorphic, are_isomorphic_with_cap, DEFAULT_ISO_CAP};

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// Index of pair `(i, j)`, `i < j`, in the packed upper triangle of an `n`-node graph.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Number of unordered node pairs.
#[inline]
pub fn n_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Iterator over `(i, j)` pairs in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CategoricalGraph {
    node_states: Vec<usize>,
    edge_states: Vec<usize>,
    x_card: usize,
    e_card: usize,
}

impl CategoricalGraph {
    pub fn new(
        node_states: Vec<usize>,
        edge_states: Vec<usize>,
        x_card: usize,
        e_card: usize,
    ) -> Result<Self> {
        let n = node_states.len();
        if x_card == 0 || e_card == 0 {
            return Err(Error::InvalidGraph("cardinalities must be positive".into()));
        }
        if edge_states.len() != n_pairs(n) {
            return Err(Error::InvalidGraph(format!(
                "{} edge slots for {} nodes, expected {}",
                edge_states.len(),
                n,
                n_pairs(n)
            )));
        }
        if let Some(&s) = node_states.iter().find(|&&s| s >= x_card) {
            return Err(Error::InvalidGraph(format!("node state {s} >= X = {x_card}")));
        }
        if let Some(&s) = edge_states.iter().find(|&&s| s >= e_card) {
            return Err(Error::InvalidGraph(format!("edge state {s} >= E = {e_card}")));
        }
        Ok(Self {
            node_states,
            edge_states,
            x_card,
            e_card,
        })
    }

    /// All nodes and edges in state 0.
    pub fn empty(n: usize, x_card: usize, e_card: usize) -> Self {
        Self {
            node_states: vec![0; n],
            edge_states: vec![0; n_pairs(n)],
            x_card: x_card.max(1),
            e_card: e_card.max(1),
        }
    }

    /// Build from an edge list; unlisted pairs get state 0.
    pub fn from_edges(
        node_states: Vec<usize>,
        edges: &[(usize, usize, usize)],
        x_card: usize,
        e_card: usize,
    ) -> Result<Self> {
        let n = node_states.len();
        let mut edge_states = vec![0; n_pairs(n)];
        for &(a, b, s) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let (i, j) = (a.min(b), a.max(b));
            if j >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
            edge_states[edge_index(n, i, j)] = s;
        }
        Self::new(node_states, edge_states, x_card, e_card)
    }

    /// Unlabeled simple graph: one node state, binary edges.
    pub fn from_skeleton(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1)).collect();
        Self::from_edges(vec![0; n], &e, 1, 2)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_states.len()
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn e_card(&self) -> usize {
        self.e_card
    }

    pub fn node_states(&self) -> &[usize] {
        &self.node_states
    }

    pub fn edge_states(&self) -> &[usize] {
        &self.edge_states
    }

    pub fn node(&self, i: usize) -> usize {
        self.node_states[i]
    }

    /// State of the pair `{i, j}`; `i != j` in either order.
    pub fn edge(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edge_states[edge_index(self.n_nodes(), a, b)]
    }

    /// Total number of categorical dimensions, `N + N(N-1)/2`.
    pub fn dims(&self) -> usize {
        self.node_states.len() + self.edge_states.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_states.iter().filter(|&&s| s != 0).count()
    }

    /// Neighbour lists of the non-zero-edge skeleton.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut adj = vec![Vec::new(); n];
        for ((i, j), &s) in pairs(n).zip(&self.edge_states) {
            if s != 0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().iter().map(Vec::len).collect()
    }

    /// Same states with cardinalities replaced (e.g. widened for a mask state).
    pub fn with_cards(&self, x_card: usize, e_card: usize) -> Result<Self> {
        Self::new(
            self.node_states.clone(),
            self.edge_states.clone(),
            x_card,
            e_card,
        )
    }

    /// Node `n` of the result is node `σ⁻¹(n)` of `self`.
    pub fn permute(&self, sigma: &Permutation) -> Result<Self> {
        let n = self.n_nodes();
        if sigma.len() != n {
            return Err(Error::SizeMismatch {
                perm: sigma.len(),
                nodes: n,
            });
        }
        let inv = sigma.inverse();
        let node_states = (0..n).map(|v| self.node_states[inv.apply(v)]).collect();
        let edge_states = pairs(n)
            .map(|(i, j)| self.edge(inv.apply(i), inv.apply(j)))
            .collect();
        Ok(Self {
            node_states,
            edge_states,
            x_card: self.x_card,
            e_card: self.e_card,
        })
    }
}

/// A bijection on `0..N`, stored as its image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::InvalidGraph(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut m: Vec<usize> = (0..n).collect();
        m.shuffle(rng);
        Self(m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m] = i;
        }
        Self(inv)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&i| self.0[i]).collect())
    }

    /// Reorder per-node values so that entry `σ(i)` of the output is entry `i` of the input.
    pub fn permute_nodes<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let inv = self.inverse();
        (0..self.len()).map(|v| values[inv.apply(v)].clone()).collect()
    }

    /// Same as [`permute_nodes`](Self::permute_nodes) for packed per-pair values.
    pub fn permute_pairs<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let n = self.len();
        let inv = self.inverse();
        pairs(n)
            .map(|(i, j)| {
                let (a, b) = (inv.apply(i), inv.apply(j));
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                values[edge_index(n, a, b)].clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    graphs: Vec<CategoricalGraph>,
    labels: Option<Vec<usize>>,
    x_card: usize,
    e_card: usize,
}

impl GraphDataset {
    pub fn new(
        graphs: Vec<CategoricalGraph>,
        labels: Option<Vec<usize>>,
        x_card: usize,
        e_card: usize,
    ) -> Result<Self> {
        if let Some(g) = graphs
            .iter()
            .find(|g| g.x_card() != x_card || g.e_card() != e_card)
        {
            return Err(Error::InvalidGraph(format!(
                "graph cardinalities ({}, {}) differ from dataset ({x_card}, {e_card})",
                g.x_card(),
                g.e_card()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != graphs.len() {
                return Err(Error::InvalidGraph(format!(
                    "{} labels for {} graphs",
                    l.len(),
                    graphs.len()
                )));
            }
        }
        Ok(Self {
            graphs,
            labels,
            x_card,
            e_card,
        })
    }

    pub fn unlabeled(graphs: Vec<CategoricalGraph>) -> Result<Self> {
        let (x, e) = graphs
            .first()
            .map(|g| (g.x_card(), g.e_card()))
            .ok_or(Error::EmptyDataset)?;
        Self::new(graphs, None, x, e)
    }

    pub fn graphs(&self) -> &[CategoricalGraph] {
        &self.graphs
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[i])
    }

    /// One more than the largest label, or 0 when unlabeled.
    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max().map(|m| m + 1))
            .unwrap_or(0)
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn e_card(&self) -> usize {
        self.e_card
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Sub-dataset of the graphs with label `label`.
    pub fn with_label(&self, label: usize) -> Result<Self> {
        let labels = self.labels.as_ref().ok_or_else(|| {
            Error::Config("dataset has no labels".into())
        })?;
        let graphs = self
            .graphs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == label)
            .map(|(g, _)| g.clone())
            .collect::<Vec<_>>();
        let n = graphs.len();
        Self::new(graphs, Some(vec![label; n]), self.x_card, self.e_card)
    }

    /// Split into the first `n` graphs and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self)> {
        let n = n.min(self.len());
        let (a, b) = self.graphs.split_at(n);
        let (la, lb) = match &self.labels {
            Some(l) => {
                let (x, y) = l.split_at(n);
                (Some(x.to_vec()), Some(y.to_vec()))
            }
            None => (None, None),
        };
        Ok((
            Self::new(a.to_vec(), la, self.x_card, self.e_card)?,
            Self::new(b.to_vec(), lb, self.x_card, self.e_card)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn path3() -> CategoricalGraph {
        CategoricalGraph::from_edges(vec![0, 1, 2], &[(0, 1, 1), (1, 2, 1)], 3, 2).unwrap()
    }

    #[test]
    fn edge_index_is_row_major_upper_triangle() {
        let n = 5;
        let idx: Vec<usize> = pairs(n).map(|(i, j)| edge_index(n, i, j)).collect();
        assert_eq!(idx, (0..n_pairs(n)).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_out_of_range_states() {
        assert!(CategoricalGraph::new(vec![0, 3], vec![0], 3, 2).is_err());
        assert!(CategoricalGraph::new(vec![0, 1], vec![2], 3, 2).is_err());
        assert!(CategoricalGraph::new(vec![0, 1], vec![], 3, 2).is_err());
        assert!(CategoricalGraph::from_edges(vec![0, 0], &[(1, 1, 1)], 1, 2).is_err());
    }

    #[test]
    fn identity_permutation_is_noop() {
        let g = path3();
        assert_eq!(g.permute(&Permutation::identity(3)).unwrap(), g);
    }

    #[test]
    fn swapping_equal_isolated_nodes_is_noop() {
        let g = CategoricalGraph::from_edges(vec![1, 0, 1], &[], 2, 2).unwrap();
        let sigma = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(g.permute(&sigma).unwrap(), g);
    }

    #[test]
    fn reversing_a_path() {
        let g = path3();
        let sigma = Permutation::new(vec![2, 1, 0]).unwrap();
        let p = g.permute(&sigma).unwrap();
        assert_eq!(p.node_states(), &[2, 1, 0]);
        assert_eq!(p.edge(0, 1), 1);
        assert_eq!(p.edge(1, 2), 1);
        assert_eq!(p.edge(0, 2), 0);
    }

    #[test]
    fn permutation_size_mismatch() {
        let err = path3().permute(&Permutation::identity(4)).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { perm: 4, nodes: 3 }));
    }

    #[test]
    fn non_bijection_rejected() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn labels_must_align() {
        let g = path3();
        assert!(GraphDataset::new(vec![g.clone()], Some(vec![0, 1]), 3, 2).is_err());
        assert!(GraphDataset::new(vec![g], Some(vec![1]), 3, 2).is_ok());
    }

    fn arb_graph() -> impl Strategy<Value = (CategoricalGraph, u64)> {
        (1usize..8, 1usize..4, 1usize..4, any::<u64>()).prop_map(|(n, x, e, seed)| {
            let mut rng = seeded(seed);
            let nodes = (0..n).map(|_| rng.gen_range(0..x)).collect();
            let edges = (0..n_pairs(n)).map(|_| rng.gen_range(0..e)).collect();
            (CategoricalGraph::new(nodes, edges, x, e).unwrap(), seed)
        })
    }

    proptest! {
        #[test]
        fn permute_then_inverse_roundtrips((g, seed) in arb_graph()) {
            let sigma = Permutation::random(g.n_nodes(), &mut seeded(seed ^ 0xabc));
            let back = g.permute(&sigma).unwrap().permute(&sigma.inverse()).unwrap();
            prop_assert_eq!(back, g.clone());
            prop_assert_eq!(g.dims(), g.n_nodes() + g.n_nodes() * (g.n_nodes().saturating_sub(1)) / 2);
        }

        #[test]
        fn permutation_composes_with_inverse(n in 1usize..10, seed in any::<u64>()) {
            let s = Permutation::random(n, &mut seeded(seed));
            prop_assert_eq!(s.compose(&s.inverse()), Permutation::identity(n));
        }

        #[test]
        fn permute_pairs_matches_graph_permute((g, seed) in arb_graph()) {
            let sigma = Permutation::random(g.n_nodes(), &mut seeded(seed));
            let p = g.permute(&sigma).unwrap();
            prop_assert_eq!(sigma.permute_nodes(g.node_states()), p.node_states().to_vec());
            prop_assert_eq!(sigma.permute_pairs(g.edge_states()), p.edge_states().to_vec());
        }
    }
}
