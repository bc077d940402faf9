//! Relative random-walk probabilities.
//!
//! With `M = D⁻¹A` on the binary skeleton, node features are the diagonals
//! of `I, M, …, M^{K-1}` and edge features the symmetrised off-diagonals
//! `((M^k)_ij + (M^k)_ji) / 2`. Isolated nodes give zero rows of `M`.

use crate::graph::{pairs, CategoricalGraph};

pub const DEFAULT_RRWP_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RrwpFeatures {
    pub depth: usize,
    /// `node_feats[n][k] = (M^k)_nn`.
    pub node_feats: Vec<Vec<f64>>,
    /// Packed in pair storage order.
    pub edge_feats: Vec<Vec<f64>>,
}

/// RRWP on the skeleton of edges with non-zero state.
pub fn rrwp(g: &CategoricalGraph, depth: usize) -> RrwpFeatures {
    rrwp_with_presence(g, depth, |s| s != 0)
}

/// RRWP where `present(state)` decides which edge states count as adjacency
/// (e.g. excluding a mask state).
pub fn rrwp_with_presence(
    g: &CategoricalGraph,
    depth: usize,
    present: impl Fn(usize) -> bool,
) -> RrwpFeatures {
    assert!(depth >= 1, "RRWP depth must be at least 1");
    let n = g.n_nodes();
    let m = walk_matrix(g, present);

    let mut power: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut node_feats = vec![Vec::with_capacity(depth); n];
    let mut edge_feats = vec![Vec::with_capacity(depth); crate::graph::n_pairs(n)];
    for k in 0..depth {
        if k > 0 {
            power = matmul(&power, &m);
        }
        for (i, f) in node_feats.iter_mut().enumerate() {
            f.push(power[i][i]);
        }
        for ((i, j), f) in pairs(n).zip(edge_feats.iter_mut()) {
            f.push(0.5 * (power[i][j] + power[j][i]));
        }
    }
    RrwpFeatures {
        depth,
        node_feats,
        edge_feats,
    }
}

/// Degree-normalised adjacency `D⁻¹A`.
pub fn walk_matrix(g: &CategoricalGraph, present: impl Fn(usize) -> bool) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let mut adj = vec![vec![false; n]; n];
    for ((i, j), &s) in pairs(n).zip(g.edge_states()) {
        if present(s) {
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    adj.iter()
        .map(|row| {
            let deg = row.iter().filter(|&&a| a).count();
            row.iter()
                .map(|&a| if a { 1.0 / deg as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for l in 0..n {
            let x = a[i][l];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Permutation;
    use crate::rng::seeded;
    use rand::Rng;

    fn path3() -> CategoricalGraph {
        CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn depth_one_is_identity() {
        let f = rrwp(&path3(), 1);
        assert!(f.node_feats.iter().all(|v| v == &[1.0]));
        assert!(f.edge_feats.iter().all(|v| v == &[0.0]));
    }

    #[test]
    fn path_second_power_diagonal() {
        let f = rrwp(&path3(), 3);
        let diag2: Vec<f64> = f.node_feats.iter().map(|v| v[2]).collect();
        assert_eq!(diag2, vec![0.5, 1.0, 0.5]);
        // M itself: pair (0,1) averages M01 = 1 and M10 = 0.5
        assert_eq!(f.edge_feats[0][1], 0.75);
    }

    #[test]
    fn walk_matrix_rows_are_stochastic() {
        let m = walk_matrix(&path3(), |s| s != 0);
        assert_eq!(m[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(m[1], vec![0.5, 0.0, 0.5]);
        for row in &m {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        let isolated = CategoricalGraph::from_skeleton(3, &[(0, 1)]).unwrap();
        assert_eq!(walk_matrix(&isolated, |s| s != 0)[2], vec![0.0; 3]);
    }

    #[test]
    fn mask_state_is_not_adjacency() {
        let g = CategoricalGraph::new(vec![0, 0, 0], vec![2, 1, 2], 1, 3).unwrap();
        let f = rrwp_with_presence(&g, 2, |s| s == 1);
        // only pair (0, 2) present
        assert_eq!(f.edge_feats[1][1], 1.0);
        assert_eq!(f.edge_feats[0][1], 0.0);
    }

    #[test]
    fn equivariant_under_permutation() {
        let mut rng = seeded(4);
        for _ in 0..100 {
            let n = rng.gen_range(2..9);
            let edges: Vec<(usize, usize)> = crate::graph::pairs(n)
                .filter(|_| rng.gen::<f64>() < 0.4)
                .collect();
            let g = CategoricalGraph::from_skeleton(n, &edges).unwrap();
            let sigma = Permutation::random(n, &mut rng);
            let a = rrwp(&g.permute(&sigma).unwrap(), 6);
            let b = rrwp(&g, 6);
            let bn = sigma.permute_nodes(&b.node_feats);
            let be = sigma.permute_pairs(&b.edge_feats);
            for (x, y) in a.node_feats.iter().flatten().zip(bn.iter().flatten()) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in a.edge_feats.iter().flatten().zip(be.iter().flatten()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
