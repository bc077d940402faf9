//! Planarity of the non-zero-edge skeleton.
//!
//! [`is_planar`] is the left-right criterion: a DFS orientation computes
//! lowpoints and nesting depths, then a second DFS in nesting order keeps a
//! stack of conflict pairs of return-edge intervals; the graph is planar iff
//! every conflict can be resolved by a left/right assignment.
//! [`has_kuratowski_subdivision`] is an exhaustive search used as a
//! cross-check on small graphs.

use std::collections::HashMap;

use crate::graph::CategoricalGraph;

type Edge = (usize, usize);

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Interval {
    low: Option<Edge>,
    high: Option<Edge>,
}

impl Interval {
    fn single(e: Edge) -> Self {
        Self { low: Some(e), high: Some(e) }
    }

    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LeftRight {
    adj: Vec<Vec<usize>>,
    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<Edge>>,
    oriented: HashMap<Edge, ()>,
    out: Vec<Vec<usize>>,
    lowpt: HashMap<Edge, usize>,
    lowpt2: HashMap<Edge, usize>,
    nesting_depth: HashMap<Edge, usize>,
    reference: HashMap<Edge, Option<Edge>>,
    lowpt_edge: HashMap<Edge, Edge>,
    /// Stack height when each edge was entered; stands in for the identity
    /// of the conflict pair then on top.
    stack_bottom: HashMap<Edge, usize>,
    stack: Vec<ConflictPair>,
}

impl LeftRight {
    fn new(adj: Vec<Vec<usize>>) -> Self {
        let n = adj.len();
        Self {
            adj,
            height: vec![None; n],
            parent_edge: vec![None; n],
            oriented: HashMap::new(),
            out: vec![Vec::new(); n],
            lowpt: HashMap::new(),
            lowpt2: HashMap::new(),
            nesting_depth: HashMap::new(),
            reference: HashMap::new(),
            lowpt_edge: HashMap::new(),
            stack_bottom: HashMap::new(),
            stack: Vec::new(),
        }
    }

    fn conflicting(&self, i: &Interval, b: Edge) -> bool {
        !i.is_empty() && self.lowpt[&i.high.unwrap()] > self.lowpt[&b]
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        if p.left.is_empty() {
            return self.lowpt[&p.right.low.unwrap()];
        }
        if p.right.is_empty() {
            return self.lowpt[&p.left.low.unwrap()];
        }
        self.lowpt[&p.left.low.unwrap()].min(self.lowpt[&p.right.low.unwrap()])
    }

    fn set_ref(&mut self, key: Option<Edge>, value: Option<Edge>) {
        if let Some(k) = key {
            self.reference.insert(k, value);
        }
    }

    fn get_ref(&self, e: Edge) -> Option<Edge> {
        self.reference.get(&e).copied().flatten()
    }

    fn orient(&mut self, v: usize) {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        for idx in 0..self.adj[v].len() {
            let w = self.adj[v][idx];
            if self.oriented.contains_key(&(v, w)) || self.oriented.contains_key(&(w, v)) {
                continue;
            }
            let vw = (v, w);
            self.oriented.insert(vw, ());
            self.out[v].push(w);
            self.lowpt.insert(vw, hv);
            self.lowpt2.insert(vw, hv);
            match self.height[w] {
                None => {
                    self.parent_edge[w] = Some(vw);
                    self.height[w] = Some(hv + 1);
                    self.orient(w);
                }
                Some(hw) => {
                    self.lowpt.insert(vw, hw);
                }
            }
            let (lp, lp2) = (self.lowpt[&vw], self.lowpt2[&vw]);
            let mut depth = 2 * lp;
            if lp2 < hv {
                depth += 1;
            }
            self.nesting_depth.insert(vw, depth);
            if let Some(e) = e {
                let (le, le2) = (self.lowpt[&e], self.lowpt2[&e]);
                if lp < le {
                    self.lowpt2.insert(e, le.min(lp2));
                    self.lowpt.insert(e, lp);
                } else if lp > le {
                    self.lowpt2.insert(e, le2.min(lp));
                } else {
                    self.lowpt2.insert(e, le2.min(lp2));
                }
            }
        }
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        let children = self.out[v].clone();
        for (k, &w) in children.iter().enumerate() {
            let ei = (v, w);
            self.stack_bottom.insert(ei, self.stack.len());
            if Some(ei) == self.parent_edge[w] {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge.insert(ei, ei);
                self.stack.push(ConflictPair {
                    left: Interval::default(),
                    right: Interval::single(ei),
                });
            }
            if self.lowpt[&ei] < hv {
                let e = e.expect("a return edge below the root is impossible");
                if k == 0 {
                    let l = self.lowpt_edge[&ei];
                    self.lowpt_edge.insert(e, l);
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: Edge, e: Edge) -> bool {
        let mut p = ConflictPair::default();
        loop {
            let mut q = self.stack.pop().expect("conflict stack underflow");
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.lowpt[&q.right.low.unwrap()] > self.lowpt[&e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.set_ref(p.right.low, q.right.high);
                }
                p.right.low = q.right.low;
            } else {
                let target = self.lowpt_edge.get(&e).copied();
                self.set_ref(q.right.low, target);
            }
            if self.stack.len() == self.stack_bottom[&ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last().copied() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            self.set_ref(p.right.low, q.right.high);
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else {
                self.set_ref(p.left.low, q.left.high);
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: Edge) {
        let u = e.0;
        let hu = self.height[u].unwrap();
        while let Some(top) = self.stack.last().copied() {
            if self.lowest(&top) != hu {
                break;
            }
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high.filter(|h| h.1 == u) {
                p.left.high = self.get_ref(h);
            }
            if p.left.high.is_none() && p.left.low.is_some() {
                self.set_ref(p.left.low, p.right.low);
                p.left.low = None;
            }
            while let Some(h) = p.right.high.filter(|h| h.1 == u) {
                p.right.high = self.get_ref(h);
            }
            if p.right.high.is_none() && p.right.low.is_some() {
                self.set_ref(p.right.low, p.left.low);
                p.right.low = None;
            }
            self.stack.push(p);
        }
        if self.lowpt[&e] < hu {
            if let Some(top) = self.stack.last() {
                let (hl, hr) = (top.left.high, top.right.high);
                let r = match (hl, hr) {
                    (Some(l), None) => Some(l),
                    (Some(l), Some(r)) if self.lowpt[&l] > self.lowpt[&r] => Some(l),
                    _ => hr,
                };
                self.reference.insert(e, r);
            }
        }
    }
}

/// Left-right planarity test on the skeleton (edges with non-zero state).
pub fn is_planar(g: &CategoricalGraph) -> bool {
    let n = g.n_nodes();
    let m = g.n_edges();
    if n > 2 && m > 3 * n - 6 {
        return false;
    }
    let mut lr = LeftRight::new(g.adjacency());
    let mut roots = Vec::new();
    for v in 0..n {
        if lr.height[v].is_none() {
            lr.height[v] = Some(0);
            roots.push(v);
            lr.orient(v);
        }
    }
    for v in 0..n {
        let depth = &lr.nesting_depth;
        lr.out[v].sort_by_key(|&w| depth[&(v, w)]);
    }
    roots.into_iter().all(|r| lr.test(r))
}

/// Exhaustive search for a subdivision of K5 or K3,3. Exponential; meant
/// for graphs with at most about eight nodes.
pub fn has_kuratowski_subdivision(g: &CategoricalGraph) -> bool {
    let n = g.n_nodes();
    let adj = adjacency_matrix(g);
    for branch in combinations(n, 5) {
        let edges: Vec<Edge> = combinations(5, 2)
            .into_iter()
            .map(|c| (branch[c[0]], branch[c[1]]))
            .collect();
        if embeds(&adj, &branch, &edges) {
            return true;
        }
    }
    for six in combinations(n, 6) {
        for side in combinations(6, 3) {
            if !side.contains(&0) {
                continue; // each bipartition once
            }
            let a: Vec<usize> = side.iter().map(|&k| six[k]).collect();
            let b: Vec<usize> = (0..6).filter(|k| !side.contains(k)).map(|k| six[k]).collect();
            let edges: Vec<Edge> = a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect();
            if embeds(&adj, &six, &edges) {
                return true;
            }
        }
    }
    false
}

fn adjacency_matrix(g: &CategoricalGraph) -> Vec<Vec<bool>> {
    let n = g.n_nodes();
    let mut a = vec![vec![false; n]; n];
    for (i, nbrs) in g.adjacency().into_iter().enumerate() {
        for j in nbrs {
            a[i][j] = true;
        }
    }
    a
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Can every pattern edge be realised as a path between its branch
/// vertices, with interiors drawn disjointly from the non-branch vertices?
fn embeds(adj: &[Vec<bool>], branch: &[usize], edges: &[Edge]) -> bool {
    let free: Vec<usize> = (0..adj.len()).filter(|v| !branch.contains(v)).collect();
    // assignment[k] = 0 for unused, otherwise 1 + pattern edge index
    let mut assignment = vec![0usize; free.len()];
    loop {
        let mut interiors = vec![Vec::new(); edges.len()];
        for (k, &a) in assignment.iter().enumerate() {
            if a > 0 {
                interiors[a - 1].push(free[k]);
            }
        }
        if edges
            .iter()
            .zip(&interiors)
            .all(|(&(s, t), inner)| path_through(adj, s, t, inner))
        {
            return true;
        }
        // next assignment in mixed radix (edges.len() + 1)
        let mut k = 0;
        loop {
            if k == assignment.len() {
                return false;
            }
            assignment[k] += 1;
            if assignment[k] <= edges.len() {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// Is there an ordering of `inner` forming a path `s, inner…, t`?
fn path_through(adj: &[Vec<bool>], s: usize, t: usize, inner: &[usize]) -> bool {
    fn rec(adj: &[Vec<bool>], cur: usize, t: usize, left: &mut Vec<usize>) -> bool {
        if left.is_empty() {
            return adj[cur][t];
        }
        for k in 0..left.len() {
            let v = left[k];
            if adj[cur][v] {
                left.swap_remove(k);
                let ok = rec(adj, v, t, left);
                left.push(v);
                let last = left.len() - 1;
                left.swap(k, last);
                if ok {
                    return true;
                }
            }
        }
        false
    }
    rec(adj, s, t, &mut inner.to_vec())
}
