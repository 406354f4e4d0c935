//! Weighted undirected graphs and their Laplacians.

use crate::error::{Error, Result};
use crate::seed;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected graph with positive edge weights (conductances).
///
/// Edges are stored canonically: endpoints ordered `u < v`, list sorted by
/// `(u, v)`, parallel edges merged by summing weights. Self-loops are dropped
/// at construction; both cleanups are counted so loaders can report them.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    self_loops_dropped: usize,
    parallel_merged: usize,
}

impl WeightedGraph {
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list: Vec<Edge> = Vec::new();
        let mut self_loops_dropped = 0;
        for (u, v, w) in edges {
            if u >= n {
                return Err(Error::IndexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonpositiveWeight { u, v, w });
            }
            if u == v {
                self_loops_dropped += 1;
                continue;
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            list.push(Edge { u: a, v: b, w });
        }
        list.sort_by_key(|e| (e.u, e.v));
        let before = list.len();
        list.dedup_by(|next, kept| {
            if next.u == kept.u && next.v == kept.v {
                kept.w += next.w;
                true
            } else {
                false
            }
        });
        let parallel_merged = before - list.len();
        Ok(WeightedGraph {
            n,
            edges: list,
            self_loops_dropped,
            parallel_merged,
        })
    }

    /// Grid graph on `rows * cols` nodes with unit weights, node `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c;
                if c + 1 < cols {
                    edges.push((id, id + 1, 1.0));
                }
                if r + 1 < rows {
                    edges.push((id, id + cols, 1.0));
                }
            }
        }
        WeightedGraph::from_edges(rows * cols, edges).expect("grid edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    pub fn parallel_merged(&self) -> usize {
        self.parallel_merged
    }

    pub fn mean_weight(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges.iter().map(|e| e.w).sum::<f64>() / self.edges.len() as f64
    }
}

/// Edge-node incidence: row `e` has +1 at the head and -1 at the tail of edge
/// `e`; head/tail follow the canonical edge orientation `u < v`.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    m: usize,
    n: usize,
    rows: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl IncidenceMatrix {
    pub fn from_graph(g: &WeightedGraph) -> Self {
        IncidenceMatrix {
            m: g.edge_count(),
            n: g.n(),
            rows: g.edges.iter().map(|e| (e.u, e.v)).collect(),
            weights: g.edges.iter().map(|e| e.w).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// (head, tail, weight) of edge `e`.
    pub fn row(&self, e: usize) -> (usize, usize, f64) {
        let (h, t) = self.rows[e];
        (h, t, self.weights[e])
    }
}

/// Symmetric SDD matrix in compressed sparse column form, full pattern stored,
/// row indices sorted within each column. `grounding` records which diagonal
/// entries were bumped and by how much.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    grounding: Vec<(usize, f64)>,
}

impl LaplacianMatrix {
    /// Assembles from (row, col, value) triplets; duplicate positions are
    /// summed. The caller is responsible for supplying a symmetric set.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut items: Vec<(usize, usize, f64)> =
            triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        items.sort_by_key(|t| (t.0, t.1));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx: Vec<usize> = Vec::with_capacity(items.len());
        let mut vals: Vec<f64> = Vec::with_capacity(items.len());
        let mut it = items.into_iter().peekable();
        while let Some((c, r, mut v)) = it.next() {
            while let Some(&(c2, r2, v2)) = it.peek() {
                if c2 == c && r2 == r {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            row_idx.push(r);
            vals.push(v);
            col_ptr[c + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        LaplacianMatrix {
            n,
            col_ptr,
            row_idx,
            vals,
            grounding: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    pub fn diagonal(&self, j: usize) -> f64 {
        self.col(j)
            .find(|&(i, _)| i == j)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    /// Row sum of column `j`; for a pure Laplacian this is zero, any positive
    /// excess is an implicit conductance to ground.
    pub fn diag_excess(&self, j: usize) -> f64 {
        self.col(j).map(|(_, v)| v).sum()
    }

    pub fn grounding(&self) -> &[(usize, f64)] {
        &self.grounding
    }

    pub fn is_grounded(&self) -> bool {
        !self.grounding.is_empty()
    }

    /// Connected components of the off-diagonal pattern, each sorted, listed
    /// in order of their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = vec![start];
            while let Some(u) = queue.pop_front() {
                for (i, _) in self.col(u) {
                    if i != u && !seen[i] {
                        seen[i] = true;
                        comp.push(i);
                        queue.push_back(i);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn build_laplacian(g: &WeightedGraph) -> LaplacianMatrix {
    let mut triplets = Vec::with_capacity(4 * g.edge_count() + g.n());
    let mut diag = vec![0.0f64; g.n()];
    for e in g.edges() {
        triplets.push((e.u, e.v, -e.w));
        triplets.push((e.v, e.u, -e.w));
        diag[e.u] += e.w;
        diag[e.v] += e.w;
    }
    for (j, &d) in diag.iter().enumerate() {
        if d != 0.0 {
            triplets.push((j, j, d));
        }
    }
    LaplacianMatrix::from_triplets(g.n(), &triplets)
}

/// Connected components of the graph, sorted as in [`LaplacianMatrix::components`].
pub fn connected_components(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.n()];
    for e in g.edges() {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut seen = vec![false; g.n()];
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..g.n() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = vec![start];
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// How the grounded node of each connected component is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundingPolicy {
    /// Lowest-index node of each component.
    Deterministic,
    /// Random node of each component, drawn from a stream keyed by the seed.
    Seeded(u64),
}

/// Adds `g_value` to the diagonal of one node per connected component, making
/// the matrix positive definite. Fails on nonpositive `g_value` or if `lap`
/// already carries a grounding.
pub fn ground_laplacian(
    lap: &LaplacianMatrix,
    g_value: f64,
    policy: GroundingPolicy,
) -> Result<LaplacianMatrix> {
    if !g_value.is_finite() || g_value <= 0.0 {
        return Err(Error::NonpositiveGround(g_value));
    }
    assert!(
        !lap.is_grounded(),
        "ground_laplacian applied to an already grounded matrix"
    );
    let mut chosen = Vec::new();
    let comps = lap.components();
    match policy {
        GroundingPolicy::Deterministic => {
            for comp in &comps {
                chosen.push(comp[0]);
            }
        }
        GroundingPolicy::Seeded(s) => {
            for (k, comp) in comps.iter().enumerate() {
                let mut rng = seed::rng(s, k as u64);
                chosen.push(comp[rng.gen_range(0..comp.len())]);
            }
        }
    }
    let mut out = lap.clone();
    for &node in &chosen {
        let lo = out.col_ptr[node];
        let hi = out.col_ptr[node + 1];
        let pos = out.row_idx[lo..hi]
            .iter()
            .position(|&i| i == node)
            .map(|p| lo + p);
        match pos {
            Some(p) => out.vals[p] += g_value,
            None => {
                // isolated node with no stored diagonal: insert one
                out.row_idx.insert(lo, node);
                out.vals.insert(lo, g_value);
                for c in (node + 1)..=out.n {
                    out.col_ptr[c] += 1;
                }
            }
        }
        out.grounding.push((node, g_value));
    }
    Ok(out)
}

/// Default grounding value: one tenth of the mean edge weight.
///
/// With a single grounded node per component the computed resistances do not
/// depend on the grounding value at all (the grounded solve differs from the
/// pseudo-inverse solve by a constant vector, which difference queries cancel),
/// so the value is chosen purely for numerical health. Much smaller values put
/// a `1/sqrt(g)` spike into every column of the inverse factor, which starves
/// the mass-based column truncation of its budget.
pub fn default_ground_value(g: &WeightedGraph) -> f64 {
    0.1 * g.mean_weight()
}

/// Node pair queries against one resistance computation. Indices are in the
/// caller's node numbering; `p == q` is allowed and yields zero resistance.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pairs: Vec<(usize, usize)>,
}

impl QuerySet {
    pub fn new(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        for &(p, q) in &pairs {
            if p >= n {
                return Err(Error::IndexOutOfRange { index: p, n });
            }
            if q >= n {
                return Err(Error::IndexOutOfRange { index: q, n });
            }
        }
        Ok(QuerySet { pairs })
    }

    pub fn all_edges(g: &WeightedGraph) -> Self {
        QuerySet {
            pairs: g.edges().iter().map(|e| (e.u, e.v)).collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
