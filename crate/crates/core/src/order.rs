//! Elimination orderings for sparse Cholesky.

use crate::graph::LaplacianMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMethod {
    Natural,
    Rcm,
    /// Greedy minimum external degree on the quotient graph.
    AmdLike,
}

impl std::str::FromStr for OrderingMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "natural" => Ok(OrderingMethod::Natural),
            "rcm" => Ok(OrderingMethod::Rcm),
            "amd" | "amd-like" => Ok(OrderingMethod::AmdLike),
            other => Err(format!("unknown ordering {other:?} (expected natural|rcm|amd)")),
        }
    }
}

/// Permutation between original and elimination numbering.
///
/// `perm[k]` is the original index eliminated at step `k`; `inv[old]` is the
/// elimination step of original node `old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrdering {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl EliminationOrdering {
    pub fn from_perm(perm: Vec<usize>) -> Self {
        let mut inv = vec![0usize; perm.len()];
        let mut seen = vec![false; perm.len()];
        for (k, &old) in perm.iter().enumerate() {
            assert!(old < perm.len() && !seen[old], "not a permutation");
            seen[old] = true;
            inv[old] = k;
        }
        EliminationOrdering { perm, inv }
    }

    pub fn identity(n: usize) -> Self {
        EliminationOrdering {
            perm: (0..n).collect(),
            inv: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn old_of_new(&self, new: usize) -> usize {
        self.perm[new]
    }

    pub fn new_of_old(&self, old: usize) -> usize {
        self.inv[old]
    }
}

pub fn compute_ordering(lap: &LaplacianMatrix, method: OrderingMethod) -> EliminationOrdering {
    match method {
        OrderingMethod::Natural => EliminationOrdering::identity(lap.n()),
        OrderingMethod::Rcm => EliminationOrdering::from_perm(rcm(lap)),
        OrderingMethod::AmdLike => EliminationOrdering::from_perm(min_degree(lap)),
    }
}

fn adjacency(lap: &LaplacianMatrix) -> Vec<Vec<usize>> {
    let n = lap.n();
    let mut adj = vec![Vec::new(); n];
    for (j, neighbors) in adj.iter_mut().enumerate() {
        for (i, _) in lap.col(j) {
            if i != j {
                neighbors.push(i);
            }
        }
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (Vec<usize>, Vec<i64>) {
    let mut level = vec![-1i64; adj.len()];
    let mut order = vec![start];
    let mut head = 0;
    level[start] = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &v in &adj[u] {
            if level[v] < 0 {
                level[v] = level[u] + 1;
                order.push(v);
            }
        }
    }
    (order, level)
}

fn rcm(lap: &LaplacianMatrix) -> Vec<usize> {
    let n = lap.n();
    let adj = adjacency(lap);
    let mut perm = Vec::with_capacity(n);
    let mut done = vec![false; n];
    for root in 0..n {
        if done[root] {
            continue;
        }
        // pseudo-peripheral start: farthest low-degree node after two sweeps
        let mut start = root;
        for _ in 0..2 {
            let (order, level) = bfs_levels(&adj, start);
            let far = *level.iter().filter(|&&l| l >= 0).max().unwrap_or(&0);
            start = order
                .iter()
                .copied()
                .filter(|&v| level[v] == far)
                .min_by_key(|&v| (adj[v].len(), v))
                .unwrap_or(start);
        }
        // Cuthill-McKee from `start`, neighbors by (degree, index), reversed
        let mut comp = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        done[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !done[v]).collect();
            nb.sort_by_key(|&v| (adj[v].len(), v));
            for v in nb {
                if !done[v] {
                    done[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.reverse();
        perm.extend(comp);
    }
    perm
}

/// Greedy minimum degree using a quotient graph: each pivot becomes an
/// element absorbing the elements adjacent to it, and neighbor degrees are
/// recomputed as exact external degrees. Ties break toward the lower index,
/// so the result is deterministic.
fn min_degree(lap: &LaplacianMatrix) -> Vec<usize> {
    let n = lap.n();
    let mut adj = adjacency(lap);
    let mut elems_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_alive = vec![false; n];
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();

    let mut heap = std::collections::BinaryHeap::new();
    for (v, &d) in degree.iter().enumerate() {
        heap.push(std::cmp::Reverse((d, v)));
    }

    let mut mark = vec![0u32; n];
    let mut stamp = 0u32;
    let mut mark2 = vec![0u32; n];
    let mut stamp2 = 0u32;

    let mut perm = Vec::with_capacity(n);
    while perm.len() < n {
        let p = loop {
            let std::cmp::Reverse((d, v)) = heap.pop().expect("heap drained early");
            if alive[v] && degree[v] == d {
                break v;
            }
        };

        // reach of p: live adjacent variables plus variables of adjacent elements
        stamp += 1;
        mark[p] = stamp;
        let mut reach = Vec::new();
        for &v in &adj[p] {
            if alive[v] && mark[v] != stamp {
                mark[v] = stamp;
                reach.push(v);
            }
        }
        for &e in &elems_of[p] {
            if !elem_alive[e] {
                continue;
            }
            for &v in &elem_vars[e] {
                if alive[v] && mark[v] != stamp {
                    mark[v] = stamp;
                    reach.push(v);
                }
            }
        }
        reach.sort_unstable();

        alive[p] = false;
        for &e in &elems_of[p] {
            // absorbed: the new element covers everything these did
            elem_alive[e] = false;
            elem_vars[e] = Vec::new();
        }
        elems_of[p] = Vec::new();
        elem_vars[p] = reach.clone();
        elem_alive[p] = true;
        perm.push(p);

        for &v in &reach {
            // edges covered by the new element are redundant
            adj[v].retain(|&u| alive[u] && mark[u] != stamp);
            elems_of[v].retain(|&e| elem_alive[e]);
            elems_of[v].push(p);

            // exact external degree
            stamp2 += 1;
            mark2[v] = stamp2;
            let mut d = 0;
            for &u in &adj[v] {
                if mark2[u] != stamp2 {
                    mark2[u] = stamp2;
                    d += 1;
                }
            }
            for &e in &elems_of[v] {
                for &u in &elem_vars[e] {
                    if alive[u] && mark2[u] != stamp2 {
                        mark2[u] = stamp2;
                        d += 1;
                    }
                }
            }
            degree[v] = d;
            heap.push(std::cmp::Reverse((d, v)));
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, WeightedGraph};

    fn path(n: usize) -> LaplacianMatrix {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        build_laplacian(&WeightedGraph::from_edges(n, edges).unwrap())
    }

    #[test]
    fn natural_is_identity() {
        let lap = path(6);
        let ord = compute_ordering(&lap, OrderingMethod::Natural);
        assert_eq!(ord.perm(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn orderings_are_permutations() {
        let g = WeightedGraph::grid(7, 5);
        let lap = build_laplacian(&g);
        for m in [OrderingMethod::Natural, OrderingMethod::Rcm, OrderingMethod::AmdLike] {
            let ord = compute_ordering(&lap, m);
            let mut seen = vec![false; lap.n()];
            for k in 0..lap.n() {
                let old = ord.old_of_new(k);
                assert!(!seen[old]);
                seen[old] = true;
                assert_eq!(ord.new_of_old(old), k);
            }
        }
    }

    fn bandwidth(lap: &LaplacianMatrix, ord: &EliminationOrdering) -> usize {
        let mut bw = 0;
        for j in 0..lap.n() {
            for (i, _) in lap.col(j) {
                if i != j {
                    let a = ord.new_of_old(i);
                    let b = ord.new_of_old(j);
                    bw = bw.max(a.abs_diff(b));
                }
            }
        }
        bw
    }

    #[test]
    fn rcm_path_has_bandwidth_one() {
        let lap = path(40);
        let ord = compute_ordering(&lap, OrderingMethod::Rcm);
        assert_eq!(bandwidth(&lap, &ord), 1);
    }

    #[test]
    fn rcm_shrinks_grid_bandwidth() {
        // natural order of a scrambled grid has large bandwidth; rcm recovers
        // something near the grid width
        let g = WeightedGraph::grid(10, 10);
        let lap = build_laplacian(&g);
        let ord = compute_ordering(&lap, OrderingMethod::Rcm);
        assert!(bandwidth(&lap, &ord) <= 15, "bandwidth {}", bandwidth(&lap, &ord));
    }

    #[test]
    fn min_degree_eliminates_leaves_first() {
        // star: center 0 with 5 leaves; every leaf has degree 1. Once four
        // leaves are gone the center's degree drops to 1 and ties with the
        // remaining leaf, so the center may go second-to-last — but never
        // before at least four leaves.
        let edges: Vec<_> = (1..6).map(|v| (0, v, 1.0)).collect();
        let lap = build_laplacian(&WeightedGraph::from_edges(6, edges).unwrap());
        let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
        assert!(ord.new_of_old(0) >= 4, "center eliminated after >= 4 leaves");
    }

    #[test]
    fn deterministic_across_runs() {
        let g = WeightedGraph::grid(9, 9);
        let lap = build_laplacian(&g);
        let a = compute_ordering(&lap, OrderingMethod::AmdLike);
        let b = compute_ordering(&lap, OrderingMethod::AmdLike);
        assert_eq!(a, b);
        let a = compute_ordering(&lap, OrderingMethod::Rcm);
        let b = compute_ordering(&lap, OrderingMethod::Rcm);
        assert_eq!(a, b);
    }

    #[test]
    fn handles_disconnected_graphs() {
        let g = WeightedGraph::from_edges(5, vec![(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        let lap = build_laplacian(&g);
        for m in [OrderingMethod::Rcm, OrderingMethod::AmdLike] {
            let ord = compute_ordering(&lap, m);
            assert_eq!(ord.n(), 5);
            let mut perm = ord.perm().to_vec();
            perm.sort_unstable();
            assert_eq!(perm, vec![0, 1, 2, 3, 4]);
        }
    }
}
