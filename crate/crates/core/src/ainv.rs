//! Sparse approximate inverse of a lower-triangular M-matrix factor.
//!
//! Columns of `Z = L^{-1}` obey
//!
//! ```text
//! z_j = (1/L[j][j]) e_j + sum over stored L[i][j] != 0, i > j of (-L[i][j]/L[j][j]) z_i
//! ```
//!
//! so they can be built back to front from already-computed columns. Because
//! `L` has a positive diagonal and nonpositive off-diagonals, every
//! coefficient above is nonnegative and so is every entry of `Z`; truncation
//! only removes entries and keeps the rest intact, so the computed columns
//! stay entrywise nonnegative. That is asserted on every construction.
//!
//! A column is truncated only when it carries more than `log2(n)` nonzeros:
//! the smallest entries are dropped while their total stays within `epsilon`
//! times the column's 1-norm. The diagonal entry is never dropped so each
//! column keeps its anchor `1/L[j][j]`.

use crate::error::{Error, Result};
use crate::factor::{DepthProfile, SparseCholeskyFactor};
use crate::order::EliminationOrdering;

/// Sparse nonnegative approximation of `L^{-1}`, column major, row indices
/// sorted, in elimination numbering.
#[derive(Debug, Clone)]
pub struct ApproxInverse {
    n: usize,
    epsilon: f64,
    cols: Vec<AinvColumn>,
    ordering: EliminationOrdering,
}

#[derive(Debug, Clone, Default)]
pub struct AinvColumn {
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
    /// 1-norm mass removed from this column by truncation.
    pub truncated_mass: f64,
}

impl AinvColumn {
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn norm1(&self) -> f64 {
        self.vals.iter().sum()
    }
}

impl ApproxInverse {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn col(&self, j: usize) -> &AinvColumn {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.nnz()).sum()
    }

    pub fn ordering(&self) -> &EliminationOrdering {
        &self.ordering
    }

    /// Writes columns as `row col value` triplets with a stats header.
    pub fn dump<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# approximate inverse: n={} nnz={} epsilon={:e}",
            self.n,
            self.nnz(),
            self.epsilon
        )?;
        for j in 0..self.n {
            let c = &self.cols[j];
            for (r, v) in c.rows.iter().zip(&c.vals) {
                writeln!(w, "{} {} {:.16e}", r, j, v)?;
            }
        }
        Ok(())
    }
}

/// Builds the approximate inverse of `factor` with truncation budget
/// `epsilon` in `[0, 1)`; `epsilon = 0` keeps every computed entry.
pub fn approximate_inverse(factor: &SparseCholeskyFactor, epsilon: f64) -> Result<ApproxInverse> {
    if !(0.0..1.0).contains(&epsilon) || !epsilon.is_finite() {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let n = factor.n();
    let keep_all_below = (n as f64).log2().floor() as usize;

    let mut cols: Vec<AinvColumn> = vec![AinvColumn::default(); n];
    // dense scatter workspace with a touched-index stack
    let mut work = vec![0.0f64; n];
    let mut in_col = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();

    for j in (0..n).rev() {
        let dj = factor.diag(j);
        work[j] = 1.0 / dj;
        in_col[j] = true;
        touched.push(j);
        for (i, lij) in factor.col_offdiag(j) {
            let coef = -lij / dj;
            if coef == 0.0 {
                continue;
            }
            let child = &cols[i];
            for (r, v) in child.rows.iter().zip(&child.vals) {
                if !in_col[*r] {
                    in_col[*r] = true;
                    touched.push(*r);
                }
                work[*r] += coef * v;
            }
        }
        touched.sort_unstable();

        let mut col = AinvColumn {
            rows: Vec::with_capacity(touched.len()),
            vals: Vec::with_capacity(touched.len()),
            truncated_mass: 0.0,
        };
        for &r in &touched {
            let v = work[r];
            assert!(v >= 0.0, "negative entry {v} in approximate inverse column {j}");
            col.rows.push(r);
            col.vals.push(v);
        }
        if epsilon > 0.0 && col.nnz() > keep_all_below {
            truncate_in_place(&mut col, epsilon, Some(j));
        }

        for &r in &touched {
            work[r] = 0.0;
            in_col[r] = false;
        }
        touched.clear();
        cols[j] = col;
    }

    Ok(ApproxInverse {
        n,
        epsilon,
        cols,
        ordering: factor.ordering().clone(),
    })
}

/// Drops the largest set of smallest-magnitude entries whose combined mass
/// stays within `epsilon` times the 1-norm of `col`; ties between equal
/// magnitudes drop the lower row index first. `epsilon = 0` returns the input
/// unchanged. The standalone form protects no position.
pub fn truncate_column(col: &[(usize, f64)], epsilon: f64) -> Vec<(usize, f64)> {
    let mut c = AinvColumn {
        rows: col.iter().map(|&(r, _)| r).collect(),
        vals: col.iter().map(|&(_, v)| v).collect(),
        truncated_mass: 0.0,
    };
    if epsilon > 0.0 {
        truncate_in_place(&mut c, epsilon, None);
    }
    c.rows.into_iter().zip(c.vals).collect()
}

fn truncate_in_place(col: &mut AinvColumn, epsilon: f64, protect: Option<usize>) {
    let norm1: f64 = col.vals.iter().map(|v| v.abs()).sum();
    let budget = epsilon * norm1;
    // candidates sorted by magnitude, lowest row index first among equals
    let mut order: Vec<usize> = (0..col.rows.len())
        .filter(|&t| Some(col.rows[t]) != protect)
        .collect();
    order.sort_by(|&a, &b| {
        col.vals[a]
            .abs()
            .partial_cmp(&col.vals[b].abs())
            .unwrap()
            .then(col.rows[a].cmp(&col.rows[b]))
    });
    let mut dropped = vec![false; col.rows.len()];
    let mut mass = 0.0;
    for &t in &order {
        let next = mass + col.vals[t].abs();
        if next <= budget {
            mass = next;
            dropped[t] = true;
        } else {
            break;
        }
    }
    if mass == 0.0 {
        return;
    }
    col.truncated_mass += mass;
    let mut rows = Vec::with_capacity(col.rows.len());
    let mut vals = Vec::with_capacity(col.rows.len());
    for ((&gone, &r), &v) in dropped.iter().zip(&col.rows).zip(&col.vals) {
        if !gone {
            rows.push(r);
            vals.push(v);
        }
    }
    col.rows = rows;
    col.vals = vals;
}

/// Per-column relative 1-norm error bounds for an approximate inverse built
/// from a full factor: column `p` is within `depth(p) * epsilon` of the exact
/// inverse column.
#[derive(Debug, Clone)]
pub struct ErrorCertificate {
    epsilon: f64,
    bound: Vec<f64>,
}

impl ErrorCertificate {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn bound(&self, p: usize) -> f64 {
        self.bound[p]
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bound
    }
}

pub fn error_certificate(z: &ApproxInverse, d: &DepthProfile) -> Result<ErrorCertificate> {
    if d.depths().len() != z.n() {
        return Err(Error::DimensionMismatch {
            left: d.depths().len(),
            right: z.n(),
        });
    }
    let bound = d
        .depths()
        .iter()
        .map(|&dep| dep as f64 * z.epsilon())
        .collect();
    Ok(ErrorCertificate {
        epsilon: z.epsilon(),
        bound,
    })
}

/// Heuristic per-query error amplification
///
/// ```text
/// alpha = 2 ||z_p - z_q||_1 (||z_p||_1 depth(p) + ||z_q||_1 depth(q)) / ||z_p - z_q||_2^2
/// ```
///
/// evaluated on the approximate columns, so it is a diagnostic rather than a
/// guarantee; `alpha * epsilon` estimates the relative resistance error band.
pub fn alpha_surrogate(z: &ApproxInverse, d: &DepthProfile, p: usize, q: usize) -> Option<f64> {
    if p == q || p >= z.n() || q >= z.n() {
        return None;
    }
    let (diff1, diff2sq) = diff_norms(z.col(p), z.col(q));
    if diff2sq == 0.0 {
        return None;
    }
    let np = z.col(p).norm1();
    let nq = z.col(q).norm1();
    let dp = d.depth(p) as f64;
    let dq = d.depth(q) as f64;
    Some(2.0 * diff1 * (np * dp + nq * dq) / diff2sq)
}

/// (1-norm, squared 2-norm) of the difference of two sorted sparse columns.
pub(crate) fn diff_norms(a: &AinvColumn, b: &AinvColumn) -> (f64, f64) {
    let mut ia = 0;
    let mut ib = 0;
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    while ia < a.rows.len() || ib < b.rows.len() {
        let d = match (a.rows.get(ia), b.rows.get(ib)) {
            (Some(&ra), Some(&rb)) if ra == rb => {
                let d = a.vals[ia] - b.vals[ib];
                ia += 1;
                ib += 1;
                d
            }
            (Some(&ra), Some(&rb)) if ra < rb => {
                let d = a.vals[ia];
                ia += 1;
                d
            }
            (Some(_), Some(_)) => {
                let d = -b.vals[ib];
                ib += 1;
                d
            }
            (Some(_), None) => {
                let d = a.vals[ia];
                ia += 1;
                d
            }
            (None, Some(_)) => {
                let d = -b.vals[ib];
                ib += 1;
                d
            }
            (None, None) => unreachable!(),
        };
        n1 += d.abs();
        n2 += d * d;
    }
    (n1, n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{depth_profile, full_cholesky, incomplete_cholesky};
    use crate::graph::{build_laplacian, ground_laplacian, GroundingPolicy, LaplacianMatrix, WeightedGraph};
    use crate::order::{compute_ordering, EliminationOrdering, OrderingMethod};
    use rand::Rng;

    fn grounded_graph(n: usize, extra: usize, seed: u64) -> LaplacianMatrix {
        let mut rng = crate::seed::rng(seed, 13);
        let mut edges = Vec::new();
        for v in 1..n {
            let u = rng.gen_range(0..v);
            edges.push((u, v, rng.gen_range(0.2..3.0)));
        }
        for _ in 0..extra {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                edges.push((u, v, rng.gen_range(0.2..3.0)));
            }
        }
        let g = WeightedGraph::from_edges(n, edges).unwrap();
        ground_laplacian(&build_laplacian(&g), 1e-3, GroundingPolicy::Deterministic).unwrap()
    }

    fn dense_inverse_of_factor(f: &crate::factor::SparseCholeskyFactor) -> nalgebra::DMatrix<f64> {
        // independent route: dense forward substitution per unit vector
        let n = f.n();
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            for (i, v) in f.col(j) {
                l[(i, j)] = v;
            }
        }
        let mut inv = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = nalgebra::DVector::zeros(n);
            e[j] = 1.0;
            let x = l.solve_lower_triangular(&e).unwrap();
            inv.set_column(j, &x);
        }
        inv
    }

    #[test]
    fn diagonal_factor_inverts_exactly() {
        let lap = LaplacianMatrix::from_triplets(3, &[(0, 0, 4.0), (1, 1, 9.0), (2, 2, 16.0)]);
        let f = full_cholesky(&lap, &EliminationOrdering::identity(3)).unwrap();
        let z = approximate_inverse(&f, 1e-3).unwrap();
        for (j, want) in [(0, 0.5), (1, 1.0 / 3.0), (2, 0.25)] {
            assert_eq!(z.col(j).rows, vec![j]);
            assert_eq!(z.col(j).vals, vec![want]);
        }
    }

    #[test]
    fn exact_when_epsilon_zero() {
        for seed in 0..5 {
            let lap = grounded_graph(40, 30, seed);
            let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
            let f = full_cholesky(&lap, &ord).unwrap();
            let z = approximate_inverse(&f, 0.0).unwrap();
            let want = dense_inverse_of_factor(&f);
            let mut got = nalgebra::DMatrix::zeros(f.n(), f.n());
            for j in 0..f.n() {
                let c = z.col(j);
                for (r, v) in c.rows.iter().zip(&c.vals) {
                    got[(*r, j)] = *v;
                }
            }
            let diff = (&want - &got).abs().max();
            assert!(diff <= 1e-10, "diff {diff}");
        }
    }

    #[test]
    fn columns_stay_nonnegative_and_anchored() {
        for seed in 0..6 {
            let lap = grounded_graph(50, 60, seed + 10);
            let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
            for f in [
                full_cholesky(&lap, &ord).unwrap(),
                incomplete_cholesky(&lap, &ord, 1e-2).unwrap(),
            ] {
                for eps in [1e-1, 1e-2, 1e-3] {
                    let z = approximate_inverse(&f, eps).unwrap();
                    for j in 0..z.n() {
                        let c = z.col(j);
                        assert!(c.vals.iter().all(|&v| v >= 0.0));
                        // the diagonal anchor survives truncation
                        let pos = c.rows.binary_search(&j).expect("diagonal present");
                        assert!(c.vals[pos] >= 1.0 / f.diag(j) - 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn short_columns_are_never_truncated() {
        // path factor: column j of the inverse reaches every row below j, but
        // near the bottom columns are short and must be kept whole
        let edges: Vec<_> = (0..31).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::from_edges(32, edges).unwrap();
        let lap = ground_laplacian(&build_laplacian(&g), 1e-3, GroundingPolicy::Deterministic).unwrap();
        let f = full_cholesky(&lap, &EliminationOrdering::identity(32)).unwrap();
        let z = approximate_inverse(&f, 0.9).unwrap();
        // log2(32) = 5: on a path, column j of the inverse spans rows j..=31,
        // so columns 27..=31 have at most 5 entries and must be kept whole
        // (their children were kept whole too, so they are exact)
        for j in 27..32 {
            assert_eq!(z.col(j).truncated_mass, 0.0, "column {j} kept whole");
            assert_eq!(z.col(j).nnz(), 32 - j);
        }
    }

    #[test]
    fn per_column_truncation_budget_holds() {
        for seed in 0..4 {
            let lap = grounded_graph(60, 80, seed + 30);
            let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
            let f = full_cholesky(&lap, &ord).unwrap();
            for eps in [1e-1, 1e-2] {
                let z = approximate_inverse(&f, eps).unwrap();
                for j in 0..z.n() {
                    let c = z.col(j);
                    let norm_before = c.norm1() + c.truncated_mass;
                    assert!(
                        c.truncated_mass <= eps * norm_before + 1e-12 * norm_before,
                        "column {j} dropped {} of {}",
                        c.truncated_mass,
                        norm_before
                    );
                }
            }
        }
    }

    #[test]
    fn truncate_small_example() {
        let col = vec![(0, 0.5), (1, 0.3), (2, 0.15), (3, 0.05)];
        let out = truncate_column(&col, 0.1);
        // norm 1.0, budget 0.1: only the 0.05 entry fits
        assert_eq!(out, vec![(0, 0.5), (1, 0.3), (2, 0.15)]);
    }

    #[test]
    fn truncate_epsilon_zero_is_identity() {
        let col = vec![(0, 0.5), (3, 0.0), (7, 0.2)];
        assert_eq!(truncate_column(&col, 0.0), col);
    }

    #[test]
    fn truncate_breaks_ties_toward_lower_index() {
        // two equal smallest entries but budget for only one
        let col = vec![(0, 1.0), (4, 0.1), (9, 0.1)];
        let out = truncate_column(&col, 0.1); // budget 0.12: one entry fits
        assert_eq!(out, vec![(0, 1.0), (9, 0.1)]);
    }

    #[test]
    fn truncation_matches_exhaustive_scan() {
        // oracle: try every k over the magnitude-sorted entries and keep the
        // largest k whose ascending prefix sum fits the budget
        let mut rng = crate::seed::rng(77, 0);
        for _ in 0..50 {
            let len = rng.gen_range(1..100usize);
            let col: Vec<(usize, f64)> = (0..len)
                .map(|r| (r, rng.gen_range(1e-6..1.0f64)))
                .collect();
            let eps = rng.gen_range(0.01..0.5);
            let out = truncate_column(&col, eps);

            let norm: f64 = col.iter().map(|&(_, v)| v).sum();
            let mut sorted: Vec<f64> = col.iter().map(|&(_, v)| v).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut best_k = 0;
            for k in 0..=len {
                let mass: f64 = sorted[..k].iter().fold(0.0, |acc, v| acc + v);
                if mass <= eps * norm {
                    best_k = k;
                }
            }
            assert_eq!(out.len(), len - best_k, "kept count for eps {eps}");
        }
    }

    #[test]
    fn nnz_shrinks_as_epsilon_grows() {
        let lap = grounded_graph(80, 120, 3);
        let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
        let f = full_cholesky(&lap, &ord).unwrap();
        let mut last = usize::MAX;
        for eps in [1e-4, 1e-3, 1e-2, 1e-1] {
            let z = approximate_inverse(&f, eps).unwrap();
            assert!(z.nnz() <= last);
            last = z.nnz();
        }
    }

    #[test]
    fn column_error_stays_within_depth_bound() {
        for seed in 0..4 {
            let lap = grounded_graph(70, 90, seed + 60);
            let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
            let f = full_cholesky(&lap, &ord).unwrap();
            let d = depth_profile(&f);
            let exact = dense_inverse_of_factor(&f);
            for eps in [1e-2, 1e-3] {
                let z = approximate_inverse(&f, eps).unwrap();
                for p in 0..f.n() {
                    let c = z.col(p);
                    let mut err = 0.0;
                    let mut norm = 0.0;
                    let mut it = c.rows.iter().zip(&c.vals).peekable();
                    for r in 0..f.n() {
                        let zv = exact[(r, p)];
                        norm += zv.abs();
                        let approx = match it.peek() {
                            Some(&(&row, &v)) if row == r => {
                                it.next();
                                v
                            }
                            _ => 0.0,
                        };
                        err += (zv - approx).abs();
                    }
                    let bound = d.depth(p) as f64 * eps + 1e-12;
                    assert!(
                        err <= bound * norm,
                        "column {p}: err {err:e} norm {norm:e} bound {bound:e}"
                    );
                }
            }
        }
    }

    #[test]
    fn certificate_bounds_follow_depths() {
        let edges: Vec<_> = (0..3).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::from_edges(4, edges).unwrap();
        let lap = ground_laplacian(&build_laplacian(&g), 1e-3, GroundingPolicy::Deterministic).unwrap();
        let f = full_cholesky(&lap, &EliminationOrdering::identity(4)).unwrap();
        let d = depth_profile(&f);
        let z = approximate_inverse(&f, 1e-3).unwrap();
        let cert = error_certificate(&z, &d).unwrap();
        assert_eq!(cert.bounds(), &[3e-3, 2e-3, 1e-3, 0.0]);

        let z0 = approximate_inverse(&f, 0.0).unwrap();
        let cert0 = error_certificate(&z0, &d).unwrap();
        assert!(cert0.bounds().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn alpha_surrogate_is_finite_and_positive() {
        let lap = grounded_graph(40, 40, 2);
        let ord = compute_ordering(&lap, OrderingMethod::AmdLike);
        let f = full_cholesky(&lap, &ord).unwrap();
        let d = depth_profile(&f);
        let z = approximate_inverse(&f, 1e-3).unwrap();
        let a = alpha_surrogate(&z, &d, 0, 1).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!(alpha_surrogate(&z, &d, 3, 3).is_none());
    }

    proptest::proptest! {
        #[test]
        fn truncated_mass_within_budget(seed in 0u64..100) {
            let mut rng = crate::seed::rng(seed, 21);
            let len = rng.gen_range(1..60usize);
            let col: Vec<(usize, f64)> = (0..len).map(|r| (r, rng.gen_range(0.0..1.0f64))).collect();
            let eps = rng.gen_range(0.0..0.9f64);
            let out = truncate_column(&col, eps);
            let norm: f64 = col.iter().map(|&(_, v)| v).sum();
            let kept: f64 = out.iter().map(|&(_, v)| v).sum();
            proptest::prop_assert!(norm - kept <= eps * norm + 1e-12);
        }
    }
}
