//! Sparse Cholesky factorization of grounded SDD matrices.
//!
//! Left-looking, column by column. Column `j` starts from the lower triangle
//! of the input and subtracts `L[j][k] * L[j.., k]` for every earlier column
//! `k` whose stored pattern reaches row `j`; those columns are found with
//! per-row pending lists, so only stored entries are ever touched and the
//! incomplete variant pays nothing for entries it dropped.

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;
use crate::order::EliminationOrdering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorKind {
    Full,
    Incomplete { drop_tol: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct FactorOptions {
    pub drop_tol: f64,
    /// Add each dropped magnitude to its column's diagonal before the pivot
    /// square root. Keeps pivots positive and row sums close to the input.
    pub compensate: bool,
}

impl FactorOptions {
    pub fn full() -> Self {
        FactorOptions {
            drop_tol: 0.0,
            compensate: true,
        }
    }
}

/// Lower-triangular factor `L` with `L L^T = P A P^T` for the ordering `P`.
///
/// Columns store the diagonal first, then strictly increasing row indices.
/// All indices are in elimination (permuted) numbering; conversions go
/// through [`SparseCholeskyFactor::ordering`].
#[derive(Debug, Clone)]
pub struct SparseCholeskyFactor {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    ordering: EliminationOrdering,
    kind: FactorKind,
    /// Dropped absolute mass per column (zero when nothing was dropped).
    dropped_mass: Vec<f64>,
}

pub fn full_cholesky(
    lap: &LaplacianMatrix,
    ordering: &EliminationOrdering,
) -> Result<SparseCholeskyFactor> {
    factorize(lap, ordering, FactorOptions::full(), FactorKind::Full)
}

pub fn incomplete_cholesky(
    lap: &LaplacianMatrix,
    ordering: &EliminationOrdering,
    drop_tol: f64,
) -> Result<SparseCholeskyFactor> {
    incomplete_cholesky_with(
        lap,
        ordering,
        FactorOptions {
            drop_tol,
            compensate: true,
        },
    )
}

/// Incomplete factorization with explicit options; `compensate: false` keeps
/// dropped mass out of the diagonal for side-by-side comparisons.
pub fn incomplete_cholesky_with(
    lap: &LaplacianMatrix,
    ordering: &EliminationOrdering,
    opts: FactorOptions,
) -> Result<SparseCholeskyFactor> {
    if !(0.0..1.0).contains(&opts.drop_tol) || !opts.drop_tol.is_finite() {
        return Err(Error::InvalidDropTol(opts.drop_tol));
    }
    let kind = FactorKind::Incomplete {
        drop_tol: opts.drop_tol,
    };
    factorize(lap, ordering, opts, kind)
}

fn factorize(
    lap: &LaplacianMatrix,
    ordering: &EliminationOrdering,
    opts: FactorOptions,
    kind: FactorKind,
) -> Result<SparseCholeskyFactor> {
    let n = lap.n();
    assert_eq!(ordering.n(), n, "ordering size mismatch");

    // lower triangle of the permuted matrix, CSC, rows sorted
    let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(lap.nnz() / 2 + n);
    for old_j in 0..n {
        let new_j = ordering.new_of_old(old_j);
        for (old_i, v) in lap.col(old_j) {
            let new_i = ordering.new_of_old(old_i);
            if new_i >= new_j {
                trips.push((new_j, new_i, v));
            }
        }
    }
    trips.sort_by_key(|t| (t.0, t.1));
    let mut a_ptr = vec![0usize; n + 1];
    let mut a_row = Vec::with_capacity(trips.len());
    let mut a_val = Vec::with_capacity(trips.len());
    for &(c, r, v) in &trips {
        a_row.push(r);
        a_val.push(v);
        a_ptr[c + 1] += 1;
    }
    for c in 0..n {
        a_ptr[c + 1] += a_ptr[c];
    }
    drop(trips);

    let mut col_ptr = vec![0usize];
    let mut row_idx: Vec<usize> = Vec::with_capacity(a_row.len() * 2);
    let mut vals: Vec<f64> = Vec::with_capacity(a_row.len() * 2);
    let mut dropped_mass = vec![0.0f64; n];

    // pending[r]: columns whose next unconsumed stored entry sits in row r,
    // as (column, position in row_idx/vals)
    let mut pending: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut work = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut in_col = vec![false; n];

    for j in 0..n {
        // scatter column j of the permuted input
        for t in a_ptr[j]..a_ptr[j + 1] {
            let i = a_row[t];
            if !in_col[i] {
                in_col[i] = true;
                touched.push(i);
            }
            work[i] += a_val[t];
        }
        // consume updates from earlier columns reaching row j
        let updates = std::mem::take(&mut pending[j]);
        for (k, pos) in updates {
            let ljk = vals[pos];
            let end = col_ptr[k + 1];
            for t in pos..end {
                let i = row_idx[t];
                if !in_col[i] {
                    in_col[i] = true;
                    touched.push(i);
                }
                work[i] -= ljk * vals[t];
            }
            if pos + 1 < end {
                pending[row_idx[pos + 1]].push((k, pos + 1));
            }
        }

        touched.sort_unstable();
        debug_assert!(touched.first() == Some(&j) || touched.is_empty());

        let threshold = if opts.drop_tol > 0.0 {
            let colnorm: f64 = touched.iter().map(|&i| work[i].abs()).sum();
            opts.drop_tol * colnorm
        } else {
            0.0
        };

        let mut pivot = work[j];
        if threshold > 0.0 {
            for &i in &touched {
                if i > j {
                    let a = work[i].abs();
                    if a < threshold {
                        dropped_mass[j] += a;
                        work[i] = 0.0;
                    }
                }
            }
            if opts.compensate {
                pivot += dropped_mass[j];
            }
        }

        if !pivot.is_finite() || pivot <= 0.0 {
            return Err(Error::NonpositivePivot {
                column: j,
                node: ordering.old_of_new(j),
                pivot,
            });
        }
        let d = pivot.sqrt();
        row_idx.push(j);
        vals.push(d);
        let col_start = row_idx.len() - 1;
        for &i in &touched {
            if i > j && work[i] != 0.0 {
                row_idx.push(i);
                vals.push(work[i] / d);
            }
        }
        col_ptr.push(row_idx.len());
        if col_start + 1 < row_idx.len() {
            pending[row_idx[col_start + 1]].push((j, col_start + 1));
        }

        for &i in &touched {
            work[i] = 0.0;
            in_col[i] = false;
        }
        touched.clear();
    }

    Ok(SparseCholeskyFactor {
        n,
        col_ptr,
        row_idx,
        vals,
        ordering: ordering.clone(),
        kind,
        dropped_mass,
    })
}

impl SparseCholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn is_full(&self) -> bool {
        matches!(self.kind, FactorKind::Full)
    }

    pub fn ordering(&self) -> &EliminationOrdering {
        &self.ordering
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.vals[self.col_ptr[j]]
    }

    pub fn dropped_mass(&self, j: usize) -> f64 {
        self.dropped_mass[j]
    }

    /// Column `j` including the diagonal, rows strictly increasing.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    /// Off-diagonal part of column `j`.
    pub fn col_offdiag(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j] + 1;
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    /// Solves `L y = b` in place (elimination numbering).
    pub fn solve_lower(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for j in 0..self.n {
            let yj = b[j];
            if yj == 0.0 {
                continue;
            }
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            let yj = yj / self.vals[lo];
            b[j] = yj;
            for t in lo + 1..hi {
                b[self.row_idx[t]] -= self.vals[t] * yj;
            }
        }
    }

    /// Solves `L^T x = b` in place (elimination numbering).
    pub fn solve_upper(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for j in (0..self.n).rev() {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            let mut s = b[j];
            for t in lo + 1..hi {
                s -= self.vals[t] * b[self.row_idx[t]];
            }
            b[j] = s / self.vals[lo];
        }
    }

    /// Solves `A x = b` through both triangular sweeps; `b` and the result are
    /// in the original node numbering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = vec![0.0; self.n];
        for old in 0..self.n {
            y[self.ordering.new_of_old(old)] = b[old];
        }
        self.solve_lower(&mut y);
        self.solve_upper(&mut y);
        let mut x = vec![0.0; self.n];
        for new in 0..self.n {
            x[self.ordering.old_of_new(new)] = y[new];
        }
        x
    }

    /// Writes the factor as `row col value` triplets in elimination
    /// numbering, one per line, preceded by a size header.
    pub fn dump<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# lower-triangular factor: n={} nnz={}", self.n, self.nnz())?;
        for j in 0..self.n {
            for (i, v) in self.col(j) {
                writeln!(w, "{} {} {:.16e}", i, j, v)?;
            }
        }
        Ok(())
    }
}

/// Per-node elimination depth of a factor.
///
/// `depth[p]` is zero when column `p` has no off-diagonal entries, otherwise
/// one plus the maximum depth over the rows of column `p`. It bounds how many
/// truncated columns can feed into column `p` of the approximate inverse.
#[derive(Debug, Clone)]
pub struct DepthProfile {
    depth: Vec<usize>,
    max_depth: usize,
}

impl DepthProfile {
    pub fn depth(&self, p: usize) -> usize {
        self.depth[p]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }
}

pub fn depth_profile(factor: &SparseCholeskyFactor) -> DepthProfile {
    let n = factor.n();
    let mut depth = vec![0usize; n];
    let mut max_depth = 0;
    for p in (0..n).rev() {
        let mut d = 0;
        for (i, _) in factor.col_offdiag(p) {
            d = d.max(1 + depth[i]);
        }
        depth[p] = d;
        max_depth = max_depth.max(d);
    }
    DepthProfile { depth, max_depth }
}
