//! Exact elimination of interior nodes: the kept-node system that reproduces
//! full-system voltages for any current injection supported on kept nodes.

use crate::error::{Error, Result};
use effres_core::factor::{self, SparseCholeskyFactor};
use effres_core::graph::LaplacianMatrix;
use effres_core::order::{self, OrderingMethod};

/// Eliminates the given rows/columns and returns the Schur complement over
/// the kept nodes, numbered by their ascending original index. The matrix is
/// symmetrized and off-diagonal rounding noise with the wrong sign is
/// discarded, so the result is again an SDD conductance matrix.
///
/// Every eliminated connected component must reach a kept node or carry
/// conductance to ground, otherwise its pivot block is singular.
pub fn schur_eliminate(lap: &LaplacianMatrix, eliminate: &[usize]) -> Result<LaplacianMatrix> {
    let n = lap.n();
    let mut is_interior = vec![false; n];
    for &u in eliminate {
        assert!(u < n, "eliminate index {u} out of range");
        is_interior[u] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&u| is_interior[u]).collect();
    let kept: Vec<usize> = (0..n).filter(|&u| !is_interior[u]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &u) in interior.iter().enumerate() {
        local[u] = i;
    }
    let mut kept_local = vec![usize::MAX; n];
    for (i, &u) in kept.iter().enumerate() {
        kept_local[u] = i;
    }

    check_interior_reaches_support(lap, &is_interior, &interior)?;

    if interior.is_empty() {
        // nothing to eliminate: restriction is the whole matrix
        let triplets: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|j| lap.col(j).map(move |(i, v)| (i, j, v)))
            .collect();
        return Ok(LaplacianMatrix::from_triplets(n, &triplets));
    }

    // interior-interior block and its factor
    let mut ee: Vec<(usize, usize, f64)> = Vec::new();
    for (j_local, &j) in interior.iter().enumerate() {
        for (i, v) in lap.col(j) {
            if is_interior[i] {
                ee.push((local[i], j_local, v));
            }
        }
    }
    let a_ee = LaplacianMatrix::from_triplets(interior.len(), &ee);
    let ord = order::compute_ordering(&a_ee, OrderingMethod::AmdLike);
    let fac = factor::full_cholesky(&a_ee, &ord).map_err(|e| match e {
        effres_core::Error::NonpositivePivot { node, .. } => Error::SingularPivot {
            node: interior[node],
        },
        other => Error::Core(other),
    })?;

    // interior -> kept couplings, grouped by interior node
    let mut cross: Vec<Vec<(usize, f64)>> = vec![Vec::new(); interior.len()];
    for (j_local, &j) in interior.iter().enumerate() {
        for (i, v) in lap.col(j) {
            if !is_interior[i] {
                cross[j_local].push((kept_local[i], v));
            }
        }
    }

    let nk = kept.len();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; interior.len()];
    let mut acc = vec![0.0; nk];
    let mut touched: Vec<usize> = Vec::new();
    for (c_local, &c) in kept.iter().enumerate() {
        let mut any_cross = false;
        for (i, v) in lap.col(c) {
            if is_interior[i] {
                rhs[local[i]] = v;
                any_cross = true;
            } else {
                let r = kept_local[i];
                if acc[r] == 0.0 {
                    touched.push(r);
                }
                acc[r] += v;
            }
        }
        if any_cross {
            let x = solve_in_order(&fac, &rhs);
            for (i_local, xi) in x.iter().enumerate() {
                if *xi != 0.0 {
                    for &(r, w) in &cross[i_local] {
                        if acc[r] == 0.0 {
                            touched.push(r);
                        }
                        acc[r] -= w * xi;
                    }
                }
            }
            for r in rhs.iter_mut() {
                *r = 0.0;
            }
        }
        for &r in &touched {
            let v = acc[r];
            acc[r] = 0.0;
            if v != 0.0 {
                // half now, half from the mirrored column: exact symmetrization
                triplets.push((r, c_local, 0.5 * v));
                triplets.push((c_local, r, 0.5 * v));
            }
        }
        touched.clear();
    }

    // wrong-signed off-diagonal rounding noise breaks the conductance
    // reading of the matrix; drop it
    let raw = LaplacianMatrix::from_triplets(nk, &triplets);
    let cleaned: Vec<(usize, usize, f64)> = (0..nk)
        .flat_map(|j| raw.col(j).map(move |(i, v)| (i, j, v)))
        .filter(|&(i, j, v)| i == j || v < 0.0)
        .collect();
    let s = LaplacianMatrix::from_triplets(nk, &cleaned);
    for j in 0..nk {
        assert!(s.diagonal(j) > 0.0, "schur diagonal {j} not positive");
    }
    Ok(s)
}

/// Solves with a factor built over some elimination ordering of the same
/// index space; `b` and the result are in that index space.
fn solve_in_order(fac: &SparseCholeskyFactor, b: &[f64]) -> Vec<f64> {
    fac.solve(b)
}

fn check_interior_reaches_support(
    lap: &LaplacianMatrix,
    is_interior: &[bool],
    interior: &[usize],
) -> Result<()> {
    let mut seen = vec![false; lap.n()];
    for &start in interior {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut supported = false;
        while let Some(u) = queue.pop_front() {
            // excess conductance means a path to ground
            if lap.diag_excess(u) > 1e-9 * lap.diagonal(u) {
                supported = true;
            }
            for (i, _) in lap.col(u) {
                if i == u {
                    continue;
                }
                if !is_interior[i] {
                    supported = true;
                } else if !seen[i] {
                    seen[i] = true;
                    comp.push(i);
                    queue.push_back(i);
                }
            }
        }
        if !supported {
            return Err(Error::SingularPivot { node: start });
        }
    }
    Ok(())
}

/// Compares kept-node voltages from the reduced system against full-system
/// solves under seeded random injections; returns the worst relative
/// mismatch. Components without any conductance to ground are pinned by a
/// small bump on their lowest kept node, applied identically on both sides,
/// which leaves the Schur complement relation intact.
pub fn verify_schur(
    lap: &LaplacianMatrix,
    eliminate: &[usize],
    s: &LaplacianMatrix,
    seed: u64,
    injections: usize,
) -> Result<f64> {
    let n = lap.n();
    let mut is_interior = vec![false; n];
    for &u in eliminate {
        is_interior[u] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&u| !is_interior[u]).collect();
    assert_eq!(s.n(), kept.len());

    let bumps = grounding_bumps(lap, &is_interior)?;
    let full_b = with_bumps(lap, &bumps);
    let kept_local: std::collections::HashMap<usize, usize> =
        kept.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let s_bumps: Vec<(usize, f64)> = bumps
        .iter()
        .map(|&(u, g)| (kept_local[&u], g))
        .collect();
    let s_b = with_bumps(s, &s_bumps);

    let ord_full = order::compute_ordering(&full_b, OrderingMethod::AmdLike);
    let fac_full = factor::full_cholesky(&full_b, &ord_full)?;
    let ord_s = order::compute_ordering(&s_b, OrderingMethod::AmdLike);
    let fac_s = factor::full_cholesky(&s_b, &ord_s)?;

    let mut rng = effres_core::seed::rng(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..injections {
        let inj: Vec<f64> = (0..kept.len())
            .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
            .collect();
        let mut b_full = vec![0.0; n];
        for (i, &u) in kept.iter().enumerate() {
            b_full[u] = inj[i];
        }
        let v_full = fac_full.solve(&b_full);
        let v_s = fac_s.solve(&inj);
        let scale = v_s.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        for (i, &u) in kept.iter().enumerate() {
            worst = worst.max((v_full[u] - v_s[i]).abs() / scale);
        }
    }
    Ok(worst)
}

/// One bump per connected component lacking conductance to ground, placed on
/// the component's lowest kept node.
pub(crate) fn grounding_bumps(
    lap: &LaplacianMatrix,
    is_interior: &[bool],
) -> Result<Vec<(usize, f64)>> {
    let mut mean_offdiag = 0.0;
    let mut count = 0usize;
    for j in 0..lap.n() {
        for (i, v) in lap.col(j) {
            if i != j {
                mean_offdiag += v.abs();
                count += 1;
            }
        }
    }
    let g0 = if count == 0 { 1.0 } else { 0.1 * mean_offdiag / count as f64 };
    let mut bumps = Vec::new();
    for comp in lap.components() {
        let grounded = comp
            .iter()
            .any(|&u| lap.diag_excess(u) > 1e-9 * lap.diagonal(u));
        if grounded {
            continue;
        }
        let lowest_kept = comp.iter().copied().find(|&u| !is_interior[u]);
        match lowest_kept {
            Some(u) => bumps.push((u, g0)),
            None => {
                return Err(Error::SingularPivot { node: comp[0] });
            }
        }
    }
    Ok(bumps)
}

pub(crate) fn with_bumps(lap: &LaplacianMatrix, bumps: &[(usize, f64)]) -> LaplacianMatrix {
    if bumps.is_empty() {
        return lap.clone();
    }
    let mut triplets: Vec<(usize, usize, f64)> = (0..lap.n())
        .flat_map(|j| lap.col(j).map(move |(i, v)| (i, j, v)))
        .collect();
    triplets.extend(bumps.iter().map(|&(u, g)| (u, u, g)));
    LaplacianMatrix::from_triplets(lap.n(), &triplets)
}
