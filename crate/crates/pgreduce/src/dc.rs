//! Operating-point solves for conductance models: current sources become
//! right-hand sides, voltage-pinned nodes are folded out of the unknowns.

use crate::error::{Error, Result};
use crate::model::ReducedModel;
use effres_core::factor;
use effres_core::graph::LaplacianMatrix;
use effres_core::order::{self, OrderingMethod};

/// Node voltages, parallel to the sorted global node list.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    nodes: Vec<usize>,
    volts: Vec<f64>,
}

impl DcSolution {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn volts(&self) -> &[f64] {
        &self.volts
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.nodes.binary_search(&node).ok().map(|i| self.volts[i])
    }
}

/// Solves for all node voltages. Every connected piece of the free
/// subnetwork must see ground or a pinned node, otherwise its potential is
/// undetermined and the solve is rejected.
pub fn dc_solve(model: &ReducedModel) -> Result<DcSolution> {
    let n = model.nodes.len();
    let mut pinned = vec![None; n];
    for &(u, v) in &model.fixed {
        pinned[model.local_of(u).unwrap()] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|&i| pinned[i].is_none()).collect();
    let mut free_local = vec![usize::MAX; n];
    for (f, &i) in free.iter().enumerate() {
        free_local[i] = f;
    }

    let nf = free.len();
    let mut diag = vec![0.0; nf];
    let mut rhs = vec![0.0; nf];
    let mut grounded = vec![false; nf];
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nf];
    for &(u, v, w) in &model.edges {
        let (lu, lv) = (model.local_of(u).unwrap(), model.local_of(v).unwrap());
        match (pinned[lu], pinned[lv]) {
            (None, None) => {
                let (fu, fv) = (free_local[lu], free_local[lv]);
                triplets.push((fu, fv, -w));
                triplets.push((fv, fu, -w));
                diag[fu] += w;
                diag[fv] += w;
                adj[fu].push(fv);
                adj[fv].push(fu);
            }
            (None, Some(vv)) => {
                let fu = free_local[lu];
                diag[fu] += w;
                rhs[fu] += w * vv;
                grounded[fu] = true;
            }
            (Some(vu), None) => {
                let fv = free_local[lv];
                diag[fv] += w;
                rhs[fv] += w * vu;
                grounded[fv] = true;
            }
            (Some(_), Some(_)) => {}
        }
    }
    for &(u, g) in &model.ground {
        let lu = model.local_of(u).unwrap();
        if pinned[lu].is_none() {
            let fu = free_local[lu];
            diag[fu] += g;
            grounded[fu] = true;
        }
    }
    for &(u, amps) in &model.injections {
        let lu = model.local_of(u).unwrap();
        if pinned[lu].is_none() {
            rhs[free_local[lu]] += amps;
        }
    }

    // every free component needs at least one tie to a known potential
    let mut seen = vec![false; nf];
    for start in 0..nf {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut comp = vec![start];
        let mut tied = false;
        while let Some(f) = queue.pop_front() {
            tied |= grounded[f];
            for &g in &adj[f] {
                if !seen[g] {
                    seen[g] = true;
                    comp.push(g);
                    queue.push_back(g);
                }
            }
        }
        if !tied {
            let worst = comp.iter().map(|&f| model.nodes[free[f]]).min().unwrap();
            return Err(Error::FloatingSubnetwork { node: worst });
        }
    }

    let mut volts = vec![0.0; n];
    for (i, p) in pinned.iter().enumerate() {
        if let Some(v) = p {
            volts[i] = *v;
        }
    }
    if nf > 0 {
        for (f, d) in diag.iter().enumerate() {
            triplets.push((f, f, *d));
        }
        let lap = LaplacianMatrix::from_triplets(nf, &triplets);
        let ord = order::compute_ordering(&lap, OrderingMethod::AmdLike);
        let fac = factor::full_cholesky(&lap, &ord)?;
        let x = fac.solve(&rhs);
        for (f, &i) in free.iter().enumerate() {
            volts[i] = x[f];
        }
    }
    Ok(DcSolution {
        nodes: model.nodes.clone(),
        volts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    /// Mean absolute voltage mismatch over the compared ports, volts.
    pub err_volts: f64,
    /// `err_volts` scaled by the largest reference voltage magnitude;
    /// undefined when the reference is identically zero.
    pub rel: Option<f64>,
}

/// Compares two solutions at the given ports; `reference` supplies the
/// denominator (its overall largest voltage drop).
pub fn accuracy_report(
    reference: &DcSolution,
    reduced: &DcSolution,
    ports: &[usize],
) -> AccuracyReport {
    assert!(!ports.is_empty(), "no ports to compare");
    let mut err = 0.0;
    for &p in ports {
        let a = reference.get(p).expect("reference covers every port");
        let b = reduced.get(p).expect("reduced solution covers every port");
        err += (a - b).abs();
    }
    let err_volts = err / ports.len() as f64;
    let max_drop = reference
        .volts
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    AccuracyReport {
        err_volts,
        rel: (max_drop > 0.0).then(|| err_volts / max_drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReducedModel;
    use crate::netlist::Netlist;
    use std::path::Path;

    fn solve_netlist(text: &str) -> Result<DcSolution> {
        let net = Netlist::parse(Path::new("t.sp"), text).unwrap();
        dc_solve(&ReducedModel::from_netlist(&net)?)
    }

    #[test]
    fn one_resistor_one_amp_gives_one_volt() {
        let sol = solve_netlist("R1 a 0 1\nI1 0 a 1\n").unwrap();
        assert!((sol.get(0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parallel_resistors_halve_the_drop() {
        let sol = solve_netlist("R1 a 0 2\nR2 a 0 2\nI1 0 a 1\n").unwrap();
        assert!((sol.get(0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn load_drawing_current_goes_negative() {
        let sol = solve_netlist("R1 a 0 1\nI1 a 0 1\n").unwrap();
        assert!((sol.get(0).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn voltage_source_pins_and_divides() {
        // 1V across a 1+1 divider: midpoint at 0.5V
        let sol = solve_netlist("V1 top 0 1\nR1 top mid 1\nR2 mid 0 1\n").unwrap();
        assert!((sol.get(0).unwrap() - 1.0).abs() < 1e-14);
        assert!((sol.get(1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn series_through_pinned_node_isolated_correctly() {
        // two branches from a 2V rail; no interaction through the pin
        let sol = solve_netlist("V1 r 0 2\nR1 r a 1\nR2 a 0 3\nR3 r b 1\nR4 b 0 1\n").unwrap();
        assert!((sol.get(1).unwrap() - 1.5).abs() < 1e-14);
        assert!((sol.get(2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn floating_island_is_rejected() {
        let out = solve_netlist("R1 a 0 1\nI1 0 a 1\nR2 b c 1\n");
        match out {
            Err(Error::FloatingSubnetwork { node: 1 }) => {}
            other => panic!("expected floating subnetwork, got {other:?}"),
        }
    }

    #[test]
    fn island_held_by_voltage_source_is_fine() {
        let sol = solve_netlist("R1 a 0 1\nI1 0 a 1\nV1 b 0 5\nR2 b c 1\n").unwrap();
        assert!((sol.get(2).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn grid_matches_dense_oracle() {
        // seeded mesh with vias and loads, solved independently by nalgebra
        let net = crate::netlist::synthetic_pg(6, 7, 3, 8, 4);
        let model = ReducedModel::from_netlist(&net).unwrap();
        let sol = dc_solve(&model).unwrap();

        let n = model.nodes.len();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        for &(u, v, w) in &model.edges {
            let (lu, lv) = (model.local_of(u).unwrap(), model.local_of(v).unwrap());
            dense[(lu, lv)] -= w;
            dense[(lv, lu)] -= w;
            dense[(lu, lu)] += w;
            dense[(lv, lv)] += w;
        }
        for &(u, g) in &model.ground {
            let lu = model.local_of(u).unwrap();
            dense[(lu, lu)] += g;
        }
        for &(u, a) in &model.injections {
            rhs[model.local_of(u).unwrap()] += a;
        }
        let x = dense.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!(
                (sol.volts()[i] - x[i]).abs() <= 1e-9,
                "node {i}: {} vs {}",
                sol.volts()[i],
                x[i]
            );
        }
    }

    #[test]
    fn accuracy_report_identity_and_offset() {
        let a = DcSolution {
            nodes: vec![0, 1, 2],
            volts: vec![0.1, 0.05, 0.02],
        };
        let same = accuracy_report(&a, &a.clone(), &[0, 2]);
        assert_eq!(same.err_volts, 0.0);
        assert_eq!(same.rel, Some(0.0));

        let mut b = a.clone();
        for v in b.volts.iter_mut() {
            *v += 1e-3;
        }
        let off = accuracy_report(&a, &b, &[0, 1, 2]);
        assert!((off.err_volts - 1e-3).abs() < 1e-15);
        assert!((off.rel.unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn zero_reference_reports_undefined_rel() {
        let zero = DcSolution {
            nodes: vec![0],
            volts: vec![0.0],
        };
        let one = DcSolution {
            nodes: vec![0],
            volts: vec![1.0],
        };
        let rep = accuracy_report(&zero, &one, &[0]);
        assert_eq!(rep.err_volts, 1.0);
        assert_eq!(rep.rel, None);
    }
}
