//! End-to-end reduction checks on synthetic power grids: accuracy of the
//! reduced operating point, stitching consistency, file-driven workflows,
//! and spectral quality of the sampled models.

use effres_pgreduce::dc::{accuracy_report, dc_solve};
use effres_pgreduce::model::{self, ReducedModel};
use effres_pgreduce::netlist::synthetic_pg;
use effres_pgreduce::partition::{partition_builtin, partition_from_file, write_partition};
use effres_pgreduce::reduce::{edge_resistances, reduce, reduce_with_assignment, ErMethod, ReduceOptions};
use rand::Rng;

fn options(blocks: usize, sample_fraction: f64) -> ReduceOptions {
    ReduceOptions {
        blocks: Some(blocks),
        er_method: ErMethod::Ainv { epsilon: 1e-3 },
        sample_fraction,
        merge_tau: 0.0,
        seed: 42,
    }
}

#[test]
fn grid_reduction_tracks_full_dc_within_five_percent() {
    let net = synthetic_pg(50, 50, 5, 120, 9);
    let full = ReducedModel::from_netlist(&net).unwrap();
    let reference = dc_solve(&full).unwrap();

    let reduction = reduce(&net, &options(4, 0.8)).unwrap();
    let ports = net.source_nodes();
    assert!(
        reduction.model.nodes.len() * 4 < net.node_count(),
        "reduction kept {} of {} nodes",
        reduction.model.nodes.len(),
        net.node_count()
    );
    let solved = dc_solve(&reduction.model).unwrap();
    let report = accuracy_report(&reference, &solved, &ports);
    let rel = report.rel.expect("grid has nonzero voltages");
    assert!(rel <= 5e-2, "port voltage error {:.3e} of full scale", rel);
}

#[test]
fn restitching_artifacts_reproduces_the_model() {
    let net = synthetic_pg(20, 20, 6, 60, 4);
    let reduction = reduce(&net, &options(3, 0.7)).unwrap();
    let mut parts: Vec<ReducedModel> = reduction.artifacts.iter().map(|a| a.model.clone()).collect();
    parts.push(reduction.coupling.clone());
    // stitch order must not matter either
    parts.reverse();
    let restitched = model::stitch(&parts).unwrap();
    assert_eq!(restitched.nodes, reduction.model.nodes);
    assert_eq!(restitched.edges, reduction.model.edges);
    assert_eq!(restitched.ground, reduction.model.ground);
    assert_eq!(restitched.injections, reduction.model.injections);
}

#[test]
fn partition_file_drives_the_same_reduction() {
    let net = synthetic_pg(16, 16, 4, 40, 2);
    let opts = options(3, 0.75);
    let direct = reduce(&net, &opts).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blocks.txt");
    let part = partition_builtin(&net, 3).unwrap();
    std::fs::write(&path, write_partition(&net, &part)).unwrap();
    let loaded = partition_from_file(&path, &net).unwrap();
    let via_file = reduce_with_assignment(&net, loaded, &opts).unwrap();

    assert_eq!(via_file.model, direct.model);
}

#[test]
fn reduced_netlist_file_round_trip_preserves_dc() {
    let net = synthetic_pg(15, 15, 5, 30, 6);
    let reduction = reduce(&net, &options(2, 0.9)).unwrap();
    let before = dc_solve(&reduction.model).unwrap();

    let out_net = reduction.model.to_netlist(&net);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reduced.sp");
    out_net.write_file(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let back = effres_pgreduce::netlist::Netlist::parse(&path, &text).unwrap();
    let after = dc_solve(&ReducedModel::from_netlist(&back).unwrap()).unwrap();

    // node ids may be renumbered by the round trip; voltages must agree by name
    for &p in &net.source_nodes() {
        let a = before.get(p).unwrap();
        let q = back.node_id(net.name(p)).unwrap();
        let b = after.get(q).unwrap();
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "port {p}: {a} vs {b} after round trip"
        );
    }
}

#[test]
fn sparsifier_keeps_quadratic_forms_within_a_quarter() {
    let net = synthetic_pg(14, 14, 4, 30, 3);
    let m = ReducedModel::from_netlist(&net).unwrap();
    let er = edge_resistances(&m, ErMethod::Exact).unwrap();
    let target = m.edges.len() / 2;
    let sparse = model::sparsify_by_er(&m, &er, target, 11).unwrap();
    assert_eq!(sparse.nodes, m.nodes);
    assert!(sparse.edges.len() <= target);

    // energy of a vector x against a model, Σ w (x_u - x_v)^2 + Σ g x_u^2
    let energy = |m: &ReducedModel, x: &[f64]| -> f64 {
        let mut e = 0.0;
        for &(u, v, w) in &m.edges {
            let d = x[m.local_of(u).unwrap()] - x[m.local_of(v).unwrap()];
            e += w * d * d;
        }
        for &(u, g) in &m.ground {
            let xu = x[m.local_of(u).unwrap()];
            e += g * xu * xu;
        }
        e
    };

    let n = m.nodes.len();
    let mut rng = effres_core::seed::rng(777, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= norm;
        }
        let full = energy(&m, &x);
        let sampled = energy(&sparse, &x);
        worst = worst.max((sampled - full).abs() / full);
    }
    assert!(worst <= 0.25, "quadratic form drift {worst:.3}");
}
