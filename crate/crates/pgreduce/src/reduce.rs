//! The reduction driver: split a netlist over a partition, eliminate block
//! interiors exactly, compute per-edge resistances of each reduced block,
//! sample the block edges by conductance-times-resistance, and stitch the
//! pieces back together. Every block draws from its own
//! seed-and-block-keyed random stream, so re-reducing only the blocks that
//! changed reproduces a from-scratch reduction bit for bit.

use crate::error::{Error, Result};
use crate::model::{self, ReducedModel};
use crate::netlist::Netlist;
use crate::partition::{self, NodeClass, PartitionAssignment};
use crate::schur;
use effres_core::graph::QuerySet;
use effres_core::order::OrderingMethod;
use effres_core::{ainv, engine, factor, order, seed};
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErMethod {
    /// Truncated approximate inverse of the block factor; `epsilon` is the
    /// per-column mass budget.
    Ainv { epsilon: f64 },
    /// One triangular solve per edge.
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct ReduceOptions {
    /// `None` picks one block per 50 ports, at least one.
    pub blocks: Option<usize>,
    pub er_method: ErMethod,
    /// Sampled edges as a fraction of each block's pre-sampling edge count.
    pub sample_fraction: f64,
    /// Port-merging threshold as a multiple of the median edge resistance;
    /// zero leaves ports alone.
    pub merge_tau: f64,
    pub seed: u64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            blocks: None,
            er_method: ErMethod::Ainv { epsilon: 1e-3 },
            sample_fraction: 0.65,
            merge_tau: 0.0,
            seed: 42,
        }
    }
}

/// Everything a block's reduction depends on. Two equal inputs with equal
/// seeds produce byte-identical block models.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInput {
    pub kept: Vec<usize>,
    pub interior: Vec<usize>,
    pub ports: Vec<usize>,
    pub edges: Vec<(usize, usize, f64)>,
    pub ground: Vec<(usize, f64)>,
    pub injections: Vec<(usize, f64)>,
    pub fixed: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockArtifact {
    pub block: usize,
    pub input: BlockInput,
    pub model: ReducedModel,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: ReducedModel,
    pub assignment: PartitionAssignment,
    pub artifacts: Vec<BlockArtifact>,
    /// Cross-block edges; both endpoints are retained by construction.
    pub coupling: ReducedModel,
    pub ports: Vec<usize>,
    pub seconds: f64,
}

/// Per-edge resistance of a model, aligned with `model.edges`. Components
/// without a ground tie are pinned by a small bump first; with one pin per
/// component the answers do not depend on the bump value.
pub fn edge_resistances(model: &ReducedModel, method: ErMethod) -> Result<Vec<f64>> {
    if model.edges.is_empty() {
        return Ok(Vec::new());
    }
    let lap = model.laplacian();
    let bumps = schur::grounding_bumps(&lap, &vec![false; lap.n()])?;
    let lap = schur::with_bumps(&lap, &bumps);
    let ord = order::compute_ordering(&lap, OrderingMethod::AmdLike);
    let fac = factor::full_cholesky(&lap, &ord)?;
    let pairs: Vec<(usize, usize)> = model
        .edges
        .iter()
        .map(|&(u, v, _)| (model.local_of(u).unwrap(), model.local_of(v).unwrap()))
        .collect();
    let queries = QuerySet::new(lap.n(), pairs)?;
    let results = match method {
        ErMethod::Exact => engine::query_exact(&fac, &queries)?,
        ErMethod::Ainv { epsilon } => {
            let z = ainv::approximate_inverse(&fac, epsilon)?;
            engine::query_ainv(&z, &queries)
        }
    };
    Ok(results.into_iter().map(|r| r.resistance).collect())
}

fn split_blocks(
    net: &Netlist,
    part: &PartitionAssignment,
    classes: &[NodeClass],
) -> Result<(Vec<BlockInput>, ReducedModel)> {
    let full = ReducedModel::from_netlist(net)?;
    let blocks = part.blocks();
    let mut inputs: Vec<BlockInput> = (0..blocks)
        .map(|_| BlockInput {
            kept: Vec::new(),
            interior: Vec::new(),
            ports: Vec::new(),
            edges: Vec::new(),
            ground: Vec::new(),
            injections: Vec::new(),
            fixed: Vec::new(),
        })
        .collect();
    for (u, &class) in classes.iter().enumerate() {
        let b = part.block_of(u);
        match class {
            NodeClass::Interior => inputs[b].interior.push(u),
            NodeClass::Port => {
                inputs[b].kept.push(u);
                inputs[b].ports.push(u);
            }
            NodeClass::Interface => inputs[b].kept.push(u),
        }
    }
    let mut coupling_edges = Vec::new();
    let mut coupling_nodes = Vec::new();
    for &(u, v, w) in &full.edges {
        let (bu, bv) = (part.block_of(u), part.block_of(v));
        if bu == bv {
            inputs[bu].edges.push((u, v, w));
        } else {
            debug_assert!(classes[u] != NodeClass::Interior && classes[v] != NodeClass::Interior);
            coupling_edges.push((u, v, w));
            coupling_nodes.push(u);
            coupling_nodes.push(v);
        }
    }
    for &(u, g) in &full.ground {
        inputs[part.block_of(u)].ground.push((u, g));
    }
    for &(u, a) in &full.injections {
        inputs[part.block_of(u)].injections.push((u, a));
    }
    for &(u, v) in &full.fixed {
        inputs[part.block_of(u)].fixed.push((u, v));
    }
    let coupling = ReducedModel::new(coupling_nodes, coupling_edges, Vec::new(), Vec::new(), Vec::new());
    Ok((inputs, coupling))
}

fn reduce_block(block: usize, input: &BlockInput, opts: &ReduceOptions) -> Result<BlockArtifact> {
    // local numbering over the block's nodes, kept and interior interleaved
    // in ascending global order
    let mut all: Vec<usize> = input.kept.iter().chain(&input.interior).copied().collect();
    all.sort_unstable();
    let local = |u: usize| all.binary_search(&u).unwrap();
    let n = all.len();

    let mut diag = vec![0.0; n];
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * input.edges.len() + n);
    for &(u, v, w) in &input.edges {
        let (lu, lv) = (local(u), local(v));
        triplets.push((lu, lv, -w));
        triplets.push((lv, lu, -w));
        diag[lu] += w;
        diag[lv] += w;
    }
    for &(u, g) in &input.ground {
        diag[local(u)] += g;
    }
    for (i, d) in diag.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    let lap = effres_core::graph::LaplacianMatrix::from_triplets(n, &triplets);

    let eliminate: Vec<usize> = input.interior.iter().map(|&u| local(u)).collect();
    let s = schur_eliminate_labeled(&lap, &eliminate, &all, block)?;

    let worst = schur::verify_schur(&lap, &eliminate, &s, seed::derive(opts.seed, verify_stream(block)), 5)
        .map_err(|e| relabel(e, &all, block))?;
    assert!(
        worst <= 1e-8,
        "block {block}: reduced-system voltages drift {worst:.3e} from full solves"
    );

    // reduced block model over global ids
    let kept = &input.kept;
    let mut edges = Vec::new();
    for (jl, &j) in kept.iter().enumerate() {
        for (il, v) in s.col(jl) {
            if il > jl {
                edges.push((j, kept[il], -v));
            }
        }
    }
    let mut ground = Vec::new();
    for (jl, &j) in kept.iter().enumerate() {
        let excess = s.diag_excess(jl);
        let d = s.diagonal(jl);
        assert!(excess >= -1e-9 * d, "block {block}: negative excess {excess}");
        if excess > 1e-12 * d {
            ground.push((j, excess));
        }
    }
    let mut m = ReducedModel::new(
        kept.clone(),
        edges,
        ground,
        input.injections.clone(),
        input.fixed.clone(),
    );
    m.eliminated = input.interior.len();

    if !m.edges.is_empty() {
        if opts.merge_tau > 0.0 {
            let er = edge_resistances(&m, opts.er_method)?;
            let trios: Vec<(usize, usize, f64)> = m
                .edges
                .iter()
                .zip(&er)
                .map(|(&(u, v, _), &r)| (u, v, r))
                .collect();
            let (merged, _) = model::merge_ports(&m, &input.ports, &trios, opts.merge_tau);
            m = merged;
        }
        if !m.edges.is_empty() {
            let er = edge_resistances(&m, opts.er_method)?;
            let target = ((opts.sample_fraction * m.edges.len() as f64).ceil() as usize).max(1);
            m = model::sparsify_by_er(&m, &er, target, seed::derive(opts.seed, sample_stream(block)))?;
        }
    }

    Ok(BlockArtifact {
        block,
        input: input.clone(),
        model: m,
    })
}

// disjoint stream ids per block: even for sampling, odd for verification
fn sample_stream(block: usize) -> u64 {
    2 * block as u64
}

fn verify_stream(block: usize) -> u64 {
    2 * block as u64 + 1
}

fn schur_eliminate_labeled(
    lap: &effres_core::graph::LaplacianMatrix,
    eliminate: &[usize],
    globals: &[usize],
    block: usize,
) -> Result<effres_core::graph::LaplacianMatrix> {
    schur::schur_eliminate(lap, eliminate).map_err(|e| relabel(e, globals, block))
}

fn relabel(e: Error, globals: &[usize], block: usize) -> Error {
    match e {
        Error::SingularPivot { node } => Error::SingularInterior {
            block,
            node: globals[node],
        },
        other => other,
    }
}

fn assemble(
    net: &Netlist,
    assignment: PartitionAssignment,
    artifacts: Vec<BlockArtifact>,
    coupling: ReducedModel,
    started: Instant,
) -> Result<Reduction> {
    let mut parts: Vec<ReducedModel> = artifacts.iter().map(|a| a.model.clone()).collect();
    parts.push(coupling.clone());
    let model = model::stitch(&parts)?;
    let ports = net.source_nodes();
    for &p in &ports {
        assert!(model.contains(p), "port {p} missing from the reduced model");
    }
    Ok(Reduction {
        model,
        assignment,
        artifacts,
        coupling,
        ports,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn check_options(opts: &ReduceOptions) -> Result<()> {
    if !(opts.sample_fraction > 0.0 && opts.sample_fraction <= 10.0) {
        return Err(Error::BadSampleFraction(opts.sample_fraction));
    }
    Ok(())
}

pub fn reduce_with_assignment(
    net: &Netlist,
    assignment: PartitionAssignment,
    opts: &ReduceOptions,
) -> Result<Reduction> {
    let started = Instant::now();
    check_options(opts)?;
    if assignment.len() != net.node_count() {
        return Err(Error::AssignmentMismatch {
            expected: assignment.len(),
            found: net.node_count(),
        });
    }
    let classes = partition::classify_nodes(net, &assignment);
    let (inputs, coupling) = split_blocks(net, &assignment, &classes)?;
    let artifacts = inputs
        .par_iter()
        .enumerate()
        .map(|(b, input)| reduce_block(b, input, opts))
        .collect::<Result<Vec<_>>>()?;
    assemble(net, assignment, artifacts, coupling, started)
}

/// Partitions with the builtin region grower, then reduces.
pub fn reduce(net: &Netlist, opts: &ReduceOptions) -> Result<Reduction> {
    check_options(opts)?;
    let blocks = opts
        .blocks
        .unwrap_or_else(|| (net.source_nodes().len() / 50).max(1))
        .min(net.node_count());
    let assignment = partition::partition_builtin(net, blocks)?;
    reduce_with_assignment(net, assignment, opts)
}

/// Re-reduces only the listed blocks against a prior reduction of the same
/// partition. Blocks whose extracted input changed must be listed; unlisted
/// blocks reuse their stored models verbatim, so the result equals a
/// from-scratch reduction of the new netlist bit for bit.
pub fn reduce_incremental(
    net: &Netlist,
    previous: &Reduction,
    modified: &[usize],
    opts: &ReduceOptions,
) -> Result<Reduction> {
    let started = Instant::now();
    check_options(opts)?;
    let assignment = previous.assignment.clone();
    if assignment.len() != net.node_count() {
        return Err(Error::AssignmentMismatch {
            expected: assignment.len(),
            found: net.node_count(),
        });
    }
    for &b in modified {
        assert!(b < assignment.blocks(), "modified block {b} out of range");
    }
    let classes = partition::classify_nodes(net, &assignment);
    let (inputs, coupling) = split_blocks(net, &assignment, &classes)?;
    let artifacts = inputs
        .par_iter()
        .enumerate()
        .map(|(b, input)| {
            if modified.contains(&b) {
                reduce_block(b, input, opts)
            } else if *input == previous.artifacts[b].input {
                Ok(previous.artifacts[b].clone())
            } else {
                Err(Error::UnlistedBlockModified { block: b })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(net, assignment, artifacts, coupling, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc;
    use crate::netlist::synthetic_pg;

    #[test]
    fn edge_resistances_exact_on_a_path() {
        // 3 unit resistors to ground through a chain; exact per-edge values
        let m = ReducedModel::new(
            vec![0, 1, 2, 3],
            vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 4.0)],
            vec![(0, 1.0)],
            vec![],
            vec![],
        );
        let er = edge_resistances(&m, ErMethod::Exact).unwrap();
        let expect = [1.0, 0.5, 0.25];
        for (got, want) in er.iter().zip(expect) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn edge_resistances_ainv_tracks_exact() {
        let net = synthetic_pg(10, 10, 4, 12, 3);
        let m = ReducedModel::from_netlist(&net).unwrap();
        let exact = edge_resistances(&m, ErMethod::Exact).unwrap();
        let approx = edge_resistances(&m, ErMethod::Ainv { epsilon: 1e-3 }).unwrap();
        let mut worst = 0.0f64;
        for (a, e) in approx.iter().zip(&exact) {
            worst = worst.max((a - e).abs() / e);
        }
        assert!(worst <= 5e-2, "ainv drifts {worst} from exact");
    }

    #[test]
    fn single_block_reduction_keeps_only_ports() {
        let net = synthetic_pg(8, 8, 3, 6, 1);
        let opts = ReduceOptions {
            blocks: Some(1),
            ..Default::default()
        };
        let red = reduce(&net, &opts).unwrap();
        assert_eq!(red.model.nodes, red.ports);
        assert_eq!(red.model.eliminated, 64 - red.ports.len());
        assert!(red.coupling.edges.is_empty());
    }

    #[test]
    fn reduction_is_deterministic() {
        let net = synthetic_pg(10, 12, 4, 10, 7);
        let opts = ReduceOptions {
            blocks: Some(3),
            ..Default::default()
        };
        let a = reduce(&net, &opts).unwrap();
        let b = reduce(&net, &opts).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.artifacts, b.artifacts);
    }

    #[test]
    fn seed_changes_sampling_but_not_structure() {
        let net = synthetic_pg(10, 10, 5, 8, 2);
        let mk = |seed| {
            reduce(
                &net,
                &ReduceOptions {
                    blocks: Some(2),
                    seed,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let a = mk(1);
        let b = mk(2);
        assert_eq!(a.model.nodes, b.model.nodes);
        assert_ne!(a.model.edges, b.model.edges);
    }

    #[test]
    fn reduced_dc_tracks_full_dc() {
        let net = synthetic_pg(20, 20, 5, 30, 11);
        let full = dc::dc_solve(&ReducedModel::from_netlist(&net).unwrap()).unwrap();
        let red = reduce(
            &net,
            &ReduceOptions {
                blocks: Some(4),
                sample_fraction: 0.8,
                ..Default::default()
            },
        )
        .unwrap();
        let reduced = dc::dc_solve(&red.model).unwrap();
        let rep = dc::accuracy_report(&full, &reduced, &red.ports);
        assert!(rep.rel.unwrap() <= 0.05, "Rel {:?}", rep.rel);
    }

    #[test]
    fn incremental_empty_set_reproduces_previous() {
        let net = synthetic_pg(9, 9, 4, 8, 5);
        let opts = ReduceOptions {
            blocks: Some(3),
            ..Default::default()
        };
        let prev = reduce(&net, &opts).unwrap();
        let again = reduce_incremental(&net, &prev, &[], &opts).unwrap();
        assert_eq!(prev.model, again.model);
    }

    #[test]
    fn incremental_rejects_unlisted_changes() {
        let mut net = synthetic_pg(9, 9, 4, 8, 5);
        let opts = ReduceOptions {
            blocks: Some(3),
            ..Default::default()
        };
        let prev = reduce(&net, &opts).unwrap();
        // perturb one resistor; its block is not listed
        net.add_resistor("Rx", "n0_0", "n8_8", 3.0);
        let out = reduce_incremental(&net, &prev, &[], &opts);
        assert!(matches!(out, Err(Error::UnlistedBlockModified { .. })));
    }

    #[test]
    fn incremental_matches_from_scratch_bitwise() {
        let net = synthetic_pg(12, 12, 4, 12, 6);
        let opts = ReduceOptions {
            blocks: Some(4),
            ..Default::default()
        };
        let prev = reduce(&net, &opts).unwrap();

        // change a via resistance deep inside one block
        let mut modified_net = synthetic_pg(12, 12, 4, 12, 6);
        let target = "n5_5";
        modified_net.add_resistor("Rmod", target, "0", 2.0);
        let node = modified_net.node_id(target).unwrap();
        let block = prev.assignment.block_of(node);

        let scratch = reduce(&modified_net, &opts).unwrap();
        let inc = reduce_incremental(&modified_net, &prev, &[block], &opts).unwrap();
        assert_eq!(scratch.model, inc.model);
        // untouched blocks reused verbatim
        for a in &inc.artifacts {
            if a.block != block {
                assert_eq!(a, &prev.artifacts[a.block]);
            }
        }
    }

    #[test]
    fn rejects_bad_sample_fraction() {
        let net = synthetic_pg(4, 4, 2, 3, 1);
        let opts = ReduceOptions {
            sample_fraction: 0.0,
            ..Default::default()
        };
        assert!(matches!(reduce(&net, &opts), Err(Error::BadSampleFraction(_))));
    }

    #[test]
    fn auto_block_count_follows_port_rule() {
        let net = synthetic_pg(16, 16, 3, 120, 9);
        let red = reduce(&net, &ReduceOptions::default()).unwrap();
        assert_eq!(red.assignment.blocks(), 2); // 120 ports / 50
    }
}
