//! Canonical conductance-network model: retained nodes, resistive edges,
//! per-node conductance to ground, current injections, and fixed potentials.
//! All lists are kept sorted so equal networks compare equal byte for byte,
//! and stitching is independent of part order.

use crate::error::{Error, Result};
use crate::netlist::{Netlist, NodeRef};
use effres_core::graph::LaplacianMatrix;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReducedModel {
    /// Retained global node ids, sorted, unique.
    pub nodes: Vec<usize>,
    /// `(u, v, conductance)` with `u < v`, sorted by `(u, v)`, duplicates merged.
    pub edges: Vec<(usize, usize, f64)>,
    /// Conductance to ground per node, sorted by node, duplicates merged.
    pub ground: Vec<(usize, f64)>,
    /// Net current injected into each node, amps.
    pub injections: Vec<(usize, f64)>,
    /// Potentials pinned by voltage sources, volts.
    pub fixed: Vec<(usize, f64)>,
    pub eliminated: usize,
    pub merged: usize,
    pub sampled: usize,
}

/// Merges duplicates of a sorted-keyed list; duplicate values are summed in
/// bit order so the result is independent of input order.
fn merge_sorted(mut items: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    items.sort_by_key(|t| (t.0, t.1.to_bits()));
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(items.len());
    for (u, w) in items {
        match out.last_mut() {
            Some(last) if last.0 == u => last.1 += w,
            _ => out.push((u, w)),
        }
    }
    out
}

fn merge_sorted_edges(mut items: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    for e in items.iter_mut() {
        if e.0 > e.1 {
            std::mem::swap(&mut e.0, &mut e.1);
        }
    }
    items.sort_by_key(|t| (t.0, t.1, t.2.to_bits()));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(items.len());
    for (u, v, w) in items {
        match out.last_mut() {
            Some(last) if last.0 == u && last.1 == v => last.2 += w,
            _ => out.push((u, v, w)),
        }
    }
    out
}

impl ReducedModel {
    /// Canonicalizes every list; edge endpoints may arrive in either order.
    pub fn new(
        nodes: Vec<usize>,
        edges: Vec<(usize, usize, f64)>,
        ground: Vec<(usize, f64)>,
        injections: Vec<(usize, f64)>,
        fixed: Vec<(usize, f64)>,
    ) -> Self {
        let mut nodes = nodes;
        nodes.sort_unstable();
        nodes.dedup();
        let model = ReducedModel {
            nodes,
            edges: merge_sorted_edges(edges),
            ground: merge_sorted(ground),
            injections: merge_sorted(injections),
            fixed: merge_sorted(fixed),
            eliminated: 0,
            merged: 0,
            sampled: 0,
        };
        debug_assert!(model
            .edges
            .iter()
            .all(|&(u, v, _)| model.contains(u) && model.contains(v) && u != v));
        model
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Position of a global node in `nodes`, the model's local numbering.
    pub fn local_of(&self, node: usize) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Assembles the model's conductance matrix over local indices; ground
    /// conductances appear as diagonal excess.
    pub fn laplacian(&self) -> LaplacianMatrix {
        let n = self.nodes.len();
        let mut diag = vec![0.0; n];
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * self.edges.len() + n);
        for &(u, v, w) in &self.edges {
            let (lu, lv) = (self.local_of(u).unwrap(), self.local_of(v).unwrap());
            triplets.push((lu, lv, -w));
            triplets.push((lv, lu, -w));
            diag[lu] += w;
            diag[lv] += w;
        }
        for &(u, g) in &self.ground {
            diag[self.local_of(u).unwrap()] += g;
        }
        for (i, d) in diag.into_iter().enumerate() {
            triplets.push((i, i, d));
        }
        LaplacianMatrix::from_triplets(n, &triplets)
    }

    /// All nodes of a netlist retained verbatim: the identity "reduction".
    pub fn from_netlist(net: &Netlist) -> Result<Self> {
        let mut edges = Vec::new();
        let mut ground = Vec::new();
        for r in net.resistors() {
            let w = r.conductance();
            match (r.a, r.b) {
                (NodeRef::Node(u), NodeRef::Node(v)) => edges.push((u, v, w)),
                (NodeRef::Node(u), NodeRef::Ground) | (NodeRef::Ground, NodeRef::Node(u)) => {
                    ground.push((u, w))
                }
                (NodeRef::Ground, NodeRef::Ground) => unreachable!("rejected at parse"),
            }
        }
        let injections = net
            .injections()
            .into_iter()
            .enumerate()
            .filter(|&(_, a)| a != 0.0)
            .collect();
        Ok(ReducedModel::new(
            (0..net.node_count()).collect(),
            edges,
            ground,
            injections,
            net.fixed_potentials()?,
        ))
    }

    /// Writes the model back as a netlist over the original node names,
    /// with synthesized element names.
    pub fn to_netlist(&self, names: &Netlist) -> Netlist {
        let mut out = Netlist::new();
        for (k, &(u, v, w)) in self.edges.iter().enumerate() {
            out.add_resistor(&format!("R{k}"), names.name(u), names.name(v), 1.0 / w);
        }
        for (k, &(u, g)) in self.ground.iter().enumerate() {
            out.add_resistor(&format!("Rg{k}"), names.name(u), "0", 1.0 / g);
        }
        for (k, &(u, amps)) in self.injections.iter().enumerate() {
            // drawn from the node when the net injection is negative
            out.add_current(&format!("I{k}"), names.name(u), "0", -amps);
        }
        for (k, &(u, volts)) in self.fixed.iter().enumerate() {
            out.add_voltage(&format!("V{k}"), names.name(u), "0", volts);
        }
        out
    }
}

/// Sums any number of part models over the union of their node sets. The
/// result is independent of part order; every part's edge endpoints must be
/// retained nodes of that part.
pub fn stitch(parts: &[ReducedModel]) -> Result<ReducedModel> {
    for part in parts {
        for &(u, v, _) in &part.edges {
            if !part.contains(u) {
                return Err(Error::InconsistentStitch { node: u });
            }
            if !part.contains(v) {
                return Err(Error::InconsistentStitch { node: v });
            }
        }
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut ground = Vec::new();
    let mut injections = Vec::new();
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    for part in parts {
        nodes.extend_from_slice(&part.nodes);
        edges.extend_from_slice(&part.edges);
        ground.extend_from_slice(&part.ground);
        injections.extend_from_slice(&part.injections);
        fixed.extend_from_slice(&part.fixed);
    }
    // a node pinned by several parts must be pinned identically, not summed
    fixed.sort_by_key(|t| (t.0, t.1.to_bits()));
    fixed.dedup();
    for pair in fixed.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::ConflictingPotential {
                node: pair[0].0,
                a: pair[0].1,
                b: pair[1].1,
            });
        }
    }
    let mut out = ReducedModel::new(nodes, edges, ground, injections, Vec::new());
    out.fixed = fixed;
    out.eliminated = parts.iter().map(|p| p.eliminated).sum();
    out.merged = parts.iter().map(|p| p.merged).sum();
    out.sampled = parts.iter().map(|p| p.sampled).sum();
    Ok(out)
}

/// Contracts clusters of ports whose pairwise resistance is at most
/// `tau` times the median edge resistance of the model; `tau = 0` disables
/// merging. `er` lists candidate `(port, port, resistance)` triples. Returns
/// the contracted model and the representative of every original node.
pub fn merge_ports(
    model: &ReducedModel,
    ports: &[usize],
    er: &[(usize, usize, f64)],
    tau: f64,
) -> (ReducedModel, Vec<(usize, usize)>) {
    let identity = || model.nodes.iter().map(|&u| (u, u)).collect();
    if tau == 0.0 || model.edges.is_empty() {
        return (model.clone(), identity());
    }
    let mut resistances: Vec<f64> = model.edges.iter().map(|&(_, _, w)| 1.0 / w).collect();
    resistances.sort_by(f64::total_cmp);
    let threshold = tau * resistances[resistances.len() / 2];

    // single-linkage union-find over local indices, roots at smallest id
    let n = model.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let is_port = |u: usize| ports.binary_search(&u).is_ok();
    for &(p, q, r) in er {
        if r <= threshold && is_port(p) && is_port(q) {
            if let (Some(lp), Some(lq)) = (model.local_of(p), model.local_of(q)) {
                let (a, b) = (find(&mut parent, lp), find(&mut parent, lq));
                let root = a.min(b);
                parent[a] = root;
                parent[b] = root;
            }
        }
    }
    let rep: Vec<usize> = (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            model.nodes[r]
        })
        .collect();

    let remap = |u: usize| rep[model.local_of(u).unwrap()];
    let edges: Vec<_> = model
        .edges
        .iter()
        .map(|&(u, v, w)| (remap(u), remap(v), w))
        .filter(|&(u, v, _)| u != v)
        .collect();
    let ground: Vec<_> = model.ground.iter().map(|&(u, g)| (remap(u), g)).collect();
    let injections: Vec<_> = model.injections.iter().map(|&(u, a)| (remap(u), a)).collect();
    let fixed: Vec<_> = model.fixed.iter().map(|&(u, v)| (remap(u), v)).collect();
    let nodes: Vec<usize> = rep.clone();
    let mut out = ReducedModel::new(nodes, edges, ground, injections, fixed);
    for pair in out.fixed.windows(2) {
        assert!(
            pair[0].0 != pair[1].0,
            "merged ports pinned at different potentials"
        );
    }
    out.eliminated = model.eliminated;
    out.sampled = model.sampled;
    out.merged = model.merged + (n - out.nodes.len());
    let map = model.nodes.iter().map(|&u| (u, remap(u))).collect();
    (out, map)
}

/// Sampling weight of each edge: conductance times resistance. Proportional
/// to these weights is the distribution the sparsifier draws from.
pub fn sampling_weights(model: &ReducedModel, er: &[f64]) -> Vec<f64> {
    assert_eq!(er.len(), model.edges.len());
    model
        .edges
        .iter()
        .zip(er)
        .map(|(&(_, _, w), &r)| w * r.max(0.0))
        .collect()
}

/// Draws `target_edges` edges with replacement, edge `e` with probability
/// `p_e` proportional to `w_e * R_e`; a sampled edge keeps weight
/// `count * w_e / (target_edges * p_e)`, so the sparsifier is unbiased.
/// Ground conductances, injections, and pinned potentials pass through
/// untouched; all nodes are kept.
pub fn sparsify_by_er(
    model: &ReducedModel,
    er: &[f64],
    target_edges: usize,
    seed: u64,
) -> Result<ReducedModel> {
    if target_edges == 0 {
        return Err(Error::BadSampleCount);
    }
    if model.edges.is_empty() {
        return Ok(model.clone());
    }
    let weights = sampling_weights(model, er);
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "sampling weights vanished");
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = effres_core::seed::rng(seed, 0);
    let mut counts = vec![0usize; model.edges.len()];
    for _ in 0..target_edges {
        let u: f64 = rand::Rng::gen::<f64>(&mut rng) * total;
        let e = cumulative.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[e] += 1;
    }
    let q = target_edges as f64;
    let edges: Vec<(usize, usize, f64)> = model
        .edges
        .iter()
        .zip(&counts)
        .zip(&weights)
        .filter(|((_, &c), _)| c > 0)
        .map(|((&(a, b, w), &c), &pi)| {
            let p = pi / total;
            (a, b, c as f64 * w / (q * p))
        })
        .collect();
    let mut out = model.clone();
    out.edges = merge_sorted_edges(edges);
    out.sampled = model.sampled + target_edges;
    Ok(out)
}
