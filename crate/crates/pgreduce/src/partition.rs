//! Node-to-block assignment and node classification. The builtin partitioner
//! grows blocks by breadth-first search from seeds spread by farthest-point
//! selection; an external assignment can be loaded from a file instead.

use crate::error::{Error, Result};
use crate::netlist::Netlist;
use std::collections::VecDeque;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    block_of: Vec<usize>,
    blocks: usize,
}

impl PartitionAssignment {
    /// Validates that block ids are dense in `[0, blocks)`.
    pub fn new(block_of: Vec<usize>) -> Result<Self> {
        let blocks = block_of.iter().max().map_or(0, |&b| b + 1);
        let mut seen = vec![false; blocks];
        for &b in &block_of {
            seen[b] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::BadBlockCount {
                blocks: missing,
                n: block_of.len(),
            });
        }
        Ok(PartitionAssignment { block_of, blocks })
    }

    pub fn block_of(&self, node: usize) -> usize {
        self.block_of[node]
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    /// Nodes of each block, ascending within a block.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (node, &b) in self.block_of.iter().enumerate() {
            out[b].push(node);
        }
        out
    }
}

fn adjacency(net: &Netlist) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.node_count()];
    for r in net.resistors() {
        if let (Some(u), Some(v)) = (r.a.node(), r.b.node()) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Multi-source BFS distance to the nearest seed; unreachable stays MAX.
fn distances(adj: &[Vec<usize>], seeds: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Grows `blocks` regions by round-robin BFS from farthest-point seeds, one
/// node per turn, capped at 120% of the even share. Components the seeds
/// never reach are attached to the smallest block.
pub fn partition_builtin(net: &Netlist, blocks: usize) -> Result<PartitionAssignment> {
    let n = net.node_count();
    if blocks == 0 || blocks > n {
        return Err(Error::BadBlockCount { blocks, n });
    }
    let adj = adjacency(net);

    // farthest-point seeds: start from the node BFS pushes deepest from 0,
    // then repeatedly take the node farthest from all chosen seeds
    let d0 = distances(&adj, &[0]);
    let first = (0..n)
        .max_by_key(|&u| (if d0[u] == usize::MAX { 0 } else { d0[u] }, usize::MAX - u))
        .unwrap();
    let mut seeds = vec![first];
    while seeds.len() < blocks {
        let d = distances(&adj, &seeds);
        let next = (0..n)
            .filter(|u| !seeds.contains(u))
            .max_by_key(|&u| (d[u], usize::MAX - u))
            .unwrap();
        seeds.push(next);
    }

    let cap = ((12 * n).div_ceil(10 * blocks)).max(1);
    let mut block_of = vec![usize::MAX; n];
    let mut queues: Vec<VecDeque<usize>> = Vec::with_capacity(blocks);
    let mut sizes = vec![0usize; blocks];
    for (b, &s) in seeds.iter().enumerate() {
        block_of[s] = b;
        sizes[b] = 1;
        queues.push(VecDeque::from([s]));
    }
    let mut active = true;
    while active {
        active = false;
        for b in 0..blocks {
            if sizes[b] >= cap {
                continue;
            }
            // claim exactly one unassigned node per turn for tight balance
            while let Some(u) = queues[b].pop_front() {
                let mut claimed = None;
                for &v in &adj[u] {
                    if block_of[v] == usize::MAX {
                        block_of[v] = b;
                        sizes[b] += 1;
                        claimed = Some(v);
                        break;
                    }
                }
                if let Some(v) = claimed {
                    // u may have more unassigned neighbors; revisit it first
                    queues[b].push_front(u);
                    queues[b].push_back(v);
                    active = true;
                    break;
                }
            }
        }
    }
    // leftovers: nodes fenced off by caps or in seedless components
    for slot in block_of.iter_mut() {
        if *slot == usize::MAX {
            let b = (0..blocks).min_by_key(|&b| (sizes[b], b)).unwrap();
            *slot = b;
            sizes[b] += 1;
        }
    }
    // repair: a seed can get fenced in below the 80% balance floor; pull
    // boundary nodes into the smallest block from its largest neighbor that
    // stays at or above the floor after donating
    let floor = (8 * n) / (10 * blocks);
    for _ in 0..n {
        let b = (0..blocks).min_by_key(|&b| (sizes[b], b)).unwrap();
        if sizes[b] >= floor {
            break;
        }
        let mut pick: Option<(usize, std::cmp::Reverse<usize>)> = None;
        for u in 0..n {
            if block_of[u] != b {
                continue;
            }
            for &v in &adj[u] {
                let d = block_of[v];
                if d == b || sizes[d] <= floor || sizes[d] <= sizes[b] {
                    continue;
                }
                let key = (sizes[d], std::cmp::Reverse(v));
                if pick.is_none_or(|p| key > p) {
                    pick = Some(key);
                }
            }
        }
        let Some((_, std::cmp::Reverse(v))) = pick else {
            break;
        };
        sizes[block_of[v]] -= 1;
        block_of[v] = b;
        sizes[b] += 1;
    }
    PartitionAssignment::new(block_of)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Attached to a current or voltage source; always retained.
    Port,
    /// Not a port, but adjacent to another block; retained so blocks can be
    /// reduced independently and stitched.
    Interface,
    /// Eliminated during reduction.
    Interior,
}

/// Port ⇔ attached to a source; interface ⇔ non-port with a neighbor in a
/// different block; interior otherwise.
pub fn classify_nodes(net: &Netlist, part: &PartitionAssignment) -> Vec<NodeClass> {
    assert_eq!(net.node_count(), part.len());
    let mut class = vec![NodeClass::Interior; net.node_count()];
    for p in net.source_nodes() {
        class[p] = NodeClass::Port;
    }
    for r in net.resistors() {
        if let (Some(u), Some(v)) = (r.a.node(), r.b.node()) {
            if part.block_of(u) != part.block_of(v) {
                if class[u] == NodeClass::Interior {
                    class[u] = NodeClass::Interface;
                }
                if class[v] == NodeClass::Interior {
                    class[v] = NodeClass::Interface;
                }
            }
        }
    }
    class
}

/// One line per node: `node_name block_id`.
pub fn write_partition(net: &Netlist, part: &PartitionAssignment) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for node in 0..part.len() {
        writeln!(out, "{} {}", net.name(node), part.block_of(node)).unwrap();
    }
    out
}

pub fn parse_partition(path: &Path, text: &str, net: &Netlist) -> Result<PartitionAssignment> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut block_of = vec![usize::MAX; net.node_count()];
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (name, id) = match (it.next(), it.next(), it.next()) {
            (Some(name), Some(id), None) => (name, id),
            _ => return Err(err(lineno, "expected \"node_name block_id\"".into())),
        };
        let node = net
            .node_id(name)
            .ok_or_else(|| err(lineno, format!("unknown node {name:?}")))?;
        let id: usize = id
            .parse()
            .map_err(|_| err(lineno, format!("bad block id {id:?}")))?;
        if block_of[node] != usize::MAX {
            return Err(err(lineno, format!("node {name:?} assigned twice")));
        }
        block_of[node] = id;
    }
    let missing: Vec<usize> = (0..net.node_count())
        .filter(|&u| block_of[u] == usize::MAX)
        .collect();
    if let Some(&first) = missing.first() {
        return Err(Error::PartitionMissingNodes {
            count: missing.len(),
            first: net.name(first).to_string(),
        });
    }
    PartitionAssignment::new(block_of)
}

pub fn partition_from_file(path: &Path, net: &Netlist) -> Result<PartitionAssignment> {
    let text = std::fs::read_to_string(path)?;
    parse_partition(path, &text, net)
}
