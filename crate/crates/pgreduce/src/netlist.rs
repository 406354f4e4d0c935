//! SPICE-subset netlist: resistors, ground-referenced current and voltage
//! sources, `*` comments, `.end` terminator. Node `"0"` is ground and never
//! receives an index; every other node is numbered in order of first
//! appearance.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Either the distinguished ground node or an indexed circuit node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Ground,
    Node(usize),
}

impl NodeRef {
    pub fn node(self) -> Option<usize> {
        match self {
            NodeRef::Ground => None,
            NodeRef::Node(u) => Some(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resistor {
    pub name: String,
    pub a: NodeRef,
    pub b: NodeRef,
    /// Stored in ohms exactly as parsed; conductance is derived on demand.
    pub ohms: f64,
}

impl Resistor {
    pub fn conductance(&self) -> f64 {
        1.0 / self.ohms
    }
}

/// Current flows from `from` through the source into `to`; one terminal is
/// always ground.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSource {
    pub name: String,
    pub from: NodeRef,
    pub to: NodeRef,
    pub amps: f64,
}

/// Fixes the potential of its non-ground terminal: `volts` is the potential
/// of `plus` minus the potential of `minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSource {
    pub name: String,
    pub plus: NodeRef,
    pub minus: NodeRef,
    pub volts: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Netlist {
    names: Vec<String>,
    index: HashMap<String, usize>,
    resistors: Vec<Resistor>,
    currents: Vec<CurrentSource>,
    voltages: Vec<VoltageSource>,
}

impl Netlist {
    pub fn new() -> Self {
        Netlist::default()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn resistors(&self) -> &[Resistor] {
        &self.resistors
    }

    pub fn currents(&self) -> &[CurrentSource] {
        &self.currents
    }

    pub fn voltages(&self) -> &[VoltageSource] {
        &self.voltages
    }

    fn intern(&mut self, name: &str) -> NodeRef {
        if name == "0" {
            return NodeRef::Ground;
        }
        if let Some(&i) = self.index.get(name) {
            return NodeRef::Node(i);
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        NodeRef::Node(i)
    }

    /// Programmatic construction; terminal names are interned on first use.
    pub fn add_resistor(&mut self, name: &str, a: &str, b: &str, ohms: f64) {
        assert!(ohms > 0.0 && ohms.is_finite(), "resistor {name} value {ohms}");
        let a = self.intern(a);
        let b = self.intern(b);
        assert!(a != b, "resistor {name} connects a node to itself");
        self.resistors.push(Resistor {
            name: name.to_string(),
            a,
            b,
            ohms,
        });
    }

    pub fn add_current(&mut self, name: &str, from: &str, to: &str, amps: f64) {
        let from = self.intern(from);
        let to = self.intern(to);
        assert!(
            from == NodeRef::Ground || to == NodeRef::Ground,
            "current source {name} must be ground-referenced"
        );
        self.currents.push(CurrentSource {
            name: name.to_string(),
            from,
            to,
            amps,
        });
    }

    pub fn add_voltage(&mut self, name: &str, plus: &str, minus: &str, volts: f64) {
        let plus = self.intern(plus);
        let minus = self.intern(minus);
        assert!(
            plus == NodeRef::Ground || minus == NodeRef::Ground,
            "voltage source {name} must be ground-referenced"
        );
        self.voltages.push(VoltageSource {
            name: name.to_string(),
            plus,
            minus,
            volts,
        });
    }

    /// Net current injected into each node by the current sources, in amps.
    pub fn injections(&self) -> Vec<f64> {
        let mut inj = vec![0.0; self.node_count()];
        for s in &self.currents {
            if let NodeRef::Node(u) = s.from {
                inj[u] -= s.amps;
            }
            if let NodeRef::Node(u) = s.to {
                inj[u] += s.amps;
            }
        }
        inj
    }

    /// `(node, volts)` fixed by the voltage sources, sorted by node; two
    /// sources pinning one node must agree exactly.
    pub fn fixed_potentials(&self) -> Result<Vec<(usize, f64)>> {
        let mut fixed: Vec<(usize, f64)> = Vec::new();
        for s in &self.voltages {
            let (node, volts) = match (s.plus, s.minus) {
                (NodeRef::Node(u), NodeRef::Ground) => (u, s.volts),
                (NodeRef::Ground, NodeRef::Node(u)) => (u, -s.volts),
                _ => continue, // ground-to-ground source pins nothing
            };
            fixed.push((node, volts));
        }
        fixed.sort_by_key(|&(u, _)| u);
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
        Ok(fixed)
    }

    /// Nodes attached to any source, sorted, deduplicated. These are the
    /// ports a reduction must retain.
    pub fn source_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .currents
            .iter()
            .flat_map(|s| [s.from.node(), s.to.node()])
            .chain(
                self.voltages
                    .iter()
                    .flat_map(|s| [s.plus.node(), s.minus.node()]),
            )
            .flatten()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Netlist> {
        let mut net = Netlist::new();
        let err = |line: usize, msg: String| Error::Parse {
            path: PathBuf::from(path),
            line,
            msg,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('*') {
                continue;
            }
            if line.starts_with('.') {
                if line.eq_ignore_ascii_case(".end") {
                    break;
                }
                return Err(err(lineno, format!("unknown directive {line:?}")));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 4 {
                return Err(err(
                    lineno,
                    format!("expected \"<element> <node> <node> <value>\", got {} token(s)", tokens.len()),
                ));
            }
            let (name, a, b) = (tokens[0], tokens[1], tokens[2]);
            let value: f64 = tokens[3]
                .parse()
                .map_err(|_| err(lineno, format!("bad numeric value {:?}", tokens[3])))?;
            let kind = name.chars().next().unwrap().to_ascii_lowercase();
            match kind {
                'r' => {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(err(lineno, format!("resistor {name} value must be positive, got {value}")));
                    }
                    if a == b {
                        return Err(err(lineno, format!("resistor {name} connects node {a:?} to itself")));
                    }
                    net.add_resistor(name, a, b, value);
                }
                'i' => {
                    if !value.is_finite() {
                        return Err(err(lineno, format!("current source {name} value {value} is not finite")));
                    }
                    if a != "0" && b != "0" {
                        return Err(err(lineno, format!("current source {name} must have one terminal at ground")));
                    }
                    net.add_current(name, a, b, value);
                }
                'v' => {
                    if !value.is_finite() {
                        return Err(err(lineno, format!("voltage source {name} value {value} is not finite")));
                    }
                    if a != "0" && b != "0" {
                        return Err(err(lineno, format!("voltage source {name} must have one terminal at ground")));
                    }
                    net.add_voltage(name, a, b, value);
                }
                _ => return Err(err(lineno, format!("unknown element {name:?}"))),
            }
        }
        Ok(net)
    }

    pub fn from_file(path: &Path) -> Result<Netlist> {
        let text = std::fs::read_to_string(path)?;
        Netlist::parse(path, &text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name_of = |r: NodeRef| -> &str {
            match r {
                NodeRef::Ground => "0",
                NodeRef::Node(u) => &self.names[u],
            }
        };
        for r in &self.resistors {
            writeln!(out, "{} {} {} {}", r.name, name_of(r.a), name_of(r.b), r.ohms).unwrap();
        }
        for s in &self.currents {
            writeln!(out, "{} {} {} {}", s.name, name_of(s.from), name_of(s.to), s.amps).unwrap();
        }
        for s in &self.voltages {
            writeln!(out, "{} {} {} {}", s.name, name_of(s.plus), name_of(s.minus), s.volts).unwrap();
        }
        out.push_str(".end\n");
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Synthetic power grid fixture: a `rows x cols` resistor mesh, a via resistor
/// to ground every `via_every`-th node, and `loads` current sources drawing
/// current at seeded distinct nodes. Deterministic for a fixed seed.
pub fn synthetic_pg(rows: usize, cols: usize, via_every: usize, loads: usize, seed: u64) -> Netlist {
    use rand::seq::SliceRandom;
    assert!(rows >= 2 && cols >= 2 && via_every >= 1);
    let n = rows * cols;
    assert!(loads <= n);
    let mut net = Netlist::new();
    let name = |r: usize, c: usize| format!("n{r}_{c}");
    let mut k = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                net.add_resistor(&format!("R{k}"), &name(r, c), &name(r, c + 1), 1.0);
                k += 1;
            }
            if r + 1 < rows {
                net.add_resistor(&format!("R{k}"), &name(r, c), &name(r + 1, c), 1.0);
                k += 1;
            }
        }
    }
    for (v, i) in (0..n).step_by(via_every).enumerate() {
        let (r, c) = (i / cols, i % cols);
        net.add_resistor(&format!("Rv{v}"), &name(r, c), "0", 5.0);
    }
    let mut rng = effres_core::seed::rng(seed, 0);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    for (i, &node) in nodes.iter().take(loads).enumerate() {
        let (r, c) = (node / cols, node % cols);
        net.add_current(&format!("I{i}"), &name(r, c), "0", 1e-3);
    }
    net
}
