//! Graph, query, and result files.
//!
//! Two graph formats: whitespace edge lists (`u v w` per line, `#` comments)
//! and Matrix Market symmetric coordinate files. Writers emit the canonical
//! edge order, and numbers are printed so that parsing them back recovers the
//! exact value.

use crate::engine::ResistanceResult;
use crate::error::{Error, Result};
use crate::graph::{QuerySet, WeightedGraph};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    MatrixMarket,
}

impl std::str::FromStr for GraphFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "edgelist" => Ok(GraphFormat::EdgeList),
            "mm" | "matrixmarket" => Ok(GraphFormat::MatrixMarket),
            other => Err(format!("unknown format {other:?} (expected edgelist|mm)")),
        }
    }
}

/// Picks the format from the file extension: `.mtx` and `.mm` mean Matrix
/// Market, anything else is an edge list.
pub fn detect_format(path: &Path) -> GraphFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") | Some("mm") => GraphFormat::MatrixMarket,
        _ => GraphFormat::EdgeList,
    }
}

/// How node ids in the file map to internal ids. One-indexed inputs are
/// shifted down by one on read and back up on write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    fn read(self, raw: usize, path: &str, line: usize) -> Result<usize> {
        match self {
            IndexBase::Zero => Ok(raw),
            IndexBase::One => raw.checked_sub(1).ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line,
                msg: "node id 0 in a one-indexed file".to_string(),
            }),
        }
    }

    fn write(self, id: usize) -> usize {
        match self {
            IndexBase::Zero => id,
            IndexBase::One => id + 1,
        }
    }
}

pub fn parse_graph(path: &Path, format: GraphFormat, base: IndexBase) -> Result<WeightedGraph> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let name = path.display().to_string();
    match format {
        GraphFormat::EdgeList => parse_edge_list(reader, &name, base),
        GraphFormat::MatrixMarket => parse_matrix_market(reader, &name),
    }
}

fn parse_edge_list<R: BufRead>(reader: R, path: &str, base: IndexBase) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let (u, v, w) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(u), Some(v), Some(w), None) => (u, v, w),
            _ => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("expected `u v w`, got {body:?}"),
                })
            }
        };
        let parse_id = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("bad node id {s:?}"),
            })
        };
        let u = base.read(parse_id(u)?, path, lineno)?;
        let v = base.read(parse_id(v)?, path, lineno)?;
        let w: f64 = w.parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line: lineno,
            msg: format!("bad weight {w:?}"),
        })?;
        max_node = max_node.max(u).max(v);
        edges.push((u, v, w));
    }
    let n = if edges.is_empty() { 0 } else { max_node + 1 };
    WeightedGraph::from_edges(n, edges)
}

fn parse_matrix_market<R: BufRead>(reader: R, path: &str) -> Result<WeightedGraph> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, Ok(l))) if l.trim().is_empty() => continue,
            Some((no, Ok(l))) => break (no + 1, l),
            Some((_, Err(e))) => return Err(e.into()),
            None => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: 0,
                    msg: "empty file".to_string(),
                })
            }
        }
    };
    let (hline, htext) = header;
    let fields: Vec<String> = htext.split_whitespace().map(|s| s.to_lowercase()).collect();
    let ok = fields.len() >= 5
        && fields[0] == "%%matrixmarket"
        && fields[1] == "matrix"
        && fields[2] == "coordinate"
        && (fields[3] == "real" || fields[3] == "integer" || fields[3] == "pattern")
        && fields[4] == "symmetric";
    if !ok {
        return Err(Error::Parse {
            path: path.to_string(),
            line: hline,
            msg: format!("unsupported header {htext:?}"),
        });
    }
    let pattern = fields[3] == "pattern";

    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in lines {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let bad = |msg: String| Error::Parse {
            path: path.to_string(),
            line: lineno,
            msg,
        };
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(bad(format!("expected `rows cols nnz`, got {body:?}")));
                }
                let rows: usize = toks[0].parse().map_err(|_| bad("bad row count".into()))?;
                let cols: usize = toks[1].parse().map_err(|_| bad("bad col count".into()))?;
                if rows != cols {
                    return Err(bad(format!("matrix must be square, got {rows}x{cols}")));
                }
                n = rows;
                size = Some((rows, toks[2].parse().map_err(|_| bad("bad nnz".into()))?));
            }
            Some(_) => {
                let want = if pattern { 2 } else { 3 };
                if toks.len() != want {
                    return Err(bad(format!("expected {want} fields, got {body:?}")));
                }
                let i: usize = toks[0].parse().map_err(|_| bad("bad row index".into()))?;
                let j: usize = toks[1].parse().map_err(|_| bad("bad col index".into()))?;
                if i < 1 || i > n || j < 1 || j > n {
                    return Err(bad(format!("index ({i}, {j}) outside 1..={n}")));
                }
                if i == j {
                    // diagonal of a Laplacian-like matrix carries no edge
                    continue;
                }
                let w = if pattern {
                    1.0
                } else {
                    let v: f64 = toks[2].parse().map_err(|_| bad("bad value".into()))?;
                    v.abs()
                };
                edges.push((i - 1, j - 1, w));
            }
        }
    }
    if size.is_none() {
        return Err(Error::Parse {
            path: path.to_string(),
            line: hline,
            msg: "missing size line".to_string(),
        });
    }
    WeightedGraph::from_edges(n, edges)
}

pub fn write_graph<W: Write>(
    g: &WeightedGraph,
    format: GraphFormat,
    base: IndexBase,
    mut w: W,
) -> Result<()> {
    match format {
        GraphFormat::EdgeList => {
            for e in g.edges() {
                writeln!(w, "{} {} {}", base.write(e.u), base.write(e.v), e.w)?;
            }
        }
        GraphFormat::MatrixMarket => {
            writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
            writeln!(w, "{} {} {}", g.n(), g.n(), g.edge_count())?;
            for e in g.edges() {
                // lower triangle: row > col in one-indexed output
                writeln!(w, "{} {} {}", e.v + 1, e.u + 1, e.w)?;
            }
        }
    }
    Ok(())
}

/// Query files: `p q` per line, same comment rules as edge lists.
pub fn parse_queries(path: &Path, base: IndexBase, n: usize) -> Result<QuerySet> {
    let file = std::fs::File::open(path)?;
    let name = path.display().to_string();
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                path: name.clone(),
                line: lineno,
                msg: format!("expected `p q`, got {body:?}"),
            });
        }
        let parse_id = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                path: name.clone(),
                line: lineno,
                msg: format!("bad node id {s:?}"),
            })
        };
        let p = base.read(parse_id(toks[0])?, &name, lineno)?;
        let q = base.read(parse_id(toks[1])?, &name, lineno)?;
        pairs.push((p, q));
    }
    QuerySet::new(n, pairs)
}

/// Result files: `p q resistance` per line, printed with enough digits to
/// recover the exact double on re-parse.
pub fn write_results<W: Write>(
    results: &[ResistanceResult],
    base: IndexBase,
    mut w: W,
) -> Result<()> {
    for r in results {
        writeln!(w, "{} {} {:.16e}", base.write(r.p), base.write(r.q), r.resistance)?;
    }
    Ok(())
}

pub fn parse_results(path: &Path, base: IndexBase) -> Result<Vec<(usize, usize, f64)>> {
    let file = std::fs::File::open(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                path: name.clone(),
                line: lineno,
                msg: format!("expected `p q r`, got {body:?}"),
            });
        }
        let bad = |msg: String| Error::Parse {
            path: name.clone(),
            line: lineno,
            msg,
        };
        let p: usize = toks[0].parse().map_err(|_| bad("bad node id".into()))?;
        let q: usize = toks[1].parse().map_err(|_| bad("bad node id".into()))?;
        let r: f64 = toks[2].parse().map_err(|_| bad("bad resistance".into()))?;
        let p = base.read(p, &name, lineno)?;
        let q = base.read(q, &name, lineno)?;
        out.push((p, q, r));
    }
    Ok(out)
}
