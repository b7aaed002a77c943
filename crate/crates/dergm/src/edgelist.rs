//! Whitespace-delimited edge lists.
//!
//! One `u v` pair per line. A line with a single token declares a vertex
//! with no edges. `#` starts a comment. Vertices are either integers (0- or
//! 1-indexed) or arbitrary labels, numbered in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use dergm_core::Graph;

#[derive(Debug, thiserror::Error)]
pub enum EdgeListError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list has no vertices")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Integers if every token is one, labels otherwise.
    #[default]
    Auto,
    Numeric,
    Names,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    pub one_indexed: bool,
    pub labels: LabelMode,
}

#[derive(Debug, Clone)]
pub struct EdgeList {
    pub graph: Graph,
    /// Display name of each vertex.
    pub labels: Vec<String>,
    /// Repeated edges dropped during parsing (either orientation).
    pub duplicates: usize,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

pub fn parse(text: &str, opts: ParseOptions) -> Result<EdgeList, EdgeListError> {
    let rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    for (line, toks) in &rows {
        if toks.len() > 2 {
            return Err(EdgeListError::Parse {
                line: *line,
                message: format!("expected 1 or 2 fields, got {}", toks.len()),
            });
        }
    }
    let numeric = match opts.labels {
        LabelMode::Numeric => true,
        LabelMode::Names => false,
        LabelMode::Auto => rows.iter().all(|(_, t)| t.iter().all(|s| s.parse::<usize>().is_ok())),
    };
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(rows.len());
    let mut labels: Vec<String> = Vec::new();
    if numeric {
        let mut max = None;
        for (line, toks) in &rows {
            let mut r = Vec::with_capacity(2);
            for s in toks {
                let v: usize = s.parse().map_err(|_| EdgeListError::Parse {
                    line: *line,
                    message: format!("`{s}` is not a vertex index"),
                })?;
                let v = if opts.one_indexed {
                    v.checked_sub(1)
                        .ok_or(EdgeListError::Parse { line: *line, message: "vertex 0 in a 1-indexed file".into() })?
                } else {
                    v
                };
                max = max.max(Some(v));
                r.push(v);
            }
            ids.push(r);
        }
        let n = max.map_or(0, |m| m + 1);
        let offset = opts.one_indexed as usize;
        labels = (0..n).map(|v| (v + offset).to_string()).collect();
    } else {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (_, toks) in &rows {
            ids.push(
                toks.iter()
                    .map(|s| {
                        *index.entry(s).or_insert_with(|| {
                            labels.push(s.to_string());
                            labels.len() - 1
                        })
                    })
                    .collect(),
            );
        }
    }
    if labels.is_empty() {
        return Err(EdgeListError::Empty);
    }
    let mut graph = Graph::empty(labels.len());
    let mut duplicates = 0;
    for ((line, _), r) in rows.iter().zip(&ids) {
        if let [u, v] = r[..] {
            if u == v {
                return Err(EdgeListError::Parse { line: *line, message: format!("self-loop on {}", labels[u]) });
            }
            if !graph.add_edge(u, v).expect("indices in range") {
                duplicates += 1;
            }
        }
    }
    Ok(EdgeList { graph, labels, duplicates })
}

pub fn read(path: &Path, opts: ParseOptions) -> Result<EdgeList, EdgeListError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EdgeListError::Io { path: path.display().to_string(), source })?;
    parse(&text, opts)
}

/// 0-indexed edge list; isolated vertices get a line of their own so the
/// vertex count survives a round trip.
pub fn write(g: &Graph) -> String {
    let mut out = String::new();
    let mut touched = vec![false; g.n()];
    for (u, v) in g.edges() {
        touched[u] = true;
        touched[v] = true;
        writeln!(out, "{u} {v}").unwrap();
    }
    for (v, _) in touched.iter().enumerate().filter(|(_, t)| !**t) {
        writeln!(out, "{v}").unwrap();
    }
    out
}
