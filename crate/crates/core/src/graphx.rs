//! Directed dependency graph implied by a coefficient matrix.
//!
//! `A[i][j] > 0` means feature `j` feeds into feature `i`, so it becomes the
//! edge `j -> i`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};
use crate::simulate::CoeffMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfLoop {
    pub node: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    pub nodes: Vec<String>,
    pub threshold: f64,
    pub edges: Vec<Edge>,
    pub self_loops: Vec<SelfLoop>,
}

fn check_labels(a: &CoeffMatrix, labels: &[String]) -> Result<()> {
    if labels.len() != a.n() {
        return Err(WmarError::InvalidArgument(format!(
            "{} labels for a {}x{} matrix",
            labels.len(),
            a.n(),
            a.n()
        )));
    }
    Ok(())
}

/// Edges `j -> i` for off-diagonal `A[i][j] > threshold`, in row-major order,
/// and self-loops for diagonal entries above the threshold.
pub fn to_edges(a: &CoeffMatrix, labels: &[String], threshold: f64) -> Result<EdgeList> {
    check_labels(a, labels)?;
    if !(threshold >= 0.0) {
        return Err(WmarError::InvalidArgument(format!(
            "threshold = {threshold} must be nonnegative"
        )));
    }
    let n = a.n();
    let mut edges = Vec::new();
    let mut self_loops = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = a.get(i, j);
            if w <= threshold {
                continue;
            }
            if i == j {
                self_loops.push(SelfLoop {
                    node: labels[i].clone(),
                    weight: w,
                });
            } else {
                edges.push(Edge {
                    from: labels[j].clone(),
                    to: labels[i].clone(),
                    weight: w,
                });
            }
        }
    }
    Ok(EdgeList {
        nodes: labels.to_vec(),
        threshold,
        edges,
        self_loops,
    })
}

/// The `k` heaviest positive off-diagonal edges, heaviest first; equal weights
/// keep row-major order.
pub fn top_k(a: &CoeffMatrix, labels: &[String], k: usize) -> Result<Vec<Edge>> {
    if k == 0 {
        return Err(WmarError::InvalidArgument("k must be at least 1".into()));
    }
    let mut edges = to_edges(a, labels, 0.0)?.edges;
    // stable sort keeps the row-major tie order
    edges.sort_by(|x, y| y.weight.total_cmp(&x.weight));
    edges.truncate(k);
    Ok(edges)
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph. Pen width scales with weight; self-loop weights are node
/// attributes.
pub fn export_dot(list: &EdgeList) -> String {
    if list.nodes.is_empty() && list.edges.is_empty() {
        return "digraph {}\n".to_string();
    }
    let mut out = String::from("digraph {\n");
    let _ = writeln!(out, "  graph [threshold=\"{:.6}\"];", list.threshold);
    for node in &list.nodes {
        match list.self_loops.iter().find(|s| &s.node == node) {
            Some(s) => {
                let _ = writeln!(out, "  {} [self_loop=\"{:.6}\"];", dot_id(node), s.weight);
            }
            None => {
                let _ = writeln!(out, "  {};", dot_id(node));
            }
        }
    }
    for e in &list.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [weight=\"{:.6}\", penwidth=\"{:.6}\"];",
            dot_id(&e.from),
            dot_id(&e.to),
            e.weight,
            8.0 * e.weight
        );
    }
    out.push_str("}\n");
    out
}

pub fn export_json(list: &EdgeList) -> Result<String> {
    Ok(serde_json::to_string_pretty(list)?)
}

pub fn parse_json(text: &str) -> Result<EdgeList> {
    Ok(serde_json::from_str(text)?)
}

/// Edge table with header `from,to,weight`.
pub fn export_csv(edges: &[Edge]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to", "weight"])?;
    for e in edges {
        w.write_record([e.from.as_str(), e.to.as_str(), &e.weight.to_string()])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| WmarError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| WmarError::Format(e.to_string()))
}
