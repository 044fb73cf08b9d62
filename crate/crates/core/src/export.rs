//! Text renderers for every artifact the pipeline writes.
//!
//! JSON and CSV numbers use the shortest decimal that round-trips to the
//! same `f64`. Matrix dumps use 17 significant digits. Reliability values in
//! DOT labels are rounded to two decimals for display only.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapReport;
use crate::hierarchy::Dendrogram;
use crate::ingest::{Metadata, PriceTable, ReturnsMatrix};
use crate::mst::SpanningTree;

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Square matrix with a symbol header row and column.
pub fn matrix_csv(symbols: &[String], values: &[f64]) -> String {
    let n = symbols.len();
    let mut out = String::new();
    for s in symbols {
        out.push(',');
        out.push_str(&csv_field(s));
    }
    out.push('\n');
    for (i, s) in symbols.iter().enumerate() {
        out.push_str(&csv_field(s));
        for x in &values[i * n..(i + 1) * n] {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// `DATE,SYM...` table; row `t` is labelled with `dates[t]`.
pub fn returns_csv(dates: &[String], returns: &ReturnsMatrix) -> String {
    let mut out = String::from("DATE");
    for s in returns.symbols() {
        out.push(',');
        out.push_str(&csv_field(s));
    }
    out.push('\n');
    for (date, row) in dates.iter().zip(returns.rows()) {
        out.push_str(date);
        for x in row {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// Price table in the ingest format; missing cells are empty.
pub fn prices_csv(table: &PriceTable) -> String {
    let mut out = String::from("DATE");
    for s in table.symbols() {
        out.push(',');
        out.push_str(&csv_field(s));
    }
    out.push('\n');
    for (t, date) in table.dates().iter().enumerate() {
        out.push_str(date);
        for v in table.row(t) {
            out.push(',');
            if let Some(x) = v {
                let _ = write!(out, "{x}");
            }
        }
        out.push('\n');
    }
    out
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected Graphviz graph of the tree. Edges are listed by canonical pair.
pub fn export_dot(tree: &SpanningTree, metadata: Option<&Metadata>) -> String {
    let mut out = String::from("graph mst {\n");
    for s in tree.symbols() {
        let _ = write!(out, "  {} [label={}", dot_id(s), dot_id(s));
        if let Some(info) = metadata.and_then(|m| m.get(s)) {
            let _ = write!(
                out,
                ", continent={}, tooltip={}",
                dot_id(&info.continent),
                dot_id(&info.name)
            );
        }
        out.push_str("];\n");
    }
    let mut edges: Vec<_> = tree.edges().iter().collect();
    edges.sort_by_key(|e| (e.u, e.v));
    for e in edges {
        let (a, b) = (&tree.symbols()[e.u], &tree.symbols()[e.v]);
        let _ = write!(out, "  {} -- {} [", dot_id(a), dot_id(b));
        if let Some(r) = e.reliability {
            let _ = write!(out, "label=\"{r:.2}\", ");
        }
        let _ = writeln!(out, "distance={}, correlation={}];", e.distance, e.correlation);
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MstEdgeRecord {
    pub u: String,
    pub v: String,
    pub u_index: usize,
    pub v_index: usize,
    pub distance: f64,
    pub correlation: f64,
    pub reliability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub seed: u64,
    pub dropped_replicas: usize,
}

/// Layout of `mst.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MstDocument {
    pub symbols: Vec<String>,
    pub total_distance: f64,
    pub degrees: Vec<usize>,
    pub edges: Vec<MstEdgeRecord>,
    pub bootstrap: Option<BootstrapSummary>,
}

impl MstDocument {
    pub fn new(tree: &SpanningTree, report: Option<&BootstrapReport>) -> Self {
        let mut edges: Vec<MstEdgeRecord> = tree
            .edges()
            .iter()
            .map(|e| MstEdgeRecord {
                u: tree.symbols()[e.u].clone(),
                v: tree.symbols()[e.v].clone(),
                u_index: e.u,
                v_index: e.v,
                distance: e.distance,
                correlation: e.correlation,
                reliability: e.reliability,
            })
            .collect();
        edges.sort_by_key(|e| (e.u_index, e.v_index));
        MstDocument {
            symbols: tree.symbols().to_vec(),
            total_distance: tree.total_distance(),
            degrees: tree.degree_profile(),
            edges,
            bootstrap: report.map(|r| BootstrapSummary {
                replicas: r.replicas,
                seed: r.seed,
                dropped_replicas: r.dropped_replicas,
            }),
        }
    }
}

pub fn mst_json(tree: &SpanningTree, report: Option<&BootstrapReport>) -> String {
    let mut s = serde_json::to_string_pretty(&MstDocument::new(tree, report))
        .expect("MST document serializes");
    s.push('\n');
    s
}

/// `u,v,distance,correlation,reliability`, one row per tree edge, sorted by
/// canonical pair. Edges without a reliability get an empty cell.
pub fn bootstrap_csv(tree: &SpanningTree) -> String {
    let mut out = String::from("u,v,distance,correlation,reliability\n");
    let mut edges: Vec<_> = tree.edges().iter().collect();
    edges.sort_by_key(|e| (e.u, e.v));
    for e in edges {
        let _ = write!(
            out,
            "{},{},{},{},",
            csv_field(&tree.symbols()[e.u]),
            csv_field(&tree.symbols()[e.v]),
            e.distance,
            e.correlation
        );
        if let Some(r) = e.reliability {
            let _ = write!(out, "{r}");
        }
        out.push('\n');
    }
    out
}

/// `step,left,right,height,id,size` with cluster ids as in [`Dendrogram`].
pub fn merge_table_csv(dendro: &Dendrogram) -> String {
    let mut out = String::from("step,left,right,height,id,size\n");
    for (k, m) in dendro.merges().iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{}",
            m.left, m.right, m.height, m.id, m.size
        );
    }
    out
}
