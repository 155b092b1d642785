//! Graph serialization: JSON (ordered edge list + vertex names), GraphML and
//! DOT emitters. DOT colors vertices by differential-expression label when
//! labels are attached.

use super::{GraphError, UndirectedGraph};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const GRAPH_FORMAT_TAG: &str = "coexnet-graph/1";

/// JSON document for a labeled graph. Edge list is ordered `(i, j)`, `i < j`,
/// lexicographic, so serialization is canonical.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphJson {
    pub format: String,
    pub names: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_labels: Option<Vec<bool>>,
}

impl GraphJson {
    pub fn new(g: &UndirectedGraph, names: &[String], de_labels: Option<&[bool]>) -> Self {
        assert_eq!(g.vertex_count(), names.len());
        GraphJson {
            format: GRAPH_FORMAT_TAG.to_string(),
            names: names.to_vec(),
            edges: g.edges().collect(),
            de_labels: de_labels.map(|l| l.to_vec()),
        }
    }

    pub fn to_graph(&self) -> Result<UndirectedGraph, GraphError> {
        UndirectedGraph::from_edges(self.names.len(), self.edges.iter().copied())
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let doc: GraphJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if doc.format != GRAPH_FORMAT_TAG {
            return Err(format!(
                "unsupported graph format tag {:?} (expected {:?})",
                doc.format, GRAPH_FORMAT_TAG
            ));
        }
        if let Some(labels) = &doc.de_labels {
            if labels.len() != doc.names.len() {
                return Err("de_labels length does not match names".into());
            }
        }
        Ok(doc)
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// GraphML with node attributes `name` and, when labels are given, `de`.
pub fn to_graphml(g: &UndirectedGraph, names: &[String], de_labels: Option<&[bool]>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
    if de_labels.is_some() {
        s.push_str("  <key id=\"de\" for=\"node\" attr.name=\"de\" attr.type=\"boolean\"/>\n");
    }
    s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(s, "    <node id=\"n{i}\">");
        let _ = writeln!(s, "      <data key=\"name\">{}</data>", xml_escape(name));
        if let Some(labels) = de_labels {
            let _ = writeln!(s, "      <data key=\"de\">{}</data>", labels[i]);
        }
        s.push_str("    </node>\n");
    }
    for (k, (i, j)) in g.edges().enumerate() {
        let _ = writeln!(s, "    <edge id=\"e{k}\" source=\"n{i}\" target=\"n{j}\"/>");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

/// DOT output; with labels attached, differentially expressed vertices are
/// filled red and the others blue.
pub fn to_dot(g: &UndirectedGraph, names: &[String], de_labels: Option<&[bool]>) -> String {
    let mut s = String::new();
    s.push_str("graph coexpression {\n");
    s.push_str("  node [shape=circle];\n");
    for (i, name) in names.iter().enumerate() {
        let color = match de_labels {
            Some(labels) if labels[i] => " [style=filled, fillcolor=red]",
            Some(_) => " [style=filled, fillcolor=blue]",
            None => "",
        };
        let _ = writeln!(s, "  {}{};", dot_quote(name), color);
    }
    for (i, j) in g.edges() {
        let _ = writeln!(s, "  {} -- {};", dot_quote(&names[i]), dot_quote(&names[j]));
    }
    s.push_str("}\n");
    s
}
