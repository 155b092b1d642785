//! Collapse a chordal network with binary vertex labels into a cluster graph
//! of differential-expression-dense regions and compute per-cluster and
//! per-gene uncertainty indices.

use crate::graph::{PerfectSequence, UndirectedGraph};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error(
        "no cluster contains a differentially expressed vertex; the uncertainty index is undefined"
    )]
    DegenerateNetwork,
    #[error("labels length {labels} does not match vertex count {vertices}")]
    LabelMismatch { labels: usize, vertices: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
}

/// Classification of a clique or cluster by its share of differentially
/// expressed members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClusterClass {
    /// Differentially-expressed-gene dense.
    Degd,
    /// Not differentially-expressed-gene dense.
    Ndegd,
}

impl ClusterClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterClass::Degd => "DEGD",
            ClusterClass::Ndegd => "NDEGD",
        }
    }
}

/// A chordal network together with per-vertex differential-expression flags
/// and the density threshold `alpha` (defaulting to the overall proportion
/// of flagged vertices).
#[derive(Debug, Clone)]
pub struct LabeledNetwork {
    graph: UndirectedGraph,
    labels: Vec<bool>,
    alpha: f64,
}

impl LabeledNetwork {
    /// Threshold defaults to the proportion of flagged vertices.
    pub fn new(graph: UndirectedGraph, labels: Vec<bool>) -> Result<Self, ClusterError> {
        let de = labels.iter().filter(|&&l| l).count();
        let alpha = de as f64 / labels.len().max(1) as f64;
        Self::with_alpha(graph, labels, alpha)
    }

    pub fn with_alpha(
        graph: UndirectedGraph,
        labels: Vec<bool>,
        alpha: f64,
    ) -> Result<Self, ClusterError> {
        if labels.len() != graph.vertex_count() {
            return Err(ClusterError::LabelMismatch {
                labels: labels.len(),
                vertices: graph.vertex_count(),
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ClusterError::InvalidAlpha(alpha));
        }
        Ok(LabeledNetwork {
            graph,
            labels,
            alpha,
        })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// One disjoint vertex cluster of the reduced network.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Sorted member vertices.
    pub members: Vec<u32>,
    pub class: ClusterClass,
    /// Number of differentially expressed members.
    pub eta: usize,
    /// Raw uncertainty −(η/p)·ln(η/p); zero when η = 0. Filled by
    /// [`uncertainty`].
    pub rho0: Option<f64>,
    /// rho0 normalized by the network maximum. Filled by [`uncertainty`].
    pub rho: Option<f64>,
}

/// Second-order graph whose vertices are the disjoint clusters; two clusters
/// are adjacent when any two of their members are adjacent in the source.
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    pub clusters: Vec<Cluster>,
    /// Cluster-index pairs `(i, j)`, `i < j`, lexicographic.
    pub edges: Vec<(u32, u32)>,
    /// Cluster id per source vertex.
    pub assignment: Vec<u32>,
}

/// Labels each clique DEGD when its flagged share reaches the threshold.
/// When no vertex is flagged at all, every clique is NDEGD (the boundary
/// case `0 ≥ 0` would otherwise mark everything dense).
pub fn classify_cliques(net: &LabeledNetwork, ps: &PerfectSequence) -> Vec<ClusterClass> {
    let any_de = net.labels.iter().any(|&l| l);
    ps.cliques()
        .iter()
        .map(|c| {
            if !any_de {
                return ClusterClass::Ndegd;
            }
            let de = c.iter().filter(|&&v| net.labels[v as usize]).count();
            if de as f64 / c.len() as f64 >= net.alpha {
                ClusterClass::Degd
            } else {
                ClusterClass::Ndegd
            }
        })
        .collect()
}

/// Merges same-class cliques that share vertices into raw clusters, resolves
/// overlaps (a vertex lying in clusters of both classes moves to the cluster
/// whose class is opposite to its own label, deterministically), drops
/// emptied clusters, and forms the cluster graph from the original
/// adjacency.
pub fn build_clusters(
    net: &LabeledNetwork,
    ps: &PerfectSequence,
    classes: &[ClusterClass],
) -> ClusterGraph {
    assert_eq!(classes.len(), ps.cliques().len());
    let p = net.graph.vertex_count();

    // Union same-class cliques through shared vertices. `G_j` is the
    // subgraph formed by the j-classified cliques, so two cliques fall in
    // one raw cluster exactly when a chain of same-class cliques with
    // overlapping vertex sets links them.
    let k = ps.cliques().len();
    let mut parent: Vec<u32> = (0..k as u32).collect();
    fn find(parent: &mut [u32], mut v: u32) -> u32 {
        while parent[v as usize] != v {
            let up = parent[parent[v as usize] as usize];
            parent[v as usize] = up;
            v = up;
        }
        v
    }
    let mut last_clique_of: Vec<[Option<u32>; 2]> = vec![[None, None]; p];
    for (i, c) in ps.cliques().iter().enumerate() {
        let side = match classes[i] {
            ClusterClass::Degd => 0,
            ClusterClass::Ndegd => 1,
        };
        for &v in c {
            if let Some(prev) = last_clique_of[v as usize][side] {
                let (a, b) = (find(&mut parent, prev), find(&mut parent, i as u32));
                if a != b {
                    parent[a as usize] = b;
                }
            }
            last_clique_of[v as usize][side] = Some(i as u32);
        }
    }

    // Raw clusters: vertex sets per clique-component, remembering for each
    // vertex its cluster on each side.
    let mut root_to_cluster: std::collections::BTreeMap<u32, usize> = Default::default();
    let mut raw: Vec<(ClusterClass, BTreeSet<u32>)> = Vec::new();
    let mut membership: Vec<[Option<u32>; 2]> = vec![[None, None]; p];
    for (i, c) in ps.cliques().iter().enumerate() {
        let root = find(&mut parent, i as u32);
        let idx = *root_to_cluster.entry(root).or_insert_with(|| {
            raw.push((classes[i], BTreeSet::new()));
            raw.len() - 1
        });
        debug_assert_eq!(raw[idx].0, classes[i]);
        let side = match classes[i] {
            ClusterClass::Degd => 0,
            ClusterClass::Ndegd => 1,
        };
        for &v in c {
            raw[idx].1.insert(v);
            membership[v as usize][side] = Some(idx as u32);
        }
    }

    // Overlap resolution: a vertex in clusters of both classes moves to the
    // one opposite its own label, which minimizes clusters falsely kept
    // dense. Same-class candidates cannot arise here (per-class clusters are
    // disjoint), but any tie would resolve to the smallest cluster id.
    for (v, slots) in membership.iter().enumerate() {
        if let [Some(in_degd), Some(in_ndegd)] = *slots {
            let stay_in = if net.labels[v] { in_ndegd } else { in_degd };
            let leave = if net.labels[v] { in_degd } else { in_ndegd };
            debug_assert_ne!(stay_in, leave);
            raw[leave as usize].1.remove(&(v as u32));
        }
    }

    // Drop emptied clusters; order the survivors by smallest member.
    let mut survivors: Vec<(ClusterClass, Vec<u32>)> = raw
        .into_iter()
        .filter(|(_, members)| !members.is_empty())
        .map(|(class, members)| (class, members.into_iter().collect()))
        .collect();
    survivors.sort_by_key(|(_, members)| members[0]);

    let mut assignment = vec![u32::MAX; p];
    for (idx, (_, members)) in survivors.iter().enumerate() {
        for &v in members {
            debug_assert_eq!(
                assignment[v as usize],
                u32::MAX,
                "clusters must be disjoint"
            );
            assignment[v as usize] = idx as u32;
        }
    }
    debug_assert!(assignment.iter().all(|&a| a != u32::MAX));

    let mut edge_set: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (i, j) in net.graph.edges() {
        let (a, b) = (assignment[i], assignment[j]);
        if a != b {
            edge_set.insert((a.min(b), a.max(b)));
        }
    }

    let clusters = survivors
        .into_iter()
        .map(|(class, members)| {
            let eta = members.iter().filter(|&&v| net.labels[v as usize]).count();
            Cluster {
                members,
                class,
                eta,
                rho0: None,
                rho: None,
            }
        })
        .collect();

    ClusterGraph {
        clusters,
        edges: edge_set.into_iter().collect(),
        assignment,
    }
}

/// Fills the per-cluster uncertainty indices and returns the per-gene
/// assignment: `ρ₀(K) = −(η_K/p)·ln(η_K/p)` with `ρ₀ = 0` at `η = 0`, and
/// `ρ = ρ₀/ρ₀ₘₐₓ`. Every differentially expressed vertex receives its
/// cluster's ρ; other vertices receive none. When the maximum ρ₀ degenerates
/// to zero while flagged vertices exist (a single all-flagged cluster),
/// those clusters take ρ = 1.
pub fn uncertainty(
    cg: &mut ClusterGraph,
    labels: &[bool],
) -> Result<Vec<Option<f64>>, ClusterError> {
    let p = labels.len();
    if cg.assignment.len() != p {
        return Err(ClusterError::LabelMismatch {
            labels: p,
            vertices: cg.assignment.len(),
        });
    }
    if !cg.clusters.iter().any(|c| c.eta > 0) {
        return Err(ClusterError::DegenerateNetwork);
    }
    let rho0 = |eta: usize| -> f64 {
        if eta == 0 {
            0.0
        } else {
            let frac = eta as f64 / p as f64;
            -frac * frac.ln()
        }
    };
    let max_rho0 = cg
        .clusters
        .iter()
        .map(|c| rho0(c.eta))
        .fold(0.0f64, f64::max);
    for c in &mut cg.clusters {
        let r0 = rho0(c.eta);
        let r = if max_rho0 > 0.0 {
            r0 / max_rho0
        } else if c.eta > 0 {
            1.0
        } else {
            0.0
        };
        c.rho0 = Some(r0);
        c.rho = Some(r);
    }
    Ok((0..p)
        .map(|v| {
            if labels[v] {
                cg.clusters[cg.assignment[v] as usize].rho
            } else {
                None
            }
        })
        .collect())
}

/// Cluster table CSV: id, class, size, eta, rho0, rho, members.
pub fn clusters_to_csv(cg: &ClusterGraph, names: &[String]) -> String {
    let mut out = String::from("cluster,class,size,eta,rho0,rho,members\n");
    for (i, c) in cg.clusters.iter().enumerate() {
        let members = c
            .members
            .iter()
            .map(|&v| names[v as usize].as_str())
            .collect::<Vec<_>>()
            .join(";");
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i,
            c.class.as_str(),
            c.members.len(),
            c.eta,
            fmt_opt(c.rho0),
            fmt_opt(c.rho),
            members
        );
    }
    out
}

/// Per-gene CSV: name, DE flag, cluster id, rho (blank for unflagged genes).
pub fn genes_to_csv(
    cg: &ClusterGraph,
    names: &[String],
    labels: &[bool],
    per_gene_rho: &[Option<f64>],
) -> String {
    let mut out = String::from("name,de,cluster,rho\n");
    for (v, name) in names.iter().enumerate() {
        let rho = per_gene_rho[v].map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            name, labels[v] as u8, cg.assignment[v], rho
        );
    }
    out
}

/// DOT rendering of the cluster graph; vertex size tracks member count and
/// color the class (DEGD red, NDEGD blue).
pub fn cluster_graph_to_dot(cg: &ClusterGraph) -> String {
    let mut out = String::from("graph clusters {\n  node [shape=circle, style=filled];\n");
    for (i, c) in cg.clusters.iter().enumerate() {
        let color = match c.class {
            ClusterClass::Degd => "red",
            ClusterClass::Ndegd => "blue",
        };
        let width = 0.3 + (c.members.len() as f64).sqrt() * 0.15;
        let _ = writeln!(
            out,
            "  k{i} [fillcolor={color}, width={width:.3}, label=\"{i} ({} genes)\"];",
            c.members.len()
        );
    }
    for &(a, b) in &cg.edges {
        let _ = writeln!(out, "  k{a} -- k{b};");
    }
    out.push_str("}\n");
    out
}

/// GraphML rendering of the cluster graph with class, size, eta and rho
/// attributes.
pub fn cluster_graph_to_graphml(cg: &ClusterGraph) -> String {
    use crate::graph::export::xml_escape;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (id, ty) in [
        ("class", "string"),
        ("size", "int"),
        ("eta", "int"),
        ("rho", "double"),
    ] {
        let _ = writeln!(
            s,
            "  <key id=\"{id}\" for=\"node\" attr.name=\"{id}\" attr.type=\"{ty}\"/>"
        );
    }
    s.push_str("  <graph id=\"clusters\" edgedefault=\"undirected\">\n");
    for (i, c) in cg.clusters.iter().enumerate() {
        let _ = writeln!(s, "    <node id=\"k{i}\">");
        let _ = writeln!(
            s,
            "      <data key=\"class\">{}</data>",
            xml_escape(c.class.as_str())
        );
        let _ = writeln!(s, "      <data key=\"size\">{}</data>", c.members.len());
        let _ = writeln!(s, "      <data key=\"eta\">{}</data>", c.eta);
        if let Some(rho) = c.rho {
            let _ = writeln!(s, "      <data key=\"rho\">{rho}</data>");
        }
        s.push_str("    </node>\n");
    }
    for (k, &(a, b)) in cg.edges.iter().enumerate() {
        let _ = writeln!(s, "    <edge id=\"e{k}\" source=\"k{a}\" target=\"k{b}\"/>");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}
