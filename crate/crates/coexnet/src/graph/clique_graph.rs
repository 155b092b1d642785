//! The clique graph of a decomposable graph.

use super::{sorted_intersection, PerfectSequence, UndirectedGraph};

/// Graph whose vertices are the cliques of a decomposable source graph, with
/// an edge between cliques `C_i` and `C_j` exactly when `C_i ∩ C_j` separates
/// `C_i \ (C_i ∩ C_j)` from `C_j \ (C_i ∩ C_j)` in the source. Single edges
/// joining two cliques of this graph are exactly the additions that keep the
/// source chordal.
#[derive(Debug, Clone)]
pub struct CliqueGraph {
    clique_vertices: Vec<Vec<u32>>,
    edges: Vec<(u32, u32)>,
}

impl CliqueGraph {
    /// Cliques of the source graph, in perfect-sequence order.
    pub fn clique_vertices(&self) -> &[Vec<u32>] {
        &self.clique_vertices
    }

    /// Edges as `(i, j)` clique-index pairs with `i < j`, lexicographic.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }
}

/// Builds the clique graph of `g` from a perfect sequence of its cliques.
/// Separation is decided by graph search avoiding the intersection, so
/// cliques in different connected components are always joined (the empty
/// set separates them). Pairwise over cliques; intended for graphs whose
/// clique count is moderate — the stepwise search maintains its own
/// incremental version of this structure.
pub fn clique_graph(g: &UndirectedGraph, ps: &PerfectSequence) -> CliqueGraph {
    let cliques = ps.cliques().to_vec();
    let comp = g.component_ids();
    let mut edges = Vec::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let (ci, cj) = (&cliques[i], &cliques[j]);
            let sep = sorted_intersection(ci, cj);
            let joined = if sep.is_empty() {
                comp[ci[0] as usize] != comp[cj[0] as usize]
            } else {
                let rest_i: Vec<u32> = ci.iter().copied().filter(|v| !sep.contains(v)).collect();
                let rest_j: Vec<u32> = cj.iter().copied().filter(|v| !sep.contains(v)).collect();
                g.separates(&sep, &rest_i, &rest_j)
            };
            if joined {
                edges.push((i as u32, j as u32));
            }
        }
    }
    CliqueGraph {
        clique_vertices: cliques,
        edges,
    }
}
