//! Undirected graphs and the chordal-graph machinery: maximum cardinality
//! search, clique enumeration, perfect sequences of cliques with separators,
//! and clique graphs.
//!
//! Vertices are dense `0..p` indices; names live in
//! [`DataMatrix`](crate::data::DataMatrix). Graphs are immutable once built;
//! edge additions go through [`GraphBuilder`].

mod clique_graph;
mod cliques;
pub mod export;
mod mcs;
mod sequence;

pub use clique_graph::{clique_graph, CliqueGraph};
pub use cliques::find_cliques;
pub use mcs::{mcs_order, mcs_order_randomized, McsOrder};
pub use sequence::{perfect_sequence, perfect_sequence_randomized, PerfectSequence};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(
        "graph is not chordal (maximum cardinality search found no perfect elimination ordering)"
    )]
    NotChordal,
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex index {index} out of range for {vertex_count} vertices")]
    VertexOutOfRange { index: usize, vertex_count: usize },
}

/// An undirected graph over vertices `0..vertex_count`, stored as sorted
/// per-vertex neighbor arrays. No self-loops, no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl UndirectedGraph {
    /// Graph with `vertex_count` vertices and no edges.
    pub fn empty(vertex_count: usize) -> Self {
        UndirectedGraph {
            adjacency: vec![Vec::new(); vertex_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops
    /// and out-of-range endpoints are errors.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new(vertex_count);
        for (i, j) in edges {
            b.add_edge(i, j)?;
        }
        Ok(b.build())
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i >= self.vertex_count() || j >= self.vertex_count() {
            return false;
        }
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nbrs)| {
            nbrs.iter()
                .filter(move |&&j| i < j as usize)
                .map(move |&j| (i, j as usize))
        })
    }

    /// Partition of the vertices into maximal connected subsets, each sorted,
    /// ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let p = self.vertex_count();
        let mut seen = vec![false; p];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for start in 0..p {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adjacency[v] {
                    let w = w as usize;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Component id per vertex, numbered by first appearance.
    pub fn component_ids(&self) -> Vec<u32> {
        let mut ids = vec![u32::MAX; self.vertex_count()];
        for (k, comp) in self.connected_components().into_iter().enumerate() {
            for v in comp {
                ids[v] = k as u32;
            }
        }
        ids
    }

    /// True iff `sep` separates `a \ sep` from `b \ sep`: every path between
    /// them meets `sep`. Vertex sets in different components are separated by
    /// any set, including the empty one.
    pub fn separates(&self, sep: &[u32], a: &[u32], b: &[u32]) -> bool {
        let p = self.vertex_count();
        let mut blocked = vec![false; p];
        for &s in sep {
            blocked[s as usize] = true;
        }
        let mut target = vec![false; p];
        let mut any_target = false;
        for &v in b {
            if !blocked[v as usize] {
                target[v as usize] = true;
                any_target = true;
            }
        }
        if !any_target {
            return true;
        }
        let mut seen = vec![false; p];
        let mut stack = Vec::new();
        for &v in a {
            let v = v as usize;
            if !blocked[v] && !seen[v] {
                if target[v] {
                    return false;
                }
                seen[v] = true;
                stack.push(v);
            }
        }
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                let w = w as usize;
                if blocked[w] || seen[w] {
                    continue;
                }
                if target[w] {
                    return false;
                }
                seen[w] = true;
                stack.push(w);
            }
        }
        true
    }
}

/// Single-owner handle for assembling a graph by edge insertion. All shared
/// [`UndirectedGraph`] values stay immutable; mutation happens only here.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> Self {
        GraphBuilder {
            adjacency: vec![Vec::new(); vertex_count],
            edge_count: 0,
        }
    }

    pub fn from_graph(g: &UndirectedGraph) -> Self {
        GraphBuilder {
            adjacency: g.adjacency.clone(),
            edge_count: g.edge_count,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.adjacency.len() && self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    /// Inserts `{i, j}`; returns whether the edge was new.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool, GraphError> {
        let p = self.adjacency.len();
        if i >= p {
            return Err(GraphError::VertexOutOfRange {
                index: i,
                vertex_count: p,
            });
        }
        if j >= p {
            return Err(GraphError::VertexOutOfRange {
                index: j,
                vertex_count: p,
            });
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        match self.adjacency[i].binary_search(&(j as u32)) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adjacency[i].insert(pos, j as u32);
                let pos = self.adjacency[j].binary_search(&(i as u32)).unwrap_err();
                self.adjacency[j].insert(pos, i as u32);
                self.edge_count += 1;
                Ok(true)
            }
        }
    }

    pub fn build(&self) -> UndirectedGraph {
        UndirectedGraph {
            adjacency: self.adjacency.clone(),
            edge_count: self.edge_count,
        }
    }

    pub fn into_graph(self) -> UndirectedGraph {
        UndirectedGraph {
            adjacency: self.adjacency,
            edge_count: self.edge_count,
        }
    }
}

/// Intersection of two sorted u32 slices.
pub(crate) fn sorted_intersection(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// True iff sorted `a` is a subset of sorted `b`.
pub(crate) fn sorted_is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}
