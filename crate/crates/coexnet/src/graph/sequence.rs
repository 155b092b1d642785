//! Perfect sequences of cliques and their separators.

use super::cliques::cliques_from_mcs;
use super::{mcs_order, sorted_intersection, sorted_is_subset, GraphError, UndirectedGraph};
use std::collections::BTreeMap;

/// Cliques `C₁..C_k` of a chordal graph in an order whose separators
/// `S_j = C_j ∩ (C₁ ∪ … ∪ C_{j−1})` are complete and contained in an earlier
/// clique, together with separator multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectSequence {
    vertex_count: usize,
    cliques: Vec<Vec<u32>>,
    separators: Vec<Vec<u32>>,
}

impl PerfectSequence {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Ordered cliques, each sorted.
    pub fn cliques(&self) -> &[Vec<u32>] {
        &self.cliques
    }

    /// Ordered separators; `separators()[0]` is always empty.
    pub fn separators(&self) -> &[Vec<u32>] {
        &self.separators
    }

    /// Multiplicity `ν(S)` of each distinct separator among `S₂..S_k`.
    /// Empty separators from additional connected components are included
    /// under the empty key.
    pub fn separator_multiplicities(&self) -> BTreeMap<Vec<u32>, usize> {
        let mut nu = BTreeMap::new();
        for s in self.separators.iter().skip(1) {
            *nu.entry(s.clone()).or_insert(0) += 1;
        }
        nu
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edge count of the underlying graph, via the decomposable identity
    /// |E| = Σ_C C(|C|,2) − Σ_S ν(S)·C(|S|,2).
    pub fn edge_count(&self) -> usize {
        let pairs = |k: usize| k * k.saturating_sub(1) / 2;
        let clique_pairs: usize = self.cliques.iter().map(|c| pairs(c.len())).sum();
        let sep_pairs: usize = self.separators.iter().skip(1).map(|s| pairs(s.len())).sum();
        clique_pairs - sep_pairs
    }

    /// Checks the defining properties against `g`: separators recomputed from
    /// scratch match, each is complete and contained in an earlier clique,
    /// cliques are maximal complete sets, and their union covers the vertex
    /// set. Intended for tests and model validation.
    pub fn validate(&self, g: &UndirectedGraph) -> Result<(), String> {
        if g.vertex_count() != self.vertex_count {
            return Err("vertex count mismatch".into());
        }
        let mut covered = vec![false; self.vertex_count];
        let mut union: Vec<u32> = Vec::new();
        for (j, (c, s)) in self.cliques.iter().zip(&self.separators).enumerate() {
            for i in 0..c.len() {
                covered[c[i] as usize] = true;
                for k in i + 1..c.len() {
                    if !g.has_edge(c[i] as usize, c[k] as usize) {
                        return Err(format!("clique {j} is not complete"));
                    }
                }
            }
            for v in 0..self.vertex_count as u32 {
                let in_c = c.binary_search(&v).is_ok();
                if !in_c && c.iter().all(|&u| g.has_edge(u as usize, v as usize)) {
                    return Err(format!("clique {j} is not maximal (absorbs vertex {v})"));
                }
            }
            let recomputed = sorted_intersection(c, &union);
            if &recomputed != s {
                return Err(format!("separator {j} does not match its definition"));
            }
            if j > 0 && !self.cliques[..j].iter().any(|e| sorted_is_subset(s, e)) {
                return Err(format!("separator {j} not contained in an earlier clique"));
            }
            let mut merged = union.clone();
            merged.extend_from_slice(c);
            merged.sort_unstable();
            merged.dedup();
            union = merged;
        }
        if covered.iter().any(|&c| !c) {
            return Err("cliques do not cover the vertex set".into());
        }
        Ok(())
    }
}

/// Orders the cliques of a chordal graph into a perfect sequence (cliques
/// sorted by the search position of their latest vertex) and computes the
/// separators.
pub fn perfect_sequence(g: &UndirectedGraph) -> Result<PerfectSequence, GraphError> {
    let mcs = mcs_order(g);
    if !mcs.is_chordal {
        return Err(GraphError::NotChordal);
    }
    Ok(sequence_from_cliques(
        g.vertex_count(),
        cliques_from_mcs(g, &mcs),
    ))
}

/// As [`perfect_sequence`] but with randomized tie-breaking in the underlying
/// search, so that separator multisets can be compared across orderings.
pub fn perfect_sequence_randomized(
    g: &UndirectedGraph,
    seed: u64,
) -> Result<PerfectSequence, GraphError> {
    let mcs = super::mcs_order_randomized(g, seed);
    if !mcs.is_chordal {
        return Err(GraphError::NotChordal);
    }
    Ok(sequence_from_cliques(
        g.vertex_count(),
        cliques_from_mcs(g, &mcs),
    ))
}

pub(crate) fn sequence_from_cliques(
    vertex_count: usize,
    cliques: Vec<Vec<u32>>,
) -> PerfectSequence {
    let mut separators = Vec::with_capacity(cliques.len());
    let mut union: Vec<u32> = Vec::new();
    for c in &cliques {
        separators.push(sorted_intersection(c, &union));
        let mut merged = union.clone();
        merged.extend_from_slice(c);
        merged.sort_unstable();
        merged.dedup();
        union = merged;
    }
    PerfectSequence {
        vertex_count,
        cliques,
        separators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UndirectedGraph;

    #[test]
    fn path_sequence() {
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        assert_eq!(ps.cliques(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(ps.separators(), &[vec![], vec![1]]);
        ps.validate(&g).unwrap();
        assert_eq!(ps.edge_count(), 2);
    }

    #[test]
    fn four_cycle_is_rejected() {
        let g = UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(matches!(perfect_sequence(&g), Err(GraphError::NotChordal)));
    }

    #[test]
    fn eleven_vertex_example_separator_multiset() {
        let g = crate::graph::testgraphs::eleven_vertex_example();
        let ps = perfect_sequence(&g).unwrap();
        ps.validate(&g).unwrap();
        // 1-based: {2,3}, {8,10}, {9,10}, {8,9}, {2}, each once.
        let expected: Vec<(Vec<u32>, usize)> = vec![
            (vec![1], 1),
            (vec![1, 2], 1),
            (vec![7, 8], 1),
            (vec![7, 9], 1),
            (vec![8, 9], 1),
        ];
        let nu = ps.separator_multiplicities();
        assert_eq!(nu.into_iter().collect::<Vec<_>>(), expected);
        assert_eq!(ps.edge_count(), 20);
    }

    #[test]
    fn separator_multiset_is_an_invariant_across_tie_breaks() {
        let g = crate::graph::testgraphs::eleven_vertex_example();
        let reference = perfect_sequence(&g).unwrap().separator_multiplicities();
        for seed in 0..25 {
            let ps = perfect_sequence_randomized(&g, seed).unwrap();
            ps.validate(&g).unwrap();
            assert_eq!(ps.separator_multiplicities(), reference);
        }
    }

    #[test]
    fn disconnected_graph_counts_empty_separators() {
        let g = UndirectedGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        ps.validate(&g).unwrap();
        let nu = ps.separator_multiplicities();
        assert_eq!(nu.get(&Vec::new()), Some(&1));
    }
}
