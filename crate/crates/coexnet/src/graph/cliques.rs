//! Maximal clique enumeration.
//!
//! Chordal graphs use the elimination structure from maximum cardinality
//! search (linear-time family); anything else falls back to Bron–Kerbosch
//! with pivoting, which is only ever needed for oracles and diagnostics.

use super::{mcs_order, sorted_is_subset, UndirectedGraph};

/// Returns every maximal complete subgraph exactly once, each clique sorted,
/// cliques ordered for chordal inputs by the position of their last vertex in
/// the search order (this ordering is a perfect sequence) and for general
/// inputs lexicographically.
pub fn find_cliques(g: &UndirectedGraph) -> Vec<Vec<u32>> {
    let mcs = mcs_order(g);
    if mcs.is_chordal {
        cliques_from_mcs(g, &mcs)
    } else {
        let mut cliques = bron_kerbosch(g);
        cliques.sort();
        cliques
    }
}

/// Cliques of a chordal graph from its MCS order. Every maximal clique is
/// `{v} ∪ M(v)` where `M(v)` are the earlier neighbors of its latest vertex
/// `v`; a candidate is non-maximal exactly when some later neighbor `w` of
/// `v` has `M(v) ⊆ M(w)`.
pub(super) fn cliques_from_mcs(g: &UndirectedGraph, mcs: &super::McsOrder) -> Vec<Vec<u32>> {
    debug_assert!(mcs.is_chordal);
    let mut cliques = Vec::new();
    for &v in &mcs.order {
        let m = &mcs.earlier_neighbors[v as usize];
        let maximal = g.neighbors(v as usize).iter().all(|&w| {
            mcs.position[w as usize] < mcs.position[v as usize]
                || !sorted_is_subset(m, &mcs.earlier_neighbors[w as usize])
        });
        if maximal {
            let mut c = Vec::with_capacity(m.len() + 1);
            c.extend_from_slice(m);
            c.push(v);
            c.sort_unstable();
            cliques.push(c);
        }
    }
    cliques
}

fn bron_kerbosch(g: &UndirectedGraph) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut r = Vec::new();
    let p: Vec<u32> = (0..g.vertex_count() as u32).collect();
    extend(g, &mut r, p, Vec::new(), &mut out);
    out
}

fn extend(
    g: &UndirectedGraph,
    r: &mut Vec<u32>,
    p: Vec<u32>,
    x: Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if p.is_empty() && x.is_empty() {
        let mut clique = r.clone();
        clique.sort_unstable();
        out.push(clique);
        return;
    }
    // Pivot on the vertex covering most of P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| {
            let nbrs = g.neighbors(u as usize);
            p.iter()
                .filter(|&&v| nbrs.binary_search(&v).is_ok())
                .count()
        })
        .expect("P ∪ X non-empty");
    let pivot_nbrs = g.neighbors(pivot as usize);
    let candidates: Vec<u32> = p
        .iter()
        .copied()
        .filter(|&v| pivot_nbrs.binary_search(&v).is_err())
        .collect();

    let mut p = p;
    let mut x = x;
    for v in candidates {
        let nbrs = g.neighbors(v as usize);
        let p_next: Vec<u32> = p
            .iter()
            .copied()
            .filter(|&u| nbrs.binary_search(&u).is_ok())
            .collect();
        let x_next: Vec<u32> = x
            .iter()
            .copied()
            .filter(|&u| nbrs.binary_search(&u).is_ok())
            .collect();
        r.push(v);
        extend(g, r, p_next, x_next, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}
