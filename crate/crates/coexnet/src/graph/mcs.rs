//! Maximum cardinality search and the perfect-elimination chordality test.

use super::UndirectedGraph;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Result of a maximum cardinality search.
#[derive(Debug, Clone)]
pub struct McsOrder {
    /// Vertices in visit order.
    pub order: Vec<u32>,
    /// `position[v]` = index of `v` in `order`.
    pub position: Vec<u32>,
    /// For each vertex, its neighbors visited before it, sorted by vertex id.
    pub earlier_neighbors: Vec<Vec<u32>>,
    /// Whether the reversed order is a perfect elimination ordering, which
    /// holds exactly when the graph has no chordless cycle longer than three.
    pub is_chordal: bool,
}

/// Runs maximum cardinality search with deterministic tie-breaking (smallest
/// vertex index among those with the most visited neighbors) and tests the
/// resulting ordering for perfect elimination.
pub fn mcs_order(g: &UndirectedGraph) -> McsOrder {
    run(g, |bucket, _| *bucket.first().expect("non-empty bucket"))
}

/// Same search but breaking ties uniformly at random from `seed`. Useful for
/// checking that quantities derived from a perfect sequence are graph
/// invariants rather than artifacts of one ordering.
pub fn mcs_order_randomized(g: &UndirectedGraph, seed: u64) -> McsOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run(g, move |bucket, _| {
        let k = rng.gen_range(0..bucket.len());
        *bucket.iter().nth(k).expect("index in range")
    })
}

fn run(g: &UndirectedGraph, mut pick: impl FnMut(&BTreeSet<u32>, usize) -> u32) -> McsOrder {
    let p = g.vertex_count();
    let mut buckets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); p.max(1)];
    let mut weight = vec![0u32; p];
    let mut visited = vec![false; p];
    buckets[0].extend(0..p as u32);

    let mut order = Vec::with_capacity(p);
    let mut position = vec![u32::MAX; p];
    let mut earlier_neighbors = vec![Vec::new(); p];
    let mut high = 0usize;

    for step in 0..p {
        while buckets[high].is_empty() {
            high -= 1;
        }
        let v = pick(&buckets[high], step);
        buckets[high].remove(&v);
        visited[v as usize] = true;
        position[v as usize] = step as u32;
        order.push(v);
        for &w in g.neighbors(v as usize) {
            let wu = w as usize;
            if visited[wu] {
                earlier_neighbors[v as usize].push(w);
            } else {
                let old = weight[wu] as usize;
                buckets[old].remove(&w);
                buckets[old + 1].insert(w);
                weight[wu] += 1;
                if old + 1 > high {
                    high = old + 1;
                }
            }
        }
    }

    let is_chordal = perfect_elimination_check(g, &position, &earlier_neighbors);
    McsOrder {
        order,
        position,
        earlier_neighbors,
        is_chordal,
    }
}

/// Tarjan–Yannakakis test: the reversed MCS order is a perfect elimination
/// ordering iff for every vertex `v`, the earlier neighbors of `v` other than
/// the latest one are all adjacent to that latest one.
fn perfect_elimination_check(
    g: &UndirectedGraph,
    position: &[u32],
    earlier_neighbors: &[Vec<u32>],
) -> bool {
    for m in earlier_neighbors.iter().take(g.vertex_count()) {
        if m.len() < 2 {
            continue;
        }
        let parent = *m
            .iter()
            .max_by_key(|&&w| position[w as usize])
            .expect("non-empty");
        for &x in m {
            if x != parent && !g.has_edge(x as usize, parent as usize) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UndirectedGraph;

    fn four_cycle() -> UndirectedGraph {
        UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn four_cycle_is_not_chordal() {
        assert!(!mcs_order(&four_cycle()).is_chordal);
    }

    #[test]
    fn trees_are_chordal() {
        let star = UndirectedGraph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(mcs_order(&star).is_chordal);
        let path = UndirectedGraph::from_edges(6, (0..5).map(|i| (i, i + 1))).unwrap();
        assert!(mcs_order(&path).is_chordal);
    }

    #[test]
    fn triangulated_square_is_chordal() {
        let g = UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        assert!(mcs_order(&g).is_chordal);
    }

    #[test]
    fn order_visits_every_vertex_once() {
        let g = four_cycle();
        let mcs = mcs_order(&g);
        let mut seen = mcs.order.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for (i, &v) in mcs.order.iter().enumerate() {
            assert_eq!(mcs.position[v as usize] as usize, i);
        }
    }

    #[test]
    fn randomized_tie_break_agrees_on_chordality() {
        let g = UndirectedGraph::from_edges(
            6,
            [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)],
        )
        .unwrap();
        for seed in 0..20 {
            assert!(mcs_order_randomized(&g, seed).is_chordal);
        }
        for seed in 0..20 {
            assert!(!mcs_order_randomized(&four_cycle(), seed).is_chordal);
        }
    }
}
