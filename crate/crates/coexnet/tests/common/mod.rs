//! Shared oracles for the integration suites. Everything here goes through
//! independent routes (exhaustive scans, direct formula evaluation,
//! fixed-point iteration) rather than the code paths under test.

#![allow(dead_code)]

use coexnet::data::DataMatrix;
use coexnet::graph::{GraphBuilder, PerfectSequence, UndirectedGraph};
use coexnet::linalg;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The worked 11-vertex example (20 edges, six cliques), 0-based.
pub fn eleven_vertex_example() -> UndirectedGraph {
    let edges_1based = [
        (1, 2),
        (1, 3),
        (2, 3),
        (2, 8),
        (2, 10),
        (3, 8),
        (3, 10),
        (8, 10),
        (8, 9),
        (9, 10),
        (4, 9),
        (4, 10),
        (8, 11),
        (9, 11),
        (2, 5),
        (2, 6),
        (2, 7),
        (5, 6),
        (5, 7),
        (6, 7),
    ];
    UndirectedGraph::from_edges(11, edges_1based.map(|(a, b)| (a - 1, b - 1))).unwrap()
}

/// Labels of the worked clustering example: vertices 5,6,7,9,10,11 (1-based)
/// are differentially expressed.
pub fn eleven_vertex_labels() -> Vec<bool> {
    let mut labels = vec![false; 11];
    for v in [5usize, 6, 7, 9, 10, 11] {
        labels[v - 1] = true;
    }
    labels
}

/// Chordality by definition: no induced chordless cycle of length ≥ 4.
/// Scans every vertex subset, so only sensible for small graphs.
pub fn chordal_by_subset_scan(g: &UndirectedGraph) -> bool {
    let p = g.vertex_count();
    assert!(p <= 16, "subset scan oracle is exponential");
    for mask in 0u32..(1 << p) {
        if (mask.count_ones() as usize) < 4 {
            continue;
        }
        let verts: Vec<usize> = (0..p).filter(|&v| mask & (1 << v) != 0).collect();
        // Induced chordless cycle ⟺ connected and 2-regular in the induced
        // subgraph.
        let degrees: Vec<usize> = verts
            .iter()
            .map(|&v| {
                g.neighbors(v)
                    .iter()
                    .filter(|&&w| mask & (1 << w) != 0)
                    .count()
            })
            .collect();
        if degrees.iter().any(|&d| d != 2) {
            continue;
        }
        // Walk the cycle from the first vertex.
        let mut visited = vec![verts[0]];
        let mut prev = usize::MAX;
        let mut cur = verts[0];
        loop {
            let next = g
                .neighbors(cur)
                .iter()
                .map(|&w| w as usize)
                .find(|&w| mask & (1 << w) != 0 && w != prev);
            let Some(next) = next else { break };
            if next == verts[0] {
                break;
            }
            prev = cur;
            cur = next;
            visited.push(cur);
            if visited.len() > verts.len() {
                break;
            }
        }
        if visited.len() == verts.len() {
            return false;
        }
    }
    true
}

/// Uniformly random graph with the given edge probability.
pub fn random_graph(p: usize, edge_prob: f64, rng: &mut ChaCha8Rng) -> UndirectedGraph {
    let mut b = GraphBuilder::new(p);
    for i in 0..p {
        for j in i + 1..p {
            if rng.gen_bool(edge_prob) {
                b.add_edge(i, j).unwrap();
            }
        }
    }
    b.into_graph()
}

/// Random chordal graph grown by `target_edges` random additions, each
/// verified by re-running the search-based chordality test on the candidate
/// graph (independent of the clique-graph machinery under test).
pub fn random_chordal_graph(
    p: usize,
    target_edges: usize,
    rng: &mut ChaCha8Rng,
) -> UndirectedGraph {
    let mut b = GraphBuilder::new(p);
    for _ in 0..target_edges {
        let mut candidates = Vec::new();
        let current = b.build();
        for i in 0..p {
            for j in i + 1..p {
                if current.has_edge(i, j) {
                    continue;
                }
                let mut trial = GraphBuilder::from_graph(&current);
                trial.add_edge(i, j).unwrap();
                if coexnet::graph::mcs_order(&trial.into_graph()).is_chordal {
                    candidates.push((i, j));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let (i, j) = candidates[rng.gen_range(0..candidates.len())];
        b.add_edge(i, j).unwrap();
    }
    b.into_graph()
}

/// Gaussian-ish random data with mild cross-correlations.
pub fn random_data(n: usize, p: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; n * p];
    let shared: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for j in 0..p {
        let weight: f64 = rng.gen_range(-0.6..0.6);
        for t in 0..n {
            values[j * n + t] = weight * shared[t] + rng.gen_range(-1.0..1.0);
        }
    }
    DataMatrix::from_columns(
        values,
        n,
        (0..p).map(|j| format!("v{j}")).collect(),
        vec![false; p],
    )
    .unwrap()
}

/// Iterative proportional scaling fixed point for the decomposable MLE:
/// precision updates cycle over clique blocks until every implied clique
/// marginal matches `ssd_C / n`.
pub fn ips_covariance(data: &DataMatrix, ps: &PerfectSequence, tol: f64) -> DMatrix<f64> {
    let p = ps.vertex_count();
    let n = data.n() as f64;
    let targets: Vec<(Vec<usize>, DMatrix<f64>)> = ps
        .cliques()
        .iter()
        .map(|c| {
            let idx: Vec<usize> = c.iter().map(|&v| v as usize).collect();
            let t = data.ssd(c).as_ref() / n;
            (idx, t)
        })
        .collect();
    let mut precision = DMatrix::<f64>::identity(p, p);
    for sweep in 0..10_000 {
        let mut worst: f64 = 0.0;
        for (idx, target) in &targets {
            let sigma = linalg::spd_inverse(precision.clone()).expect("precision stays PD");
            let m = idx.len();
            let mut sigma_cc = DMatrix::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    sigma_cc[(a, b)] = sigma[(idx[a], idx[b])];
                }
            }
            for a in 0..m {
                for b in 0..m {
                    worst = worst.max((sigma_cc[(a, b)] - target[(a, b)]).abs());
                }
            }
            let t_inv = linalg::spd_inverse(target.clone()).expect("target PD");
            let s_inv = linalg::spd_inverse(sigma_cc).expect("marginal PD");
            for a in 0..m {
                for b in 0..m {
                    precision[(idx[a], idx[b])] += t_inv[(a, b)] - s_inv[(a, b)];
                }
            }
        }
        if worst < tol && sweep > 0 {
            break;
        }
    }
    linalg::spd_inverse(precision).expect("fixed point PD")
}

/// All acyclic edge subsets of the complete graph on `p` vertices (labeled
/// forests), by exhaustive bitmask scan. 38 of them at p = 4.
pub fn all_labeled_forests(p: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let mut forests = Vec::new();
    'mask: for mask in 0u32..(1 << pairs.len()) {
        let mut parent: Vec<usize> = (0..p).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        let mut chosen = Vec::new();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask & (1 << k) != 0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a == b {
                    continue 'mask;
                }
                parent[a] = b;
                chosen.push((i, j));
            }
        }
        forests.push(chosen);
    }
    forests
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && vals[idx[j + 1]] == vals[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let (mut dx, mut dy) = (0.0, 0.0);
    for i in 0..xs.len() {
        let (a, b) = (rx[i] - mean, ry[i] - mean);
        num += a * b;
        dx += a * a;
        dy += b * b;
    }
    num / (dx * dy).sqrt()
}

/// Two columns with exact sample correlation `r` from orthonormal zero-sum
/// vectors.
pub fn exact_correlation_data(n: usize, r: f64) -> DataMatrix {
    assert!(n >= 4);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    x[0] = s;
    x[1] = -s;
    e2[2] = s;
    e2[3] = -s;
    let y: Vec<f64> = x
        .iter()
        .zip(&e2)
        .map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b)
        .collect();
    let mut values = x;
    values.extend(y);
    DataMatrix::from_columns(values, n, vec!["x".into(), "y".into()], vec![false; 2]).unwrap()
}

/// Peak resident set size of this process in bytes (Linux), if available.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}
