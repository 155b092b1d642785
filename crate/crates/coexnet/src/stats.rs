//! Gaussian sufficient statistics over vertex subsets, the decomposable
//! likelihood factorization, BIC, local edge-improvement scores, and the
//! closed-form covariance estimator.

use crate::data::DataMatrix;
use crate::graph::PerfectSequence;
use crate::linalg;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("singular ssd over subset of size {size} with n = {n}")]
    SingularSubset { size: usize, n: usize },
    #[error("assembled precision matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Floor applied to `1 − r²` before taking logarithms. A clamped edge is
/// reported as forced in diagnostics.
pub const ONE_MINUS_R2_FLOOR: f64 = 1e-12;

/// Maximized Gaussian log-likelihood of the saturated marginal model on
/// `subset`: with `Σ̂ = ssd/n`, this is `−(n/2)[m ln 2π + ln det(ssd/n) + m]`.
/// The empty subset contributes zero.
pub fn subset_loglik(data: &DataMatrix, subset: &[u32]) -> Result<f64, StatsError> {
    let m = subset.len();
    if m == 0 {
        return Ok(0.0);
    }
    let n = data.n();
    if n <= m {
        return Err(StatsError::SingularSubset { size: m, n });
    }
    let ssd = data.ssd(subset);
    let chol =
        linalg::cholesky(ssd.as_ref().clone()).ok_or(StatsError::SingularSubset { size: m, n })?;
    let logdet_scaled = linalg::logdet(&chol) - m as f64 * (n as f64).ln();
    let m = m as f64;
    Ok(-0.5 * n as f64 * (m * (2.0 * std::f64::consts::PI).ln() + logdet_scaled + m))
}

/// Maximized log-likelihood of the decomposable model with perfect sequence
/// `ps`: the clique terms minus the separator terms with multiplicity.
pub fn model_loglik(data: &DataMatrix, ps: &PerfectSequence) -> Result<f64, StatsError> {
    let mut total = 0.0;
    for c in ps.cliques() {
        total += subset_loglik(data, c)?;
    }
    for s in ps.separators().iter().skip(1) {
        if !s.is_empty() {
            total -= subset_loglik(data, s)?;
        }
    }
    Ok(total)
}

/// `BIC(G) = −2 l + κ ln n` with `κ = 2p + |E|` — one mean and one variance
/// per variable plus one covariance per edge.
pub fn bic(data: &DataMatrix, ps: &PerfectSequence) -> Result<f64, StatsError> {
    let l = model_loglik(data, ps)?;
    let kappa = (2 * ps.vertex_count() + ps.edge_count()) as f64;
    Ok(-2.0 * l + kappa * (data.n() as f64).ln())
}

/// Outcome of scoring one candidate edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeImprovement {
    /// `BIC(G + e) − BIC(G)`; negative means the edge improves the model.
    pub delta_bic: f64,
    /// Sample partial correlation of the endpoints given the separator.
    pub partial_correlation: f64,
    /// Whether `1 − r²` hit the numerical floor.
    pub forced: bool,
}

pub(crate) fn improvement_from_partial(n: usize, r: f64) -> EdgeImprovement {
    let raw = 1.0 - r * r;
    let forced = raw <= ONE_MINUS_R2_FLOOR || raw.is_nan();
    let one_minus_r2 = if forced { ONE_MINUS_R2_FLOOR } else { raw };
    EdgeImprovement {
        delta_bic: n as f64 * one_minus_r2.ln() + (n as f64).ln(),
        partial_correlation: r,
        forced,
    }
}

/// Improvement in the BIC from adding `{x, y}` to a decomposable graph in
/// which `sep` separates clique `clique_a ∋ x` from clique `clique_b ∋ y`:
/// `n ln(1 − r²_{xy·sep}) + ln n`, the exact change in BIC (the likelihood
/// change is local to `sep ∪ {x, y}` and the edge adds one covariance
/// parameter).
pub fn edge_improvement(
    data: &DataMatrix,
    graph: &crate::graph::UndirectedGraph,
    edge: (u32, u32),
    sep: &[u32],
    clique_a: &[u32],
    clique_b: &[u32],
) -> Result<EdgeImprovement, StatsError> {
    let (x, y) = edge;
    debug_assert!(clique_a.binary_search(&x).is_ok(), "x must lie in clique A");
    debug_assert!(clique_b.binary_search(&y).is_ok(), "y must lie in clique B");
    debug_assert!(!graph.has_edge(x as usize, y as usize));
    debug_assert!(
        graph.separates(sep, clique_a, clique_b),
        "separator precondition violated"
    );
    let r = data
        .partial_correlation(x, y, sep)
        .ok_or(StatsError::SingularSubset {
            size: sep.len() + 2,
            n: data.n(),
        })?;
    Ok(improvement_from_partial(data.n(), r))
}

/// Closed-form covariance estimate of the decomposable model:
/// `Σ̂ = [ n { Σ_C [(ssd_C)⁻¹]⁰ − Σ_S ν(S) [(ssd_S)⁻¹]⁰ } ]⁻¹`,
/// where `[·]⁰` pads to p×p with zeros. Handled block-wise per connected
/// component; the result has clique marginals `ssd_C / n` and zero precision
/// on non-edges.
pub fn estimate_covariance(
    data: &DataMatrix,
    ps: &PerfectSequence,
) -> Result<DMatrix<f64>, StatsError> {
    let p = ps.vertex_count();
    let n = data.n();
    if n <= ps.max_clique_size() {
        return Err(StatsError::SingularSubset {
            size: ps.max_clique_size(),
            n,
        });
    }

    // Connected components via union-find over clique memberships.
    let mut parent: Vec<u32> = (0..p as u32).collect();
    fn find(parent: &mut [u32], v: u32) -> u32 {
        let mut root = v;
        while parent[root as usize] != root {
            root = parent[root as usize];
        }
        let mut cur = v;
        while parent[cur as usize] != root {
            let next = parent[cur as usize];
            parent[cur as usize] = root;
            cur = next;
        }
        root
    }
    for c in ps.cliques() {
        for w in c.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a as usize] = b;
            }
        }
    }
    let mut comp_vertices: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for v in 0..p as u32 {
        comp_vertices
            .entry(find(&mut parent, v))
            .or_default()
            .push(v);
    }

    let mut local_index = vec![0u32; p];
    let mut comp_of = vec![0u32; p];
    for (k, (_, verts)) in comp_vertices.iter().enumerate() {
        for (i, &v) in verts.iter().enumerate() {
            local_index[v as usize] = i as u32;
            comp_of[v as usize] = k as u32;
        }
    }

    let mut precisions: Vec<DMatrix<f64>> = comp_vertices
        .values()
        .map(|verts| DMatrix::zeros(verts.len(), verts.len()))
        .collect();

    let mut add_subset = |subset: &[u32], sign: f64| -> Result<(), StatsError> {
        if subset.is_empty() {
            return Ok(());
        }
        let ssd = data.ssd(subset);
        let inv = linalg::spd_inverse(ssd.as_ref().clone()).ok_or(StatsError::SingularSubset {
            size: subset.len(),
            n,
        })?;
        let k = comp_of[subset[0] as usize] as usize;
        let target = &mut precisions[k];
        for (a, &va) in subset.iter().enumerate() {
            let ia = local_index[va as usize] as usize;
            for (b, &vb) in subset.iter().enumerate() {
                let ib = local_index[vb as usize] as usize;
                target[(ia, ib)] += sign * n as f64 * inv[(a, b)];
            }
        }
        Ok(())
    };

    for c in ps.cliques() {
        add_subset(c, 1.0)?;
    }
    for s in ps.separators().iter().skip(1) {
        add_subset(s, -1.0)?;
    }

    let mut sigma = DMatrix::zeros(p, p);
    for ((_, verts), k_local) in comp_vertices.iter().zip(precisions) {
        let block = linalg::spd_inverse(k_local).ok_or(StatsError::NotPositiveDefinite)?;
        for (a, &va) in verts.iter().enumerate() {
            for (b, &vb) in verts.iter().enumerate() {
                sigma[(va as usize, vb as usize)] = block[(a, b)];
            }
        }
    }
    Ok(sigma)
}

/// Log-density of `N(mean, sigma)` summed over the rows of `data`, using a
/// Cholesky factor of `sigma`. Direct evaluation, no factorization over
/// cliques; used to cross-check the factorized likelihood.
pub fn dense_gaussian_loglik(
    data: &DataMatrix,
    mean: &[f64],
    sigma: &DMatrix<f64>,
) -> Result<f64, StatsError> {
    let p = data.p();
    assert_eq!(mean.len(), p);
    assert_eq!(sigma.nrows(), p);
    let chol = linalg::cholesky(sigma.clone()).ok_or(StatsError::NotPositiveDefinite)?;
    let logdet = linalg::logdet(&chol);
    let n = data.n();
    let mut quad_total = 0.0;
    let mut centered = nalgebra::DVector::zeros(p);
    for t in 0..n {
        for j in 0..p {
            centered[j] = data.column(j)[t] - mean[j];
        }
        let solved = chol.solve(&centered);
        quad_total += centered.dot(&solved);
    }
    let c = (2.0 * std::f64::consts::PI).ln();
    Ok(-0.5 * (n as f64 * (p as f64 * c + logdet) + quad_total))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{perfect_sequence, UndirectedGraph};

    /// Two columns of length `n` with exact sample correlation `r`, built
    /// from orthonormal zero-sum vectors.
    pub(crate) fn exact_correlation_data(n: usize, r: f64) -> DataMatrix {
        assert!(n >= 4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut e1 = vec![0.0; n];
        let mut e2 = vec![0.0; n];
        e1[0] = s;
        e1[1] = -s;
        e2[2] = s;
        e2[3] = -s;
        let x = e1.clone();
        let y: Vec<f64> = e1
            .iter()
            .zip(&e2)
            .map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b)
            .collect();
        let mut values = x;
        values.extend(y);
        DataMatrix::from_columns(values, n, vec!["x".into(), "y".into()], vec![false; 2]).unwrap()
    }

    fn random_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DataMatrix::from_columns(
            values,
            n,
            (0..p).map(|j| format!("v{j}")).collect(),
            vec![false; p],
        )
        .unwrap()
    }

    #[test]
    fn singleton_loglik_matches_direct_density_sum() {
        let d = random_data(20, 1, 7);
        let got = subset_loglik(&d, &[0]).unwrap();
        // Oracle: evaluate the normal density at the MLE observation by
        // observation.
        let col = d.column(0);
        let mean = col.iter().sum::<f64>() / 20.0;
        let s2 = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 20.0;
        let direct: f64 = col
            .iter()
            .map(|x| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (x - mean) * (x - mean) / s2))
            .sum();
        assert!((got - direct).abs() < 1e-10, "{got} vs {direct}");
    }

    #[test]
    fn too_few_observations_is_singular() {
        let d = random_data(3, 4, 1);
        assert!(matches!(
            subset_loglik(&d, &[0, 1, 2]),
            Err(StatsError::SingularSubset { .. })
        ));
        assert!(matches!(
            subset_loglik(&d, &[0, 1, 2, 3]),
            Err(StatsError::SingularSubset { .. })
        ));
    }

    #[test]
    fn uncorrelated_pair_factorizes_exactly() {
        let d = exact_correlation_data(8, 0.0);
        let joint = subset_loglik(&d, &[0, 1]).unwrap();
        let marginals = subset_loglik(&d, &[0]).unwrap() + subset_loglik(&d, &[1]).unwrap();
        assert!((joint - marginals).abs() < 1e-10);
    }

    #[test]
    fn model_loglik_on_isolated_vertices_is_sum_of_marginals() {
        let d = random_data(15, 2, 3);
        let g = UndirectedGraph::empty(2);
        let ps = perfect_sequence(&g).unwrap();
        let expect = subset_loglik(&d, &[0]).unwrap() + subset_loglik(&d, &[1]).unwrap();
        assert!((model_loglik(&d, &ps).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_loglik_is_saturated() {
        let d = random_data(25, 3, 5);
        let g = UndirectedGraph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        let saturated = subset_loglik(&d, &[0, 1, 2]).unwrap();
        assert!((model_loglik(&d, &ps).unwrap() - saturated).abs() < 1e-10);
    }

    #[test]
    fn path_loglik_factorizes() {
        let d = random_data(20, 3, 11);
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        let expect = subset_loglik(&d, &[0, 1]).unwrap() + subset_loglik(&d, &[1, 2]).unwrap()
            - subset_loglik(&d, &[1]).unwrap();
        assert!((model_loglik(&d, &ps).unwrap() - expect).abs() < 1e-10);

        // Same value from direct density evaluation at the fitted covariance.
        let sigma = estimate_covariance(&d, &ps).unwrap();
        let dense = dense_gaussian_loglik(&d, d.column_means(), &sigma).unwrap();
        let factorized = model_loglik(&d, &ps).unwrap();
        assert!(
            (dense - factorized).abs() < 1e-8 * factorized.abs().max(1.0),
            "{dense} vs {factorized}"
        );
    }

    #[test]
    fn empty_graph_bic_uses_two_parameters_per_variable() {
        let d = random_data(30, 2, 13);
        let g = UndirectedGraph::empty(2);
        let ps = perfect_sequence(&g).unwrap();
        let l = model_loglik(&d, &ps).unwrap();
        let expect = -2.0 * l + 4.0 * (30f64).ln();
        assert!((bic(&d, &ps).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_on_three_counts_nine_parameters() {
        let d = random_data(30, 3, 17);
        let g = UndirectedGraph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        let l = model_loglik(&d, &ps).unwrap();
        let expect = -2.0 * l + 9.0 * (30f64).ln();
        assert!((bic(&d, &ps).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn one_edge_improvement_known_value_and_oracle() {
        // n = 100, r = 0.5 exactly: I = 100 ln(0.75) + ln 100 ≈ −24.163.
        let n = 100;
        let d = exact_correlation_data(n, 0.5);
        let empty = UndirectedGraph::empty(2);
        let imp = edge_improvement(&d, &empty, (0, 1), &[], &[0], &[1]).unwrap();
        let closed_form = 100.0 * 0.75f64.ln() + 100f64.ln();
        assert!((imp.delta_bic - closed_form).abs() < 1e-10);
        assert!((closed_form - -24.163).abs() < 5e-4);

        // Oracle: full BIC recomputation before and after.
        let ps_before = perfect_sequence(&empty).unwrap();
        let with_edge = UndirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let ps_after = perfect_sequence(&with_edge).unwrap();
        let delta = bic(&d, &ps_after).unwrap() - bic(&d, &ps_before).unwrap();
        assert!((imp.delta_bic - delta).abs() < 1e-9);
    }

    #[test]
    fn zero_correlation_edge_costs_the_penalty() {
        let d = exact_correlation_data(50, 0.0);
        let empty = UndirectedGraph::empty(2);
        let imp = edge_improvement(&d, &empty, (0, 1), &[], &[0], &[1]).unwrap();
        assert!((imp.delta_bic - 50f64.ln()).abs() < 1e-12);
        assert!(imp.delta_bic > 0.0);
    }

    #[test]
    fn conditioned_improvement_matches_brute_force_bic() {
        // Path a–b–c; candidate {a, c} given separator {b}.
        let d = random_data(24, 3, 29);
        let path = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let imp = edge_improvement(&d, &path, (0, 2), &[1], &[0, 1], &[1, 2]).unwrap();
        let triangle = UndirectedGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let delta = bic(&d, &perfect_sequence(&triangle).unwrap()).unwrap()
            - bic(&d, &perfect_sequence(&path).unwrap()).unwrap();
        assert!(
            (imp.delta_bic - delta).abs() < 1e-9 * delta.abs().max(1.0),
            "{} vs {delta}",
            imp.delta_bic
        );
    }

    #[test]
    fn covariance_of_complete_graph_is_saturated_mle() {
        let d = random_data(12, 3, 31);
        let g = UndirectedGraph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let sigma = estimate_covariance(&d, &perfect_sequence(&g).unwrap()).unwrap();
        let ssd = d.ssd(&[0, 1, 2]);
        for a in 0..3 {
            for b in 0..3 {
                assert!((sigma[(a, b)] - ssd[(a, b)] / 12.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn covariance_of_disconnected_graph_is_block_diagonal() {
        let d = random_data(15, 4, 37);
        let g = UndirectedGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let sigma = estimate_covariance(&d, &perfect_sequence(&g).unwrap()).unwrap();
        for &(a, b) in &[(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(sigma[(a, b)], 0.0);
            assert_eq!(sigma[(b, a)], 0.0);
        }
        let ssd01 = d.ssd(&[0, 1]);
        assert!((sigma[(0, 1)] - ssd01[(0, 1)] / 15.0).abs() < 1e-10);
    }

    #[test]
    fn path_covariance_zeroes_the_nonedge_and_matches_ips() {
        let d = random_data(20, 3, 41);
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let ps = perfect_sequence(&g).unwrap();
        let sigma = estimate_covariance(&d, &ps).unwrap();

        let prec = linalg::spd_inverse(sigma.clone()).unwrap();
        assert!(prec[(0, 2)].abs() < 1e-9, "non-edge precision must vanish");

        let ssd01 = d.ssd(&[0, 1]);
        for a in 0..2 {
            for b in 0..2 {
                assert!((sigma[(a, b)] - ssd01[(a, b)] / 20.0).abs() < 1e-9);
            }
        }

        // Iterative proportional scaling to the same clique marginals.
        let targets: Vec<(Vec<usize>, DMatrix<f64>)> = ps
            .cliques()
            .iter()
            .map(|c| {
                let idx: Vec<usize> = c.iter().map(|&v| v as usize).collect();
                let t = d.ssd(c).as_ref() / 20.0;
                (idx, t)
            })
            .collect();
        let mut k = DMatrix::<f64>::identity(3, 3);
        for _ in 0..500 {
            for (idx, target) in &targets {
                let w = linalg::spd_inverse(k.clone()).unwrap();
                let m = idx.len();
                let mut w_cc = DMatrix::zeros(m, m);
                for a in 0..m {
                    for b in 0..m {
                        w_cc[(a, b)] = w[(idx[a], idx[b])];
                    }
                }
                let t_inv = linalg::spd_inverse(target.clone()).unwrap();
                let w_inv = linalg::spd_inverse(w_cc).unwrap();
                for a in 0..m {
                    for b in 0..m {
                        k[(idx[a], idx[b])] += t_inv[(a, b)] - w_inv[(a, b)];
                    }
                }
            }
        }
        let sigma_ips = linalg::spd_inverse(k).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!(
                    (sigma[(a, b)] - sigma_ips[(a, b)]).abs() < 1e-6,
                    "IPS fixed point disagrees at ({a},{b})"
                );
            }
        }
    }
}
