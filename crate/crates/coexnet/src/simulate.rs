//! Multivariate normal generation from a fitted model and the Monte Carlo
//! study of uncertainty-index recovery against sample size.

use crate::cluster::{build_clusters, classify_cliques, uncertainty, LabeledNetwork};
use crate::data::DataMatrix;
use crate::search::{decomposable_search, min_bic_forest, SearchConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
}

/// Draws `n` independent rows from `N(0, sigma)` through the Cholesky factor
/// of `sigma`; deterministic given `seed`. Column names are synthetic and no
/// label is set — callers attach their own.
pub fn sample_mvn(sigma: &DMatrix<f64>, n: usize, seed: u64) -> Result<DataMatrix, SimError> {
    let p = sigma.nrows();
    let names = (1..=p).map(|j| format!("v{j}")).collect();
    sample_mvn_with(sigma, n, seed, names, vec![false; p])
}

/// As [`sample_mvn`] with caller-provided names and labels.
pub fn sample_mvn_with(
    sigma: &DMatrix<f64>,
    n: usize,
    seed: u64,
    names: Vec<String>,
    de_labels: Vec<bool>,
) -> Result<DataMatrix, SimError> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(SimError::InvalidPlan("sigma must be square".into()));
    }
    let chol = crate::linalg::cholesky(sigma.clone()).ok_or(SimError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for t in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        // x = L z, exploiting lower-triangular structure.
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            values[i * n + t] = acc;
        }
    }
    DataMatrix::from_columns(values, n, names, de_labels)
        .map_err(|e| SimError::InvalidPlan(format!("sampled data rejected: {e}")))
}

/// Protocol for the recovery study: a reference covariance and per-gene
/// reference indices, a grid of sample sizes, and a replicate count per
/// size. Labels are frozen from the reference network and never re-derived
/// inside replicates.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub sigma: DMatrix<f64>,
    /// Reference ρ per gene; `Some` exactly for differentially expressed
    /// genes.
    pub reference_rho: Vec<Option<f64>>,
    pub names: Vec<String>,
    pub de_labels: Vec<bool>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Search configuration applied to every replicate fit.
    pub search: SearchConfig,
    /// Density threshold; `None` uses the proportion of flagged genes.
    pub alpha: Option<f64>,
}

impl SimulationPlan {
    /// The full-scale study grid: sample sizes 10 to 250 by 10,
    /// 500 replicates each. Expect hours of compute at reference sizes in
    /// the thousands.
    pub fn full_grid_sizes() -> Vec<usize> {
        (1..=25).map(|k| k * 10).collect()
    }

    fn validate(&self) -> Result<(), SimError> {
        let p = self.sigma.nrows();
        if self.sigma.ncols() != p {
            return Err(SimError::InvalidPlan("sigma must be square".into()));
        }
        for (label, len) in [
            ("reference_rho", self.reference_rho.len()),
            ("names", self.names.len()),
            ("de_labels", self.de_labels.len()),
        ] {
            if len != p {
                return Err(SimError::InvalidPlan(format!(
                    "{label} length {len} != p = {p}"
                )));
            }
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(SimError::InvalidPlan(
                "sample_sizes must be non-empty with n ≥ 2".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(SimError::InvalidPlan("replicates must be positive".into()));
        }
        if !self.de_labels.iter().any(|&l| l) {
            return Err(SimError::InvalidPlan(
                "no gene is flagged differentially expressed; ρ is undefined".into(),
            ));
        }
        Ok(())
    }
}

/// Monte Carlo aggregate for one sample size.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MseRow {
    pub n: usize,
    /// Mean over replicates of the per-replicate average squared deviation
    /// of per-gene ρ from the reference.
    pub mse: f64,
    /// Standard error of that mean over replicates.
    pub stderr: f64,
    pub replicates: usize,
}

/// Study outcome: one row per sample size plus any per-replicate failures
/// (recorded, never aborting the study).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MseReport {
    pub rows: Vec<MseRow>,
    pub failures: Vec<ReplicateFailure>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReplicateFailure {
    pub n: usize,
    pub replicate: usize,
    pub error: String,
}

impl MseReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mse,stderr,replicates\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.mse, r.stderr, r.replicates);
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            format: &'static str,
            rows: &'a [MseRow],
            failures: &'a [ReplicateFailure],
        }
        let mut s = serde_json::to_string_pretty(&Doc {
            format: "coexnet-mse/1",
            rows: &self.rows,
            failures: &self.failures,
        })
        .expect("serializable");
        s.push('\n');
        s
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Stream seed for one replicate, independent of worker scheduling.
fn replicate_seed(seed: u64, n: usize, replicate: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(n as u64)) ^ replicate as u64)
}

/// Fits one replicate end to end and returns the average squared deviation
/// of per-gene ρ from the reference, over the reference's flagged genes.
fn replicate_mse(plan: &SimulationPlan, n: usize, replicate: usize) -> Result<f64, String> {
    let seed = replicate_seed(plan.seed, n, replicate);
    let data = sample_mvn_with(
        &plan.sigma,
        n,
        seed,
        plan.names.clone(),
        plan.de_labels.clone(),
    )
    .map_err(|e| e.to_string())?;
    let (forest, _) = min_bic_forest(&data, &plan.search).map_err(|e| e.to_string())?;
    let (model, _) =
        decomposable_search(&data, &forest, &plan.search).map_err(|e| e.to_string())?;
    let net = match plan.alpha {
        Some(a) => LabeledNetwork::with_alpha(model.graph().clone(), plan.de_labels.clone(), a),
        None => LabeledNetwork::new(model.graph().clone(), plan.de_labels.clone()),
    }
    .map_err(|e| e.to_string())?;
    let classes = classify_cliques(&net, model.sequence());
    let mut cg = build_clusters(&net, model.sequence(), &classes);
    let per_gene = uncertainty(&mut cg, net.labels()).map_err(|e| e.to_string())?;

    let mut total = 0.0;
    let mut count = 0usize;
    for (g, reference) in plan.reference_rho.iter().enumerate() {
        let Some(r_ref) = reference else { continue };
        let r_rep = per_gene[g]
            .ok_or_else(|| format!("flagged gene {g} received no index in replicate"))?;
        let d = r_rep - r_ref;
        total += d * d;
        count += 1;
    }
    if count == 0 {
        return Err("reference carries no flagged genes".into());
    }
    Ok(total / count as f64)
}

/// Runs the full study: for every sample size and replicate, simulate,
/// refit, re-cluster, and compare per-gene ρ against the reference.
/// Replicates run on parallel workers; each derives its random stream from
/// `(seed, n, replicate)`, so the outcome is identical for any worker count.
pub fn run_study(plan: &SimulationPlan) -> Result<MseReport, SimError> {
    plan.validate()?;
    // Fail early on a non-PD covariance rather than once per replicate.
    crate::linalg::cholesky(plan.sigma.clone()).ok_or(SimError::NotPositiveDefinite)?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &plan.sample_sizes {
        let outcomes: Vec<Result<f64, String>> = (0..plan.replicates)
            .into_par_iter()
            .map(|rep| replicate_mse(plan, n, rep))
            .collect();
        let mut values = Vec::with_capacity(plan.replicates);
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(v) => values.push(v),
                Err(error) => failures.push(ReplicateFailure {
                    n,
                    replicate: rep,
                    error,
                }),
            }
        }
        let m = values.len();
        let mean = if m > 0 {
            values.iter().sum::<f64>() / m as f64
        } else {
            f64::NAN
        };
        let stderr = if m > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            f64::NAN
        };
        rows.push(MseRow {
            n,
            mse: mean,
            stderr,
            replicates: m,
        });
    }
    Ok(MseReport { rows, failures })
}
