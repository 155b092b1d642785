//! Fitted decomposable models and their on-disk snapshot format.

use crate::data::DataMatrix;
use crate::graph::export::GraphJson;
use crate::graph::{perfect_sequence, GraphError, PerfectSequence, UndirectedGraph};
use crate::stats::{self, StatsError};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MODEL_FORMAT_TAG: &str = "coexnet-model/1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("model file: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A chordal graph with its perfect sequence and the fitted Gaussian
/// statistics: column means (the mean is a nuisance parameter), the BIC, and
/// optionally the closed-form covariance estimate.
#[derive(Debug, Clone)]
pub struct DecomposableModel {
    graph: UndirectedGraph,
    sequence: PerfectSequence,
    mean: Vec<f64>,
    sigma_hat: Option<DMatrix<f64>>,
    bic: f64,
    /// Observation count of the fitting data; kept for snapshots and
    /// validation.
    n: usize,
}

impl DecomposableModel {
    /// Fits the decomposable model with the given chordal graph to `data`:
    /// computes the perfect sequence, the means, and the BIC from scratch.
    pub fn fit(data: &DataMatrix, graph: UndirectedGraph) -> Result<Self, ModelError> {
        let sequence = perfect_sequence(&graph)?;
        let bic = stats::bic(data, &sequence)?;
        Ok(DecomposableModel {
            graph,
            sequence,
            mean: data.column_means().to_vec(),
            sigma_hat: None,
            bic,
            n: data.n(),
        })
    }

    pub(crate) fn from_parts(
        graph: UndirectedGraph,
        sequence: PerfectSequence,
        mean: Vec<f64>,
        bic: f64,
        n: usize,
    ) -> Self {
        DecomposableModel {
            graph,
            sequence,
            mean,
            sigma_hat: None,
            bic,
            n,
        }
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn sequence(&self) -> &PerfectSequence {
        &self.sequence
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn bic(&self) -> f64 {
        self.bic
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma_hat(&self) -> Option<&DMatrix<f64>> {
        self.sigma_hat.as_ref()
    }

    /// Computes and stores the closed-form covariance estimate.
    pub fn with_covariance(mut self, data: &DataMatrix) -> Result<Self, ModelError> {
        let sigma = stats::estimate_covariance(data, &self.sequence)?;
        self.sigma_hat = Some(sigma);
        Ok(self)
    }

    pub fn set_sigma(&mut self, sigma: DMatrix<f64>) {
        assert_eq!(sigma.nrows(), self.graph.vertex_count());
        self.sigma_hat = Some(sigma);
    }

    pub fn to_json(&self, names: &[String], de_labels: Option<&[bool]>) -> ModelJson {
        ModelJson {
            format: MODEL_FORMAT_TAG.to_string(),
            n: self.n,
            names: names.to_vec(),
            de_labels: de_labels.map(|l| l.to_vec()),
            edges: self.graph.edges().collect(),
            mean: self.mean.clone(),
            bic: self.bic,
            sigma: self.sigma_hat.as_ref().map(|s| SigmaJson {
                p: s.nrows(),
                values: s.as_slice().to_vec(),
            }),
        }
    }
}

/// Covariance payload: column-major values of a p×p matrix.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SigmaJson {
    pub p: usize,
    pub values: Vec<f64>,
}

/// Snapshot of a fitted model: the graph JSON fields plus fitted statistics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    pub format: String,
    pub n: usize,
    pub names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_labels: Option<Vec<bool>>,
    pub edges: Vec<(usize, usize)>,
    pub mean: Vec<f64>,
    pub bic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaJson>,
}

impl ModelJson {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let doc: ModelJson =
            serde_json::from_str(s).map_err(|e| ModelError::Format(e.to_string()))?;
        if doc.format != MODEL_FORMAT_TAG {
            return Err(ModelError::Format(format!(
                "unsupported model format tag {:?} (expected {:?})",
                doc.format, MODEL_FORMAT_TAG
            )));
        }
        let p = doc.names.len();
        if doc.mean.len() != p {
            return Err(ModelError::Format("mean length != names length".into()));
        }
        if let Some(l) = &doc.de_labels {
            if l.len() != p {
                return Err(ModelError::Format(
                    "de_labels length != names length".into(),
                ));
            }
        }
        if let Some(s) = &doc.sigma {
            if s.p != p || s.values.len() != p * p {
                return Err(ModelError::Format("sigma dimensions mismatch".into()));
            }
        }
        Ok(doc)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json_string()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_graph(&self) -> Result<UndirectedGraph, GraphError> {
        UndirectedGraph::from_edges(self.names.len(), self.edges.iter().copied())
    }

    /// Rebuilds the in-memory model; fails with `NotChordal` when the edge
    /// list does not define a decomposable graph.
    pub fn to_model(&self) -> Result<DecomposableModel, ModelError> {
        let graph = self.to_graph()?;
        let sequence = perfect_sequence(&graph)?;
        let mut model =
            DecomposableModel::from_parts(graph, sequence, self.mean.clone(), self.bic, self.n);
        if let Some(s) = &self.sigma {
            model.set_sigma(DMatrix::from_column_slice(s.p, s.p, &s.values));
        }
        Ok(model)
    }

    pub fn graph_json(&self) -> GraphJson {
        GraphJson {
            format: crate::graph::export::GRAPH_FORMAT_TAG.to_string(),
            names: self.names.clone(),
            edges: self.edges.clone(),
            de_labels: self.de_labels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data() -> DataMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (n, p) = (12, 3);
        let values: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DataMatrix::from_columns(
            values,
            n,
            vec!["a".into(), "b".into(), "c".into()],
            vec![true, false, false],
        )
        .unwrap()
    }

    #[test]
    fn fit_rejects_non_chordal_graphs() {
        let d = DataMatrix::from_columns(
            (0..16).map(|i| ((i * 7919 % 13) as f64).sin()).collect(),
            4,
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![false; 4],
        )
        .unwrap();
        let cycle = UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(matches!(
            DecomposableModel::fit(&d, cycle),
            Err(ModelError::Graph(GraphError::NotChordal))
        ));
    }

    #[test]
    fn snapshot_round_trips_bytes_and_model() {
        let d = small_data();
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let model = DecomposableModel::fit(&d, g)
            .unwrap()
            .with_covariance(&d)
            .unwrap();
        let doc = model.to_json(d.names(), Some(d.de_labels()));
        let text = doc.to_json_string();
        let back = ModelJson::from_json_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json_string(), text);
        let rebuilt = back.to_model().unwrap();
        assert_eq!(rebuilt.graph(), model.graph());
        assert_eq!(rebuilt.bic(), model.bic());
        let (sa, sb) = (
            rebuilt.sigma_hat().unwrap().as_slice().to_vec(),
            model.sigma_hat().unwrap().as_slice().to_vec(),
        );
        assert_eq!(sa, sb);
    }

    #[test]
    fn malformed_formats_fail_loudly() {
        let err = ModelJson::from_json_str("{\"format\":\"coexnet-model/99\"}").unwrap_err();
        assert!(matches!(err, ModelError::Format(_)));
    }
}
