//! Observation matrices, ingestion, and the cached centered cross-product
//! (ssd) machinery.
//!
//! Data files are CSV or TSV: first row variable names, one row per
//! observation, 64-bit floats with a locale-independent decimal point.
//! Labels files have two columns per line: variable name, then `0` or `1`.

use crate::linalg;
use nalgebra::DMatrix;
use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("columns with zero sample variance: {}", .0.join(", "))]
    ZeroVarianceColumns(Vec<String>),
    #[error("labels file names unknown variable {0:?}")]
    UnknownLabelName(String),
    #[error("log2 transform requires positive values; found {value} at {path}:{line}")]
    NonPositiveForLog {
        path: String,
        line: usize,
        value: f64,
    },
    #[error("need at least 2 observations, found {0}")]
    TooFewObservations(usize),
    #[error("no variables in header")]
    NoVariables,
}

/// An n×p observation matrix with variable names and binary
/// differential-expression labels. Values are stored column-major; columns
/// are guaranteed free of missing values and to have strictly positive
/// sample variance. Carries a read-through ssd cache, so shared references
/// can be used from parallel workers.
pub struct DataMatrix {
    /// Column-major values, `values[j*n..(j+1)*n]` is column `j`.
    values: Vec<f64>,
    names: Vec<String>,
    de_labels: Vec<bool>,
    n: usize,
    p: usize,
    ssd: SsdCache,
}

impl std::fmt::Debug for DataMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataMatrix")
            .field("n", &self.n)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

impl DataMatrix {
    /// Builds a matrix from column-major values. Fails on zero-variance
    /// columns or duplicate names.
    pub fn from_columns(
        values: Vec<f64>,
        n: usize,
        names: Vec<String>,
        de_labels: Vec<bool>,
    ) -> Result<Self, DataError> {
        let p = names.len();
        assert_eq!(values.len(), n * p, "column-major length mismatch");
        assert_eq!(de_labels.len(), p, "label length mismatch");
        if n < 2 {
            return Err(DataError::TooFewObservations(n));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateName(name.clone()));
            }
        }
        let mut means = Vec::with_capacity(p);
        let mut degenerate = Vec::new();
        for j in 0..p {
            let col = &values[j * n..(j + 1) * n];
            let mean = col.iter().sum::<f64>() / n as f64;
            let ssd_jj: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
            if ssd_jj <= 0.0 || !ssd_jj.is_finite() {
                degenerate.push(names[j].clone());
            }
            means.push(mean);
        }
        if !degenerate.is_empty() {
            return Err(DataError::ZeroVarianceColumns(degenerate));
        }
        Ok(DataMatrix {
            values,
            names,
            de_labels,
            n,
            p,
            ssd: SsdCache::new(means),
        })
    }

    /// Reads a data file (see module docs for the format). The delimiter is
    /// taken from the header line: tab when present, comma otherwise. With
    /// `log2`, all values are log2-transformed at ingestion.
    pub fn read_file(path: &Path, log2: bool) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text, &path.display().to_string(), log2)
    }

    pub fn parse_str(text: &str, path: &str, log2: bool) -> Result<Self, DataError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DataError::NoVariables)?;
        let delim = if header.contains('\t') { '\t' } else { ',' };
        let names: Vec<String> = header.split(delim).map(|s| s.trim().to_string()).collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(DataError::NoVariables);
        }
        let p = names.len();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines {
            let mut row = Vec::with_capacity(p);
            for (col, field) in line.split(delim).enumerate() {
                let field = field.trim();
                if field.is_empty() {
                    return Err(DataError::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        message: format!("missing value in column {}", col + 1),
                    });
                }
                let mut v: f64 = field.parse().map_err(|_| DataError::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                if log2 {
                    if v <= 0.0 {
                        return Err(DataError::NonPositiveForLog {
                            path: path.to_string(),
                            line: lineno + 1,
                            value: v,
                        });
                    }
                    v = v.log2();
                }
                row.push(v);
            }
            if row.len() != p {
                return Err(DataError::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    message: format!("expected {} fields, found {}", p, row.len()),
                });
            }
            rows.push(row);
        }
        let n = rows.len();
        if n < 2 {
            return Err(DataError::TooFewObservations(n));
        }
        let mut values = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self::from_columns(values, n, names, vec![false; p])
    }

    /// Reads a labels file and attaches the flags. Unknown names are errors;
    /// variables missing from the file default to non-DE and are reported
    /// back for the caller to warn about.
    pub fn attach_labels_file(&mut self, path: &Path) -> Result<Vec<String>, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.attach_labels_str(&text, &path.display().to_string())
    }

    pub fn attach_labels_str(&mut self, text: &str, path: &str) -> Result<Vec<String>, DataError> {
        let (labels, missing) = parse_labels(text, path, &self.names)?;
        self.de_labels = labels;
        Ok(missing)
    }

    pub fn set_labels(&mut self, labels: Vec<bool>) {
        assert_eq!(labels.len(), self.p);
        self.de_labels = labels;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn de_labels(&self) -> &[bool] {
        &self.de_labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn column_means(&self) -> &[f64] {
        &self.ssd.means
    }

    /// Centered cross-product matrix over `subset`, read through the cache.
    pub fn ssd(&self, subset: &[u32]) -> Arc<DMatrix<f64>> {
        self.ssd.get_or_compute(subset, |s| self.compute_ssd(s))
    }

    /// Computes an ssd submatrix directly, bypassing the cache. The stepwise
    /// search scores large numbers of throwaway subsets through this path.
    pub fn ssd_uncached(&self, subset: &[u32]) -> DMatrix<f64> {
        self.compute_ssd(subset)
    }

    fn compute_ssd(&self, subset: &[u32]) -> DMatrix<f64> {
        let m = subset.len();
        let mut out = DMatrix::zeros(m, m);
        for a in 0..m {
            let ja = subset[a] as usize;
            let col_a = self.column(ja);
            let mean_a = self.ssd.means[ja];
            for b in a..m {
                let jb = subset[b] as usize;
                let col_b = self.column(jb);
                let mean_b = self.ssd.means[jb];
                let mut acc = 0.0;
                for t in 0..self.n {
                    acc += (col_a[t] - mean_a) * (col_b[t] - mean_b);
                }
                out[(a, b)] = acc;
                out[(b, a)] = acc;
            }
        }
        out
    }

    /// Sample partial correlation of `x` and `y` given `sep`, from the ssd
    /// over `{x, y} ∪ sep`. `None` when the conditioning block is singular.
    pub fn partial_correlation(&self, x: u32, y: u32, sep: &[u32]) -> Option<f64> {
        let mut subset = Vec::with_capacity(sep.len() + 2);
        subset.push(x);
        subset.push(y);
        subset.extend_from_slice(sep);
        let ssd = self.ssd_uncached(&subset);
        linalg::partial_correlation(&ssd)
    }
}

/// Parses a two-column labels file (variable name, then 0/1) against a known
/// name list. Returns the per-variable flags plus the names missing from the
/// file, which default to non-DE.
pub fn parse_labels(
    text: &str,
    path: &str,
    names: &[String],
) -> Result<(Vec<bool>, Vec<String>), DataError> {
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut labels = vec![None; names.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split([',', '\t']).map(str::trim);
        let name = fields.next().unwrap_or("");
        let flag = fields.next().ok_or(DataError::Parse {
            path: path.to_string(),
            line: lineno + 1,
            message: "expected two columns: name, 0/1".into(),
        })?;
        let de = match flag {
            "0" => false,
            "1" => true,
            other => {
                return Err(DataError::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    message: format!("label must be 0 or 1, found {other:?}"),
                })
            }
        };
        let &j = index
            .get(name)
            .ok_or_else(|| DataError::UnknownLabelName(name.to_string()))?;
        labels[j] = Some(de);
    }
    let mut missing = Vec::new();
    let resolved = labels
        .iter()
        .enumerate()
        .map(|(j, l)| match l {
            Some(de) => *de,
            None => {
                missing.push(names[j].clone());
                false
            }
        })
        .collect();
    Ok((resolved, missing))
}

/// Reads and parses a labels file against a known name list.
pub fn read_labels_file(
    path: &Path,
    names: &[String],
) -> Result<(Vec<bool>, Vec<String>), DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labels(&text, &path.display().to_string(), names)
}

/// Lazily filled map from vertex subset to its centered cross-product
/// matrix. Concurrent read-through population; duplicated work on racing
/// identical keys is benign because results are deterministic.
struct SsdCache {
    means: Vec<f64>,
    cache: RwLock<HashMap<Vec<u32>, Arc<DMatrix<f64>>>>,
}

impl SsdCache {
    fn new(means: Vec<f64>) -> Self {
        SsdCache {
            means,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn get_or_compute(
        &self,
        subset: &[u32],
        compute: impl FnOnce(&[u32]) -> DMatrix<f64>,
    ) -> Arc<DMatrix<f64>> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(subset) {
            return Arc::clone(hit);
        }
        let fresh = Arc::new(compute(subset));
        let mut guard = self.cache.write().expect("cache lock");
        guard.insert(subset.to_vec(), Arc::clone(&fresh));
        fresh
    }
}
