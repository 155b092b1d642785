#![allow(clippy::missing_safety_doc)] // the handle/pointer contract is stated once below

//! C ABI over the coexnet pipeline.
//!
//! Every constructor hands back an opaque handle through an out-parameter
//! and reports a status code; `cxn_last_error_message` retrieves the
//! thread-local message for the most recent failure. Handles are freed with
//! their matching `*_free` function, each of which accepts null.

use coexnet::cluster::{self, ClusterClass, ClusterGraph, LabeledNetwork};
use coexnet::data::DataMatrix;
use coexnet::model::{DecomposableModel, ModelJson};
use coexnet::search::{decomposable_search, min_bic_forest, SearchConfig};
use coexnet::simulate::{run_study, MseReport, SimulationPlan};
use libc::{c_char, c_double, c_int, size_t};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;

/// Status of a C-ABI call. Values align with the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CxnStatus {
    Ok = 0,
    /// Unreadable files, malformed inputs, bad arguments.
    InputError = 2,
    /// Singular statistics, non-positive-definite matrices, degenerate
    /// networks.
    NumericalError = 3,
    /// Invariant violations inside the library.
    InternalError = 4,
    /// A required pointer argument was null.
    NullPointer = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: CxnStatus, message: impl AsRef<str>) -> CxnStatus {
    set_error(message.as_ref());
    status
}

/// Copies the most recent error message for this thread into `buf`
/// (truncating to `cap − 1` bytes, always NUL-terminated when `cap > 0`)
/// and returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn cxn_last_error_message(buf: *mut c_char, cap: size_t) -> size_t {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let copy = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, copy);
            *buf.add(copy) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cxn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, CxnStatus> {
    if ptr.is_null() {
        set_error("path argument is null");
        return Err(CxnStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path argument is not valid UTF-8");
            Err(CxnStatus::InputError)
        }
    }
}

/// Owned observation matrix with names and labels.
pub struct CxnData {
    data: DataMatrix,
}

/// Fitted model plus the variable names and labels it was fitted with.
pub struct CxnModel {
    model: DecomposableModel,
    names: Vec<String>,
    labels: Vec<bool>,
}

/// Cluster decomposition with per-gene indices.
pub struct CxnClusters {
    graph: ClusterGraph,
    per_gene_rho: Vec<f64>,
    names: Vec<String>,
    labels: Vec<bool>,
}

/// Monte Carlo study report.
pub struct CxnMseReport {
    report: MseReport,
}

/// Reads a CSV/TSV data file (header row of names, one row per
/// observation). `log2` applies a log2 transform at ingestion.
#[no_mangle]
pub unsafe extern "C" fn cxn_data_read_csv(
    path: *const c_char,
    log2: bool,
    out: *mut *mut CxnData,
) -> CxnStatus {
    if out.is_null() {
        return fail(CxnStatus::NullPointer, "out pointer is null");
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match DataMatrix::read_file(&path, log2) {
        Ok(data) => {
            *out = Box::into_raw(Box::new(CxnData { data }));
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::InputError, e.to_string()),
    }
}

/// Attaches a two-column labels file (name, 0/1). Unlisted variables
/// default to non-DE.
#[no_mangle]
pub unsafe extern "C" fn cxn_data_attach_labels(
    data: *mut CxnData,
    path: *const c_char,
) -> CxnStatus {
    let Some(handle) = data.as_mut() else {
        return fail(CxnStatus::NullPointer, "data handle is null");
    };
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match handle.data.attach_labels_file(&path) {
        Ok(_missing) => CxnStatus::Ok,
        Err(e) => fail(CxnStatus::InputError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_data_n(data: *const CxnData) -> size_t {
    data.as_ref().map_or(0, |d| d.data.n())
}

#[no_mangle]
pub unsafe extern "C" fn cxn_data_p(data: *const CxnData) -> size_t {
    data.as_ref().map_or(0, |d| d.data.p())
}

#[no_mangle]
pub unsafe extern "C" fn cxn_data_free(data: *mut CxnData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Fits the minimum-BIC spanning forest and, when `decomposable` is set,
/// extends it by chordality-preserving additions. `max_clique_size` and
/// `max_edges` of 0 mean "default" and "unlimited".
#[no_mangle]
pub unsafe extern "C" fn cxn_fit(
    data: *const CxnData,
    decomposable: bool,
    max_clique_size: size_t,
    max_edges: size_t,
    out: *mut *mut CxnModel,
) -> CxnStatus {
    if out.is_null() {
        return fail(CxnStatus::NullPointer, "out pointer is null");
    }
    let Some(handle) = data.as_ref() else {
        return fail(CxnStatus::NullPointer, "data handle is null");
    };
    let cfg = SearchConfig {
        max_edges: (max_edges > 0).then_some(max_edges),
        max_clique_size: (max_clique_size > 0).then_some(max_clique_size),
        ..Default::default()
    };
    let fitted = min_bic_forest(&handle.data, &cfg).and_then(|(forest, _)| {
        if decomposable {
            decomposable_search(&handle.data, &forest, &cfg).map(|(m, _)| m)
        } else {
            Ok(forest)
        }
    });
    match fitted {
        Ok(model) => {
            *out = Box::into_raw(Box::new(CxnModel {
                model,
                names: handle.data.names().to_vec(),
                labels: handle.data.de_labels().to_vec(),
            }));
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::NumericalError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_model_bic(model: *const CxnModel) -> c_double {
    model.as_ref().map_or(f64::NAN, |m| m.model.bic())
}

#[no_mangle]
pub unsafe extern "C" fn cxn_model_edge_count(model: *const CxnModel) -> size_t {
    model.as_ref().map_or(0, |m| m.model.graph().edge_count())
}

#[no_mangle]
pub unsafe extern "C" fn cxn_model_vertex_count(model: *const CxnModel) -> size_t {
    model.as_ref().map_or(0, |m| m.model.graph().vertex_count())
}

/// Computes and stores the closed-form covariance estimate from the
/// original data.
#[no_mangle]
pub unsafe extern "C" fn cxn_model_compute_sigma(
    model: *mut CxnModel,
    data: *const CxnData,
) -> CxnStatus {
    let Some(handle) = model.as_mut() else {
        return fail(CxnStatus::NullPointer, "model handle is null");
    };
    let Some(data) = data.as_ref() else {
        return fail(CxnStatus::NullPointer, "data handle is null");
    };
    match coexnet::stats::estimate_covariance(&data.data, handle.model.sequence()) {
        Ok(sigma) => {
            handle.model.set_sigma(sigma);
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::NumericalError, e.to_string()),
    }
}

/// Writes the model snapshot JSON.
#[no_mangle]
pub unsafe extern "C" fn cxn_model_write_json(
    model: *const CxnModel,
    path: *const c_char,
) -> CxnStatus {
    let Some(handle) = model.as_ref() else {
        return fail(CxnStatus::NullPointer, "model handle is null");
    };
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let doc = handle.model.to_json(&handle.names, Some(&handle.labels));
    match doc.write_file(&path) {
        Ok(()) => CxnStatus::Ok,
        Err(e) => fail(CxnStatus::InputError, e.to_string()),
    }
}

/// Loads a model snapshot JSON.
#[no_mangle]
pub unsafe extern "C" fn cxn_model_read_json(
    path: *const c_char,
    out: *mut *mut CxnModel,
) -> CxnStatus {
    if out.is_null() {
        return fail(CxnStatus::NullPointer, "out pointer is null");
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let doc = match ModelJson::read_file(&path) {
        Ok(d) => d,
        Err(e) => return fail(CxnStatus::InputError, e.to_string()),
    };
    match doc.to_model() {
        Ok(model) => {
            let labels = doc
                .de_labels
                .clone()
                .unwrap_or(vec![false; doc.names.len()]);
            *out = Box::into_raw(Box::new(CxnModel {
                model,
                names: doc.names,
                labels,
            }));
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::InputError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_model_free(model: *mut CxnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Clusters the model's network using its stored labels. Pass NaN for
/// `alpha` to use the proportion of flagged variables.
#[no_mangle]
pub unsafe extern "C" fn cxn_cluster(
    model: *const CxnModel,
    alpha: c_double,
    out: *mut *mut CxnClusters,
) -> CxnStatus {
    if out.is_null() {
        return fail(CxnStatus::NullPointer, "out pointer is null");
    }
    let Some(handle) = model.as_ref() else {
        return fail(CxnStatus::NullPointer, "model handle is null");
    };
    let net = if alpha.is_nan() {
        LabeledNetwork::new(handle.model.graph().clone(), handle.labels.clone())
    } else {
        LabeledNetwork::with_alpha(handle.model.graph().clone(), handle.labels.clone(), alpha)
    };
    let net = match net {
        Ok(n) => n,
        Err(e) => return fail(CxnStatus::InputError, e.to_string()),
    };
    let classes = cluster::classify_cliques(&net, handle.model.sequence());
    let mut graph = cluster::build_clusters(&net, handle.model.sequence(), &classes);
    match cluster::uncertainty(&mut graph, net.labels()) {
        Ok(per_gene) => {
            let per_gene_rho = per_gene
                .into_iter()
                .map(|r| r.unwrap_or(f64::NAN))
                .collect();
            *out = Box::into_raw(Box::new(CxnClusters {
                graph,
                per_gene_rho,
                names: handle.names.clone(),
                labels: handle.labels.clone(),
            }));
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::NumericalError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_count(clusters: *const CxnClusters) -> size_t {
    clusters.as_ref().map_or(0, |c| c.graph.clusters.len())
}

/// 1 for a DEGD cluster, 0 for NDEGD, −1 on bad arguments.
#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_class(clusters: *const CxnClusters, index: size_t) -> c_int {
    clusters
        .as_ref()
        .and_then(|c| c.graph.clusters.get(index))
        .map_or(-1, |k| match k.class {
            ClusterClass::Degd => 1,
            ClusterClass::Ndegd => 0,
        })
}

#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_size(clusters: *const CxnClusters, index: size_t) -> size_t {
    clusters
        .as_ref()
        .and_then(|c| c.graph.clusters.get(index))
        .map_or(0, |k| k.members.len())
}

/// Count of differentially expressed members.
#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_eta(clusters: *const CxnClusters, index: size_t) -> size_t {
    clusters
        .as_ref()
        .and_then(|c| c.graph.clusters.get(index))
        .map_or(0, |k| k.eta)
}

#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_rho0(
    clusters: *const CxnClusters,
    index: size_t,
) -> c_double {
    clusters
        .as_ref()
        .and_then(|c| c.graph.clusters.get(index))
        .and_then(|k| k.rho0)
        .unwrap_or(f64::NAN)
}

#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_rho(clusters: *const CxnClusters, index: size_t) -> c_double {
    clusters
        .as_ref()
        .and_then(|c| c.graph.clusters.get(index))
        .and_then(|k| k.rho)
        .unwrap_or(f64::NAN)
}

/// Per-gene uncertainty index; NaN for genes that carry none (not
/// differentially expressed).
#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_gene_rho(
    clusters: *const CxnClusters,
    gene: size_t,
) -> c_double {
    clusters
        .as_ref()
        .and_then(|c| c.per_gene_rho.get(gene).copied())
        .unwrap_or(f64::NAN)
}

/// Cluster id of a gene, or `SIZE_MAX` on bad arguments.
#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_gene_cluster(
    clusters: *const CxnClusters,
    gene: size_t,
) -> size_t {
    clusters
        .as_ref()
        .and_then(|c| c.graph.assignment.get(gene).copied())
        .map_or(usize::MAX, |id| id as usize)
}

/// Writes the cluster table and per-gene table CSVs.
#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_write_csv(
    clusters: *const CxnClusters,
    clusters_path: *const c_char,
    genes_path: *const c_char,
) -> CxnStatus {
    let Some(handle) = clusters.as_ref() else {
        return fail(CxnStatus::NullPointer, "clusters handle is null");
    };
    let clusters_path = match path_arg(clusters_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let genes_path = match path_arg(genes_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let per_gene: Vec<Option<f64>> = handle
        .per_gene_rho
        .iter()
        .map(|&r| if r.is_nan() { None } else { Some(r) })
        .collect();
    let table = cluster::clusters_to_csv(&handle.graph, &handle.names);
    let genes = cluster::genes_to_csv(&handle.graph, &handle.names, &handle.labels, &per_gene);
    if let Err(e) = std::fs::write(&clusters_path, table) {
        return fail(CxnStatus::InputError, e.to_string());
    }
    if let Err(e) = std::fs::write(&genes_path, genes) {
        return fail(CxnStatus::InputError, e.to_string());
    }
    CxnStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn cxn_clusters_free(clusters: *mut CxnClusters) {
    if !clusters.is_null() {
        drop(Box::from_raw(clusters));
    }
}

/// Runs the Monte Carlo recovery study. The model must either carry a
/// stored covariance or `data` must be supplied to recompute it; the
/// model's labels are frozen as the reference classification.
#[no_mangle]
pub unsafe extern "C" fn cxn_simulate(
    model: *const CxnModel,
    data: *const CxnData,
    sizes: *const size_t,
    sizes_len: size_t,
    replicates: size_t,
    seed: u64,
    out: *mut *mut CxnMseReport,
) -> CxnStatus {
    if out.is_null() {
        return fail(CxnStatus::NullPointer, "out pointer is null");
    }
    let Some(handle) = model.as_ref() else {
        return fail(CxnStatus::NullPointer, "model handle is null");
    };
    if sizes.is_null() || sizes_len == 0 {
        return fail(CxnStatus::InputError, "sizes array is empty");
    }
    let sizes: Vec<usize> = std::slice::from_raw_parts(sizes, sizes_len).to_vec();

    let sigma = match (handle.model.sigma_hat(), data.as_ref()) {
        (Some(s), _) => s.clone(),
        (None, Some(d)) => {
            match coexnet::stats::estimate_covariance(&d.data, handle.model.sequence()) {
                Ok(s) => s,
                Err(e) => return fail(CxnStatus::NumericalError, e.to_string()),
            }
        }
        (None, None) => {
            return fail(
                CxnStatus::InputError,
                "model carries no covariance and no data handle was given",
            )
        }
    };

    let net = match LabeledNetwork::new(handle.model.graph().clone(), handle.labels.clone()) {
        Ok(n) => n,
        Err(e) => return fail(CxnStatus::InputError, e.to_string()),
    };
    let classes = cluster::classify_cliques(&net, handle.model.sequence());
    let mut cg = cluster::build_clusters(&net, handle.model.sequence(), &classes);
    let reference_rho = match cluster::uncertainty(&mut cg, net.labels()) {
        Ok(r) => r,
        Err(e) => return fail(CxnStatus::NumericalError, e.to_string()),
    };

    let plan = SimulationPlan {
        sigma,
        reference_rho,
        names: handle.names.clone(),
        de_labels: handle.labels.clone(),
        sample_sizes: sizes,
        replicates,
        seed,
        search: SearchConfig::default(),
        alpha: None,
    };
    match run_study(&plan) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(CxnMseReport { report }));
            CxnStatus::Ok
        }
        Err(e) => fail(CxnStatus::NumericalError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_mse_rows(report: *const CxnMseReport) -> size_t {
    report.as_ref().map_or(0, |r| r.report.rows.len())
}

/// Reads one row of the study report.
#[no_mangle]
pub unsafe extern "C" fn cxn_mse_row(
    report: *const CxnMseReport,
    index: size_t,
    out_n: *mut size_t,
    out_mse: *mut c_double,
    out_stderr: *mut c_double,
    out_replicates: *mut size_t,
) -> CxnStatus {
    let Some(row) = report.as_ref().and_then(|r| r.report.rows.get(index)) else {
        return fail(CxnStatus::InputError, "row index out of range");
    };
    if let Some(n) = out_n.as_mut() {
        *n = row.n;
    }
    if let Some(m) = out_mse.as_mut() {
        *m = row.mse;
    }
    if let Some(s) = out_stderr.as_mut() {
        *s = row.stderr;
    }
    if let Some(r) = out_replicates.as_mut() {
        *r = row.replicates;
    }
    CxnStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn cxn_mse_write_csv(
    report: *const CxnMseReport,
    path: *const c_char,
) -> CxnStatus {
    let Some(handle) = report.as_ref() else {
        return fail(CxnStatus::NullPointer, "report handle is null");
    };
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match std::fs::write(&path, handle.report.to_csv()) {
        Ok(()) => CxnStatus::Ok,
        Err(e) => fail(CxnStatus::InputError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cxn_mse_free(report: *mut CxnMseReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
