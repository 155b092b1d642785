//! Command-line front end: ingestion, fitting, clustering, uncertainty,
//! simulation, and export wired into reproducible batch runs.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical error, 4 internal
//! invariant violation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use coexnet::cluster::{self, LabeledNetwork};
use coexnet::data::{self, DataMatrix};
use coexnet::graph::export::{to_dot, to_graphml, GraphJson};
use coexnet::manifest::RunManifest;
use coexnet::model::{DecomposableModel, ModelJson};
use coexnet::search::{decomposable_search, min_bic_forest, SearchConfig};
use coexnet::simulate::{run_study, SimulationPlan};
use coexnet::stats;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "coexnet",
    version,
    about = "Co-expression networks as decomposable Gaussian graphical models"
)]
struct Cli {
    /// Worker thread cap; output is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model: minimum-BIC forest, optionally extended by
    /// decomposability-preserving additions.
    Fit(FitArgs),
    /// Reduce a fitted model to clusters and uncertainty indices.
    Cluster(ClusterArgs),
    /// Monte Carlo recovery study of the uncertainty indices.
    Simulate(SimulateArgs),
    /// Convert a model or graph file to another serialization.
    Export(ExportArgs),
    /// Re-check the invariants of a model file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMode {
    Forest,
    Decomposable,
}

#[derive(Args)]
struct FitArgs {
    /// Observations-by-variables CSV/TSV; first row names.
    #[arg(long)]
    input: PathBuf,
    /// Two-column labels file (name, 0/1). Missing variables default to 0
    /// with a warning.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "decomposable")]
    mode: FitMode,
    /// log2-transform values at ingestion.
    #[arg(long)]
    log2: bool,
    /// Clique size cap (default n − 1).
    #[arg(long)]
    max_clique_size: Option<usize>,
    /// Cap on total edges.
    #[arg(long)]
    max_edges: Option<usize>,
    /// Write the per-edge search trace as line-delimited JSON.
    #[arg(long)]
    emit_trace: bool,
    /// Store the closed-form covariance estimate in the model file.
    #[arg(long)]
    emit_sigma: bool,
    /// Echoed into the manifest; fitting itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Fitted model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Labels file; may be omitted when the model file embeds labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Density threshold; defaults to the proportion of flagged variables.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Fitted model JSON (the reference network).
    #[arg(long)]
    model: PathBuf,
    /// Labels file; may be omitted when the model file embeds labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Original data file; required when the model lacks a stored
    /// covariance.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    log2: bool,
    /// Comma-separated sample sizes, e.g. 10,50,100.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Named protocol: desk (5 sizes × 50 replicates) or paper
    /// (10..=250 by 10 × 500 replicates; expect hours).
    #[arg(long, value_enum, default_value = "desk")]
    preset: SimPreset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_clique_size: Option<usize>,
    #[arg(long)]
    max_edges: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimPreset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Json,
    Graphml,
    Dot,
    Csv,
}

#[derive(Args)]
struct ExportArgs {
    /// Model JSON or graph JSON.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    format: ExportFormat,
    /// Labels file overriding any labels embedded in the input.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Original data file; enables the BIC and clique-marginal checks.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    log2: bool,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
    fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<data::DataError> for CliError {
    fn from(e: data::DataError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<coexnet::model::ModelError> for CliError {
    fn from(e: coexnet::model::ModelError) -> Self {
        use coexnet::model::ModelError::*;
        match e {
            Stats(inner) => CliError::numerical(inner.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<coexnet::search::SearchError> for CliError {
    fn from(e: coexnet::search::SearchError) -> Self {
        use coexnet::search::SearchError::*;
        match e {
            InvalidConfig(_) => CliError::input(e.to_string()),
            Stats(inner) => CliError::numerical(inner.to_string()),
            Model(inner) => inner.into(),
        }
    }
}

impl From<stats::StatsError> for CliError {
    fn from(e: stats::StatsError) -> Self {
        CliError::numerical(e.to_string())
    }
}

impl From<cluster::ClusterError> for CliError {
    fn from(e: cluster::ClusterError) -> Self {
        CliError::numerical(e.to_string())
    }
}

impl From<coexnet::simulate::SimError> for CliError {
    fn from(e: coexnet::simulate::SimError) -> Self {
        CliError::numerical(e.to_string())
    }
}

impl From<coexnet::graph::GraphError> for CliError {
    fn from(e: coexnet::graph::GraphError) -> Self {
        CliError::input(e.to_string())
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("coexnet: warning: thread pool already initialized: {e}");
        }
    }
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("coexnet: error: {}", e.message);
            e.code
        }
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

fn write_output(manifest: &mut RunManifest, path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    manifest
        .record_output(path)
        .map_err(|e| CliError::internal(format!("checksum of fresh output failed: {e}")))
}

fn finish_manifest(manifest: &RunManifest, dir: &Path) -> Result<(), CliError> {
    let path = dir.join("run_manifest.json");
    manifest
        .write_file(&path)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn argv() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn load_data(
    input: &Path,
    labels: Option<&Path>,
    log2: bool,
    manifest: &mut RunManifest,
) -> Result<DataMatrix, CliError> {
    let mut data = DataMatrix::read_file(input, log2)?;
    manifest
        .record_input(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    if let Some(labels_path) = labels {
        let missing = data.attach_labels_file(labels_path)?;
        manifest
            .record_input(labels_path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", labels_path.display())))?;
        if !missing.is_empty() {
            eprintln!(
                "coexnet: warning: {} variable(s) missing from labels file default to non-DE (first: {})",
                missing.len(),
                missing[0]
            );
        }
    }
    Ok(data)
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(argv(), args.seed);

    let t0 = Instant::now();
    let data = load_data(
        &args.input,
        args.labels.as_deref(),
        args.log2,
        &mut manifest,
    )?;
    manifest.record_timing("ingest", t0.elapsed().as_secs_f64());

    let cfg = SearchConfig {
        max_edges: args.max_edges,
        max_clique_size: args.max_clique_size,
        emit_trace: args.emit_trace,
        ..Default::default()
    };

    let t1 = Instant::now();
    let (forest, mut trace) = min_bic_forest(&data, &cfg)?;
    let model = match args.mode {
        FitMode::Forest => forest,
        FitMode::Decomposable => {
            let (model, stage2) = decomposable_search(&data, &forest, &cfg)?;
            let offset = trace.records.len();
            trace
                .records
                .extend(stage2.records.into_iter().map(|mut r| {
                    r.step += offset;
                    r
                }));
            trace.skipped_oversize += stage2.skipped_oversize;
            trace.skipped_singular += stage2.skipped_singular;
            model
        }
    };
    manifest.record_timing("fit", t1.elapsed().as_secs_f64());

    let model = if args.emit_sigma {
        model.with_covariance(&data)?
    } else {
        model
    };

    let doc = model.to_json(data.names(), Some(data.de_labels()));
    write_output(
        &mut manifest,
        &args.out_dir.join("model.json"),
        &doc.to_json_string(),
    )?;
    if args.emit_trace {
        write_output(
            &mut manifest,
            &args.out_dir.join("trace.ndjson"),
            &trace.to_ndjson(),
        )?;
    }
    finish_manifest(&manifest, &args.out_dir)
}

fn labels_for_model(
    model: &ModelJson,
    labels: Option<&Path>,
    manifest: &mut RunManifest,
) -> Result<Vec<bool>, CliError> {
    match labels {
        Some(path) => {
            let (labels, missing) = data::read_labels_file(path, &model.names)?;
            manifest
                .record_input(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            if !missing.is_empty() {
                eprintln!(
                    "coexnet: warning: {} variable(s) missing from labels file default to non-DE (first: {})",
                    missing.len(),
                    missing[0]
                );
            }
            Ok(labels)
        }
        None => model.de_labels.clone().ok_or_else(|| {
            CliError::input("no --labels given and the model file embeds none".to_string())
        }),
    }
}

fn cluster_pipeline(
    model: &DecomposableModel,
    labels: Vec<bool>,
    alpha: Option<f64>,
) -> Result<(cluster::ClusterGraph, Vec<Option<f64>>, LabeledNetwork), CliError> {
    let net = match alpha {
        Some(a) => LabeledNetwork::with_alpha(model.graph().clone(), labels, a),
        None => LabeledNetwork::new(model.graph().clone(), labels),
    }
    .map_err(|e| CliError::input(e.to_string()))?;
    let classes = cluster::classify_cliques(&net, model.sequence());
    let mut cg = cluster::build_clusters(&net, model.sequence(), &classes);
    let per_gene = cluster::uncertainty(&mut cg, net.labels())?;
    Ok((cg, per_gene, net))
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(argv(), None);

    let doc = ModelJson::read_file(&args.model)?;
    manifest
        .record_input(&args.model)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.model.display())))?;
    let model = doc.to_model()?;
    let labels = labels_for_model(&doc, args.labels.as_deref(), &mut manifest)?;

    let t0 = Instant::now();
    let (cg, per_gene, net) = cluster_pipeline(&model, labels, args.alpha)?;
    manifest.record_timing("cluster", t0.elapsed().as_secs_f64());

    write_output(
        &mut manifest,
        &args.out_dir.join("clusters.csv"),
        &cluster::clusters_to_csv(&cg, &doc.names),
    )?;
    write_output(
        &mut manifest,
        &args.out_dir.join("genes.csv"),
        &cluster::genes_to_csv(&cg, &doc.names, net.labels(), &per_gene),
    )?;
    write_output(
        &mut manifest,
        &args.out_dir.join("cluster_graph.dot"),
        &cluster::cluster_graph_to_dot(&cg),
    )?;
    write_output(
        &mut manifest,
        &args.out_dir.join("cluster_graph.graphml"),
        &cluster::cluster_graph_to_graphml(&cg),
    )?;
    finish_manifest(&manifest, &args.out_dir)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(argv(), Some(args.seed));

    let doc = ModelJson::read_file(&args.model)?;
    manifest
        .record_input(&args.model)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.model.display())))?;
    let model = doc.to_model()?;
    let labels = labels_for_model(&doc, args.labels.as_deref(), &mut manifest)?;

    // Σ̂ from the model file, or recomputed from the original data.
    let sigma = match (model.sigma_hat(), &args.input) {
        (Some(s), _) => s.clone(),
        (None, Some(input)) => {
            let data = DataMatrix::read_file(input, args.log2)?;
            manifest
                .record_input(input)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
            if data.p() != doc.names.len() {
                return Err(CliError::input(format!(
                    "data has {} variables but the model lists {}",
                    data.p(),
                    doc.names.len()
                )));
            }
            let max_clique = model
                .sequence()
                .cliques()
                .iter()
                .max_by_key(|c| c.len())
                .cloned()
                .unwrap_or_default();
            if data.n() <= max_clique.len() {
                let members: Vec<&str> = max_clique
                    .iter()
                    .map(|&v| doc.names[v as usize].as_str())
                    .collect();
                return Err(CliError::numerical(format!(
                    "covariance needs n > max clique size: n = {} but clique {{{}}} has {} members",
                    data.n(),
                    members.join(", "),
                    max_clique.len()
                )));
            }
            stats::estimate_covariance(&data, model.sequence())?
        }
        (None, None) => {
            return Err(CliError::input(
                "model carries no covariance; pass --input to recompute it".to_string(),
            ))
        }
    };

    // Reference ρ from clustering the reference network itself.
    let (_, reference_rho, _) = cluster_pipeline(&model, labels.clone(), args.alpha)?;

    let (sizes, replicates) = match args.preset {
        SimPreset::Desk => (vec![10, 50, 100, 150, 250], 50),
        SimPreset::Paper => (SimulationPlan::full_grid_sizes(), 500),
    };
    let plan = SimulationPlan {
        sigma,
        reference_rho,
        names: doc.names.clone(),
        de_labels: labels,
        sample_sizes: args.sizes.clone().unwrap_or(sizes),
        replicates: args.replicates.unwrap_or(replicates),
        seed: args.seed,
        search: SearchConfig {
            max_edges: args.max_edges,
            max_clique_size: args.max_clique_size,
            ..Default::default()
        },
        alpha: args.alpha,
    };

    let t0 = Instant::now();
    let report = run_study(&plan)?;
    manifest.record_timing("simulate", t0.elapsed().as_secs_f64());
    for f in &report.failures {
        eprintln!(
            "coexnet: warning: replicate {} at n = {} failed: {}",
            f.replicate, f.n, f.error
        );
    }

    write_output(
        &mut manifest,
        &args.out_dir.join("mse.csv"),
        &report.to_csv(),
    )?;
    write_output(
        &mut manifest,
        &args.out_dir.join("mse.json"),
        &report.to_json_string(),
    )?;
    finish_manifest(&manifest, &args.out_dir)
}

/// Loads either a model file or a bare graph file.
fn load_graphish(path: &Path) -> Result<GraphJson, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(model) = ModelJson::from_json_str(&text) {
        return Ok(model.graph_json());
    }
    GraphJson::from_json_str(&text).map_err(CliError::input)
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let mut doc = load_graphish(&args.model)?;
    if let Some(labels_path) = &args.labels {
        let (labels, _missing) = data::read_labels_file(labels_path, &doc.names)?;
        doc.de_labels = Some(labels);
    }
    let graph = doc.to_graph()?;
    let rendered = match args.format {
        ExportFormat::Json => doc.to_json_string(),
        ExportFormat::Graphml => to_graphml(&graph, &doc.names, doc.de_labels.as_deref()),
        ExportFormat::Dot => to_dot(&graph, &doc.names, doc.de_labels.as_deref()),
        ExportFormat::Csv => {
            let mut out = String::from("source,target\n");
            for (i, j) in graph.edges() {
                out.push_str(&format!("{},{}\n", doc.names[i], doc.names[j]));
            }
            out
        }
    };
    std::fs::write(&args.out, rendered)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let doc = ModelJson::read_file(&args.model)?;
    let mut violations: Vec<String> = Vec::new();

    let model = match doc.to_model() {
        Ok(m) => m,
        Err(e) => return Err(CliError::input(e.to_string())),
    };
    println!(
        "validate: graph is chordal ({} edges)",
        model.graph().edge_count()
    );

    if let Err(e) = model.sequence().validate(model.graph()) {
        violations.push(format!("perfect sequence invalid: {e}"));
    } else {
        println!(
            "validate: perfect sequence of {} cliques holds",
            model.sequence().cliques().len()
        );
    }

    if let Some(sigma) = model.sigma_hat() {
        match coexnet::linalg::spd_inverse(sigma.clone()) {
            Some(precision) => {
                let mut worst: f64 = 0.0;
                let p = doc.names.len();
                for i in 0..p {
                    for j in i + 1..p {
                        if !model.graph().has_edge(i, j) {
                            let scaled = precision[(i, j)].abs()
                                / (precision[(i, i)] * precision[(j, j)]).sqrt();
                            worst = worst.max(scaled);
                        }
                    }
                }
                if worst > 1e-6 {
                    violations.push(format!(
                        "non-edge precision entries reach {worst:.3e} after unit-diagonal scaling"
                    ));
                } else {
                    println!("validate: non-edge precision entries vanish (max {worst:.3e})");
                }
            }
            None => violations.push("stored covariance is not positive definite".into()),
        }
    }

    if let Some(input) = &args.input {
        let mut data = DataMatrix::read_file(input, args.log2)?;
        if data.p() != doc.names.len() {
            return Err(CliError::input(format!(
                "data has {} variables but the model lists {}",
                data.p(),
                doc.names.len()
            )));
        }
        if data.names() != doc.names.as_slice() {
            violations.push("variable names differ between data and model".into());
        }
        if data.n() != doc.n {
            violations.push(format!(
                "observation count differs: data {} vs model {}",
                data.n(),
                doc.n
            ));
        }
        if let Some(l) = &doc.de_labels {
            data.set_labels(l.clone());
        }
        match stats::bic(&data, model.sequence()) {
            Ok(recomputed) => {
                let rel = (recomputed - model.bic()).abs() / recomputed.abs().max(1.0);
                if rel > 1e-8 {
                    violations.push(format!(
                        "stored BIC {} differs from recomputed {} (relative {rel:.3e})",
                        model.bic(),
                        recomputed
                    ));
                } else {
                    println!("validate: BIC reproduces to {rel:.3e} relative");
                }
            }
            Err(e) => violations.push(format!("BIC recomputation failed: {e}")),
        }
        if let Some(sigma) = model.sigma_hat() {
            let mut worst: f64 = 0.0;
            for c in model.sequence().cliques() {
                let ssd = data.ssd(c);
                for (a, &va) in c.iter().enumerate() {
                    for (b, &vb) in c.iter().enumerate() {
                        let diff = (sigma[(va as usize, vb as usize)]
                            - ssd[(a, b)] / data.n() as f64)
                            .abs();
                        worst = worst.max(diff);
                    }
                }
            }
            if worst > 1e-8 {
                violations.push(format!(
                    "clique marginals deviate from ssd/n by {worst:.3e}"
                ));
            } else {
                println!("validate: clique marginals match ssd/n (max dev {worst:.3e})");
            }
        }
    }

    if violations.is_empty() {
        println!("validate: all checks passed");
        Ok(())
    } else {
        for v in &violations {
            eprintln!("validate: violation: {v}");
        }
        Err(CliError::internal(format!(
            "{} invariant violation(s)",
            violations.len()
        )))
    }
}
