use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use symnet_core::dataset::{CsvSchema, DatasetTable};
use symnet_core::estimation::EssConfig;
use symnet_core::exec::Execution;
use symnet_core::graph::{standard_layout, Layout, NetworkFile};
use symnet_core::inference::{EvidenceMap, InterventionSet};
use symnet_core::metrics::calibration_curve_csv;
use symnet_core::pipeline::{CalibratorSet, QuartileBinner, DEFAULT_BAGS};
use symnet_core::synthgen::{sample_cohort, GeneratorConfig, Split, USER_COLUMN};
use symnet_core::workflow::{
    ensure_discretized, evaluate, fit_calibrators, predict_batch, train, EvaluateOptions,
    PredictOptions, RecordPrediction,
};

use crate::assessment::{assess, read_layout, Model, StateRef};
use crate::manifest::{sha256_hex, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "symnet",
    version,
    about = "Symptom network pipeline and session service"
)]
pub struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic cohort and write user-disjoint split CSVs.
    Generate(GenerateArgs),
    /// Fit quartile bins and network parameters on a cohort CSV.
    Fit(FitArgs),
    /// Write uncalibrated condition probabilities for every record.
    Predict(PredictArgs),
    /// Fit bagged isotonic calibrators from predicted scores and labels.
    Calibrate(CalibrateArgs),
    /// Score a labelled cohort and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Posteriors for one evidence set, as returned by the service.
    Query(QueryArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config JSON; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of records.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelPaths {
    /// Node roles (conditions, symptoms, surrogates); defaults to the built-in network.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Run manifest to verify before reading and to record outputs in.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Structure-only network file; defaults to the layout's network.
    #[arg(long)]
    pub network_spec: Option<PathBuf>,
    #[arg(long, default_value_t = symnet_core::estimation::DEFAULT_ESS)]
    pub ess: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Quartile bins output; defaults to `<out stem>.bins.json`.
    #[arg(long)]
    pub bins: Option<PathBuf>,
    #[command(flatten)]
    pub paths: ModelPaths,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub bins: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub paths: ModelPaths,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Output of `predict`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Cohort CSV with the condition label columns, row-aligned with the scores.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BAGS)]
    pub bags: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub paths: ModelPaths,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub bins: Option<PathBuf>,
    #[arg(long)]
    pub calibrator: Option<PathBuf>,
    #[arg(long, default_value_t = symnet_core::metrics::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub report: PathBuf,
    /// Also write one reliability-curve CSV per condition here.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Skip the single-family evidence comparison.
    #[arg(long)]
    pub no_family_breakdown: bool,
    #[command(flatten)]
    pub paths: ModelPaths,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub calibrator: Option<PathBuf>,
    /// `NODE=STATE`, state by label or index. Repeatable.
    #[arg(long = "evidence", value_name = "NODE=STATE")]
    pub evidence: Vec<String>,
    /// Node to do-isolate. Repeatable.
    #[arg(long = "isolate", value_name = "NODE")]
    pub isolate: Vec<String>,
    #[command(flatten)]
    pub paths: ModelPaths,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub calibrator: Option<PathBuf>,
    #[command(flatten)]
    pub paths: ModelPaths,
}

pub fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Generate(a) => generate(a, exec),
        Command::Fit(a) => fit(a, exec),
        Command::Predict(a) => predict(a, exec),
        Command::Calibrate(a) => calibrate(a, exec),
        Command::Evaluate(a) => evaluate_cmd(a, exec),
        Command::Query(a) => query(a),
        Command::Serve(a) => serve(a),
    }
}

fn open_manifest(paths: &ModelPaths) -> Result<Option<(PathBuf, RunManifest)>> {
    match &paths.manifest {
        None => Ok(None),
        Some(p) => Ok(Some((p.clone(), RunManifest::load_or_default(p)?))),
    }
}

fn record_outputs(
    manifest: Option<(PathBuf, RunManifest)>,
    outputs: &[(&str, &Path)],
) -> Result<()> {
    if let Some((path, mut m)) = manifest {
        for (role, file) in outputs {
            m.record_artifact(&path, role, file)?;
        }
        m.write(&path)?;
    }
    Ok(())
}

fn cohort_schema(layout: &Layout) -> CsvSchema {
    CsvSchema::from_spec(&layout.network_spec(true))
}

fn read_cohort(path: &Path, layout: &Layout) -> Result<DatasetTable> {
    DatasetTable::read_csv(path, &cohort_schema(layout))
        .with_context(|| format!("reading {}", path.display()))
}

fn bins_path(network: &Path, explicit: Option<&PathBuf>) -> PathBuf {
    explicit
        .cloned()
        .unwrap_or_else(|| network.with_extension("bins.json"))
}

fn generate(a: GenerateArgs, exec: Execution) -> Result<()> {
    let layout = standard_layout();
    let mut config = match &a.config {
        Some(p) => GeneratorConfig::read(p)?,
        None => GeneratorConfig::for_layout(&layout),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    let cohort = sample_cohort(&config, &layout, exec)?;
    fs::create_dir_all(&a.out_dir)?;
    let config_json = config.to_json();
    fs::write(a.out_dir.join("config.json"), &config_json)?;
    let layout_path = a.out_dir.join("layout.json");
    fs::write(&layout_path, serde_json::to_string_pretty(&layout)? + "\n")?;
    let spec_path = a.out_dir.join("network_spec.json");
    NetworkFile::from_spec(&layout.network_spec(true)).write(&spec_path)?;

    let manifest_path = a.out_dir.join("manifest.json");
    let mut manifest = RunManifest::default();
    manifest.seeds.insert("generator".into(), config.seed);
    manifest
        .config_sha256
        .insert("generator".into(), sha256_hex(config_json.as_bytes()));
    for (split, name) in [
        (Split::Development, "development"),
        (Split::Calibration, "calibration"),
        (Split::Test, "test"),
    ] {
        let path = a.out_dir.join(format!("{name}.csv"));
        let table = cohort.split(split);
        table.write_csv(&path)?;
        manifest.record_dataset(&manifest_path, name, &path)?;
        log::info!("{name}: {} records -> {}", table.n_rows(), path.display());
    }
    manifest.record_artifact(&manifest_path, "layout", &layout_path)?;
    manifest.record_artifact(&manifest_path, "network_spec", &spec_path)?;
    manifest.write(&manifest_path)?;
    Ok(())
}

fn fit(a: FitArgs, exec: Execution) -> Result<()> {
    let manifest = open_manifest(&a.paths)?;
    let layout = read_layout(a.paths.layout.as_deref())?;
    let spec = match &a.network_spec {
        Some(p) => NetworkFile::read(p)?.spec(),
        None => layout.network_spec(true),
    };
    let data = DatasetTable::read_csv(&a.data, &CsvSchema::from_spec(&spec))
        .with_context(|| format!("reading {}", a.data.display()))?;
    let ess = EssConfig::new(a.ess)?;
    let (net, binner) = train(&data, &layout, &spec, ess, exec)?;
    NetworkFile::from_network(&net).write(&a.out)?;
    let bins = bins_path(&a.out, a.bins.as_ref());
    binner.write(&bins)?;
    log::info!("fitted {} nodes on {} records", net.len(), data.n_rows());
    record_outputs(manifest, &[("network", &a.out), ("bins", &bins)])
}

fn load_for_batch(
    network: &Path,
    bins: Option<&PathBuf>,
    layout: &Layout,
) -> Result<(Model, QuartileBinner)> {
    let net = NetworkFile::read(network)?.into_network()?;
    let binner = QuartileBinner::read(bins_path(network, bins))?;
    Ok((Model::new(net, layout.clone(), None)?, binner))
}

fn predictions_csv(
    data: &DatasetTable,
    layout: &Layout,
    preds: &[RecordPrediction],
) -> Result<DatasetTable> {
    let mut out = DatasetTable::new(preds.len());
    if let Ok(ids) = data.continuous(USER_COLUMN) {
        out.push_continuous(USER_COLUMN, ids.values.clone())?;
    }
    for c in layout.condition_names() {
        out.push_continuous(c, preds.iter().map(|p| p.conditions[c]).collect())?;
    }
    Ok(out)
}

fn predict(a: PredictArgs, exec: Execution) -> Result<()> {
    verify_only(&a.paths)?;
    let layout = read_layout(a.paths.layout.as_deref())?;
    let (model, binner) = load_for_batch(&a.network, a.bins.as_ref(), &layout)?;
    let mut data = read_cohort(&a.data, &layout)?;
    ensure_discretized(&mut data, &binner, &layout)?;
    let preds = predict_batch(
        &model.network,
        &layout,
        &data,
        &PredictOptions::default(),
        exec,
    )?;
    predictions_csv(&data, &layout, &preds)?.write_csv(&a.out)?;
    Ok(())
}

fn verify_only(paths: &ModelPaths) -> Result<()> {
    if let Some(p) = &paths.manifest {
        RunManifest::load(p)?;
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs, exec: Execution) -> Result<()> {
    let manifest = open_manifest(&a.paths)?;
    let layout = read_layout(a.paths.layout.as_deref())?;
    let scores = DatasetTable::read_csv(&a.scores, &CsvSchema::default())?;
    let labels = read_cohort(&a.labels, &layout)?;
    if scores.n_rows() != labels.n_rows() {
        bail!(
            "scores have {} rows, labels have {}",
            scores.n_rows(),
            labels.n_rows()
        );
    }
    if let (Ok(x), Ok(y)) = (
        scores.continuous(USER_COLUMN),
        labels.continuous(USER_COLUMN),
    ) {
        if x.values != y.values {
            bail!("scores and labels are not row-aligned on `{USER_COLUMN}`");
        }
    }
    let preds: Vec<RecordPrediction> = (0..scores.n_rows())
        .map(|r| {
            let conditions = layout
                .condition_names()
                .into_iter()
                .map(|c| Ok((c.to_string(), scores.continuous(c)?.values[r])))
                .collect::<Result<_, symnet_core::dataset::DatasetError>>()?;
            Ok(RecordPrediction {
                conditions,
                symptoms: Default::default(),
            })
        })
        .collect::<Result<_, symnet_core::dataset::DatasetError>>()?;
    let set = fit_calibrators(&preds, &labels, &layout, a.bags, a.seed, exec)?;
    set.write(&a.out)?;
    record_outputs(manifest, &[("calibrator", &a.out)])
}

fn evaluate_cmd(a: EvaluateArgs, exec: Execution) -> Result<()> {
    let manifest = open_manifest(&a.paths)?;
    let layout = read_layout(a.paths.layout.as_deref())?;
    let (model, binner) = load_for_batch(&a.network, a.bins.as_ref(), &layout)?;
    let calibrators = a.calibrator.as_ref().map(CalibratorSet::read).transpose()?;
    let mut data = read_cohort(&a.data, &layout)?;
    ensure_discretized(&mut data, &binner, &layout)?;
    let options = EvaluateOptions {
        threshold: a.threshold,
        family_breakdown: !a.no_family_breakdown,
    };
    let report = evaluate(
        &model.network,
        &layout,
        &data,
        calibrators.as_ref(),
        &options,
        exec,
    )?;
    fs::write(&a.report, serde_json::to_string_pretty(&report)? + "\n")?;
    if let Some(dir) = &a.curves {
        fs::create_dir_all(dir)?;
        for (c, e) in &report.conditions {
            fs::write(
                dir.join(format!("{c}.raw.csv")),
                calibration_curve_csv(&e.raw.calibration_curve),
            )?;
            if let Some(cal) = &e.calibrated {
                fs::write(
                    dir.join(format!("{c}.calibrated.csv")),
                    calibration_curve_csv(&cal.calibration_curve),
                )?;
            }
        }
    }
    for (c, e) in &report.conditions {
        let calibrated = e
            .calibrated
            .as_ref()
            .map_or(String::new(), |m| format!(" calibrated ece {:.4}", m.ece));
        println!(
            "{c}: n={} auc {:.4} ece {:.4}{calibrated}",
            e.labelled, e.raw.roc_auc, e.raw.ece
        );
    }
    record_outputs(manifest, &[("report", &a.report)])
}

/// Parses `NODE=STATE` pairs; numeric states are indices unless the node has
/// a state with that label.
pub fn parse_evidence(model: &Model, pairs: &[String]) -> Result<EvidenceMap> {
    let mut evidence = EvidenceMap::new();
    for pair in pairs {
        let Some((node, state)) = pair.split_once('=') else {
            bail!("evidence `{pair}` is not NODE=STATE");
        };
        let s = model
            .resolve_state(node, &StateRef::Label(state.to_string()))
            .or_else(|_| match state.parse::<usize>() {
                Ok(k) => model.resolve_state(node, &StateRef::Index(k)),
                Err(_) => model.resolve_state(node, &StateRef::Label(state.to_string())),
            })?;
        evidence.insert(node.to_string(), s);
    }
    Ok(evidence)
}

fn query(a: QueryArgs) -> Result<()> {
    verify_only(&a.paths)?;
    let model = Model::load(
        &a.network,
        a.calibrator.as_deref(),
        a.paths.layout.as_deref(),
    )?;
    let evidence = parse_evidence(&model, &a.evidence)?;
    let mut interventions = InterventionSet::new();
    for node in &a.isolate {
        model.check_node(node)?;
        interventions.isolate(node.clone());
    }
    let out = assess(&model, &evidence, &interventions)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    verify_only(&a.paths)?;
    let model = Model::load(
        &a.network,
        a.calibrator.as_deref(),
        a.paths.layout.as_deref(),
    )?;
    let app = crate::service::router(model);
    let addr = format!("{}:{}", a.host, a.port);
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
