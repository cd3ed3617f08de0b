//! The `bandsel` command line: dataset generation, filter selection,
//! evaluation, threshold sweeps and SNR profiles.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use bandsel::cfbs::{cfbs_select, evaluate_selection, sweep, write_sweep_csv, CfbsConfig};
use bandsel::classify::{ClassifierKind, ClassifierSpec, CvReport};
use bandsel::dataset::{
    generate_catalog, generate_synthetic, load_catalog_json, load_dataset_csv, representative_spectra,
    save_catalog_json, save_dataset_csv, LabeledDataset, LoadOptions, SyntheticConfig,
};
use bandsel::report::SelectionDocument;
use bandsel::selection::{
    build_adjacency, fbs_select, full_search_select, uniform_select, SelectionResult, SelectionVector,
    DEFAULT_COMBINATION_CAP,
};
use bandsel::snr::{prune_bands_directed, snr_profile, write_snr_csv, SnrDirection};
use bandsel::spectral::{build_filter_matrix_with_ids, FilterCatalog, WavelengthGrid};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const PRUNING: i32 = 5;
    pub const COMBINATORIAL: i32 = 6;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(bandsel::Error),
}

impl From<bandsel::Error> for CliError {
    fn from(e: bandsel::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e} [{}]", e.code()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bandsel::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(e) => match e {
                E::Io { .. } => exit::OTHER,
                E::Parse { .. } | E::GridMismatch(_) | E::NegativeValue { .. } | E::Json(_) | E::Csv(_) => {
                    exit::PARSE
                }
                E::AllBandsPruned { .. } | E::NotEnoughSurvivors { .. } => exit::PRUNING,
                E::TooManyCombinations { .. } => exit::COMBINATORIAL,
                _ => exit::VALIDATION,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "bandsel", version, about = "Noise-aware minimal bandpass filter selection")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic dataset and a filter catalog.
    Gen(GenArgs),
    /// Select filters with fbs, cfbs, uniform or full search.
    Select(SelectArgs),
    /// Cross-validate a saved selection.
    Evaluate(EvaluateArgs),
    /// Run CFBS over a grid of SNR and cvs thresholds.
    Sweep(SweepArgs),
    /// Per-filter SNR profile.
    Snr(SnrArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Also write the generated catalog here.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 10)]
    objects_per_class: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = bandsel::dataset::DEFAULT_NOISE_BASE)]
    noise_base: f64,
    #[arg(long, default_value_t = bandsel::dataset::DEFAULT_NOISE_SLOPE)]
    noise_slope: f64,
    #[arg(long, default_value_t = 3)]
    bumps_per_class: usize,
    #[arg(long, default_value_t = 316.0)]
    grid_start: f64,
    #[arg(long, default_value_t = 1.0)]
    grid_step: f64,
    #[arg(long, default_value_t = 476)]
    grid_count: usize,
    #[command(flatten)]
    catalog_shape: CatalogShape,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CatalogShape {
    /// Comma-separated filter bandwidths in nm.
    #[arg(long, value_delimiter = ',', default_value = "10,50")]
    bandwidths: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    center_step: f64,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Catalog JSON; generated from the dataset grid when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    allow_negative: bool,
    #[command(flatten)]
    catalog_shape: CatalogShape,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Fbs,
    Cfbs,
    Uniform,
    Full,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ClassifierArg {
    Rf,
    Gb,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DirectionArg {
    Below,
    Above,
}

impl From<DirectionArg> for SnrDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Below => SnrDirection::Below,
            DirectionArg::Above => SnrDirection::Above,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ClassifierFlags {
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ClassifierFlags {
    /// Flags override `base`; unset flags keep its values.
    fn resolve(&self, base: ClassifierSpec, base_folds: usize, base_seed: u64) -> (ClassifierSpec, usize, u64) {
        let seed = self.seed.unwrap_or(base_seed);
        let mut spec = match self.classifier {
            Some(ClassifierArg::Rf) if base.kind != ClassifierKind::RandomForest => ClassifierSpec::random_forest(seed),
            Some(ClassifierArg::Gb) if base.kind != ClassifierKind::GradientBoosting => {
                ClassifierSpec::gradient_boosting(seed)
            }
            _ => base,
        };
        if let Some(t) = self.trees {
            spec.n_trees = t;
        }
        if let Some(d) = self.max_depth {
            spec.max_depth = Some(d);
        }
        if let Some(lr) = self.learning_rate {
            spec.learning_rate = lr;
        }
        spec.seed = seed;
        (spec, self.folds.unwrap_or(base_folds), seed)
    }
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Filters to select; for cfbs, the size of the max-min selection grown from.
    #[arg(long, default_value_t = 9)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    snr_th: f64,
    #[arg(long, default_value_t = 0.95)]
    cvs_th: f64,
    #[arg(long, value_enum, default_value = "below")]
    snr_direction: DirectionArg,
    #[arg(long, default_value_t = DEFAULT_COMBINATION_CAP)]
    combination_cap: u128,
    #[command(flatten)]
    classifier: ClassifierFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Selection JSON written by `select`.
    #[arg(long)]
    selection: PathBuf,
    #[command(flatten)]
    classifier: ClassifierFlags,
    #[arg(long)]
    out: PathBuf,
    /// Also write the confusion matrix as CSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_delimiter = ',', required = true)]
    snr_th: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    cvs_th: Vec<f64>,
    #[arg(long, default_value_t = 9)]
    n: usize,
    #[arg(long, value_enum, default_value = "below")]
    snr_direction: DirectionArg,
    #[command(flatten)]
    classifier: ClassifierFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SnrArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
}

/// Sidecar record written next to every output as `<output>.manifest.json`.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    config: Value,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
    seed: Option<u64>,
    version: &'static str,
    started_at: String,
    finished_at: String,
}

#[derive(Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

struct Run {
    command: &'static str,
    args: Vec<String>,
    started_at: String,
    inputs: Vec<InputHash>,
}

/// RFC 3339 time, pinned by `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(bandsel::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Run {
    fn new(command: &'static str, args: &[OsString]) -> Self {
        Self {
            command,
            args: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            started_at: timestamp(),
            inputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn finish(self, outputs: &[&Path], config: Value, seed: Option<u64>) -> CliResult<()> {
        let manifest = Manifest {
            command: self.command,
            args: self.args,
            config,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            started_at: self.started_at,
            finished_at: timestamp(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(bandsel::Error::from)?;
        text.push('\n');
        for out in outputs {
            let path = manifest_path(out);
            fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn load_inputs(inputs: &Inputs, run: &mut Run) -> CliResult<(LabeledDataset, FilterCatalog)> {
    run.input(&inputs.data)?;
    let options = LoadOptions {
        allow_negative: inputs.allow_negative,
        classes: None,
    };
    let dataset = load_dataset_csv(&inputs.data, &options)?;
    let catalog = match &inputs.catalog {
        Some(path) => {
            run.input(path)?;
            load_catalog_json(path)?
        }
        None => generate_catalog(
            dataset.grid(),
            &inputs.catalog_shape.bandwidths,
            inputs.catalog_shape.center_step,
        )?,
    };
    if catalog.grid() != dataset.grid() {
        return Err(CliError::Core(bandsel::Error::GridMismatch(format!(
            "catalog grid {:?} differs from dataset grid {:?}",
            catalog.grid(),
            dataset.grid()
        ))));
    }
    Ok((dataset, catalog))
}

fn catalog_config(inputs: &Inputs) -> Value {
    match &inputs.catalog {
        Some(_) => Value::Null,
        None => serde_json::to_value(&inputs.catalog_shape).unwrap_or(Value::Null),
    }
}

fn cmd_gen(a: &GenArgs, run: Run) -> CliResult<()> {
    let config = SyntheticConfig {
        n_classes: a.classes,
        objects_per_class: a.objects_per_class,
        replicates_per_object: a.replicates,
        grid: WavelengthGrid::new(a.grid_start, a.grid_step, a.grid_count)?,
        noise_base: a.noise_base,
        noise_slope: a.noise_slope,
        signature_bumps_per_class: a.bumps_per_class,
        seed: a.seed,
    };
    let dataset = generate_synthetic(&config)?;
    let catalog = generate_catalog(dataset.grid(), &a.catalog_shape.bandwidths, a.catalog_shape.center_step)?;
    save_dataset_csv(&dataset, &a.out)?;
    let mut outputs = vec![a.out.as_path()];
    if let Some(path) = &a.catalog {
        save_catalog_json(&catalog, path)?;
        outputs.push(path.as_path());
    }
    println!(
        "classes {} objects {} replicates {} samples {} filters {}",
        config.n_classes,
        dataset.objects().len(),
        config.replicates_per_object,
        dataset.len(),
        catalog.len()
    );
    let cfg = json!({ "dataset": config, "catalog": a.catalog_shape });
    run.finish(&outputs, cfg, Some(a.seed))
}

/// Max-min angle graph over the representative spectra of each object.
fn angle_graph(dataset: &LabeledDataset, catalog: &FilterCatalog) -> CliResult<bandsel::selection::AngleGraph> {
    let (ids, spectra): (Vec<u64>, Vec<_>) = representative_spectra(dataset).into_iter().unzip();
    Ok(build_adjacency(&build_filter_matrix_with_ids(catalog, &spectra, &ids)?)?)
}

fn cmd_select(a: &SelectArgs, mut run: Run) -> CliResult<()> {
    let (dataset, catalog) = load_inputs(&a.inputs, &mut run)?;
    let direction = SnrDirection::from(a.snr_direction);
    let (doc, seed) = if a.method == MethodArg::Cfbs {
        let base = CfbsConfig::default();
        let (classifier, k_folds, seed) = a.classifier.resolve(base.classifier, base.k_folds, base.seed);
        let config = CfbsConfig {
            snr_th: a.snr_th,
            cvs_th: a.cvs_th,
            n_fbs: a.n,
            classifier,
            k_folds,
            seed,
            snr_direction: direction,
        };
        for w in config.warnings() {
            eprintln!("warning: {w}");
        }
        let sel = cfbs_select(&dataset, &catalog, &config)?;
        (SelectionDocument::from_minimal(&sel, &catalog)?, Some(seed))
    } else {
        let (working, original_ids) = if a.snr_th > 0.0 || direction == SnrDirection::Above {
            let profile = snr_profile(&dataset, &catalog)?;
            let pruned = prune_bands_directed(&catalog, &profile, a.snr_th, direction)?;
            (pruned.catalog, pruned.original_ids)
        } else {
            (catalog.clone(), (0..catalog.len()).collect())
        };
        let graph = angle_graph(&dataset, &working)?;
        let local = match a.method {
            MethodArg::Fbs => fbs_select(&graph, a.n)?,
            MethodArg::Full => full_search_select(&graph, a.n, a.combination_cap)?,
            MethodArg::Uniform => uniform_select(&working, a.n, &graph)?,
            MethodArg::Cfbs => unreachable!(),
        };
        let ids = local.selection.ids().iter().map(|&i| original_ids[i]).collect();
        let result = SelectionResult {
            selection: SelectionVector::new(ids, catalog.len())?,
            ..local
        };
        let config = json!({
            "method": result.method,
            "n": a.n,
            "snr_th": a.snr_th,
            "snr_direction": direction,
            "combination_cap": (a.method == MethodArg::Full).then(|| a.combination_cap.to_string()),
            "catalog": catalog_config(&a.inputs),
        });
        (SelectionDocument::from_result(&result, &catalog, config), None)
    };
    write_text(&a.out, &doc.to_json()?)?;
    println!("{} selected {} of {} filters", a.out.display(), doc.n, catalog.len());
    let config = json!({ "selection": doc.config, "catalog": catalog_config(&a.inputs) });
    run.finish(&[&a.out], config, seed)
}

#[derive(Serialize)]
struct EvaluationReport {
    filter_ids: Vec<usize>,
    n: usize,
    classifier: ClassifierSpec,
    k_folds: usize,
    seed: u64,
    classes: Vec<String>,
    cvs: f64,
    wco: u64,
    fold_accuracies: Vec<f64>,
    confusion: Vec<Vec<u64>>,
    /// The other ensemble kind on the same folds and seed.
    alternate: AlternateScore,
}

#[derive(Serialize)]
struct AlternateScore {
    classifier: ClassifierSpec,
    cvs: f64,
    wco: u64,
}

fn confusion_csv(report: &CvReport, classes: &[String]) -> String {
    let mut out = String::from("true\\predicted");
    for c in classes {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (c, row) in classes.iter().zip(&report.confusion) {
        out.push_str(c);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

fn cmd_evaluate(a: &EvaluateArgs, mut run: Run) -> CliResult<()> {
    let (dataset, catalog) = load_inputs(&a.inputs, &mut run)?;
    run.input(&a.selection)?;
    let doc = SelectionDocument::load(&a.selection)?;
    let selection = doc.selection(&catalog)?;
    // A CFBS document carries the classifier it was selected with.
    let base: CfbsConfig = serde_json::from_value(doc.config.clone()).unwrap_or_default();
    let (spec, k_folds, seed) = a.classifier.resolve(base.classifier, base.k_folds, base.seed);
    let report = evaluate_selection(&selection, &dataset, &catalog, &spec, k_folds, seed)?;
    let mut alt_flags = a.classifier.clone();
    alt_flags.classifier = Some(match spec.kind {
        ClassifierKind::RandomForest => ClassifierArg::Gb,
        ClassifierKind::GradientBoosting => ClassifierArg::Rf,
    });
    let (alt_spec, _, _) = alt_flags.resolve(spec, k_folds, seed);
    let alt = evaluate_selection(&selection, &dataset, &catalog, &alt_spec, k_folds, seed)?;
    let mut classes = dataset.classes().to_vec();
    classes.truncate(report.confusion.len());
    let out = EvaluationReport {
        filter_ids: selection.ids().to_vec(),
        n: selection.len(),
        classifier: spec,
        k_folds,
        seed,
        classes: classes.clone(),
        cvs: report.cvs,
        wco: report.wco,
        fold_accuracies: report.fold_accuracies.clone(),
        confusion: report.confusion.clone(),
        alternate: AlternateScore {
            classifier: alt_spec,
            cvs: alt.cvs,
            wco: alt.wco,
        },
    };
    let mut text = serde_json::to_string_pretty(&out).map_err(bandsel::Error::from)?;
    text.push('\n');
    write_text(&a.out, &text)?;
    let mut outputs = vec![a.out.as_path()];
    if let Some(path) = &a.confusion {
        write_text(path, &confusion_csv(&report, &classes))?;
        outputs.push(path.as_path());
    }
    println!("cvs {} wco {}", report.cvs, report.wco);
    let config = json!({
        "classifier": spec,
        "k_folds": k_folds,
        "catalog": catalog_config(&a.inputs),
    });
    run.finish(&outputs, config, Some(seed))
}

fn cmd_sweep(a: &SweepArgs, mut run: Run) -> CliResult<()> {
    let (dataset, catalog) = load_inputs(&a.inputs, &mut run)?;
    let defaults = CfbsConfig::default();
    let (classifier, k_folds, seed) = a.classifier.resolve(defaults.classifier, defaults.k_folds, defaults.seed);
    let base = CfbsConfig {
        n_fbs: a.n,
        classifier,
        k_folds,
        seed,
        snr_direction: a.snr_direction.into(),
        ..defaults
    };
    let cells = sweep(&dataset, &catalog, &a.snr_th, &a.cvs_th, &base)?;
    let mut bytes = Vec::new();
    write_sweep_csv(&cells, &mut bytes)?;
    fs::write(&a.out, &bytes).map_err(|e| io_error(&a.out, e))?;
    let failed = cells.iter().filter(|c| c.status != "ok").count();
    println!("{} cells, {} failed", cells.len(), failed);
    let config = json!({
        "base": base,
        "snr_th": a.snr_th,
        "cvs_th": a.cvs_th,
        "catalog": catalog_config(&a.inputs),
    });
    run.finish(&[&a.out], config, Some(seed))
}

fn cmd_snr(a: &SnrArgs, mut run: Run) -> CliResult<()> {
    let (dataset, catalog) = load_inputs(&a.inputs, &mut run)?;
    let profile = snr_profile(&dataset, &catalog)?;
    let mut bytes = Vec::new();
    write_snr_csv(&profile, &catalog, &mut bytes)?;
    fs::write(&a.out, &bytes).map_err(|e| io_error(&a.out, e))?;
    let config = json!({ "aggregation": profile.aggregation, "catalog": catalog_config(&a.inputs) });
    run.finish(&[&a.out], config, None)
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("BANDSEL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("error: BANDSEL_THREADS must be a positive integer, got `{value}`\n")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("error: cannot size the thread pool: {e}\n")))
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: Vec<OsString>) -> CliResult<()> {
    let cli = Cli::try_parse_from(&args).map_err(|e| {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(exit::OK);
        }
        CliError::Usage(e.render().to_string())
    })?;
    configure_threads()?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, Run::new("gen", &args)),
        Command::Select(a) => cmd_select(a, Run::new("select", &args)),
        Command::Evaluate(a) => cmd_evaluate(a, Run::new("evaluate", &args)),
        Command::Sweep(a) => cmd_sweep(a, Run::new("sweep", &args)),
        Command::Snr(a) => cmd_snr(a, Run::new("snr", &args)),
    }
}
