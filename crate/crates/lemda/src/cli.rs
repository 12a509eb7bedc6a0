//! Command-line workflow: `synth`, `fit`, `transform`, `bench`, `report`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or numeric
//! errors. All file outputs land under the given `--out` path. When no
//! seed flag is given, `LEMDA_SEED` is consulted before falling back to 42.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    load_csv, split_folds, split_folds_blocks, write_csv, write_csv_to, write_schema, Dataset,
    LabelMap, Schema,
};
use crate::eval::{render_table, run_bench, BenchReport, EvalConfig, Method, ModelKind};
use crate::mlp::MlpConfig;
use crate::pipeline::{LemdaConfig, LemdaPipeline};
use crate::synth::{generate_dataset, SynthConfig};
use crate::{Error, Result};

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "lemda",
    version,
    about = "Feature engineering and IDS benchmark toolkit for flow datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled flow dataset (CSV + schema sidecar)
    Synth(SynthArgs),
    /// Fit a feature-engineering pipeline and persist it
    Fit(FitArgs),
    /// Apply a persisted pipeline to a dataset
    Transform(TransformArgs),
    /// Run the method x model benchmark matrix with k-fold cross-validation
    Bench(BenchArgs),
    /// Re-render a benchmark report JSON as a text table
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Rows to generate
    #[arg(long, default_value_t = 20_000)]
    rows: usize,
    /// Fraction of attack rows
    #[arg(long = "attack-frac", default_value_t = 0.125)]
    attack_frac: f64,
    /// Distinct values of the flag-like categorical column
    #[arg(long, default_value_t = 24)]
    cardinality: usize,
    /// Attack concentration in dedicated category values (0..1)
    #[arg(long, default_value_t = 0.9)]
    signal: f64,
    /// Pure-noise numeric columns
    #[arg(long = "noise-features", default_value_t = 5)]
    noise_features: usize,
    /// Mean attack burst length
    #[arg(long = "burst-len", default_value_t = 20.0)]
    burst_len: f64,
    /// RNG seed (falls back to LEMDA_SEED, then 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (receives dataset.csv and dataset.schema)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV file
    #[arg(long)]
    data: PathBuf,
    /// Schema sidecar (defaults to the data path with a .schema extension)
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Label string marking normal rows
    #[arg(long = "label-normal", default_value = "0")]
    label_normal: String,
    /// Label string marking attack rows
    #[arg(long = "label-attack", default_value = "1")]
    label_attack: String,
}

impl DataArgs {
    fn schema_path(&self) -> PathBuf {
        self.schema
            .clone()
            .unwrap_or_else(|| self.data.with_extension("schema"))
    }

    fn label_map(&self) -> LabelMap {
        LabelMap::new(&self.label_normal, &self.label_attack)
    }

    /// Load, drop identifier columns, and intern categoricals.
    fn load(&self) -> Result<Dataset> {
        let schema = Schema::load(self.schema_path())?;
        let d = load_csv(&self.data, &schema, &self.label_map())?;
        Ok(d.drop_identifiers().encode_categories())
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Features kept by MDA selection
    #[arg(long = "k-features", default_value_t = 5)]
    k_features: usize,
    /// WEDF/SF decay factor in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    /// Enable the SF add-on (requires a categorical top feature)
    #[arg(long)]
    sf: bool,
    /// SF scores suspicious rows b^0 = 1 instead of b^1
    #[arg(long = "sf-peak-one")]
    sf_peak_one: bool,
    /// Permutations averaged per (feature, tree)
    #[arg(long = "mda-repeats", default_value_t = 3)]
    mda_repeats: usize,
    /// Trees in the importance forest
    #[arg(long = "importance-trees", default_value_t = 100)]
    importance_trees: usize,
    /// RNG seed (falls back to LEMDA_SEED, then 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Output pipeline file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Fitted pipeline file
    #[arg(long)]
    pipeline: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated methods: base, pca, mda, lemda
    #[arg(long, value_delimiter = ',', default_value = "base,pca,mda,lemda")]
    methods: Vec<String>,
    /// Comma-separated models: dt, rf, mlp
    #[arg(long, value_delimiter = ',', default_value = "dt,rf,mlp")]
    models: Vec<String>,
    /// Cross-validation folds
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Features kept by MDA/LEMDA selection
    #[arg(long = "k-features", default_value_t = 5)]
    k_features: usize,
    /// WEDF/SF decay factor
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    /// Enable SF (switches fold planning to contiguous blocks)
    #[arg(long)]
    sf: bool,
    /// SF scores suspicious rows b^0 = 1 instead of b^1
    #[arg(long = "sf-peak-one")]
    sf_peak_one: bool,
    /// PCA cumulative explained-variance threshold
    #[arg(long = "pca-threshold", default_value_t = 0.95)]
    pca_threshold: f64,
    /// Permutations averaged per (feature, tree)
    #[arg(long = "mda-repeats", default_value_t = 3)]
    mda_repeats: usize,
    /// Trees in the importance forest
    #[arg(long = "importance-trees", default_value_t = 100)]
    importance_trees: usize,
    /// Trees in the RF evaluation model
    #[arg(long = "rf-trees", default_value_t = 100)]
    rf_trees: usize,
    /// MLP training epochs
    #[arg(long = "mlp-epochs", default_value_t = 20)]
    mlp_epochs: usize,
    /// MLP mini-batch size
    #[arg(long = "mlp-batch", default_value_t = 1000)]
    mlp_batch: usize,
    /// MLP Adam learning rate
    #[arg(long = "mlp-lr", default_value_t = 1e-3)]
    mlp_lr: f64,
    /// Cap on worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// RNG seed (falls back to LEMDA_SEED, then 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (receives report.json and table.txt)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Benchmark report JSON
    #[arg(long)]
    json: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn seed_or_env(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("LEMDA_SEED") {
        Ok(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("LEMDA_SEED `{raw}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Parse and execute; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn execute(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Fit(args) => fit(args),
        Command::Transform(args) => transform(args),
        Command::Bench(args) => bench(args),
        Command::Report(args) => report(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn synth(args: SynthArgs) -> std::result::Result<(), Failure> {
    let cfg = SynthConfig {
        rows: args.rows,
        attack_fraction: args.attack_frac,
        cardinality: args.cardinality,
        signal_strength: args.signal,
        noise_features: args.noise_features,
        mean_burst_len: args.burst_len,
        seed: seed_or_env(args.seed)?,
    };
    let d = generate_dataset(&cfg)?;
    ensure_dir(&args.out)?;
    let csv_path = args.out.join("dataset.csv");
    let schema_path = args.out.join("dataset.schema");
    write_csv(&d, &csv_path, &LabelMap::default())?;
    write_schema(&d.schema(), &schema_path)?;
    println!(
        "wrote {} rows ({} attacks) to {} and {}",
        d.n_rows(),
        d.attack_count(),
        csv_path.display(),
        schema_path.display()
    );
    Ok(())
}

fn fit(args: FitArgs) -> std::result::Result<(), Failure> {
    let d = args.data.load()?;
    let cfg = LemdaConfig {
        k: args.k_features,
        b: args.b,
        sf_enabled: args.sf,
        sf_peak_at_one: args.sf_peak_one,
        seed: seed_or_env(args.seed)?,
        mda_repeats: args.mda_repeats,
        importance_trees: args.importance_trees,
    };
    let pipeline = LemdaPipeline::fit(&d, &cfg)?;
    pipeline.save(&args.out)?;
    println!(
        "selected [{}], dictionary over `{}` with {} entries -> {}",
        pipeline.selected.join(", "),
        pipeline.most_informative(),
        pipeline.dictionary.entries.len(),
        args.out.display()
    );
    Ok(())
}

fn transform(args: TransformArgs) -> std::result::Result<(), Failure> {
    let pipeline = LemdaPipeline::load(&args.pipeline)?;
    let d = args.data.load()?;
    let out = pipeline.transform(&d)?;
    match &args.out {
        Some(path) => {
            write_csv(&out, path, &args.data.label_map())?;
            println!(
                "wrote {} rows x {} feature columns to {}",
                out.n_rows(),
                out.feature_names().len(),
                path.display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            write_csv_to(&out, &mut stdout.lock(), &args.data.label_map())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> std::result::Result<(), Failure> {
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<_>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let models: Vec<ModelKind> = args
        .models
        .iter()
        .map(|m| ModelKind::parse(m))
        .collect::<Result<_>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(jobs) = args.jobs {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let seed = seed_or_env(args.seed)?;

    let d = args.data.load()?;
    let dataset_id = args
        .data
        .data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    // SF reads row order, so its folds must be contiguous blocks.
    let plan = if args.sf {
        split_folds_blocks(&d, args.k, seed)?
    } else {
        split_folds(&d, args.k, seed)?
    };

    let cfg = EvalConfig {
        dataset_id,
        seed,
        k_features: args.k_features,
        b: args.b,
        sf_enabled: args.sf,
        sf_peak_at_one: args.sf_peak_one,
        pca_threshold: args.pca_threshold,
        mda_repeats: args.mda_repeats,
        importance_trees: args.importance_trees,
        rf_trees: args.rf_trees,
        mlp: MlpConfig {
            epochs: args.mlp_epochs,
            batch_size: args.mlp_batch,
            learning_rate: args.mlp_lr,
            seed,
            ..Default::default()
        },
        ..Default::default()
    };

    let reports = run_bench(&d, &methods, &models, &plan, &cfg)?;
    let bench_report = BenchReport {
        config: serde_json::json!({
            "data": args.data.data.display().to_string(),
            "schema": args.data.schema_path().display().to_string(),
            "label_normal": args.data.label_normal,
            "label_attack": args.data.label_attack,
            "methods": methods,
            "models": models,
            "k_folds": args.k,
            "fold_mode": plan.mode,
            "eval": &cfg,
        }),
        reports,
    };

    ensure_dir(&args.out)?;
    let json_path = args.out.join("report.json");
    let table_path = args.out.join("table.txt");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&bench_report).map_err(Error::from)?,
    )
    .map_err(|e| Error::io(&json_path, e))?;
    let table = render_table(&bench_report.reports);
    std::fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    print!("{table}");
    println!("wrote {} and {}", json_path.display(), table_path.display());
    Ok(())
}

fn report(args: ReportArgs) -> std::result::Result<(), Failure> {
    let text = std::fs::read_to_string(&args.json).map_err(|e| Error::io(&args.json, e))?;
    let bench_report: BenchReport = serde_json::from_str(&text).map_err(Error::from)?;
    let table = render_table(&bench_report.reports);
    match &args.out {
        Some(path) => std::fs::write(path, &table).map_err(|e| Error::io(path, e))?,
        None => print!("{table}"),
    }
    Ok(())
}
