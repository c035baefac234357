//! Command-line pipelines for fairness post-processing.
//!
//! Subcommands: `generate` (synthetic benchmark), `train` and `predict`
//! (baseline forest), `sweep` (fairness/accuracy tradeoff curves),
//! `bound` (moment-estimation sample size), and `evaluate` (soft accuracy
//! and happiness gap of stored predictions).  Every command is
//! deterministic given its flags, and commands that write files leave a
//! manifest alongside them that suffices to re-run the output exactly.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpost_core::baseline::{
    soft_accuracy, split_dataset, train_forest, ForestConfig, ForestModel,
};
use fairpost_core::criteria::{
    equalized_odds_happiness, label_group_rates, overall_accuracy_happiness,
    statistical_parity_happiness,
};
use fairpost_core::data::csvio::{self, CsvFormat};
use fairpost_core::data::synthetic::{generate_synthetic, SyntheticConfig};
use fairpost_core::dataset::Dataset;
use fairpost_core::estimators::{estimate_moments, sample_size_bound, EstimateError};
use fairpost_core::happiness::HappinessSpec;
use fairpost_core::lp::PostProcessor;
use fairpost_core::postprocess::{
    default_alpha_grid, default_epsilon_grid, happiness_gap, sweep, write_curves_csv,
    SweepMode, TradeoffCurve,
};
use serde_json::{json, Value};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fairpost",
    version,
    about = "Fairness post-processing for soft classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic loan benchmark as CSV
    Generate(GenerateArgs),
    /// Train the baseline random forest on a CSV dataset
    Train(TrainArgs),
    /// Attach soft predictions from a trained model to a CSV dataset
    Predict(PredictArgs),
    /// Trace the fairness/accuracy tradeoff of a criterion
    Sweep(SweepArgs),
    /// Print how many samples moment estimation needs
    Bound(BoundArgs),
    /// Report soft accuracy and happiness gap of stored predictions
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of rows
    #[arg(long, default_value_t = 48842, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 50_000.0)]
    income_mean: f64,
    #[arg(long, default_value_t = 1_000.0)]
    income_sd: f64,
    #[arg(long, default_value_t = 500_000.0)]
    loan_mean: f64,
    #[arg(long, default_value_t = 10_000.0)]
    loan_sd: f64,
    /// Amount added to group-1 loan requests after the grant decision
    #[arg(long, default_value_t = 50_000.0)]
    surcharge: f64,
    /// Fraction of applicants in group 0
    #[arg(long, default_value_t = 2.0 / 3.0)]
    group0_fraction: f64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CsvFlags {
    /// Column holding the class label
    #[arg(long, default_value = "y")]
    label_column: String,
    /// Column holding the 0/1 group indicator (default: `z`, then `sex`)
    #[arg(long)]
    group_column: Option<String>,
}

impl CsvFlags {
    fn format(&self) -> CsvFormat {
        CsvFormat {
            label_column: self.label_column.clone(),
            group_column: self.group_column.clone(),
        }
    }
}

#[derive(Args)]
struct ForestFlags {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trees: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    min_leaf: u64,
    /// Feature to withhold from training; repeatable
    #[arg(long = "exclude", value_name = "FEATURE")]
    exclude: Vec<String>,
}

impl ForestFlags {
    fn config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            tree_count: self.trees as usize,
            max_depth: self.max_depth as usize,
            min_leaf: self.min_leaf as usize,
            seed,
            exclude_features: self.exclude.iter().cloned().collect(),
        }
    }

    fn describe(&self, seed: u64) -> Value {
        json!({
            "trees": self.trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "seed": seed,
            "exclude": self.exclude,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data CSV
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    forest: ForestFlags,
    #[command(flatten)]
    csv: CsvFlags,
    /// Output model path (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Data CSV; parsed against the model's schema
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: CsvFlags,
    /// Output CSV with p_* columns appended
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Maximize accuracy under a gap bound eps
    Eps,
    /// Minimize the gap under an accuracy floor alpha
    Alpha,
}

#[derive(Args)]
struct SweepArgs {
    /// Labeled data CSV; a forest is trained on its train split
    #[arg(long, conflicts_with = "predictions")]
    data: Option<PathBuf>,
    /// Labeled data CSV that already carries p_* prediction columns
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// equal-funding | statistical-parity | overall-accuracy |
    /// equalized-odds | expr:<text>
    #[arg(long)]
    criterion: String,
    /// Happiness used to report the gap; defaults to the criterion's
    #[arg(long)]
    measure: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Eps)]
    mode: ModeArg,
    /// Comma-separated constraint values; overrides --grid-count
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    grid_count: u64,
    /// Seed for the split shuffle and forest training
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    forest: ForestFlags,
    #[command(flatten)]
    csv: CsvFlags,
    /// Output prefix for <prefix>_validation.csv, <prefix>_test.csv,
    /// <prefix>.manifest.json
    #[arg(long, default_value = "sweep")]
    out_prefix: String,
}

#[derive(Args)]
struct BoundArgs {
    /// Failure probability, in (0, 1)
    #[arg(long)]
    gamma: f64,
    /// Moment accuracy, > 0
    #[arg(long)]
    delta: f64,
    /// Bound on |happiness|, at least 1
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Happiness dimension
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Label count
    #[arg(long, default_value_t = 2)]
    labels: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Data CSV; must carry p_* columns unless --model is given
    #[arg(long)]
    data: PathBuf,
    /// Optional model to produce predictions on the fly
    #[arg(long)]
    model: Option<PathBuf>,
    /// Report the happiness gap under this criterion
    #[arg(long)]
    criterion: Option<String>,
    #[command(flatten)]
    csv: CsvFlags,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage<E: Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime<E: Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_manifest(for_output: &Path, manifest: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(runtime)?;
    std::fs::write(manifest_path(for_output), text + "\n").map_err(runtime)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let cfg = SyntheticConfig {
        count: args.count as usize,
        seed: args.seed,
        income_mean: args.income_mean,
        income_sd: args.income_sd,
        base_loan_mean: args.loan_mean,
        base_loan_sd: args.loan_sd,
        group1_surcharge: args.surcharge,
        group0_fraction: args.group0_fraction,
    };
    cfg.validate().map_err(usage)?;
    let d = generate_synthetic(&cfg).map_err(runtime)?;
    // The sex feature carries the group indicator, so no z column.
    csvio::write_csv_file(&d, &args.out, None).map_err(runtime)?;
    write_manifest(
        &args.out,
        &json!({
            "command": "generate",
            "config": {
                "count": cfg.count,
                "seed": cfg.seed,
                "income_mean": cfg.income_mean,
                "income_sd": cfg.income_sd,
                "loan_mean": cfg.base_loan_mean,
                "loan_sd": cfg.base_loan_sd,
                "surcharge": cfg.group1_surcharge,
                "group0_fraction": cfg.group0_fraction,
            },
            "outputs": [args.out],
            "tool": tool_stamp(),
        }),
    )
}

fn tool_stamp() -> Value {
    json!({ "name": "fairpost", "version": env!("CARGO_PKG_VERSION") })
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let d = csvio::load_csv_inferred(&args.data, &args.csv.format()).map_err(runtime)?;
    let cfg = args.forest.config(args.seed);
    let model = train_forest(&d, &cfg).map_err(runtime)?;
    model.save(&args.out).map_err(runtime)?;
    write_manifest(
        &args.out,
        &json!({
            "command": "train",
            "config": {
                "data": args.data,
                "forest": args.forest.describe(args.seed),
                "label_column": args.csv.label_column,
                "group_column": args.csv.group_column,
            },
            "outputs": [args.out],
            "tool": tool_stamp(),
        }),
    )
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let model = ForestModel::load(&args.model).map_err(runtime)?;
    let format = args.csv.format();
    let d = csvio::load_csv(&args.data, model.schema(), model.label_space(), &format)
        .map_err(runtime)?;
    let scored = model.predict_dataset(&d).map_err(runtime)?;
    let header = csvio::read_header(&args.data).map_err(runtime)?;
    let group = format.resolve_group(&header).map_err(runtime)?;
    // A group column that doubles as a feature is already written; only a
    // bare `z` column needs to be carried over explicitly.
    let group_column = if group == "z" { Some("z") } else { None };
    let file = std::fs::File::create(&args.out).map_err(runtime)?;
    csvio::write_csv(&scored, std::io::BufWriter::new(file), group_column)
        .map_err(runtime)?;
    write_manifest(
        &args.out,
        &json!({
            "command": "predict",
            "config": {
                "model": args.model,
                "data": args.data,
                "label_column": args.csv.label_column,
                "group_column": args.csv.group_column,
            },
            "outputs": [args.out],
            "tool": tool_stamp(),
        }),
    )
}

fn cmd_bound(args: BoundArgs) -> Result<(), CliError> {
    let d = sample_size_bound(args.gamma, args.delta, args.c, args.n, args.labels)
        .map_err(|e| match e {
            EstimateError::ParamOutOfRange(_) => usage(e),
            other => runtime(other),
        })?;
    println!("{d}");
    Ok(())
}

const CRITERION_NAMES: &str =
    "equal-funding, statistical-parity, overall-accuracy, equalized-odds, expr:<text>";

/// Builds the happiness for a criterion name.  Equalized-odds weights come
/// from the label rates of `d`, so the same dataset must be used when the
/// spec is shared across moment estimations.
fn criterion_spec(name: &str, d: &Dataset) -> Result<HappinessSpec, CliError> {
    match name {
        "equal-funding" => HappinessSpec::parse(&["yhat * loan_requested"], d.schema())
            .map_err(|e| {
                CliError::Runtime(format!("equal-funding needs a loan_requested column: {e}"))
            }),
        "statistical-parity" => Ok(statistical_parity_happiness(d.label_space())),
        "overall-accuracy" => Ok(overall_accuracy_happiness()),
        "equalized-odds" => {
            let rates = label_group_rates(d).map_err(runtime)?;
            equalized_odds_happiness(d.label_space(), &rates).map_err(runtime)
        }
        other => match other.strip_prefix("expr:") {
            Some(text) => {
                let parts: Vec<&str> = text.split(';').map(str::trim).collect();
                HappinessSpec::parse(&parts, d.schema())
                    .map_err(|e| CliError::Usage(format!("bad expression: {e}")))
            }
            None => Err(CliError::Usage(format!(
                "unknown criterion `{other}`; valid names: {CRITERION_NAMES}"
            ))),
        },
    }
}

fn parse_grid(text: &str, mode: ModeArg) -> Result<Vec<f64>, CliError> {
    let mut grid = Vec::new();
    for part in text.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("grid value `{part}` is not a number")))?;
        let ok = match mode {
            ModeArg::Eps => v >= 0.0,
            ModeArg::Alpha => (0.0..=1.0).contains(&v),
        };
        if !ok {
            return Err(CliError::Usage(format!(
                "grid value {v} is out of range for --mode {}",
                match mode {
                    ModeArg::Eps => "eps",
                    ModeArg::Alpha => "alpha",
                }
            )));
        }
        grid.push(v);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage("grid values must be sorted ascending".into()));
    }
    if grid.is_empty() {
        return Err(CliError::Usage("grid is empty".into()));
    }
    Ok(grid)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let source = args
        .data
        .as_ref()
        .or(args.predictions.as_ref())
        .ok_or_else(|| CliError::Usage("either --data or --predictions is required".into()))?
        .clone();
    let format = args.csv.format();
    let d = csvio::load_csv_inferred(&source, &format).map_err(runtime)?;
    if args.predictions.is_some() && !d.has_predictions() {
        return Err(CliError::Runtime(format!(
            "{} has no p_* prediction columns",
            source.display()
        )));
    }

    let (train_d, mut val_d, mut test_d) = split_dataset(&d, args.seed).map_err(runtime)?;
    let trained = if d.has_predictions() {
        None
    } else {
        let model = train_forest(&train_d, &args.forest.config(args.seed)).map_err(runtime)?;
        val_d = model.predict_dataset(&val_d).map_err(runtime)?;
        test_d = model.predict_dataset(&test_d).map_err(runtime)?;
        Some(model)
    };
    let baseline_test_accuracy = soft_accuracy(&test_d);

    let constraint = criterion_spec(&args.criterion, &val_d)?;
    let measure = match &args.measure {
        Some(name) if name != &args.criterion => Some(criterion_spec(name, &val_d)?),
        _ => None,
    };
    let measure_ref = measure.as_ref().unwrap_or(&constraint);

    let m_fit = estimate_moments(&val_d, &constraint).map_err(runtime)?;
    let m_val = estimate_moments(&val_d, measure_ref).map_err(runtime)?;
    let m_test = estimate_moments(&test_d, measure_ref).map_err(runtime)?;

    let mode = match args.mode {
        ModeArg::Eps => SweepMode::Epsilon,
        ModeArg::Alpha => SweepMode::Alpha,
    };
    let grid = match &args.grid {
        Some(text) => parse_grid(text, args.mode)?,
        None => match mode {
            SweepMode::Epsilon => default_epsilon_grid(&m_fit, args.grid_count as usize),
            SweepMode::Alpha => default_alpha_grid(&m_fit, args.grid_count as usize),
        },
    };

    let (val_curve, test_curve) =
        sweep(&m_fit, &m_val, &m_test, &grid, mode).map_err(runtime)?;

    let val_path = PathBuf::from(format!("{}_validation.csv", args.out_prefix));
    let test_path = PathBuf::from(format!("{}_test.csv", args.out_prefix));
    write_curve_file(&val_path, &val_curve)?;
    write_curve_file(&test_path, &test_curve)?;

    let manifest_file = PathBuf::from(format!("{}.manifest.json", args.out_prefix));
    let manifest = json!({
        "command": "sweep",
        "config": {
            "source": source,
            "external_predictions": trained.is_none(),
            "criterion": args.criterion,
            "measure": args.measure.as_deref().unwrap_or(&args.criterion),
            "mode": match args.mode { ModeArg::Eps => "eps", ModeArg::Alpha => "alpha" },
            "grid": grid,
            "seed": args.seed,
            "forest": if trained.is_some() { args.forest.describe(args.seed) } else { Value::Null },
            "label_column": args.csv.label_column,
            "group_column": args.csv.group_column,
        },
        "split_sizes": [train_d.len(), val_d.len(), test_d.len()],
        "baseline_test_soft_accuracy": baseline_test_accuracy,
        "outputs": [&val_path, &test_path],
        "tool": tool_stamp(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
    std::fs::write(&manifest_file, text + "\n").map_err(runtime)?;
    Ok(())
}

fn write_curve_file(path: &Path, curve: &TradeoffCurve) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(runtime)?;
    write_curves_csv(std::io::BufWriter::new(file), &[curve]).map_err(runtime)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let format = args.csv.format();
    let d = match &args.model {
        Some(model_path) => {
            let model = ForestModel::load(model_path).map_err(runtime)?;
            let d = csvio::load_csv(&args.data, model.schema(), model.label_space(), &format)
                .map_err(runtime)?;
            model.predict_dataset(&d).map_err(runtime)?
        }
        None => {
            let d = csvio::load_csv_inferred(&args.data, &format).map_err(runtime)?;
            if !d.has_predictions() {
                return Err(CliError::Runtime(format!(
                    "{} has no p_* columns; pass --model to score it",
                    args.data.display()
                )));
            }
            d
        }
    };

    let accuracy = soft_accuracy(&d).expect("predictions were just checked");
    let mut report = json!({ "soft_accuracy": accuracy });
    if let Some(name) = &args.criterion {
        let spec = criterion_spec(name, &d)?;
        let m = estimate_moments(&d, &spec).map_err(runtime)?;
        let gap = happiness_gap(&PostProcessor::identity(d.label_space().len()), &m);
        let gap_inf = gap.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        report["criterion"] = json!(name);
        report["gap"] = json!(gap);
        report["gap_inf"] = json!(gap_inf);
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    Ok(())
}
