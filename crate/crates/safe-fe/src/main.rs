//! Command-line front end: fit, transform, evaluate, and stability runs.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safe_fe::combiner::ScoreKind;
use safe_fe::data::{Dataset, MissingPolicy};
use safe_fe::eval;
use safe_fe::gbdt::{self, GbdtConfig};
use safe_fe::operators::{self, TransformPlan};
use safe_fe::pipeline::{self, Mode, SafeConfig};
use safe_fe::selector::{IvFormula, SelectorConfig};
use safe_fe::Real;

#[derive(Parser)]
#[command(
    name = "safe-fe",
    about = "Automatic feature engineering for binary-labeled tabular data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a feature-generation plan from a training CSV.
    Fit(FitArgs),
    /// Apply a saved plan to a CSV, streaming row by row.
    Transform(TransformArgs),
    /// Compare test AUC of the original features against a plan's features.
    Evaluate(EvaluateArgs),
    /// Fit repeatedly under different seeds and report feature stability.
    Stability(StabilityArgs),
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_iv_formula(s: &str) -> Result<IvFormula, String> {
    match s {
        "standard_log" => Ok(IvFormula::StandardLog),
        "paper_literal" => Ok(IvFormula::PaperLiteral),
        other => Err(format!(
            "unknown IV formula {other:?} (expected standard_log|paper_literal)"
        )),
    }
}

fn parse_score_kind(s: &str) -> Result<ScoreKind, String> {
    match s {
        "gain_ratio" => Ok(ScoreKind::GainRatio),
        "gain" => Ok(ScoreKind::Gain),
        other => Err(format!(
            "unknown score kind {other:?} (expected gain_ratio|gain)"
        )),
    }
}

fn parse_missing_policy(s: &str) -> Result<MissingPolicy, String> {
    match s {
        "reject" => Ok(MissingPolicy::Reject),
        "impute_mean" => Ok(MissingPolicy::ImputeColumnMean),
        other => Err(format!(
            "unknown missing policy {other:?} (expected reject|impute_mean)"
        )),
    }
}

#[derive(Args, Clone)]
struct GbdtArgs {
    /// Boosting rounds.
    #[arg(long, default_value_t = 50)]
    n_trees: usize,
    /// Maximum tree depth.
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    /// Shrinkage applied to each tree.
    #[arg(long, default_value_t = 0.3)]
    learning_rate: Real,
    /// L2 regularization on leaf weights.
    #[arg(long, default_value_t = 1.0)]
    lambda: Real,
    /// Minimum gain required to keep a split.
    #[arg(long, default_value_t = 0.0)]
    min_gain: Real,
    /// Minimum rows on each side of a split.
    #[arg(long, default_value_t = 1)]
    min_child_rows: usize,
}

impl GbdtArgs {
    fn to_config(&self) -> GbdtConfig {
        GbdtConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            reg_lambda: self.lambda,
            min_gain: self.min_gain,
            min_child_rows: self.min_child_rows,
            ..GbdtConfig::default()
        }
    }
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Candidate-combination mode: safe, rand, or imp.
    #[arg(long, default_value = "safe", value_parser = parse_mode)]
    mode: Mode,
    /// Generation/selection iterations.
    #[arg(long, default_value_t = 1)]
    n_iter: usize,
    /// Wall-clock budget in seconds, checked at iteration boundaries.
    #[arg(long)]
    time_budget_secs: Option<Real>,
    /// Combination budget per iteration (default: 2x the feature count).
    #[arg(long)]
    gamma: Option<usize>,
    /// Maximum features per combination.
    #[arg(long, default_value_t = 2)]
    max_arity: usize,
    /// IV threshold; features must score strictly above it.
    #[arg(long, default_value_t = 0.1)]
    alpha: Real,
    /// Equal-frequency bin count for IV.
    #[arg(long, default_value_t = 10)]
    beta: usize,
    /// Absolute Pearson correlation ceiling between kept features.
    #[arg(long, default_value_t = 0.8)]
    theta: Real,
    /// Output feature cap (default: 2x the feature count).
    #[arg(long)]
    max_features: Option<usize>,
    /// IV variant: standard_log or paper_literal.
    #[arg(long, default_value = "standard_log", value_parser = parse_iv_formula)]
    iv_formula: IvFormula,
    /// Row-subsample cap for the correlation stage.
    #[arg(long, default_value_t = 100_000)]
    pearson_row_cap: usize,
    /// Comma-separated operator names to enable.
    #[arg(long, default_value = "add,sub,rsub,mul,div,rdiv")]
    operators: String,
    /// Combination ranking score: gain_ratio or gain.
    #[arg(long, default_value = "gain_ratio", value_parser = parse_score_kind)]
    score_kind: ScoreKind,
    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    gbdt: GbdtArgs,
}

impl PipelineArgs {
    fn to_config(&self, m_original: usize) -> SafeConfig {
        let enabled: HashSet<String> = self
            .operators
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        SafeConfig {
            n_iter: self.n_iter,
            time_budget_secs: self.time_budget_secs,
            gamma: self.gamma.unwrap_or((2 * m_original).max(1)),
            max_arity: self.max_arity,
            gbdt: self.gbdt.to_config(),
            selector: SelectorConfig {
                alpha: self.alpha,
                beta: self.beta,
                theta: self.theta,
                max_features: self.max_features.unwrap_or((2 * m_original).max(1)),
                iv_formula: self.iv_formula,
                pearson_row_cap: self.pearson_row_cap,
            },
            enabled_operators: enabled,
            score_kind: self.score_kind,
            seed: self.seed,
            mode: self.mode,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Training CSV.
    #[arg(long)]
    train: PathBuf,
    /// Validation CSV (defaults to the training data).
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Label column name (binary 0/1).
    #[arg(long)]
    label: String,
    /// How to treat unparseable or non-finite cells.
    #[arg(long, default_value = "reject", value_parser = parse_missing_policy)]
    missing_policy: MissingPolicy,
    /// Directory for psi.json, selection_report.csv, and trace.txt.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct TransformArgs {
    /// Saved plan document.
    #[arg(long)]
    psi: PathBuf,
    /// Input CSV.
    #[arg(long)]
    input: PathBuf,
    /// Label column to copy through, if present.
    #[arg(long)]
    label: Option<String>,
    /// Directory for transformed.csv.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Training CSV.
    #[arg(long)]
    train: PathBuf,
    /// Test CSV.
    #[arg(long)]
    test: PathBuf,
    /// Label column name (binary 0/1).
    #[arg(long)]
    label: String,
    /// Optional plan; when given, a transformed AUC is printed alongside.
    #[arg(long)]
    psi: Option<PathBuf>,
    /// How to treat unparseable or non-finite cells.
    #[arg(long, default_value = "reject", value_parser = parse_missing_policy)]
    missing_policy: MissingPolicy,
    #[command(flatten)]
    gbdt: GbdtArgs,
}

#[derive(Args)]
struct StabilityArgs {
    /// Training CSV.
    #[arg(long)]
    train: PathBuf,
    /// Label column name (binary 0/1).
    #[arg(long)]
    label: String,
    /// Number of fits; seeds run from --seed to --seed + runs - 1.
    #[arg(long)]
    runs: usize,
    /// How to treat unparseable or non-finite cells.
    #[arg(long, default_value = "reject", value_parser = parse_missing_policy)]
    missing_policy: MissingPolicy,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn run_fit(args: &FitArgs) -> Result<(), String> {
    let train = Dataset::load_csv(&args.train, &args.label, args.missing_policy)
        .map_err(|e| e.to_string())?;
    let valid = match &args.valid {
        Some(path) => {
            Dataset::load_csv(path, &args.label, args.missing_policy).map_err(|e| e.to_string())?
        }
        None => train.clone(),
    };
    let cfg = args.pipeline.to_config(train.n_features());
    let (plan, report, trace) = pipeline::run(&train, &valid, &cfg).map_err(|e| e.to_string())?;

    std::fs::create_dir_all(&args.output).map_err(|e| e.to_string())?;
    std::fs::write(args.output.join("psi.json"), plan.serialize()).map_err(|e| e.to_string())?;
    std::fs::write(args.output.join("selection_report.csv"), report.to_csv())
        .map_err(|e| e.to_string())?;
    std::fs::write(args.output.join("trace.txt"), trace.to_text()).map_err(|e| e.to_string())?;
    print!("{}", trace.to_text());
    println!("features={}", plan.features.len());
    Ok(())
}

fn run_transform(args: &TransformArgs) -> Result<(), String> {
    let registry = operators::default_registry();
    let bytes = std::fs::read(&args.psi).map_err(|e| e.to_string())?;
    let plan = TransformPlan::deserialize(&bytes, &registry).map_err(|e| e.to_string())?;

    let mut reader = csv::ReaderBuilder::new()
        .from_path(&args.input)
        .map_err(|e| e.to_string())?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = args
        .label
        .as_ref()
        .and_then(|l| header.iter().position(|h| h == l));

    std::fs::create_dir_all(&args.output).map_err(|e| e.to_string())?;
    let mut writer = csv::Writer::from_path(args.output.join("transformed.csv"))
        .map_err(|e| e.to_string())?;
    let mut out_header = plan.output_names();
    if let (Some(label), Some(_)) = (&args.label, label_idx) {
        out_header.push(label.clone());
    }
    writer.write_record(&out_header).map_err(|e| e.to_string())?;

    let mut values: HashMap<String, Real> = HashMap::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        values.clear();
        for (name, cell) in header.iter().zip(record.iter()) {
            if let Ok(v) = cell.trim().parse::<Real>() {
                if v.is_finite() {
                    values.insert(name.clone(), v);
                }
            }
        }
        let lookup = |name: &str| values.get(name).copied();
        let mut row: Vec<String> = Vec::with_capacity(out_header.len());
        for def in &plan.features {
            let v = def
                .eval_row(&lookup, &registry)
                .map_err(|e| format!("row {}: {e}", row_idx + 1))?;
            row.push(format!("{v}"));
        }
        if let Some(idx) = label_idx {
            row.push(record.get(idx).unwrap_or("").to_string());
        }
        writer.write_record(&row).map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())?;
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<(), String> {
    let train = Dataset::load_csv(&args.train, &args.label, args.missing_policy)
        .map_err(|e| e.to_string())?;
    let test = Dataset::load_csv(&args.test, &args.label, args.missing_policy)
        .map_err(|e| e.to_string())?;
    let cfg = args.gbdt.to_config();

    let orig_model = gbdt::train(&train, None, &cfg).map_err(|e| e.to_string())?;
    let orig_scores = orig_model.predict_margin(&test).map_err(|e| e.to_string())?;
    let orig_auc: Real = eval::auc(&orig_scores, test.labels()).map_err(|e| e.to_string())?;

    match &args.psi {
        Some(path) => {
            let registry = operators::default_registry();
            let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
            let plan =
                TransformPlan::deserialize(&bytes, &registry).map_err(|e| e.to_string())?;
            let train_t =
                operators::apply_plan(&plan, &train, &registry).map_err(|e| e.to_string())?;
            let test_t =
                operators::apply_plan(&plan, &test, &registry).map_err(|e| e.to_string())?;
            let model = gbdt::train(&train_t, None, &cfg).map_err(|e| e.to_string())?;
            let scores = model.predict_margin(&test_t).map_err(|e| e.to_string())?;
            let auc: Real = eval::auc(&scores, test_t.labels()).map_err(|e| e.to_string())?;
            println!("orig_auc={orig_auc:.6} transformed_auc={auc:.6}");
        }
        None => println!("orig_auc={orig_auc:.6}"),
    }
    Ok(())
}

fn run_stability(args: &StabilityArgs) -> Result<(), String> {
    if args.runs < 2 {
        return Err("--runs must be >= 2".into());
    }
    let train = Dataset::load_csv(&args.train, &args.label, args.missing_policy)
        .map_err(|e| e.to_string())?;
    let m = train.n_features();
    let mut runs: Vec<Vec<String>> = Vec::with_capacity(args.runs);
    for i in 0..args.runs {
        let mut cfg = args.pipeline.to_config(m);
        cfg.seed = args.pipeline.seed + i as u64;
        let (plan, _, _) = pipeline::run(&train, &train, &cfg).map_err(|e| e.to_string())?;
        runs.push(plan.output_names());
    }
    let score = eval::stability_jsd(&runs, m).map_err(|e| e.to_string())?;
    println!("stability_jsd={score}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Transform(args) => run_transform(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Stability(args) => run_stability(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
