//! `ensemblepool`: split datasets, pool ensemble predictions, evaluate
//! them, and run desk-scale ensemble experiments.
//!
//! Every command is deterministic given its flags and seeds; all
//! randomness flows from an explicit `--seed` (or the seeds inside an
//! experiment config). Output files are written atomically. Reports are
//! JSON; `--table` adds an aligned plain-text summary on stdout. The
//! `ENSEMBLEPOOL_THREADS` environment variable caps internal parallelism.

mod formats;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ensemblepool_core::metrics::{evaluate, MetricReport};
use ensemblepool_core::poolers::{fit_pooler, pool, PoolerKind};
use ensemblepool_core::sampling::{kfold_split, percentage_split, KFoldSpec, SplitRatios};
use ensemblepool_core::simulate::{run_experiment, EvaluationReport, ExperimentConfig};
use ensemblepool_core::types::{Assignment, LabelVector, PredictionMatrix, SplitAssignment};

use formats::{
    read_labels_csv, read_manifest, read_predictions_csv, read_split, write_json,
    write_predictions_csv, write_roc_csv, PoolerDocument, SplitDocument, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "ensemblepool", version, about = "Ensemble prediction pooling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a labels file into model-train / model-val /
    /// ensemble-train / testing, optionally with a k-fold variant.
    Split(SplitArgs),
    /// Combine the members of a bundle manifest into one prediction file.
    Pool(PoolArgs),
    /// Score a prediction file against ground-truth labels.
    Evaluate(EvaluateArgs),
    /// Run a baseline / augmenting / stacking / bagging experiment from a
    /// config document.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Labels CSV with header `sample_id,label`.
    labels: PathBuf,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Partition fractions `model-train,model-val,ensemble-train,testing`.
    #[arg(long, default_value = "0.65,0.10,0.10,0.15")]
    ratios: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stratify per class (the default protocol).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    stratified: bool,
    /// Also derive k cross-validation fold assignments.
    #[arg(long)]
    kfold: Option<usize>,
}

#[derive(Args)]
struct PoolArgs {
    /// Bundle manifest JSON.
    manifest: PathBuf,
    /// Pooling function, e.g. `mean-unweighted` or `logistic-regression`.
    #[arg(long)]
    pooler: String,
    /// Split JSON providing the ensemble-train partition (required for
    /// fitted poolers).
    #[arg(long)]
    fit_split: Option<PathBuf>,
    /// Output predictions CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predictions CSV.
    predictions: PathBuf,
    /// Labels CSV.
    labels: PathBuf,
    /// Output report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-class `class_<i>_roc.csv` files.
    #[arg(long)]
    roc_dir: Option<PathBuf>,
    /// Print an aligned plain-text summary.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON or TOML, by extension).
    config: PathBuf,
    /// Output report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Print an aligned plain-text summary.
    #[arg(long)]
    table: bool,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ENSEMBLEPOOL_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Split(args) => cmd_split(&args),
        Command::Pool(args) => cmd_pool(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Experiment(args) => cmd_experiment(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn parse_ratios(text: &str) -> Result<SplitRatios> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("--ratios expects four comma-separated fractions, got `{text}`"))?;
    if parts.len() != 4 {
        bail!("--ratios expects four fractions, got {}", parts.len());
    }
    SplitRatios::new(parts[0], parts[1], parts[2], parts[3]).map_err(Into::into)
}

fn partition_counts_table(assignment: &SplitAssignment) -> String {
    let counts = assignment.partition_counts();
    let names = ["model-train", "model-val", "ensemble-train", "testing"];
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(counts)
        .map(|(name, count)| vec![name.to_string(), count.to_string()])
        .collect();
    table::render(&["partition", "samples"], &rows)
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let labels = read_labels_csv(&args.labels)?;
    let ratios = parse_ratios(&args.ratios)?;
    let assignment = percentage_split(&labels, &ratios, args.seed, args.stratified)?;
    print!("{}", partition_counts_table(&assignment));

    let document = match args.kfold {
        None => SplitDocument::four_way(assignment),
        Some(k) => {
            let spec = KFoldSpec::new(k, args.seed)?;
            let folds = kfold_split(&labels, &assignment, &spec)?;
            let mut rows = Vec::new();
            for (i, fold) in folds.iter().enumerate() {
                let mut train = 0usize;
                let mut val = 0usize;
                for (_, a) in fold.iter() {
                    match a {
                        Assignment::Fold { role, .. } => match role {
                            ensemblepool_core::types::FoldRole::FoldTrain => train += 1,
                            ensemblepool_core::types::FoldRole::FoldVal => val += 1,
                        },
                        _ => {}
                    }
                }
                rows.push(vec![format!("fold {i}"), train.to_string(), val.to_string()]);
            }
            print!("{}", table::render(&["assignment", "fold-train", "fold-val"], &rows));
            SplitDocument::kfold(folds)
        }
    };
    write_json(&args.out, &document)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn pooler_json_path(out: &Path) -> PathBuf {
    out.with_extension("pooler.json")
}

fn cmd_pool(args: &PoolArgs) -> Result<()> {
    let kind: PoolerKind = args
        .pooler
        .parse()
        .map_err(|e| anyhow!("{e} (expected one of: {})", all_pooler_names()))?;
    let loaded = read_manifest(&args.manifest)?;
    let bundle = ensemblepool_core::validate_bundle(&loaded.bundle, None)?;

    let pooled = if kind.needs_fitting() {
        let split_path = args.fit_split.as_ref().ok_or_else(|| {
            anyhow!("pooler `{kind}` must be fitted: pass --fit-split with an ensemble-train partition")
        })?;
        let labels = loaded.labels.as_ref().ok_or_else(|| {
            anyhow!("pooler `{kind}` must be fitted: the manifest needs a `labels` entry")
        })?;
        let split_doc = read_split(split_path)?;
        let split = split_doc.primary()?;
        let fit_ids: Vec<String> = bundle
            .sample_ids()
            .iter()
            .filter(|id| matches!(split.get(id), Some(Assignment::EnsembleTrain)))
            .cloned()
            .collect();
        if fit_ids.is_empty() {
            bail!(
                "{}: no ensemble-train samples overlap the bundle",
                split_path.display()
            );
        }
        let fit_bundle = bundle.select(&fit_ids)?;
        let fit_labels = labels.select(&fit_ids)?;
        let pooler = fit_pooler(kind, &fit_bundle, &fit_labels)?;
        let pooled = pool(&pooler, &bundle)?;
        let pooler_path = pooler_json_path(&args.out);
        write_json(
            &pooler_path,
            &PoolerDocument {
                schema_version: SCHEMA_VERSION,
                pooler,
            },
        )?;
        println!("wrote {}", pooler_path.display());
        pooled
    } else {
        use ensemblepool_core::poolers as p;
        match kind {
            PoolerKind::MeanUnweighted => p::pool_mean_unweighted(&bundle)?,
            PoolerKind::MajorityVoteHard => p::pool_majority_vote_hard(&bundle)?,
            PoolerKind::MajorityVoteSoft => p::pool_majority_vote_soft(&bundle)?,
            PoolerKind::GlobalArgmax => p::pool_global_argmax(&bundle)?,
            _ => unreachable!("static kinds covered"),
        }
    };
    write_predictions_csv(&args.out, &pooled, &loaded.class_names)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn all_pooler_names() -> String {
    PoolerKind::ALL
        .iter()
        .map(|k| k.name())
        .collect::<Vec<_>>()
        .join(", ")
}

fn align_labels(predictions: &PredictionMatrix, labels: &LabelVector) -> Result<LabelVector> {
    labels
        .select(predictions.sample_ids())
        .context("aligning labels to the prediction rows")
}

fn report_table(report: &MetricReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .enumerate()
        .map(|(c, m)| {
            vec![
                format!("class {c}{}", if m.degenerate { " *" } else { "" }),
                table::fmt4(m.accuracy),
                table::fmt4(m.f1),
                table::fmt4(m.sensitivity),
                table::fmt4(m.fpr),
                table::fmt4(m.specificity),
                table::fmt_opt4(m.auc),
            ]
        })
        .collect();
    rows.push(vec![
        "macro".to_string(),
        table::fmt4(report.macro_avg.accuracy),
        table::fmt4(report.macro_avg.f1),
        table::fmt4(report.macro_avg.sensitivity),
        table::fmt4(report.macro_avg.fpr),
        table::fmt4(report.macro_avg.specificity),
        table::fmt_opt4(report.macro_avg.auc),
    ]);
    let mut out = table::render(
        &["", "accuracy", "f1", "sensitivity", "fpr", "specificity", "auc"],
        &rows,
    );
    out.push_str(&format!(
        "top-1 error {}  top-3 error {}\n",
        table::fmt4(report.top1_error),
        table::fmt_opt4(report.top3_error),
    ));
    out
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (predictions, _) = read_predictions_csv(&args.predictions)?;
    let labels = read_labels_csv(&args.labels)?;
    let labels = align_labels(&predictions, &labels)?;
    let report = evaluate(&predictions, &labels)?;
    write_json(&args.out, &report)?;
    if let Some(dir) = &args.roc_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        for (c, class) in report.per_class.iter().enumerate() {
            if !class.roc.is_empty() {
                write_roc_csv(&dir.join(format!("class_{c}_roc.csv")), &class.roc)?;
            }
        }
    }
    if args.table {
        print!("{}", report_table(&report));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn read_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn experiment_table(report: &EvaluationReport) -> String {
    let mut rows = Vec::new();
    for entry in &report.baseline {
        rows.push(vec![
            format!("baseline/{}", entry.name),
            table::fmt4(entry.report.macro_avg.accuracy),
            table::fmt4(entry.report.macro_avg.f1),
            table::fmt4(entry.report.macro_avg.sensitivity),
            table::fmt_opt4(entry.report.macro_avg.auc),
        ]);
    }
    for entry in &report.methods {
        rows.push(vec![
            format!("{}/{}", report.scenario, entry.name),
            table::fmt4(entry.report.macro_avg.accuracy),
            table::fmt4(entry.report.macro_avg.f1),
            table::fmt4(entry.report.macro_avg.sensitivity),
            table::fmt_opt4(entry.report.macro_avg.auc),
        ]);
    }
    let mut out = table::render(&["method", "accuracy", "f1", "sensitivity", "auc"], &rows);
    if !report.deltas.is_empty() {
        out.push('\n');
        let delta_rows: Vec<Vec<String>> = report
            .deltas
            .iter()
            .map(|d| {
                vec![
                    d.name.clone(),
                    d.f1_gain_pct
                        .map_or_else(|| "-".into(), |v| format!("{v:+.2}%")),
                    d.accuracy_gain_pct
                        .map_or_else(|| "-".into(), |v| format!("{v:+.2}%")),
                ]
            })
            .collect();
        let caption = format!("vs best baseline ({})", report.baseline_best);
        out.push_str(&table::render(
            &[caption.as_str(), "f1 gain", "accuracy gain"],
            &delta_rows,
        ));
    }
    out
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let config = read_experiment_config(&args.config)?;
    let report = run_experiment(&config)?;
    write_json(&args.out, &report)?;
    if args.table {
        print!("{}", experiment_table(&report));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_parse() {
        assert!(parse_ratios("0.65,0.10,0.10,0.15").is_ok());
        assert!(parse_ratios("0.5,0.5").is_err());
        assert!(parse_ratios("a,b,c,d").is_err());
        assert!(parse_ratios("0.9,0.05,0.04,0.02").is_err());
    }

    #[test]
    fn pooler_json_path_replaces_extension() {
        assert_eq!(
            pooler_json_path(Path::new("out/preds.csv")),
            Path::new("out/preds.pooler.json")
        );
    }
}
