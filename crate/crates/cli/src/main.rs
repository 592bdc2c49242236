//! `freshcost`: derive misclassification-cost matrices, evaluate and compare
//! classifiers, simulate sales and run dataset EDA.
//!
//! Exit codes: 0 success, 1 validation or data error, 2 usage error.

mod tables;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use freshcost_core::cost_model::{mcc_cell, mcc_matrix, recommend_action, validate_assumptions};
use freshcost_core::dataset_eda::{run_eda, write_eda_outputs, DEFAULT_CLASSES, DEFAULT_SPLITS};
use freshcost_core::evaluation::{confusion_from_records, evaluate_confusion, MetricsReport};
use freshcost_core::prediction_io::{
    generate_stub, load_assumptions, load_stub_spec, read_predictions, write_predictions, write_report, ReportDocument,
};
use freshcost_core::simulator::{SimItem, Simulator};
use freshcost_core::{BusinessAssumptions, MccMatrix};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "freshcost",
    version,
    about = "Cost-sensitive evaluation of freshness classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SummaryFormat {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the misclassification-cost matrix for a set of assumptions.
    DeriveMcc {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: MatrixFormat,
    },
    /// Metrics and cumulative cost of one prediction file.
    Evaluate {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Write a JSON report document here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rank several prediction files by cumulative cost.
    Compare {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Monte-Carlo check of one cost cell, or of a day of items.
    Simulate {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
        /// Actual and predicted class labels.
        #[arg(
            long,
            num_args = 2,
            value_names = ["ACTUAL", "PRED"],
            required_unless_present = "items",
            conflicts_with = "items",
            requires = "n"
        )]
        cell: Option<Vec<String>>,
        /// Number of simulated items for --cell.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
        /// Prediction file whose (actual, predicted) pairs make up one day.
        #[arg(long)]
        items: Option<PathBuf>,
        /// Repeat the day this many times (with --items).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..), requires = "items")]
        days: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: SummaryFormat,
    },
    /// Class balance and pixel-value histograms of an image dataset.
    Eda {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, num_args = 1.., default_values_t = DEFAULT_CLASSES.map(String::from))]
        classes: Vec<String>,
        #[arg(long, num_args = 1.., default_values_t = DEFAULT_SPLITS.map(String::from))]
        splits: Vec<String>,
        #[arg(long, default_value = "eda-out")]
        out_dir: PathBuf,
        /// Also render hist_<class>.png bar charts.
        #[arg(long)]
        plots: bool,
    },
    /// Check an assumptions document.
    Validate {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
    },
    /// Write a prediction file realizing a confusion matrix exactly.
    GenStub {
        #[arg(long)]
        confusion: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model_id: Option<String>,
    },
    /// Expected-cost-minimizing action for a class probability vector.
    Recommend {
        #[arg(long, env = "FRESHCOST_ASSUMPTIONS")]
        assumptions: PathBuf,
        /// One probability per class, in class order.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::DeriveMcc { assumptions, format } => derive_mcc(&assumptions, format),
        Command::Evaluate {
            assumptions,
            predictions,
            report,
        } => compare(&assumptions, &[predictions], report.as_deref(), true),
        Command::Compare {
            assumptions,
            predictions,
            report,
        } => compare(&assumptions, &predictions, report.as_deref(), false),
        Command::Simulate {
            assumptions,
            cell,
            n,
            items,
            days,
            seed,
            format,
        } => {
            let assumptions = load_assumptions(&assumptions)?;
            match (cell, items) {
                (Some(cell), None) => simulate_cell(
                    assumptions,
                    &cell[0],
                    &cell[1],
                    n.expect("clap requires --n"),
                    seed,
                    format,
                ),
                (None, Some(items)) => simulate_items(assumptions, &items, days, seed, format),
                _ => unreachable!("clap enforces exactly one of --cell and --items"),
            }
        }
        Command::Eda {
            root,
            classes,
            splits,
            out_dir,
            plots,
        } => eda(&root, &classes, &splits, &out_dir, plots),
        Command::Validate { assumptions } => validate(&assumptions),
        Command::GenStub {
            confusion,
            out,
            model_id,
        } => gen_stub(&confusion, &out, model_id),
        Command::Recommend { assumptions, probs } => recommend(&assumptions, &probs),
    }
}

fn derive_mcc(path: &Path, format: MatrixFormat) -> Result<()> {
    let assumptions = load_assumptions(path)?;
    let mcc = mcc_matrix(&assumptions)?;
    match format {
        MatrixFormat::Table => print!("{}", tables::mcc_table(&mcc)),
        MatrixFormat::Json => println!("{}", serde_json::to_string_pretty(&mcc)?),
        MatrixFormat::Csv => print!("{}", tables::mcc_csv(&mcc)),
    }
    Ok(())
}

fn validate(path: &Path) -> Result<()> {
    // load_assumptions already rejects invalid documents with every violation
    let assumptions = load_assumptions(path)?;
    debug_assert!(validate_assumptions(&assumptions).is_empty());
    println!("OK");
    Ok(())
}

fn evaluate_file(mcc: &MccMatrix, path: &Path) -> Result<MetricsReport> {
    let origin = path.display().to_string();
    let set = read_predictions(path)?;
    set.check_classes(&mcc.labels, &origin)?;
    let cm = confusion_from_records(&set.records, &mcc.labels).with_context(|| origin.clone())?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or(origin.clone());
    let model_id = set.resolved_model_id(&fallback);
    evaluate_confusion(&cm, mcc, &model_id).with_context(|| origin)
}

fn compare(assumptions_path: &Path, predictions: &[PathBuf], report: Option<&Path>, detailed: bool) -> Result<()> {
    let assumptions = load_assumptions(assumptions_path)?;
    let mcc = mcc_matrix(&assumptions)?;
    let reports = predictions
        .iter()
        .map(|p| evaluate_file(&mcc, p))
        .collect::<Result<Vec<_>>>()?;
    let doc = ReportDocument::build(&reports, &mcc)?;
    if detailed {
        print!("{}", tables::metrics_detail(&doc.models[0].report));
    } else {
        print!("{}", tables::ranking_table(&doc));
    }
    if let Some(path) = report {
        write_report(&doc, path)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

fn class_index(assumptions: &BusinessAssumptions, label: &str) -> Result<usize> {
    assumptions.class_index(label).ok_or_else(|| {
        anyhow!(
            "unknown class '{label}' (known: {})",
            assumptions.class_names().join(", ")
        )
    })
}

fn simulate_cell(
    assumptions: BusinessAssumptions,
    actual: &str,
    predicted: &str,
    n: u64,
    seed: u64,
    format: SummaryFormat,
) -> Result<()> {
    let (i, j) = (
        class_index(&assumptions, actual)?,
        class_index(&assumptions, predicted)?,
    );
    let analytic = mcc_cell(&assumptions, i, j)?;
    let summary = Simulator::new(assumptions)?.estimate_mcc_empirical(i, j, n, seed)?;
    let label = format!("{actual}|{predicted}");
    match format {
        SummaryFormat::Table => print!("{}", tables::simulation_table(&label, &summary, analytic)),
        SummaryFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "cell": { "actual": actual, "predicted": predicted },
                "analytic_mcc": analytic,
                "within_3_std_errors": tables::within_three_sigma(&summary, analytic),
                "summary": summary,
            }))?
        ),
    }
    Ok(())
}

fn simulate_items(
    assumptions: BusinessAssumptions,
    path: &Path,
    days: u64,
    seed: u64,
    format: SummaryFormat,
) -> Result<()> {
    let set = read_predictions(path)?;
    let items = set
        .records
        .iter()
        .map(|r| {
            Ok(SimItem {
                actual: class_index(&assumptions, &r.actual).with_context(|| format!("item '{}'", r.item_id))?,
                predicted: class_index(&assumptions, &r.predicted).with_context(|| format!("item '{}'", r.item_id))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        bail!("{}: no items to simulate", path.display());
    }
    let mut analytic = 0.0;
    for item in &items {
        analytic += mcc_cell(&assumptions, item.actual, item.predicted)?;
    }
    let sim = Simulator::new(assumptions)?;
    let label = format!("{} ({} items/day, {days} day(s))", path.display(), items.len());
    // one day: per-item regrets; several days: one sample per day
    let (summary, expected) = if days == 1 {
        (sim.simulate_day(&items, seed)?.summary, analytic / items.len() as f64)
    } else {
        (sim.estimate_day_cost(&items, days, seed)?, analytic)
    };
    match format {
        SummaryFormat::Table => print!("{}", tables::simulation_table(&label, &summary, expected)),
        SummaryFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "items": items.len(),
                "days": days,
                "analytic_day_mcc": analytic,
                "analytic_mean": expected,
                "within_3_std_errors": tables::within_three_sigma(&summary, expected),
                "summary": summary,
            }))?
        ),
    }
    Ok(())
}

fn eda(root: &Path, classes: &[String], splits: &[String], out_dir: &Path, plots: bool) -> Result<()> {
    let output = run_eda(root, classes, splits)?;
    let written = write_eda_outputs(&output, out_dir, plots)?;
    print!("{}", tables::eda_table(&output));
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn gen_stub(confusion: &Path, out: &Path, model_id: Option<String>) -> Result<()> {
    let spec = load_stub_spec(confusion)?;
    let model_id = model_id.or(spec.model_id);
    let set = generate_stub(&spec.confusion, model_id.as_deref());
    write_predictions(&set, out)?;
    println!("wrote {} records to {}", set.records.len(), out.display());
    Ok(())
}

fn recommend(path: &Path, probs: &[f64]) -> Result<()> {
    let assumptions = load_assumptions(path)?;
    let r = recommend_action(&assumptions, probs)?;
    print!("{}", tables::recommendation_table(&assumptions, &r));
    Ok(())
}
