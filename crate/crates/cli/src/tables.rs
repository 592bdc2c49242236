//! Human-readable output. Currency in tables uses one decimal (cells) or whole
//! dollars (totals), rounded half away from zero; JSON keeps full precision.

use freshcost_core::cost_model::{display_one_decimal, display_whole_dollars, Recommendation};
use freshcost_core::dataset_eda::EdaOutput;
use freshcost_core::evaluation::MetricsReport;
use freshcost_core::prediction_io::ReportDocument;
use freshcost_core::simulator::SimSummary;
use freshcost_core::{BusinessAssumptions, MccMatrix};
use std::fmt::Write;

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn grid<F: Fn(usize, usize) -> String>(corner: &str, labels: &[String], cell: F) -> String {
    let k = labels.len();
    let body: Vec<Vec<String>> = (0..k).map(|i| (0..k).map(|j| cell(i, j)).collect()).collect();
    let first = labels.iter().map(String::len).chain([corner.len()]).max().unwrap_or(0);
    let width = body
        .iter()
        .flatten()
        .map(String::len)
        .chain(labels.iter().map(String::len))
        .max()
        .unwrap_or(0);
    let mut out = format!("{corner:<first$}");
    for label in labels {
        write!(out, "  {label:>width$}").unwrap();
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(&body) {
        write!(out, "{label:<first$}").unwrap();
        for value in row {
            write!(out, "  {value:>width$}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn mcc_table(mcc: &MccMatrix) -> String {
    grid("actual\\pred", &mcc.labels, |i, j| display_one_decimal(mcc.get(i, j)))
}

pub fn mcc_csv(mcc: &MccMatrix) -> String {
    let mut out = String::from("actual");
    for label in &mcc.labels {
        write!(out, ",{label}").unwrap();
    }
    out.push('\n');
    for (label, row) in mcc.labels.iter().zip(&mcc.values) {
        out.push_str(label);
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn metrics_detail(r: &MetricsReport) -> String {
    let mut out = String::new();
    writeln!(out, "model            {}", r.model_id).unwrap();
    writeln!(out, "items            {}", r.total).unwrap();
    writeln!(out, "accuracy         {}", percent(r.accuracy)).unwrap();
    writeln!(out, "macro precision  {}", percent(r.macro_precision)).unwrap();
    writeln!(out, "macro recall     {}", percent(r.macro_recall)).unwrap();
    writeln!(
        out,
        "cumulative MCC   {} ({})",
        display_whole_dollars(r.cumulative_mcc),
        display_one_decimal(r.cumulative_mcc)
    )
    .unwrap();

    out.push_str("\nper class\n");
    let width = r.per_class.iter().map(|c| c.label.len()).max().unwrap_or(5).max(5);
    writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>7}  {:>9}",
        "class", "precision", "recall", "support", "predicted"
    )
    .unwrap();
    for c in &r.per_class {
        writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>7}  {:>9}",
            c.label,
            percent(c.precision),
            percent(c.recall),
            c.support,
            c.predicted
        )
        .unwrap();
    }

    out.push_str("\nconfusion (rows actual, columns predicted)\n");
    let cm = &r.confusion;
    out.push_str(&grid("actual\\pred", &cm.labels, |i, j| cm.counts[i][j].to_string()));

    out.push_str("\nMCC contributions\n");
    out.push_str(&grid("actual\\pred", &cm.labels, |i, j| {
        display_one_decimal(r.per_cell_mcc_contributions[i][j])
    }));

    for flag in &r.flags {
        writeln!(out, "note: {flag}").unwrap();
    }
    out
}

pub fn ranking_table(doc: &ReportDocument) -> String {
    let width = doc
        .models
        .iter()
        .map(|m| m.report.model_id.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!(
        "{:>4}  {:<width$}  {:>9}  {:>12}  {:>12}\n",
        "rank", "model", "accuracy", "MCC", "MCC (exact)"
    );
    for m in &doc.models {
        writeln!(
            out,
            "{:>4}  {:<width$}  {:>9}  {:>12}  {:>12}",
            m.rank,
            m.report.model_id,
            percent(m.report.accuracy),
            display_whole_dollars(m.report.cumulative_mcc),
            display_one_decimal(m.report.cumulative_mcc)
        )
        .unwrap();
    }
    out
}

pub fn within_three_sigma(summary: &SimSummary, expected: f64) -> bool {
    (summary.mean_realized_regret - expected).abs() <= 3.0 * summary.std_error
}

pub fn simulation_table(label: &str, s: &SimSummary, expected: f64) -> String {
    let z = if s.std_error > 0.0 {
        format!("{:.3}", (s.mean_realized_regret - expected) / s.std_error)
    } else {
        "-".to_string()
    };
    let mut out = String::new();
    writeln!(out, "simulated        {label}").unwrap();
    writeln!(out, "samples          {}", s.n).unwrap();
    writeln!(out, "seed             {}", s.seed).unwrap();
    writeln!(out, "mean regret      {:.4}", s.mean_realized_regret).unwrap();
    writeln!(out, "std error        {:.4}", s.std_error).unwrap();
    writeln!(out, "analytic         {expected:.4}").unwrap();
    writeln!(out, "z                {z}").unwrap();
    writeln!(
        out,
        "within 3 sigma   {}",
        if within_three_sigma(s, expected) { "yes" } else { "no" }
    )
    .unwrap();
    writeln!(out, "total regret     {:.2}", s.total_realized_regret).unwrap();
    writeln!(out, "total revenue    {:.2}", s.total_revenue).unwrap();
    writeln!(out, "purchases        {}", s.purchase_count).unwrap();
    writeln!(out, "incidents        {}", s.incident_count).unwrap();
    out
}

pub fn eda_table(output: &EdaOutput) -> String {
    let m = &output.manifest;
    let mut out = format!("dataset {}\n", m.root);
    for split in &m.splits {
        if split.missing {
            writeln!(out, "split {}: missing", split.name).unwrap();
            continue;
        }
        writeln!(out, "split {}: {} images", split.name, split.total()).unwrap();
        for c in &split.classes {
            let note = if c.missing { " (folder missing)" } else { "" };
            writeln!(out, "  {:<12} {:>6}{note}", c.class, c.count).unwrap();
        }
        for dir in &split.unknown_dirs {
            writeln!(out, "  unknown folder '{dir}' ignored").unwrap();
        }
    }
    if !m.dimensions.is_empty() {
        let dims: Vec<String> = m.dimensions.iter().map(|(d, n)| format!("{d} ×{n}")).collect();
        writeln!(out, "image sizes: {}", dims.join(", ")).unwrap();
    }
    out.push_str("\nclass         share    images   mean pixel   >128\n");
    for (summary, (_, share)) in output.report.classes.iter().zip(&output.balance) {
        writeln!(
            out,
            "{:<12} {:>6}  {:>8}  {:>11.2}  {:>6}",
            summary.class,
            percent(*share),
            summary.images,
            summary.mean_pixel_value,
            percent(summary.mass_above_128)
        )
        .unwrap();
    }
    for issue in &m.issues {
        writeln!(out, "skipped {}: {}", issue.path, issue.message).unwrap();
    }
    out
}

pub fn recommendation_table(assumptions: &BusinessAssumptions, r: &Recommendation) -> String {
    let width = assumptions
        .actions
        .iter()
        .map(|a| a.name.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = format!("{:<width$}  {:>14}\n", "action", "expected cost");
    for (action, cost) in assumptions.actions.iter().zip(&r.expected_costs) {
        let mark = if action.name == r.action_name {
            "  <- recommended"
        } else {
            ""
        };
        writeln!(out, "{:<width$}  {:>14.4}{mark}", action.name, cost).unwrap();
    }
    out
}
