//! Confusion matrices, classification metrics and cumulative misclassification
//! cost, plus ranking of competing models by cost.

use crate::cost_model::{mcc_matrix, BusinessAssumptions, CostModelError, MccMatrix};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use thiserror::Error;

/// Absolute tolerance used when re-checking report identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("record '{item_id}': unknown {field} label '{label}'")]
    UnknownLabel {
        item_id: String,
        field: &'static str,
        label: String,
    },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no reports to rank")]
    NoReports,
    #[error("report for '{model_id}' is inconsistent: {message}")]
    Inconsistent { model_id: String, message: String },
    #[error(transparent)]
    CostModel(#[from] CostModelError),
}

/// One classifier output for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub item_id: String,
    pub actual: String,
    pub predicted: String,
    #[serde(default, rename = "probs", skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

/// Counts with rows = actual class and columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.dim()).map(|i| self.counts[i][i]).sum()
    }

    /// Checks the counts form a square matrix matching the labels.
    pub fn check_shape(&self) -> Result<(), EvalError> {
        let k = self.dim();
        if self.counts.len() != k || self.counts.iter().any(|row| row.len() != k) {
            return Err(EvalError::DimensionMismatch(format!(
                "confusion counts must be {k}x{k} to match the labels"
            )));
        }
        Ok(())
    }

    /// Element-wise sum of two matrices over the same labels.
    pub fn merged(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix, EvalError> {
        if self.labels != other.labels {
            return Err(EvalError::DimensionMismatch(format!(
                "labels {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(ConfusionMatrix {
            labels: self.labels.clone(),
            counts,
        })
    }
}

pub fn confusion_from_records(records: &[PredictionRecord], labels: &[String]) -> Result<ConfusionMatrix, EvalError> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let lookup = |record: &PredictionRecord, field: &'static str, label: &str| {
        index.get(label).copied().ok_or_else(|| EvalError::UnknownLabel {
            item_id: record.item_id.clone(),
            field,
            label: label.to_string(),
        })
    };
    let mut cm = ConfusionMatrix::zeros(labels.to_vec());
    for record in records {
        let i = lookup(record, "actual", &record.actual)?;
        let j = lookup(record, "predicted", &record.predicted)?;
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(cm.trace() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    /// Items whose actual class is this one (row sum).
    pub support: u64,
    /// Items predicted as this class (column sum).
    pub predicted: u64,
}

/// Per-class precision/recall. A zero denominator yields 0 and a flag.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<(Vec<ClassMetrics>, Vec<String>), EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = cm.dim();
    let mut flags = Vec::new();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let support: u64 = cm.counts[c].iter().sum();
        let predicted: u64 = (0..k).map(|r| cm.counts[r][c]).sum();
        let precision = if predicted == 0 {
            flags.push(format!(
                "class '{}' was never predicted; precision counted as 0",
                cm.labels[c]
            ));
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if support == 0 {
            flags.push(format!(
                "class '{}' has no actual items; recall counted as 0",
                cm.labels[c]
            ));
            0.0
        } else {
            tp as f64 / support as f64
        };
        out.push(ClassMetrics {
            label: cm.labels[c].clone(),
            precision,
            recall,
            support,
            predicted,
        });
    }
    Ok((out, flags))
}

pub fn macro_precision(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let (per_class, _) = per_class_metrics(cm)?;
    Ok(per_class.iter().map(|c| c.precision).sum::<f64>() / per_class.len() as f64)
}

pub fn macro_recall(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let (per_class, _) = per_class_metrics(cm)?;
    Ok(per_class.iter().map(|c| c.recall).sum::<f64>() / per_class.len() as f64)
}

/// Total cost of a confusion matrix and the per-cell `count × cost` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeMcc {
    pub total: f64,
    pub contributions: Vec<Vec<f64>>,
}

pub fn cumulative_mcc(cm: &ConfusionMatrix, mcc: &MccMatrix) -> Result<CumulativeMcc, EvalError> {
    cm.check_shape()?;
    if cm.dim() != mcc.dim() || mcc.values.len() != mcc.dim() {
        return Err(EvalError::DimensionMismatch(format!(
            "confusion matrix is {0}x{0}, cost matrix is {1}x{1}",
            cm.dim(),
            mcc.dim()
        )));
    }
    if cm.labels != mcc.labels {
        return Err(EvalError::DimensionMismatch(format!(
            "confusion labels {:?} differ from cost labels {:?}",
            cm.labels, mcc.labels
        )));
    }
    let contributions: Vec<Vec<f64>> = cm
        .counts
        .iter()
        .zip(&mcc.values)
        .map(|(counts, costs)| counts.iter().zip(costs).map(|(&n, &c)| n as f64 * c).collect())
        .collect();
    let total = contributions.iter().flatten().sum();
    Ok(CumulativeMcc { total, contributions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_id: String,
    pub total: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
    pub cumulative_mcc: f64,
    pub per_cell_mcc_contributions: Vec<Vec<f64>>,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl MetricsReport {
    /// Re-derive the metric identities from the stored confusion counts.
    pub fn verify(&self, mcc: &MccMatrix) -> Result<(), EvalError> {
        let fail = |message: String| EvalError::Inconsistent {
            model_id: self.model_id.clone(),
            message,
        };
        let cm = &self.confusion;
        cm.check_shape()?;
        if cm.total() != self.total {
            return Err(fail(format!("total {} but counts sum to {}", self.total, cm.total())));
        }
        let expected_accuracy = accuracy(cm)?;
        if (expected_accuracy - self.accuracy).abs() > IDENTITY_TOLERANCE {
            return Err(fail(format!(
                "accuracy {} but trace/total is {expected_accuracy}",
                self.accuracy
            )));
        }
        let recomputed = cumulative_mcc(cm, mcc)?;
        if (recomputed.total - self.cumulative_mcc).abs() > IDENTITY_TOLERANCE {
            return Err(fail(format!(
                "cumulative MCC {} but counts × costs sum to {}",
                self.cumulative_mcc, recomputed.total
            )));
        }
        let stored: f64 = self.per_cell_mcc_contributions.iter().flatten().sum();
        if (stored - self.cumulative_mcc).abs() > IDENTITY_TOLERANCE
            || self.per_cell_mcc_contributions.len() != recomputed.contributions.len()
        {
            return Err(fail("per-cell contributions do not sum to the cumulative MCC".into()));
        }
        for (row_a, row_b) in self.per_cell_mcc_contributions.iter().zip(&recomputed.contributions) {
            if row_a.len() != row_b.len() || row_a.iter().zip(row_b).any(|(a, b)| (a - b).abs() > IDENTITY_TOLERANCE) {
                return Err(fail("per-cell contributions differ from counts × costs".into()));
            }
        }
        for (name, value) in [
            ("accuracy", self.accuracy),
            ("macro_precision", self.macro_precision),
            ("macro_recall", self.macro_recall),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(fail(format!("{name} {value} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// All metrics for one model from a single confusion matrix.
pub fn evaluate_confusion(cm: &ConfusionMatrix, mcc: &MccMatrix, model_id: &str) -> Result<MetricsReport, EvalError> {
    let accuracy = accuracy(cm)?;
    let (per_class, flags) = per_class_metrics(cm)?;
    let k = per_class.len() as f64;
    let macro_precision = per_class.iter().map(|c| c.precision).sum::<f64>() / k;
    let macro_recall = per_class.iter().map(|c| c.recall).sum::<f64>() / k;
    let cost = cumulative_mcc(cm, mcc)?;
    let report = MetricsReport {
        model_id: model_id.to_string(),
        total: cm.total(),
        accuracy,
        macro_precision,
        macro_recall,
        per_class,
        cumulative_mcc: cost.total,
        per_cell_mcc_contributions: cost.contributions,
        confusion: cm.clone(),
        flags,
    };
    report.verify(mcc)?;
    Ok(report)
}

pub fn evaluate(
    records: &[PredictionRecord],
    assumptions: &BusinessAssumptions,
    model_id: &str,
) -> Result<MetricsReport, EvalError> {
    let mcc = mcc_matrix(assumptions)?;
    let cm = confusion_from_records(records, &mcc.labels)?;
    evaluate_confusion(&cm, &mcc, model_id)
}

/// Lowest cumulative MCC first; ties go to higher accuracy, then model id.
pub fn rank_models(reports: &[MetricsReport]) -> Result<Vec<MetricsReport>, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let mut ranked = reports.to_vec();
    ranked.sort_by(compare_reports);
    Ok(ranked)
}

fn compare_reports(a: &MetricsReport, b: &MetricsReport) -> Ordering {
    a.cumulative_mcc
        .total_cmp(&b.cumulative_mcc)
        .then_with(|| b.accuracy.total_cmp(&a.accuracy))
        .then_with(|| a.model_id.cmp(&b.model_id))
}
