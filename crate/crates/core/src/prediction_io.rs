//! File formats: assumptions documents, JSON-lines prediction files, report
//! documents and synthetic "stub" prediction files.
//!
//! Byte-level examples live in `docs/formats.md`.

use crate::cost_model::{
    validate_assumptions, ActionSpec, BusinessAssumptions, FreshnessClass, MccMatrix, Violation,
    PROBABILITY_SUM_TOLERANCE,
};
use crate::evaluation::{rank_models, ConfusionMatrix, EvalError, MetricsReport, PredictionRecord};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const PREDICTION_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The shipped default assumptions document.
pub const DEFAULTS_JSON: &str = include_str!("../data/defaults.json");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access '{}': {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{origin}: parse error at line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: invalid assumptions:\n{}", list_violations(.violations))]
    InvalidAssumptions { origin: String, violations: Vec<Violation> },
    #[error("{origin}: line {line}: {kind}")]
    Line {
        origin: String,
        line: usize,
        kind: LineError,
    },
    #[error("{origin}: {message}")]
    Data { origin: String, message: String },
    #[error("{origin}: {source}")]
    Report {
        origin: String,
        #[source]
        source: EvalError,
    },
}

fn list_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineError {
    InvalidJson(String),
    NotAnObject,
    UnsupportedVersion(String),
    MisplacedHeader,
    UnknownLabel { field: &'static str, label: String },
    BadProbabilities(String),
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidJson(msg) => write!(f, "invalid record: {msg}"),
            Self::NotAnObject => f.write_str("line must be a JSON object"),
            Self::UnsupportedVersion(v) => write!(
                f,
                "unsupported schema_version {v} (supported: {PREDICTION_SCHEMA_VERSION})"
            ),
            Self::MisplacedHeader => f.write_str("header must be the first line"),
            Self::UnknownLabel { field, label } => {
                write!(f, "{field} label '{label}' is not among the header classes")
            }
            Self::BadProbabilities(msg) => write!(f, "probs {msg}"),
        }
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(origin: &str, err: &serde_json::Error) -> IoError {
    IoError::Parse {
        origin: origin.to_string(),
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Assumptions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEntry {
    pub name: String,
    pub price: f64,
    #[serde(default)]
    pub is_discard: bool,
}

/// On-disk form of [`BusinessAssumptions`]; the policy maps class names to
/// action names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsDocument {
    pub classes: Vec<ClassEntry>,
    pub actions: Vec<ActionEntry>,
    pub policy: BTreeMap<String, String>,
    pub purchase_prob: Vec<Vec<f64>>,
    pub hazard: Vec<bool>,
    pub incident_cost: f64,
}

impl AssumptionsDocument {
    /// Resolve names and validate. Every problem is reported at once.
    pub fn into_assumptions(self) -> Result<BusinessAssumptions, Vec<Violation>> {
        let classes: Vec<FreshnessClass> = self
            .classes
            .iter()
            .enumerate()
            .map(|(index, c)| FreshnessClass {
                name: c.name.clone(),
                index,
            })
            .collect();
        let actions: Vec<ActionSpec> = self
            .actions
            .iter()
            .map(|a| ActionSpec {
                name: a.name.clone(),
                price: a.price,
                is_discard: a.is_discard,
            })
            .collect();

        let mut violations = Vec::new();
        let mut policy = Vec::with_capacity(classes.len());
        for class in &classes {
            match self.policy.get(&class.name) {
                None => violations.push(Violation {
                    path: format!("policy.{}", class.name),
                    message: "no action given for this class".into(),
                }),
                Some(action) => match actions.iter().position(|a| &a.name == action) {
                    Some(index) => policy.push(index),
                    None => violations.push(Violation {
                        path: format!("policy.{}", class.name),
                        message: format!("unknown action '{action}'"),
                    }),
                },
            }
        }
        for key in self.policy.keys() {
            if !classes.iter().any(|c| &c.name == key) {
                violations.push(Violation {
                    path: format!("policy.{key}"),
                    message: "not a declared class".into(),
                });
            }
        }

        let assumptions = BusinessAssumptions {
            classes,
            actions,
            policy,
            purchase_prob: self.purchase_prob,
            hazard: self.hazard,
            incident_cost: self.incident_cost,
        };
        if violations.is_empty() {
            // the policy is only well-formed when every name resolved
            violations.extend(validate_assumptions(&assumptions));
        } else {
            violations.extend(
                validate_assumptions(&assumptions)
                    .into_iter()
                    .filter(|v| !v.path.starts_with("policy")),
            );
        }
        if violations.is_empty() {
            Ok(assumptions)
        } else {
            Err(violations)
        }
    }
}

impl From<&BusinessAssumptions> for AssumptionsDocument {
    fn from(a: &BusinessAssumptions) -> Self {
        Self {
            classes: a.classes.iter().map(|c| ClassEntry { name: c.name.clone() }).collect(),
            actions: a
                .actions
                .iter()
                .map(|x| ActionEntry {
                    name: x.name.clone(),
                    price: x.price,
                    is_discard: x.is_discard,
                })
                .collect(),
            policy: a
                .classes
                .iter()
                .zip(&a.policy)
                .map(|(c, &j)| (c.name.clone(), a.actions[j].name.clone()))
                .collect(),
            purchase_prob: a.purchase_prob.clone(),
            hazard: a.hazard.clone(),
            incident_cost: a.incident_cost,
        }
    }
}

pub fn parse_assumptions(text: &str, origin: &str) -> Result<BusinessAssumptions, IoError> {
    let doc: AssumptionsDocument = serde_json::from_str(text).map_err(|e| parse_error(origin, &e))?;
    doc.into_assumptions()
        .map_err(|violations| IoError::InvalidAssumptions {
            origin: origin.to_string(),
            violations,
        })
}

pub fn load_assumptions(path: &Path) -> Result<BusinessAssumptions, IoError> {
    parse_assumptions(&read_text(path)?, &path.display().to_string())
}

pub fn default_assumptions() -> BusinessAssumptions {
    parse_assumptions(DEFAULTS_JSON, "defaults.json").expect("shipped defaults are valid")
}

pub fn assumptions_to_json(assumptions: &BusinessAssumptions) -> String {
    serde_json::to_string_pretty(&AssumptionsDocument::from(assumptions)).expect("document serializes")
}

// ---------------------------------------------------------------------------
// Prediction files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionHeader {
    pub schema_version: u32,
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    item_id: String,
    actual: String,
    predicted: String,
    #[serde(default)]
    probs: Option<Vec<f64>>,
    #[serde(default)]
    model_id: Option<String>,
}

/// One classifier's predictions for a batch of items.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    /// Class labels declared by the header line, if the file has one.
    pub classes: Option<Vec<String>>,
    pub model_id: Option<String>,
    pub records: Vec<PredictionRecord>,
}

impl PredictionSet {
    /// Header model id, else the first record's, else `fallback`.
    pub fn resolved_model_id(&self, fallback: &str) -> String {
        self.model_id
            .clone()
            .or_else(|| self.records.iter().find_map(|r| r.model_id.clone()))
            .unwrap_or_else(|| fallback.to_string())
    }

    /// Fails if the header declares classes other than `labels`.
    pub fn check_classes(&self, labels: &[String], origin: &str) -> Result<(), IoError> {
        match &self.classes {
            Some(classes) if classes.as_slice() != labels => Err(IoError::Data {
                origin: origin.to_string(),
                message: format!("prediction classes {classes:?} do not match assumption classes {labels:?}"),
            }),
            _ => Ok(()),
        }
    }
}

fn check_probabilities(probs: &[f64], expected_len: Option<usize>) -> Result<(), LineError> {
    if let Some(k) = expected_len {
        if probs.len() != k {
            return Err(LineError::BadProbabilities(format!(
                "has {} entries, expected {k}",
                probs.len()
            )));
        }
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(LineError::BadProbabilities(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(LineError::BadProbabilities(format!(
            "sum to {sum}, expected 1 ± {PROBABILITY_SUM_TOLERANCE}"
        )));
    }
    Ok(())
}

pub fn read_predictions_from<R: BufRead>(input: R, origin: &str) -> Result<PredictionSet, IoError> {
    let mut set = PredictionSet::default();
    let mut seen_content = false;
    let line_err = |line: usize, kind: LineError| IoError::Line {
        origin: origin.to_string(),
        line,
        kind,
    };

    for (idx, line) in input.lines().enumerate() {
        let number = idx + 1;
        let line = line.map_err(|source| IoError::Io {
            path: PathBuf::from(origin),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(trimmed).map_err(|e| line_err(number, LineError::InvalidJson(e.to_string())))?;
        let object = value
            .as_object()
            .ok_or_else(|| line_err(number, LineError::NotAnObject))?;

        if let Some(version) = object.get("schema_version") {
            if seen_content {
                return Err(line_err(number, LineError::MisplacedHeader));
            }
            if version.as_u64() != Some(u64::from(PREDICTION_SCHEMA_VERSION)) {
                return Err(line_err(number, LineError::UnsupportedVersion(version.to_string())));
            }
            let header: PredictionHeader =
                serde_json::from_value(value).map_err(|e| line_err(number, LineError::InvalidJson(e.to_string())))?;
            set.classes = Some(header.classes);
            set.model_id = header.model_id;
            seen_content = true;
            continue;
        }
        seen_content = true;

        let record: RecordLine =
            serde_json::from_value(value).map_err(|e| line_err(number, LineError::InvalidJson(e.to_string())))?;
        if let Some(classes) = &set.classes {
            for (field, label) in [("actual", &record.actual), ("predicted", &record.predicted)] {
                if !classes.contains(label) {
                    return Err(line_err(
                        number,
                        LineError::UnknownLabel {
                            field,
                            label: label.clone(),
                        },
                    ));
                }
            }
        }
        if let Some(probs) = &record.probs {
            check_probabilities(probs, set.classes.as_ref().map(Vec::len)).map_err(|kind| line_err(number, kind))?;
        }
        set.records.push(PredictionRecord {
            item_id: record.item_id,
            actual: record.actual,
            predicted: record.predicted,
            probabilities: record.probs,
            model_id: record.model_id,
        });
    }
    Ok(set)
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet, IoError> {
    let file = fs::File::open(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_predictions_from(BufReader::new(file), &path.display().to_string())
}

/// A header line is written when the set declares its classes.
pub fn write_predictions_to<W: Write>(set: &PredictionSet, mut out: W) -> io::Result<()> {
    if let Some(classes) = &set.classes {
        let header = PredictionHeader {
            schema_version: PREDICTION_SCHEMA_VERSION,
            classes: classes.clone(),
            model_id: set.model_id.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
    }
    for record in &set.records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<(), IoError> {
    let io_err = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_predictions_to(set, BufWriter::new(file)).map_err(io_err)
}

// ---------------------------------------------------------------------------
// Stubs
// ---------------------------------------------------------------------------

/// Input of the stub generator: a confusion matrix and an optional model id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(flatten)]
    pub confusion: ConfusionMatrix,
}

pub fn load_stub_spec(path: &Path) -> Result<StubSpec, IoError> {
    let origin = path.display().to_string();
    let spec: StubSpec = serde_json::from_str(&read_text(path)?).map_err(|e| parse_error(&origin, &e))?;
    spec.confusion
        .check_shape()
        .map_err(|source| IoError::Report { origin, source })?;
    Ok(spec)
}

/// Records realizing `cm` exactly, row-major, with ids `stub-000001`, ….
pub fn generate_stub(cm: &ConfusionMatrix, model_id: Option<&str>) -> PredictionSet {
    let mut records = Vec::with_capacity(cm.total() as usize);
    for (i, row) in cm.counts.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                records.push(PredictionRecord {
                    item_id: format!("stub-{:06}", records.len() + 1),
                    actual: cm.labels[i].clone(),
                    predicted: cm.labels[j].clone(),
                    probabilities: None,
                    model_id: None,
                });
            }
        }
    }
    PredictionSet {
        classes: Some(cm.labels.clone()),
        model_id: model_id.map(str::to_string),
        records,
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReport {
    pub rank: usize,
    #[serde(flatten)]
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub mcc_matrix: MccMatrix,
    pub models: Vec<RankedReport>,
}

impl ReportDocument {
    /// Ranks `reports` and packages them with the cost matrix used.
    pub fn build(reports: &[MetricsReport], mcc: &MccMatrix) -> Result<Self, EvalError> {
        let ranked = rank_models(reports)?;
        let doc = Self {
            schema_version: REPORT_SCHEMA_VERSION,
            mcc_matrix: mcc.clone(),
            models: ranked
                .into_iter()
                .enumerate()
                .map(|(i, report)| RankedReport { rank: i + 1, report })
                .collect(),
        };
        doc.verify()?;
        Ok(doc)
    }

    /// Re-checks every report identity and the ranking order.
    pub fn verify(&self) -> Result<(), EvalError> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(EvalError::Inconsistent {
                model_id: "-".into(),
                message: format!("unsupported report schema_version {}", self.schema_version),
            });
        }
        let reports: Vec<MetricsReport> = self.models.iter().map(|m| m.report.clone()).collect();
        for (i, entry) in self.models.iter().enumerate() {
            entry.report.verify(&self.mcc_matrix)?;
            if entry.rank != i + 1 {
                return Err(EvalError::Inconsistent {
                    model_id: entry.report.model_id.clone(),
                    message: format!("rank {} at position {}", entry.rank, i + 1),
                });
            }
        }
        if rank_models(&reports)? != reports {
            return Err(EvalError::Inconsistent {
                model_id: "-".into(),
                message: "models are not in ranking order".into(),
            });
        }
        Ok(())
    }
}

pub fn report_to_json(doc: &ReportDocument) -> Result<String, EvalError> {
    doc.verify()?;
    Ok(serde_json::to_string_pretty(doc).expect("report serializes"))
}

pub fn write_report(doc: &ReportDocument, path: &Path) -> Result<(), IoError> {
    let origin = path.display().to_string();
    let json = report_to_json(doc).map_err(|source| IoError::Report { origin, source })?;
    fs::write(path, json + "\n").map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_report(text: &str, origin: &str) -> Result<ReportDocument, IoError> {
    let doc: ReportDocument = serde_json::from_str(text).map_err(|e| parse_error(origin, &e))?;
    doc.verify().map_err(|source| IoError::Report {
        origin: origin.to_string(),
        source,
    })?;
    Ok(doc)
}

pub fn read_report(path: &Path) -> Result<ReportDocument, IoError> {
    parse_report(&read_text(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::mcc_matrix;
    use crate::evaluation::{confusion_from_records, evaluate_confusion};

    fn read_str(text: &str) -> Result<PredictionSet, IoError> {
        read_predictions_from(text.as_bytes(), "test.jsonl")
    }

    #[test]
    fn shipped_defaults_equal_builtin_defaults() {
        assert_eq!(default_assumptions(), BusinessAssumptions::default());
    }

    #[test]
    fn assumptions_json_round_trip() {
        let a = BusinessAssumptions::default();
        assert_eq!(parse_assumptions(&assumptions_to_json(&a), "x").unwrap(), a);
    }

    #[test]
    fn negative_price_names_the_field() {
        let text = DEFAULTS_JSON.replace("\"price\": 5.0", "\"price\": -5.0");
        assert_ne!(text, DEFAULTS_JSON);
        match parse_assumptions(&text, "x") {
            Err(IoError::InvalidAssumptions { violations, .. }) => {
                assert_eq!(violations.len(), 1);
                assert_eq!(violations[0].path, "actions[1].price");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_document_is_a_parse_error() {
        assert!(matches!(
            parse_assumptions("", "x"),
            Err(IoError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_assumptions("{\n  \"classes\": [,]\n}", "x"),
            Err(IoError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn policy_names_must_resolve() {
        let text = DEFAULTS_JSON.replace("\"SP\": \"discard\"", "\"SP\": \"burn\"");
        match parse_assumptions(&text, "x") {
            Err(IoError::InvalidAssumptions { violations, .. }) => {
                assert_eq!(violations[0].path, "policy.SP");
                assert!(violations[0].message.contains("burn"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reads_header_and_records() {
        let text = concat!(
            "{\"schema_version\":1,\"classes\":[\"FR\",\"HF\",\"SP\"],\"model_id\":\"m\"}\n",
            "{\"item_id\":\"a\",\"actual\":\"FR\",\"predicted\":\"HF\",\"probs\":[0.2,0.7,0.1]}\n",
            "\n",
            "{\"item_id\":\"b\",\"actual\":\"SP\",\"predicted\":\"SP\"}\n",
        );
        let set = read_str(text).unwrap();
        assert_eq!(set.model_id.as_deref(), Some("m"));
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.records[0].probabilities, Some(vec![0.2, 0.7, 0.1]));
    }

    #[test]
    fn bad_probabilities_report_the_line() {
        let text = concat!(
            "{\"item_id\":\"a\",\"actual\":\"FR\",\"predicted\":\"FR\"}\n",
            "{\"item_id\":\"b\",\"actual\":\"FR\",\"predicted\":\"HF\",\"probs\":[0.5,0.2,0.1]}\n",
        );
        match read_str(text) {
            Err(IoError::Line {
                line: 2,
                kind: LineError::BadProbabilities(_),
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_the_line() {
        assert!(matches!(
            read_str("{\"item_id\":\"a\"\n"),
            Err(IoError::Line { line: 1, .. })
        ));
        assert!(matches!(
            read_str("\n[1,2]\n"),
            Err(IoError::Line {
                line: 2,
                kind: LineError::NotAnObject,
                ..
            })
        ));
        assert!(matches!(
            read_str("{\"item_id\":\"a\",\"actual\":\"FR\"}\n"),
            Err(IoError::Line {
                line: 1,
                kind: LineError::InvalidJson(_),
                ..
            })
        ));
    }

    #[test]
    fn versions_and_header_position_are_enforced() {
        let unknown = "{\"schema_version\":2,\"classes\":[\"a\",\"b\"]}\n";
        assert!(matches!(
            read_str(unknown),
            Err(IoError::Line {
                kind: LineError::UnsupportedVersion(_),
                ..
            })
        ));
        let late = concat!(
            "{\"item_id\":\"a\",\"actual\":\"a\",\"predicted\":\"a\"}\n",
            "{\"schema_version\":1,\"classes\":[\"a\",\"b\"]}\n",
        );
        assert!(matches!(
            read_str(late),
            Err(IoError::Line {
                line: 2,
                kind: LineError::MisplacedHeader,
                ..
            })
        ));
    }

    #[test]
    fn labels_must_match_header() {
        let text = concat!(
            "{\"schema_version\":1,\"classes\":[\"FR\",\"SP\"]}\n",
            "{\"item_id\":\"a\",\"actual\":\"FR\",\"predicted\":\"HF\"}\n",
        );
        match read_str(text) {
            Err(IoError::Line {
                line: 2,
                kind: LineError::UnknownLabel { field: "predicted", .. },
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn check_classes_against_assumptions() {
        let set = PredictionSet {
            classes: Some(vec!["a".into(), "b".into()]),
            ..Default::default()
        };
        assert!(set.check_classes(&["a".into(), "b".into()], "x").is_ok());
        assert!(matches!(
            set.check_classes(&["a".into(), "b".into(), "c".into()], "x"),
            Err(IoError::Data { .. })
        ));
        assert!(PredictionSet::default().check_classes(&["z".into()], "x").is_ok());
    }

    #[test]
    fn three_record_round_trip() {
        let set = PredictionSet {
            classes: Some(vec!["FR".into(), "HF".into(), "SP".into()]),
            model_id: Some("m1".into()),
            records: vec![
                PredictionRecord {
                    item_id: "x1".into(),
                    actual: "FR".into(),
                    predicted: "FR".into(),
                    probabilities: Some(vec![0.1 + 0.2, 0.6, 0.1 - 1e-17]),
                    model_id: None,
                },
                PredictionRecord {
                    item_id: "x2".into(),
                    actual: "SP".into(),
                    predicted: "HF".into(),
                    probabilities: None,
                    model_id: Some("m1".into()),
                },
                PredictionRecord {
                    item_id: "x\"3\u{e9}".into(),
                    actual: "HF".into(),
                    predicted: "SP".into(),
                    probabilities: Some(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
                    model_id: None,
                },
            ],
        };
        let mut buf = Vec::new();
        write_predictions_to(&set, &mut buf).unwrap();
        assert_eq!(read_predictions_from(buf.as_slice(), "mem").unwrap(), set);
    }

    #[test]
    fn stub_realizes_its_confusion_matrix() {
        let cm = ConfusionMatrix {
            labels: vec!["FR".into(), "HF".into(), "SP".into()],
            counts: vec![vec![2, 0, 1], vec![0, 3, 0], vec![0, 10, 4]],
        };
        let set = generate_stub(&cm, Some("s"));
        assert_eq!(set.records.len(), 20);
        assert_eq!(set.records[0].item_id, "stub-000001");
        assert_eq!(confusion_from_records(&set.records, &cm.labels).unwrap(), cm);
        assert_eq!(set.resolved_model_id("fallback"), "s");
    }

    #[test]
    fn report_document_round_trip_and_tamper_detection() {
        let mcc = mcc_matrix(&BusinessAssumptions::default()).unwrap();
        let labels = mcc.labels.clone();
        let a = evaluate_confusion(
            &ConfusionMatrix {
                labels: labels.clone(),
                counts: vec![vec![5, 1, 0], vec![0, 5, 0], vec![0, 0, 5]],
            },
            &mcc,
            "a",
        )
        .unwrap();
        let b = evaluate_confusion(
            &ConfusionMatrix {
                labels,
                counts: vec![vec![6, 0, 0], vec![0, 5, 0], vec![0, 1, 4]],
            },
            &mcc,
            "b",
        )
        .unwrap();
        let doc = ReportDocument::build(&[b, a], &mcc).unwrap();
        assert_eq!(doc.models[0].report.model_id, "a");
        assert_eq!(doc.models[1].rank, 2);

        let json = report_to_json(&doc).unwrap();
        assert_eq!(parse_report(&json, "r").unwrap(), doc);

        let tampered = json.replacen("\"rank\": 2", "\"rank\": 3", 1);
        assert!(matches!(parse_report(&tampered, "r"), Err(IoError::Report { .. })));

        let mut swapped = doc.clone();
        swapped.models.swap(0, 1);
        swapped.models[0].rank = 1;
        swapped.models[1].rank = 2;
        assert!(swapped.verify().is_err());
    }
}
