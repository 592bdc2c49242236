//! Misclassification-cost (MCC) matrices derived from retail business assumptions.
//!
//! Every item is handled according to the class it is *predicted* to be (sell at
//! full price, sell discounted, discard). Whether a customer buys it depends on
//! its *actual* class and the price it is displayed at. Buying an item of a
//! hazardous class triggers an incident cost.
//!
//! The cost of predicting class `j` for an item of actual class `i` is the
//! expected loss from the misclassification less the expected gain from it.
//! Equivalently it is the regret of the action taken for `j` relative to the
//! action that would have been taken for `i`:
//!
//! ```text
//! net_cost(i, a) = hazard(i) * incident_cost * P(i, a) - price(a) * P(i, a)
//! mcc(i, j)      = net_cost(i, policy(j)) - net_cost(i, policy(i))
//! ```
//!
//! The two forms agree whenever every hazardous class is discarded when
//! predicted correctly.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Tolerance on the sum of a probability vector.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostModelError {
    #[error("{what} index {index} out of range (size {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid assumptions: {}", format_violations(.0))]
    InvalidAssumptions(Vec<Violation>),
    #[error("malformed probability vector: {0}")]
    InvalidProbabilities(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One broken invariant in a [`BusinessAssumptions`], located by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreshnessClass {
    pub name: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub name: String,
    pub price: f64,
    pub is_discard: bool,
}

/// Declarative description of how items are priced, bought and penalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusinessAssumptions {
    pub classes: Vec<FreshnessClass>,
    pub actions: Vec<ActionSpec>,
    /// Action index taken when the class at that position is predicted.
    pub policy: Vec<usize>,
    /// `purchase_prob[class][action]`.
    pub purchase_prob: Vec<Vec<f64>>,
    pub hazard: Vec<bool>,
    pub incident_cost: f64,
}

impl Default for BusinessAssumptions {
    /// Three freshness classes sold at $10, $5 or discarded, with an incident
    /// cost of $10,000 for selling spoiled meat.
    fn default() -> Self {
        let classes = ["FR", "HF", "SP"]
            .iter()
            .enumerate()
            .map(|(index, name)| FreshnessClass {
                name: (*name).to_string(),
                index,
            })
            .collect();
        let actions = vec![
            ActionSpec {
                name: "sell-10".to_string(),
                price: 10.0,
                is_discard: false,
            },
            ActionSpec {
                name: "sell-5".to_string(),
                price: 5.0,
                is_discard: false,
            },
            ActionSpec {
                name: "discard".to_string(),
                price: 0.0,
                is_discard: true,
            },
        ];
        Self {
            classes,
            actions,
            policy: vec![0, 1, 2],
            purchase_prob: vec![vec![0.90, 1.00, 0.0], vec![0.10, 0.90, 0.0], vec![0.01, 0.05, 0.0]],
            hazard: vec![false, false, true],
            incident_cost: 10_000.0,
        }
    }
}

impl BusinessAssumptions {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Copy with every price and the incident cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for action in &mut out.actions {
            action.price *= factor;
        }
        out.incident_cost *= factor;
        out
    }

    fn check_class(&self, index: usize) -> Result<(), CostModelError> {
        if index < self.classes.len() {
            Ok(())
        } else {
            Err(CostModelError::IndexOutOfRange {
                what: "class",
                index,
                len: self.classes.len(),
            })
        }
    }

    fn check_action(&self, index: usize) -> Result<(), CostModelError> {
        if index < self.actions.len() {
            Ok(())
        } else {
            Err(CostModelError::IndexOutOfRange {
                what: "action",
                index,
                len: self.actions.len(),
            })
        }
    }

    fn prob(&self, class: usize, action: usize) -> f64 {
        self.purchase_prob[class][action]
    }

    // Callers have validated the class index; the policy may still be
    // malformed on unvalidated input.
    fn policy_action(&self, class: usize) -> Result<usize, CostModelError> {
        let action = *self.policy.get(class).ok_or(CostModelError::IndexOutOfRange {
            what: "policy entry",
            index: class,
            len: self.policy.len(),
        })?;
        self.check_action(action)?;
        Ok(action)
    }
}

/// Report every invariant violation in `assumptions`. Empty means valid.
pub fn validate_assumptions(assumptions: &BusinessAssumptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = assumptions.classes.len();
    let m = assumptions.actions.len();

    if k < 2 {
        out.push(Violation::new("classes", format!("need at least 2 classes, got {k}")));
    }
    if m < 2 {
        out.push(Violation::new("actions", format!("need at least 2 actions, got {m}")));
    }

    let mut seen = HashSet::new();
    for (i, class) in assumptions.classes.iter().enumerate() {
        if class.name.trim().is_empty() {
            out.push(Violation::new(format!("classes[{i}].name"), "name must not be empty"));
        } else if !seen.insert(class.name.as_str()) {
            out.push(Violation::new(
                format!("classes[{i}].name"),
                format!("duplicate class name '{}'", class.name),
            ));
        }
        if class.index != i {
            out.push(Violation::new(
                format!("classes[{i}].index"),
                format!("index {} does not match position {i}", class.index),
            ));
        }
    }

    let mut seen = HashSet::new();
    for (j, action) in assumptions.actions.iter().enumerate() {
        if action.name.trim().is_empty() {
            out.push(Violation::new(format!("actions[{j}].name"), "name must not be empty"));
        } else if !seen.insert(action.name.as_str()) {
            out.push(Violation::new(
                format!("actions[{j}].name"),
                format!("duplicate action name '{}'", action.name),
            ));
        }
        if !action.price.is_finite() || action.price < 0.0 {
            out.push(Violation::new(
                format!("actions[{j}].price"),
                format!("price must be a finite non-negative amount, got {}", action.price),
            ));
        } else if action.is_discard && action.price != 0.0 {
            out.push(Violation::new(
                format!("actions[{j}].price"),
                format!("discard action must have price 0, got {}", action.price),
            ));
        }
    }

    if assumptions.policy.len() != k {
        out.push(Violation::new(
            "policy",
            format!("policy covers {} classes, expected {k}", assumptions.policy.len()),
        ));
    }
    for (i, &action) in assumptions.policy.iter().enumerate() {
        if action >= m {
            out.push(Violation::new(
                format!("policy[{i}]"),
                format!("action index {action} out of range (size {m})"),
            ));
        }
    }

    if assumptions.purchase_prob.len() != k {
        out.push(Violation::new(
            "purchase_prob",
            format!("expected {k} rows, got {}", assumptions.purchase_prob.len()),
        ));
    }
    for (i, row) in assumptions.purchase_prob.iter().enumerate() {
        if row.len() != m {
            out.push(Violation::new(
                format!("purchase_prob[{i}]"),
                format!("expected {m} columns, got {}", row.len()),
            ));
        }
        for (j, &p) in row.iter().enumerate() {
            let path = format!("purchase_prob[{i}][{j}]");
            if !(0.0..=1.0).contains(&p) {
                out.push(Violation::new(path, format!("probability {p} outside [0, 1]")));
            } else if p != 0.0 && assumptions.actions.get(j).is_some_and(|a| a.is_discard) {
                out.push(Violation::new(
                    path,
                    format!(
                        "discard action '{}' must have purchase probability 0",
                        assumptions.actions[j].name
                    ),
                ));
            }
        }
    }

    if assumptions.hazard.len() != k {
        out.push(Violation::new(
            "hazard",
            format!("expected {k} flags, got {}", assumptions.hazard.len()),
        ));
    }
    for (i, &hazardous) in assumptions.hazard.iter().enumerate() {
        if !hazardous {
            continue;
        }
        let action = assumptions.policy.get(i).and_then(|&a| assumptions.actions.get(a));
        if let Some(action) = action {
            if !action.is_discard {
                let name = assumptions.classes.get(i).map_or("?", |c| c.name.as_str());
                out.push(Violation::new(
                    format!("policy[{i}]"),
                    format!(
                        "hazard class '{name}' must map to a discard action, maps to '{}'",
                        action.name
                    ),
                ));
            }
        }
    }

    if !assumptions.incident_cost.is_finite() || assumptions.incident_cost < 0.0 {
        out.push(Violation::new(
            "incident_cost",
            format!(
                "must be a finite non-negative amount, got {}",
                assumptions.incident_cost
            ),
        ));
    }

    out
}

fn ensure_valid(assumptions: &BusinessAssumptions) -> Result<(), CostModelError> {
    let violations = validate_assumptions(assumptions);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CostModelError::InvalidAssumptions(violations))
    }
}

/// Expected net cost of handling an item of class `actual` with `action`.
/// Negative values are expected revenue.
pub fn net_cost(assumptions: &BusinessAssumptions, actual: usize, action: usize) -> Result<f64, CostModelError> {
    assumptions.check_class(actual)?;
    assumptions.check_action(action)?;
    let p = assumptions.prob(actual, action);
    let incident = if assumptions.hazard[actual] {
        assumptions.incident_cost * p
    } else {
        0.0
    };
    Ok(incident - assumptions.actions[action].price * p)
}

pub fn expected_loss(
    assumptions: &BusinessAssumptions,
    actual: usize,
    predicted: usize,
) -> Result<f64, CostModelError> {
    assumptions.check_class(actual)?;
    assumptions.check_class(predicted)?;
    if actual == predicted {
        return Ok(0.0);
    }
    if assumptions.hazard[actual] {
        let taken = assumptions.policy_action(predicted)?;
        Ok(assumptions.incident_cost * assumptions.prob(actual, taken))
    } else {
        // revenue the correct handling would have earned
        let correct = assumptions.policy_action(actual)?;
        Ok(assumptions.actions[correct].price * assumptions.prob(actual, correct))
    }
}

pub fn expected_gain(
    assumptions: &BusinessAssumptions,
    actual: usize,
    predicted: usize,
) -> Result<f64, CostModelError> {
    assumptions.check_class(actual)?;
    assumptions.check_class(predicted)?;
    if actual == predicted {
        return Ok(0.0);
    }
    let taken = assumptions.policy_action(predicted)?;
    Ok(assumptions.actions[taken].price * assumptions.prob(actual, taken))
}

/// Expected loss less expected gain for one (actual, predicted) pair.
pub fn mcc_cell(assumptions: &BusinessAssumptions, actual: usize, predicted: usize) -> Result<f64, CostModelError> {
    Ok(expected_loss(assumptions, actual, predicted)? - expected_gain(assumptions, actual, predicted)?)
}

/// K×K misclassification costs, rows = actual class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MccMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl MccMatrix {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> f64 {
        self.values[actual][predicted]
    }
}

pub fn mcc_matrix(assumptions: &BusinessAssumptions) -> Result<MccMatrix, CostModelError> {
    ensure_valid(assumptions)?;
    let k = assumptions.num_classes();
    let values = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| mcc_cell(assumptions, i, j))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MccMatrix {
        labels: assumptions.class_names(),
        values,
    })
}

/// Expected-cost-minimizing action for a belief over the actual class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub action: usize,
    pub action_name: String,
    /// Expected net cost of every action, indexed like `actions`.
    pub expected_costs: Vec<f64>,
}

pub fn recommend_action(
    assumptions: &BusinessAssumptions,
    class_probabilities: &[f64],
) -> Result<Recommendation, CostModelError> {
    ensure_valid(assumptions)?;
    let k = assumptions.num_classes();
    if class_probabilities.len() != k {
        return Err(CostModelError::InvalidProbabilities(format!(
            "expected {k} entries, got {}",
            class_probabilities.len()
        )));
    }
    if let Some(bad) = class_probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(CostModelError::InvalidProbabilities(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    let sum: f64 = class_probabilities.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(CostModelError::InvalidProbabilities(format!(
            "entries sum to {sum}, expected 1"
        )));
    }

    let mut expected_costs = Vec::with_capacity(assumptions.num_actions());
    for action in 0..assumptions.num_actions() {
        let mut total = 0.0;
        for (class, &p) in class_probabilities.iter().enumerate() {
            total += p * net_cost(assumptions, class, action)?;
        }
        expected_costs.push(total);
    }

    // strict `<` keeps the lowest index on ties
    let mut best = 0;
    for (action, &cost) in expected_costs.iter().enumerate().skip(1) {
        if cost < expected_costs[best] {
            best = action;
        }
    }

    Ok(Recommendation {
        action: best,
        action_name: assumptions.actions[best].name.clone(),
        expected_costs,
    })
}

/// Round half away from zero to `decimals` places.
pub fn round_half_away(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

/// Currency rounded to one decimal place, e.g. `499.75` → `"499.8"`.
pub fn display_one_decimal(value: f64) -> String {
    let rounded = round_half_away(value, 1);
    // avoid printing "-0.0"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.1}")
}

/// Whole dollars with thousands separators, e.g. `4997.5` → `"$4,998"`.
pub fn display_whole_dollars(value: f64) -> String {
    let rounded = value.round();
    let negative = rounded < 0.0;
    let digits = format!("{}", rounded.abs() as u128);
    let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    if negative {
        format!("-${grouped}")
    } else {
        format!("${grouped}")
    }
}
