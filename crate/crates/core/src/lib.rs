//! Cost-sensitive evaluation of freshness classifiers.
//!
//! - [`cost_model`]: misclassification-cost matrices and cost-minimizing actions
//!   derived from pricing, purchase-probability and incident-cost assumptions.
//! - [`evaluation`]: confusion matrices, accuracy, macro precision/recall,
//!   cumulative cost and model ranking.
//! - [`simulator`]: seeded Monte-Carlo sales simulation used to check the
//!   analytic costs.
//! - [`dataset_eda`]: class balance and pixel-value histograms of an image dataset.
//! - [`prediction_io`]: assumptions, prediction and report file formats.

pub mod cost_model;
pub mod dataset_eda;
pub mod evaluation;
pub mod prediction_io;
pub mod simulator;

pub use cost_model::{BusinessAssumptions, MccMatrix};
pub use evaluation::{ConfusionMatrix, MetricsReport, PredictionRecord};
pub use prediction_io::PredictionSet;
pub use simulator::{SimSummary, Simulator};
