//! Seeded Monte-Carlo simulation of sales and incidents.
//!
//! Each simulated item draws whether it is bought (with the purchase
//! probability of its actual class under the action its predicted class
//! triggers) and, if a hazardous item is bought, whether an incident follows.
//! The realized regret of an item is its realized net cost minus the analytic
//! net cost of handling it correctly, so its expectation is the corresponding
//! misclassification-cost cell. This makes the simulator an independent check
//! on every analytic value in [`crate::cost_model`].
//!
//! # Random streams
//!
//! A run seeded with `seed` keys a ChaCha8 generator with
//! `ChaCha8Rng::seed_from_u64(seed)`. Item `k` of a run (or sample `k` of a
//! cell estimate) uses stream `k` of that key, so every item is independent of
//! scheduling and parallel and serial runs agree bit for bit. Repeated days
//! derive one seed per day with [`day_seed`].
//!
//! Sums are reduced over fixed blocks of [`BLOCK_SIZE`] items, then merged
//! pairwise in index order.

use crate::cost_model::{validate_assumptions, BusinessAssumptions, CostModelError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Items per reduction block.
pub const BLOCK_SIZE: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("item list is empty")]
    EmptyItems,
    #[error("item {item}: class index {index} out of range (size {len})")]
    ClassOutOfRange { item: usize, index: usize, len: usize },
    #[error("incident probability must lie in [0, 1], got {0}")]
    InvalidIncidentProbability(f64),
    #[error(transparent)]
    CostModel(#[from] CostModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimItem {
    pub actual: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub purchased: bool,
    pub incident: bool,
    pub revenue: f64,
    pub incident_cost_incurred: f64,
    pub realized_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: u64,
    pub mean_realized_regret: f64,
    pub std_error: f64,
    pub total_realized_regret: f64,
    pub total_revenue: f64,
    pub purchase_count: u64,
    pub incident_count: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRun {
    pub summary: SimSummary,
    pub outcomes: Vec<SimOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Chance that buying a hazardous item leads to an incident.
    pub incident_probability: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            incident_probability: 1.0,
        }
    }
}

/// Per-seed key from which item streams are taken.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey {
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        let mut key = <ChaCha8Rng as SeedableRng>::Seed::default();
        // seed_from_u64 expands the seed; reuse its key for every stream
        let base = ChaCha8Rng::seed_from_u64(seed);
        key.copy_from_slice(&base.get_seed());
        Self { key }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Seed for day `day` of a repeated-day run (SplitMix64 finalizer).
pub fn day_seed(seed: u64, day: u64) -> u64 {
    let mut z = seed.wrapping_add(day.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Simulator {
    assumptions: BusinessAssumptions,
    options: SimOptions,
    /// Expected net cost of handling each class correctly.
    baseline: Vec<f64>,
}

impl Simulator {
    pub fn new(assumptions: BusinessAssumptions) -> Result<Self, SimError> {
        Self::with_options(assumptions, SimOptions::default())
    }

    pub fn with_options(assumptions: BusinessAssumptions, options: SimOptions) -> Result<Self, SimError> {
        let violations = validate_assumptions(&assumptions);
        if !violations.is_empty() {
            return Err(CostModelError::InvalidAssumptions(violations).into());
        }
        let q = options.incident_probability;
        if !(0.0..=1.0).contains(&q) {
            return Err(SimError::InvalidIncidentProbability(q));
        }
        let baseline = (0..assumptions.num_classes())
            .map(|class| {
                let action = assumptions.policy[class];
                expected_net(&assumptions, q, class, action)
            })
            .collect();
        Ok(Self {
            assumptions,
            options,
            baseline,
        })
    }

    pub fn assumptions(&self) -> &BusinessAssumptions {
        &self.assumptions
    }

    fn check_item(&self, position: usize, item: SimItem) -> Result<(), SimError> {
        let len = self.assumptions.num_classes();
        for index in [item.actual, item.predicted] {
            if index >= len {
                return Err(SimError::ClassOutOfRange {
                    item: position,
                    index,
                    len,
                });
            }
        }
        Ok(())
    }

    /// Draws one sale. Zero and one probabilities consume no randomness.
    pub fn simulate_item<R: Rng + ?Sized>(&self, item: SimItem, rng: &mut R) -> Result<SimOutcome, SimError> {
        self.check_item(0, item)?;
        Ok(self.simulate_unchecked(item, rng))
    }

    fn simulate_unchecked<R: Rng + ?Sized>(&self, item: SimItem, rng: &mut R) -> SimOutcome {
        let a = &self.assumptions;
        let action = a.policy[item.predicted];
        let purchased = bernoulli(rng, a.purchase_prob[item.actual][action]);
        let incident = purchased && a.hazard[item.actual] && bernoulli(rng, self.options.incident_probability);
        let revenue = if purchased { a.actions[action].price } else { 0.0 };
        let incident_cost_incurred = if incident { a.incident_cost } else { 0.0 };
        SimOutcome {
            purchased,
            incident,
            revenue,
            incident_cost_incurred,
            realized_regret: incident_cost_incurred - revenue - self.baseline[item.actual],
        }
    }

    /// Monte-Carlo estimate of one cost-matrix cell from `n` independent items.
    pub fn estimate_mcc_empirical(
        &self,
        actual: usize,
        predicted: usize,
        n: u64,
        seed: u64,
    ) -> Result<SimSummary, SimError> {
        if n == 0 {
            return Err(SimError::ZeroSamples);
        }
        let item = SimItem { actual, predicted };
        self.check_item(0, item)?;
        let key = StreamKey::new(seed);
        let blocks = n.div_ceil(BLOCK_SIZE as u64);
        let partials: Vec<Accumulator> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK_SIZE as u64;
                let end = (start + BLOCK_SIZE as u64).min(n);
                let mut acc = Accumulator::default();
                for k in start..end {
                    let mut rng = key.stream(k);
                    acc.push(&self.simulate_unchecked(item, &mut rng));
                }
                acc
            })
            .collect();
        Ok(reduce_pairwise(&partials).into_summary(seed))
    }

    /// One business day: item `k` uses stream `k` of `seed`.
    pub fn simulate_day(&self, items: &[SimItem], seed: u64) -> Result<DayRun, SimError> {
        if items.is_empty() {
            return Err(SimError::EmptyItems);
        }
        for (position, &item) in items.iter().enumerate() {
            self.check_item(position, item)?;
        }
        let key = StreamKey::new(seed);
        let outcomes: Vec<SimOutcome> = items
            .par_iter()
            .enumerate()
            .map(|(k, &item)| self.simulate_unchecked(item, &mut key.stream(k as u64)))
            .collect();
        let partials: Vec<Accumulator> = outcomes
            .chunks(BLOCK_SIZE)
            .map(|chunk| {
                let mut acc = Accumulator::default();
                chunk.iter().for_each(|o| acc.push(o));
                acc
            })
            .collect();
        Ok(DayRun {
            summary: reduce_pairwise(&partials).into_summary(seed),
            outcomes,
        })
    }

    /// Repeats a day `days` times; each sample is one day's total regret.
    ///
    /// Revenue, purchase and incident totals are summed over all days.
    pub fn estimate_day_cost(&self, items: &[SimItem], days: u64, seed: u64) -> Result<SimSummary, SimError> {
        if days == 0 {
            return Err(SimError::ZeroSamples);
        }
        if items.is_empty() {
            return Err(SimError::EmptyItems);
        }
        for (position, &item) in items.iter().enumerate() {
            self.check_item(position, item)?;
        }
        let blocks = days.div_ceil(BLOCK_SIZE as u64);
        let partials: Vec<Accumulator> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK_SIZE as u64;
                let end = (start + BLOCK_SIZE as u64).min(days);
                let mut acc = Accumulator::default();
                for day in start..end {
                    let key = StreamKey::new(day_seed(seed, day));
                    let mut day_acc = Accumulator::default();
                    for (k, &item) in items.iter().enumerate() {
                        day_acc.push(&self.simulate_unchecked(item, &mut key.stream(k as u64)));
                    }
                    acc.push_sample(day_acc.total_regret, &day_acc);
                }
                acc
            })
            .collect();
        Ok(reduce_pairwise(&partials).into_summary(seed))
    }
}

fn expected_net(a: &BusinessAssumptions, incident_probability: f64, class: usize, action: usize) -> f64 {
    let p = a.purchase_prob[class][action];
    let incident = if a.hazard[class] {
        a.incident_cost * incident_probability * p
    } else {
        0.0
    };
    incident - a.actions[action].price * p
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.random::<f64>() < p
    }
}

/// Running moments (Welford) plus sale totals.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
    total_regret: f64,
    revenue: f64,
    purchases: u64,
    incidents: u64,
}

impl Accumulator {
    fn push(&mut self, outcome: &SimOutcome) {
        self.add_sample(outcome.realized_regret);
        self.revenue += outcome.revenue;
        self.purchases += u64::from(outcome.purchased);
        self.incidents += u64::from(outcome.incident);
    }

    fn push_sample(&mut self, value: f64, totals: &Accumulator) {
        self.add_sample(value);
        self.revenue += totals.revenue;
        self.purchases += totals.purchases;
        self.incidents += totals.incidents;
    }

    fn add_sample(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        self.total_regret += value;
    }

    fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Accumulator {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            total_regret: self.total_regret + other.total_regret,
            revenue: self.revenue + other.revenue,
            purchases: self.purchases + other.purchases,
            incidents: self.incidents + other.incidents,
        }
    }

    fn into_summary(self, seed: u64) -> SimSummary {
        let std_error = if self.count > 1 {
            let variance = (self.m2 / (self.count - 1) as f64).max(0.0);
            (variance / self.count as f64).sqrt()
        } else {
            0.0
        };
        SimSummary {
            n: self.count,
            mean_realized_regret: self.mean,
            std_error,
            total_realized_regret: self.total_regret,
            total_revenue: self.revenue,
            purchase_count: self.purchases,
            incident_count: self.incidents,
            seed,
        }
    }
}

fn reduce_pairwise(parts: &[Accumulator]) -> Accumulator {
    match parts.len() {
        0 => Accumulator::default(),
        1 => parts[0],
        len => {
            let (left, right) = parts.split_at(len / 2);
            reduce_pairwise(left).merge(&reduce_pairwise(right))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::mcc_cell;

    const FR: usize = 0;
    const HF: usize = 1;
    const SP: usize = 2;

    fn sim() -> Simulator {
        Simulator::new(BusinessAssumptions::default()).unwrap()
    }

    #[test]
    fn zero_purchase_probability_never_sells() {
        let mut a = BusinessAssumptions::default();
        for row in &mut a.purchase_prob {
            row.iter_mut().for_each(|p| *p = 0.0);
        }
        let s = Simulator::new(a).unwrap();
        let mut rng = StreamKey::new(3).stream(0);
        for actual in 0..3 {
            for predicted in 0..3 {
                let o = s.simulate_item(SimItem { actual, predicted }, &mut rng).unwrap();
                assert!(!o.purchased && !o.incident);
                assert_eq!(o.revenue, 0.0);
                assert_eq!(o.realized_regret, 0.0);
            }
        }
        let o = sim()
            .simulate_item(
                SimItem {
                    actual: SP,
                    predicted: SP,
                },
                &mut rng,
            )
            .unwrap();
        assert_eq!(o.realized_regret, 0.0);
    }

    #[test]
    fn fresh_items_never_cause_incidents() {
        let s = sim();
        let key = StreamKey::new(11);
        for k in 0..500 {
            let o = s
                .simulate_item(
                    SimItem {
                        actual: FR,
                        predicted: FR,
                    },
                    &mut key.stream(k),
                )
                .unwrap();
            assert!(!o.incident);
            assert!(o.revenue == 0.0 || o.revenue == 10.0);
        }
    }

    #[test]
    fn bought_spoiled_item_triggers_incident() {
        let s = sim();
        let key = StreamKey::new(5);
        let mut seen = false;
        for k in 0..2000 {
            let o = s
                .simulate_item(
                    SimItem {
                        actual: SP,
                        predicted: HF,
                    },
                    &mut key.stream(k),
                )
                .unwrap();
            assert_eq!(o.incident, o.purchased);
            if o.purchased {
                seen = true;
                assert_eq!(o.incident_cost_incurred, 10_000.0);
                assert_eq!(o.revenue, 5.0);
            }
        }
        assert!(seen);
    }

    #[test]
    fn discarding_fresh_item_is_deterministic() {
        let s = sim();
        for seed in 0..5 {
            let run = s
                .simulate_day(
                    &[SimItem {
                        actual: FR,
                        predicted: SP,
                    }],
                    seed,
                )
                .unwrap();
            assert!((run.summary.total_realized_regret - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = sim();
        assert_eq!(s.estimate_mcc_empirical(0, 0, 0, 1), Err(SimError::ZeroSamples));
        assert_eq!(s.simulate_day(&[], 1), Err(SimError::EmptyItems));
        assert!(matches!(
            s.simulate_day(
                &[
                    SimItem {
                        actual: 0,
                        predicted: 0
                    },
                    SimItem {
                        actual: 0,
                        predicted: 9
                    }
                ],
                1
            ),
            Err(SimError::ClassOutOfRange { item: 1, index: 9, .. })
        ));
        assert!(matches!(
            Simulator::with_options(
                BusinessAssumptions::default(),
                SimOptions {
                    incident_probability: 1.5
                }
            ),
            Err(SimError::InvalidIncidentProbability(_))
        ));
        let bad = BusinessAssumptions {
            incident_cost: -1.0,
            ..Default::default()
        };
        assert!(matches!(Simulator::new(bad), Err(SimError::CostModel(_))));
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        let s = sim();
        let a = s.estimate_mcc_empirical(SP, HF, 20_000, 42).unwrap();
        let b = s.estimate_mcc_empirical(SP, HF, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let c = s.estimate_mcc_empirical(SP, HF, 20_000, 43).unwrap();
        assert_ne!(a.mean_realized_regret, c.mean_realized_regret);
    }

    #[test]
    fn cell_estimate_matches_day_of_identical_items() {
        let s = sim();
        let n = 10_000;
        let est = s.estimate_mcc_empirical(HF, FR, n, 9).unwrap();
        let day = s
            .simulate_day(
                &vec![
                    SimItem {
                        actual: HF,
                        predicted: FR
                    };
                    n as usize
                ],
                9,
            )
            .unwrap();
        assert_eq!(est, day.summary);
    }

    #[test]
    fn estimates_track_analytic_cells() {
        let s = sim();
        let a = BusinessAssumptions::default();
        for (actual, predicted) in [(FR, FR), (FR, HF), (HF, FR), (SP, FR)] {
            let est = s.estimate_mcc_empirical(actual, predicted, 100_000, 17).unwrap();
            let exact = mcc_cell(&a, actual, predicted).unwrap();
            assert!(
                (est.mean_realized_regret - exact).abs() <= 4.0 * est.std_error + 1e-12,
                "({actual},{predicted}): {} vs {exact} ± {}",
                est.mean_realized_regret,
                est.std_error
            );
        }
    }

    #[test]
    fn incident_probability_knob_scales_incidents() {
        let opts = SimOptions {
            incident_probability: 0.0,
        };
        let s = Simulator::with_options(BusinessAssumptions::default(), opts).unwrap();
        let est = s.estimate_mcc_empirical(SP, HF, 5_000, 2).unwrap();
        assert_eq!(est.incident_count, 0);
        assert!(est.purchase_count > 0);
    }

    #[test]
    fn day_summary_matches_outcomes() {
        let s = sim();
        let items: Vec<_> = (0..300)
            .map(|k| SimItem {
                actual: k % 3,
                predicted: (k / 3) % 3,
            })
            .collect();
        let run = s.simulate_day(&items, 77).unwrap();
        let total: f64 = run.outcomes.iter().map(|o| o.realized_regret).sum();
        assert!((run.summary.total_realized_regret - total).abs() < 1e-6);
        assert_eq!(run.summary.n, 300);
        assert_eq!(
            run.summary.incident_count,
            run.outcomes.iter().filter(|o| o.incident).count() as u64
        );
        assert!(run.summary.incident_count <= run.summary.n);
    }

    #[test]
    fn day_seeds_differ() {
        assert_ne!(day_seed(1, 0), day_seed(1, 1));
        assert_ne!(day_seed(1, 0), day_seed(2, 0));
    }
}
