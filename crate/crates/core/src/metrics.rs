//! Expected best-of-R normalized energy.
//!
//! For a distribution over feasible states sorted by normalized energy `eps`
//! with inclusive cumulative mass `F_k`, the expected minimum of `R`
//! independent draws is
//!
//! ```text
//! <BEST_R> = sum_k eps_k [ (1 - F_{k-1})^R - (1 - F_k)^R ],   F_{-1} = 0.
//! ```
//!
//! Lower is better; `<BEST_1>` is the mean of `eps`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::EnergyTable;
use crate::subspace_sim::SubspaceState;

pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub epsilon: f64,
    pub probability: f64,
    /// Inclusive cumulative probability up to and including this group.
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDistribution {
    groups: Vec<Group>,
}

impl ScoredDistribution {
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.groups.iter().map(|g| g.epsilon * g.probability).sum()
    }
}

/// Sort order and tie groups of a fixed energy vector, reusable across many
/// probability vectors.
#[derive(Debug, Clone)]
pub struct Scorer {
    order: Vec<usize>,
    /// Exclusive end offsets into `order`, one per group.
    ends: Vec<usize>,
    epsilons: Vec<f64>,
}

impl Scorer {
    pub fn new(epsilons: &[f64], tie_tolerance: f64) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::invalid("no energies to score"));
        }
        if epsilons.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("non-finite energy"));
        }
        let mut order: Vec<usize> = (0..epsilons.len()).collect();
        order.sort_by(|&a, &b| epsilons[a].total_cmp(&epsilons[b]).then(a.cmp(&b)));
        let mut ends = Vec::new();
        let mut group_eps = Vec::new();
        let mut anchor = epsilons[order[0]];
        group_eps.push(anchor);
        for (pos, &idx) in order.iter().enumerate().skip(1) {
            if epsilons[idx] - anchor > tie_tolerance {
                ends.push(pos);
                anchor = epsilons[idx];
                group_eps.push(anchor);
            }
        }
        ends.push(order.len());
        Ok(Self {
            order,
            ends,
            epsilons: group_eps,
        })
    }

    pub fn from_table(table: &EnergyTable, tie_tolerance: f64) -> Result<Self> {
        Self::new(table.normalized(), tie_tolerance)
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    fn check(&self, probabilities: &[f64]) -> Result<()> {
        if probabilities.len() != self.order.len() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                self.order.len(),
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite probability {p}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    pub fn score(&self, probabilities: &[f64]) -> Result<ScoredDistribution> {
        self.check(probabilities)?;
        let mut start = 0;
        let mut cumulative = 0.0;
        let groups = self
            .ends
            .iter()
            .zip(&self.epsilons)
            .map(|(&end, &epsilon)| {
                let probability: f64 = self.order[start..end]
                    .iter()
                    .map(|&i| probabilities[i])
                    .sum();
                start = end;
                cumulative += probability;
                Group {
                    epsilon,
                    probability,
                    cumulative,
                }
            })
            .collect();
        Ok(ScoredDistribution { groups })
    }

    /// `<BEST_R>` straight from a probability vector, skipping the
    /// intermediate group list.
    pub fn best_r(&self, probabilities: &[f64], r: u32) -> Result<f64> {
        if r < 1 {
            return Err(Error::invalid("R must be at least 1"));
        }
        self.check(probabilities)?;
        let mut start = 0;
        let mut cumulative = 0.0;
        let mut tail_prev = 1.0;
        let mut value = 0.0;
        for (&end, &epsilon) in self.ends.iter().zip(&self.epsilons) {
            cumulative += self.order[start..end]
                .iter()
                .map(|&i| probabilities[i])
                .sum::<f64>();
            start = end;
            let tail = (1.0 - cumulative).max(0.0).powi(r as i32);
            value += epsilon * (tail_prev - tail);
            tail_prev = tail;
        }
        Ok(value)
    }
}

pub fn score(
    probabilities: &[f64],
    table: &EnergyTable,
    tie_tolerance: f64,
) -> Result<ScoredDistribution> {
    Scorer::from_table(table, tie_tolerance)?.score(probabilities)
}

pub fn expected_best_r(dist: &ScoredDistribution, r: u32) -> Result<f64> {
    if r < 1 {
        return Err(Error::invalid("R must be at least 1"));
    }
    let mut prev_tail = 1.0;
    let mut value = 0.0;
    for g in &dist.groups {
        let tail = (1.0 - g.cumulative).max(0.0).powi(r as i32);
        value += g.epsilon * (prev_tail - tail);
        prev_tail = tail;
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub best_r: BTreeMap<u32, f64>,
    pub expectation: f64,
    pub optimum_probability: f64,
}

impl MetricReport {
    pub fn get(&self, r: u32) -> Option<f64> {
        self.best_r.get(&r).copied()
    }
}

/// Reports every requested `R`, always including 1 and 5.
pub fn metric_report(
    state: &SubspaceState,
    table: &EnergyTable,
    r_list: &[u32],
) -> Result<MetricReport> {
    let dist = score(&state.probabilities(), table, DEFAULT_TIE_TOLERANCE)?;
    report_from_distribution(&dist, r_list)
}

pub fn report_from_distribution(dist: &ScoredDistribution, r_list: &[u32]) -> Result<MetricReport> {
    let mut best_r = BTreeMap::new();
    for &r in r_list.iter().chain(&[1, 5]) {
        best_r.insert(r, expected_best_r(dist, r)?);
    }
    let optimum_probability = dist
        .groups
        .first()
        .filter(|g| g.epsilon <= DEFAULT_TIE_TOLERANCE)
        .map_or(0.0, |g| g.probability);
    Ok(MetricReport {
        expectation: best_r[&1],
        best_r,
        optimum_probability,
    })
}
