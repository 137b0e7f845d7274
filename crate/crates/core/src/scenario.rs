//! Equity sweeps, model comparisons and savings arithmetic.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    check_grid, solve_allocation, AllocationError, AllocationOutcome, PlanningParams,
};
use crate::district::District;
use crate::need::NeedMatrix;
use crate::traveltime::TravelTimeMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowStatus {
    Optimal,
    Infeasible,
}

/// A percentage change, raw and as displayed (one decimal, halves away from zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saving {
    pub percent: f64,
    pub display: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("reference hours must be positive (got {0})")]
    NonPositiveReference(f64),
}

/// `100 * (reference - candidate) / reference`.
pub fn percent_saving(reference_hours: f64, candidate_hours: f64) -> Result<Saving, DomainError> {
    if reference_hours.is_nan() || reference_hours <= 0.0 {
        return Err(DomainError::NonPositiveReference(reference_hours));
    }
    let percent = 100.0 * (reference_hours - candidate_hours) / reference_hours;
    let rounded = (percent * 10.0).round() / 10.0;
    // Avoid printing "-0.0%".
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    Ok(Saving {
        percent,
        display: format!("{rounded:.1}%"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub epsilon: f64,
    pub status: RowStatus,
    pub travel_hours: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_min: Option<f64>,
    pub vaccinators_by_locality: BTreeMap<String, u32>,
    /// Travel saved relative to the baseline row.
    pub saving: Option<Saving>,
    /// Why the row has no plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Rows ordered by epsilon. The baseline is the first row with a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub model: u8,
    pub total_vaccinators: u32,
    pub baseline_epsilon: Option<f64>,
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffTable {
    pub fn optimal_rows(&self) -> impl Iterator<Item = &TradeoffRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Optimal)
    }
}

fn row_from(epsilon: f64, result: Result<AllocationOutcome, AllocationError>) -> TradeoffRow {
    let mut row = TradeoffRow {
        epsilon,
        status: RowStatus::Infeasible,
        travel_hours: None,
        alpha_max: None,
        alpha_min: None,
        vaccinators_by_locality: BTreeMap::new(),
        saving: None,
        note: None,
    };
    match result {
        Ok(AllocationOutcome::Optimal(plan)) => {
            row.status = RowStatus::Optimal;
            row.travel_hours = Some(plan.total_travel_hours);
            row.alpha_max = Some(plan.alpha_max);
            row.alpha_min = Some(plan.alpha_min);
            row.vaccinators_by_locality = plan.locality_counts();
        }
        Ok(AllocationOutcome::Infeasible(report)) => row.note = Some(report.reason),
        Err(err) => row.note = Some(err.to_string()),
    }
    row
}

/// Solves the banded model once per epsilon (ascending). `params.exact_equity`
/// is ignored. A row that fails to solve is reported infeasible with a note.
pub fn sweep(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
    epsilons: &[f64],
) -> Result<TradeoffTable, AllocationError> {
    check_grid(epsilons)?;
    params
        .validate()
        .map_err(|e| AllocationError::Build(e.into()))?;
    let mut rows: Vec<TradeoffRow> = epsilons
        .par_iter()
        .map(|&epsilon| {
            let trial = PlanningParams {
                equity_deviation: epsilon,
                exact_equity: false,
                ..*params
            };
            row_from(epsilon, solve_allocation(district, need, times, &trial))
        })
        .collect();

    let baseline = rows
        .iter()
        .find(|r| r.status == RowStatus::Optimal)
        .and_then(|r| Some((r.epsilon, r.travel_hours?)));
    if let Some((_, reference)) = baseline {
        for row in &mut rows {
            if let Some(hours) = row.travel_hours {
                row.saving = percent_saving(reference, hours).ok();
            }
        }
    }
    Ok(TradeoffTable {
        model: params.model_number(),
        total_vaccinators: params.total_vaccinators,
        baseline_epsilon: baseline.map(|(e, _)| e),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityShift {
    pub locality_id: String,
    pub name: String,
    pub model1: Option<u32>,
    pub model2: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub equity_deviation: f64,
    pub model1: AllocationOutcome,
    pub model2: AllocationOutcome,
    /// Travel saved by cross-boundary service, when both models have plans.
    pub saving: Option<Saving>,
    pub locality_shift: Vec<LocalityShift>,
}

/// Locality-bound service at `params.equity_deviation` against cross-boundary
/// service with exactly equal coverage.
pub fn compare_models(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
) -> Result<ModelComparison, AllocationError> {
    let one = PlanningParams {
        cross_boundary: false,
        exact_equity: false,
        ..*params
    };
    let two = PlanningParams {
        cross_boundary: true,
        exact_equity: true,
        ..*params
    };
    let model1 = solve_allocation(district, need, times, &one)?;
    let model2 = solve_allocation(district, need, times, &two)?;
    let saving = match (model1.travel_hours(), model2.travel_hours()) {
        (Some(reference), Some(candidate)) => percent_saving(reference, candidate).ok(),
        _ => None,
    };
    let counts = |outcome: &AllocationOutcome| outcome.plan().map(|p| p.locality_counts());
    let (first, second) = (counts(&model1), counts(&model2));
    let locality_shift = district
        .localities()
        .iter()
        .map(|l| LocalityShift {
            locality_id: l.id.clone(),
            name: l.name.clone(),
            model1: first.as_ref().and_then(|c| c.get(&l.id).copied()),
            model2: second.as_ref().and_then(|c| c.get(&l.id).copied()),
        })
        .collect();
    Ok(ModelComparison {
        equity_deviation: params.equity_deviation,
        model1,
        model2,
        saving,
        locality_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_decimal_percentages() {
        assert_eq!(percent_saving(22370.0, 19132.0).unwrap().display, "14.5%");
        assert_eq!(percent_saving(22370.0, 19192.0).unwrap().display, "14.2%");
        let same = percent_saving(1234.5, 1234.5).unwrap();
        assert_eq!(same.percent, 0.0);
        assert_eq!(same.display, "0.0%");
    }

    #[test]
    fn raw_value_is_kept() {
        let s = percent_saving(22370.0, 19132.0).unwrap();
        assert!((s.percent - 100.0 * 3238.0 / 22370.0).abs() < 1e-12);
    }

    #[test]
    fn losses_are_negative() {
        let s = percent_saving(100.0, 112.34).unwrap();
        assert_eq!(s.display, "-12.3%");
        assert_eq!(percent_saving(100.0, 100.04).unwrap().display, "0.0%");
    }

    #[test]
    fn reference_must_be_positive() {
        assert_eq!(
            percent_saving(0.0, 1.0),
            Err(DomainError::NonPositiveReference(0.0))
        );
        assert!(percent_saving(-5.0, 1.0).is_err());
        assert!(percent_saving(f64::NAN, 1.0).is_err());
    }
}
