//! Vaccinator allocation models.
//!
//! Both models choose an integer number of vaccinators per centre and a
//! continuous number of annual visits from each centre to each (union council,
//! age category) so that coverage is as even as allowed and travel is minimal:
//!
//! * coverage: `sum_c x[c,u,a] = alpha[u,a] * need[u,a]` with `alpha <= 1`
//! * full utilization: `sum_{u,a} x[c,u,a] = K * v[c]`, `K = children_per_day * working_days`
//! * budget: `sum_c v[c] = V`
//! * equity: either one common `alpha` (exact), or `alpha_lo <= alpha[u,a] <= alpha_hi`
//!   with `alpha_hi - alpha_lo <= epsilon` (banded)
//! * objective: `sum round_trip * t[c,u] / 60 * x[c,u,a] / children_per_day` hours,
//!   one trip per vaccinator-day.
//!
//! The locality-bound model only creates flow columns inside a locality. Per
//! union council coverage is substituted out of the program and recovered
//! from the flows when a plan is reported.

use std::collections::{BTreeMap, HashMap};

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::district::{AgeCategory, District};
use crate::lp::{LinearProgram, Relation};
use crate::mip::{solve_mip, MipError, MipInstance, MipStatus};
use crate::need::NeedMatrix;
use crate::traveltime::TravelTimeMatrix;

/// Tolerance used when checking plan invariants and snapping tiny flows.
pub const PLAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningParams {
    pub children_per_day: u32,
    pub working_days: u32,
    pub total_vaccinators: u32,
    pub equity_deviation: f64,
    pub round_trip_factor: f64,
    /// `false` is the locality-bound model, `true` the cross-boundary model.
    pub cross_boundary: bool,
    /// One common coverage level; `equity_deviation` is ignored.
    pub exact_equity: bool,
}

impl Default for PlanningParams {
    fn default() -> Self {
        PlanningParams {
            children_per_day: 5,
            working_days: 273,
            total_vaccinators: 46,
            equity_deviation: 0.03,
            round_trip_factor: 2.0,
            cross_boundary: false,
            exact_equity: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field} must be {requirement} (got {value})")]
pub struct ParamsError {
    pub field: &'static str,
    pub requirement: &'static str,
    pub value: String,
}

impl PlanningParams {
    /// Locality-bound service with a coverage band of width `epsilon`.
    pub fn model_one(total_vaccinators: u32, epsilon: f64) -> Self {
        PlanningParams {
            total_vaccinators,
            equity_deviation: epsilon,
            ..Self::default()
        }
    }

    /// Cross-boundary service with exactly equal coverage everywhere.
    pub fn model_two(total_vaccinators: u32) -> Self {
        PlanningParams {
            total_vaccinators,
            cross_boundary: true,
            exact_equity: true,
            ..Self::default()
        }
    }

    /// 1 for locality-bound, 2 for cross-boundary.
    pub fn model_number(&self) -> u8 {
        if self.cross_boundary {
            2
        } else {
            1
        }
    }

    /// Annual visits one vaccinator delivers.
    pub fn capacity_per_vaccinator(&self) -> u64 {
        u64::from(self.children_per_day) * u64::from(self.working_days)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let fail = |field, requirement, value: String| {
            Err(ParamsError {
                field,
                requirement,
                value,
            })
        };
        if self.children_per_day < 1 {
            return fail("children_per_day", ">= 1", self.children_per_day.to_string());
        }
        if self.working_days < 1 {
            return fail("working_days", ">= 1", self.working_days.to_string());
        }
        if self.total_vaccinators < 1 {
            return fail("total_vaccinators", ">= 1", self.total_vaccinators.to_string());
        }
        if !(0.0..=1.0).contains(&self.equity_deviation) {
            return fail(
                "equity_deviation",
                "within [0, 1]",
                self.equity_deviation.to_string(),
            );
        }
        if !(self.round_trip_factor.is_finite() && self.round_trip_factor > 0.0) {
            return fail(
                "round_trip_factor",
                "positive",
                self.round_trip_factor.to_string(),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("travel time matrix has no entry for centre {centre} and union council {union_council}")]
    MissingEntry {
        centre: String,
        union_council: String,
    },
    #[error("need matrix has no row for union council {0}")]
    MissingNeed(String),
    #[error("no centre may serve union council {union_council} ({age}) under locality-bound service")]
    NoAdmissibleFlows {
        union_council: String,
        age: AgeCategory,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("solver failed: {0}")]
    Solver(#[from] MipError<f64>),
    #[error("epsilon grid must be non-empty, ascending and within [0, 1]")]
    InvalidGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowColumn {
    pub centre: usize,
    pub union_council: usize,
    pub age: AgeCategory,
    pub column: usize,
    /// Travel hours charged per delivered visit.
    pub hours_per_visit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquityColumns {
    Exact { alpha: usize },
    Banded { high: usize, low: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RowCounts {
    pub coverage: usize,
    pub utilization: usize,
    pub budget: usize,
    pub band: usize,
}

impl RowCounts {
    pub fn total(&self) -> usize {
        self.coverage + self.utilization + self.budget + self.band
    }
}

/// A built model: the mixed-integer program plus the column map needed to read plans back.
#[derive(Debug, Clone)]
pub struct AllocationProgram {
    pub instance: MipInstance<f64>,
    pub params: PlanningParams,
    /// One integer column per centre, district order.
    pub vaccinator_columns: Vec<usize>,
    pub flows: Vec<FlowColumn>,
    pub equity: EquityColumns,
    pub rows: RowCounts,
    /// (union council position, age, need) for every pair with positive need.
    pub demands: Vec<(usize, AgeCategory, u64)>,
}

pub fn build_program(
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    district: &District,
    params: &PlanningParams,
) -> Result<AllocationProgram, BuildError> {
    params.validate()?;
    let centres = district.centres();
    let ucs = district.union_councils();
    let capacity = params.capacity_per_vaccinator() as f64;
    let v_total = params.total_vaccinators;

    let need_rows: HashMap<&str, usize> = need
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.union_council_id.as_str(), i))
        .collect();
    let time_rows: HashMap<&str, usize> = times
        .centre_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let time_cols: HashMap<&str, usize> = times
        .union_council_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut demands = Vec::new();
    for (u, uc) in ucs.iter().enumerate() {
        let row = *need_rows
            .get(uc.id.as_str())
            .ok_or_else(|| BuildError::MissingNeed(uc.id.clone()))?;
        for &age in &need.categories {
            let n = need.get(row, age);
            if n > 0 {
                demands.push((u, age, n));
            }
        }
    }

    let mut lp = LinearProgram::new();
    let vaccinator_columns: Vec<usize> = centres
        .iter()
        .map(|c| lp.add_variable(format!("v[{}]", c.id), 0.0, 0.0, f64::from(v_total)))
        .collect();

    let mut flows = Vec::new();
    let mut flows_by_demand: Vec<Vec<usize>> = vec![Vec::new(); demands.len()];
    for (ci, centre) in centres.iter().enumerate() {
        for (d, &(u, age, n)) in demands.iter().enumerate() {
            let uc = &ucs[u];
            if !params.cross_boundary && uc.locality_id != centre.locality_id {
                continue;
            }
            let minutes = time_rows
                .get(centre.id.as_str())
                .zip(time_cols.get(uc.id.as_str()))
                .and_then(|(&r, &c)| times.minutes.get(r)?.get(c).copied())
                .ok_or_else(|| BuildError::MissingEntry {
                    centre: centre.id.clone(),
                    union_council: uc.id.clone(),
                })?;
            let hours_per_visit = params.round_trip_factor * minutes / 60.0
                / f64::from(params.children_per_day);
            let column = lp.add_variable(
                format!("x[{},{},{}]", centre.id, uc.id, age),
                hours_per_visit,
                0.0,
                n as f64,
            );
            flows_by_demand[d].push(column);
            flows.push(FlowColumn {
                centre: ci,
                union_council: u,
                age,
                column,
                hours_per_visit,
            });
        }
    }
    for (d, columns) in flows_by_demand.iter().enumerate() {
        if columns.is_empty() {
            let (u, age, _) = demands[d];
            return Err(BuildError::NoAdmissibleFlows {
                union_council: ucs[u].id.clone(),
                age,
            });
        }
    }

    let equity = if params.exact_equity {
        EquityColumns::Exact {
            alpha: lp.add_variable("alpha", 0.0, 0.0, 1.0),
        }
    } else {
        EquityColumns::Banded {
            high: lp.add_variable("alpha_hi", 0.0, 0.0, 1.0),
            low: lp.add_variable("alpha_lo", 0.0, 0.0, 1.0),
        }
    };
    let mut rows = RowCounts::default();

    // Coverage: delivered visits against the common (or upper band) level.
    let top = match equity {
        EquityColumns::Exact { alpha } => alpha,
        EquityColumns::Banded { high, .. } => high,
    };
    for (d, &(_, _, n)) in demands.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = flows_by_demand[d].iter().map(|&c| (c, 1.0)).collect();
        terms.push((top, -(n as f64)));
        let relation = match equity {
            EquityColumns::Exact { .. } => Relation::Eq,
            EquityColumns::Banded { .. } => Relation::Le,
        };
        lp.add_sparse_constraint(&terms, relation, 0.0);
        rows.coverage += 1;
    }

    // Full utilization of every allocated vaccinator.
    for (ci, &v_col) in vaccinator_columns.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = flows
            .iter()
            .filter(|f| f.centre == ci)
            .map(|f| (f.column, 1.0))
            .collect();
        terms.push((v_col, -capacity));
        lp.add_sparse_constraint(&terms, Relation::Eq, 0.0);
        rows.utilization += 1;
    }

    let budget: Vec<(usize, f64)> = vaccinator_columns.iter().map(|&c| (c, 1.0)).collect();
    lp.add_sparse_constraint(&budget, Relation::Eq, f64::from(v_total));
    rows.budget = 1;

    if let EquityColumns::Banded { high, low } = equity {
        for (d, &(_, _, n)) in demands.iter().enumerate() {
            let mut terms: Vec<(usize, f64)> =
                flows_by_demand[d].iter().map(|&c| (c, 1.0)).collect();
            terms.push((low, -(n as f64)));
            lp.add_sparse_constraint(&terms, Relation::Ge, 0.0);
            rows.band += 1;
        }
        lp.add_sparse_constraint(
            &[(high, 1.0), (low, -1.0)],
            Relation::Le,
            params.equity_deviation,
        );
        rows.band += 1;
    }

    let mut mask = vec![false; lp.num_vars()];
    for &c in &vaccinator_columns {
        mask[c] = true;
    }
    debug!(
        "model {} program: {} columns, {} rows",
        params.model_number(),
        lp.num_vars(),
        rows.total()
    );
    Ok(AllocationProgram {
        instance: MipInstance::new(lp, mask),
        params: *params,
        vaccinator_columns,
        flows,
        equity,
        rows,
        demands,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityAllocation {
    pub locality_id: String,
    pub name: String,
    pub vaccinators: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentreAllocation {
    pub centre_id: String,
    pub locality_id: String,
    pub vaccinators: u32,
}

/// Coverage of one (union council, age) pair with positive need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub union_council_id: String,
    pub locality_id: String,
    pub age: AgeCategory,
    pub need: u64,
    pub delivered: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub centre_id: String,
    pub union_council_id: String,
    pub age: AgeCategory,
    pub visits: f64,
    pub travel_hours: f64,
}

/// An optimal allocation. Flows list only positive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub model: u8,
    pub exact_equity: bool,
    pub equity_deviation: f64,
    pub total_vaccinators: u32,
    pub capacity_per_vaccinator: u64,
    pub total_travel_hours: f64,
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub vaccinators_by_locality: Vec<LocalityAllocation>,
    pub vaccinators_by_centre: Vec<CentreAllocation>,
    pub coverage: Vec<CoverageEntry>,
    pub flows: Vec<FlowEntry>,
    pub nodes_explored: usize,
}

impl AllocationPlan {
    pub fn locality_counts(&self) -> BTreeMap<String, u32> {
        self.vaccinators_by_locality
            .iter()
            .map(|l| (l.locality_id.clone(), l.vaccinators))
            .collect()
    }

    pub fn alpha_spread(&self) -> f64 {
        self.alpha_max - self.alpha_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub model: u8,
    pub exact_equity: bool,
    pub equity_deviation: f64,
    pub total_vaccinators: u32,
    pub reason: String,
    /// Largest V whose full-utilization workload fits within total need.
    pub max_supportable_vaccinators: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AllocationOutcome {
    Optimal(AllocationPlan),
    Infeasible(InfeasibilityReport),
}

impl AllocationOutcome {
    pub fn plan(&self) -> Option<&AllocationPlan> {
        match self {
            AllocationOutcome::Optimal(plan) => Some(plan),
            AllocationOutcome::Infeasible(_) => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, AllocationOutcome::Optimal(_))
    }

    pub fn travel_hours(&self) -> Option<f64> {
        self.plan().map(|p| p.total_travel_hours)
    }
}

impl AllocationProgram {
    /// Reads an optimal MIP point back into an allocation plan.
    pub fn extract_plan(
        &self,
        district: &District,
        values: &[f64],
        nodes_explored: usize,
    ) -> AllocationPlan {
        let centres = district.centres();
        let ucs = district.union_councils();
        let vaccinators: Vec<u32> = self
            .vaccinator_columns
            .iter()
            .map(|&c| values[c].round().max(0.0) as u32)
            .collect();

        let vaccinators_by_locality = district
            .localities()
            .iter()
            .map(|l| LocalityAllocation {
                locality_id: l.id.clone(),
                name: l.name.clone(),
                vaccinators: centres
                    .iter()
                    .zip(&vaccinators)
                    .filter(|(c, _)| c.locality_id == l.id)
                    .map(|(_, &v)| v)
                    .sum(),
            })
            .collect();
        let vaccinators_by_centre = centres
            .iter()
            .zip(&vaccinators)
            .map(|(c, &v)| CentreAllocation {
                centre_id: c.id.clone(),
                locality_id: c.locality_id.clone(),
                vaccinators: v,
            })
            .collect();

        let mut delivered: HashMap<(usize, AgeCategory), f64> = HashMap::new();
        let mut flows = Vec::new();
        let mut total_travel_hours = 0.0;
        for f in &self.flows {
            let visits = values[f.column];
            if visits <= PLAN_TOL * 1e-3 {
                continue;
            }
            *delivered.entry((f.union_council, f.age)).or_insert(0.0) += visits;
            let travel_hours = visits * f.hours_per_visit;
            total_travel_hours += travel_hours;
            flows.push(FlowEntry {
                centre_id: centres[f.centre].id.clone(),
                union_council_id: ucs[f.union_council].id.clone(),
                age: f.age,
                visits,
                travel_hours,
            });
        }

        let coverage: Vec<CoverageEntry> = self
            .demands
            .iter()
            .map(|&(u, age, n)| {
                let got = delivered.get(&(u, age)).copied().unwrap_or(0.0);
                CoverageEntry {
                    union_council_id: ucs[u].id.clone(),
                    locality_id: ucs[u].locality_id.clone(),
                    age,
                    need: n,
                    delivered: got,
                    alpha: got / n as f64,
                }
            })
            .collect();
        let alpha_max = coverage.iter().map(|c| c.alpha).fold(f64::NAN, f64::max);
        let alpha_min = coverage.iter().map(|c| c.alpha).fold(f64::NAN, f64::min);

        AllocationPlan {
            model: self.params.model_number(),
            exact_equity: self.params.exact_equity,
            equity_deviation: self.params.equity_deviation,
            total_vaccinators: self.params.total_vaccinators,
            capacity_per_vaccinator: self.params.capacity_per_vaccinator(),
            total_travel_hours,
            alpha_max,
            alpha_min,
            vaccinators_by_locality,
            vaccinators_by_centre,
            coverage,
            flows,
            nodes_explored,
        }
    }
}

fn infeasibility_report(need: &NeedMatrix, params: &PlanningParams) -> InfeasibilityReport {
    let capacity = params.capacity_per_vaccinator();
    let workload = u64::from(params.total_vaccinators) * capacity;
    let max_supportable_vaccinators = need.total_visits / capacity;
    let reason = if workload > need.total_visits {
        format!(
            "{} vaccinators deliver {} visits a year but total need is only {}; use at most {} vaccinators",
            params.total_vaccinators, workload, need.total_visits, max_supportable_vaccinators
        )
    } else if params.exact_equity {
        "no integer allocation gives every union council the same coverage".to_string()
    } else {
        format!(
            "no integer allocation keeps coverage within a band of {}",
            params.equity_deviation
        )
    };
    InfeasibilityReport {
        model: params.model_number(),
        exact_equity: params.exact_equity,
        equity_deviation: params.equity_deviation,
        total_vaccinators: params.total_vaccinators,
        reason,
        max_supportable_vaccinators,
    }
}

/// Builds and solves one model. Infeasibility is an outcome, not an error.
pub fn solve_allocation(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
) -> Result<AllocationOutcome, AllocationError> {
    let program = build_program(need, times, district, params)?;
    let solution = solve_mip(&program.instance)?;
    Ok(match solution.status {
        MipStatus::Optimal => AllocationOutcome::Optimal(program.extract_plan(
            district,
            &solution.values,
            solution.nodes_explored,
        )),
        MipStatus::Infeasible => AllocationOutcome::Infeasible(infeasibility_report(need, params)),
    })
}

pub(crate) fn check_grid(epsilons: &[f64]) -> Result<(), AllocationError> {
    let in_range = epsilons.iter().all(|e| (0.0..=1.0).contains(e));
    let ascending = epsilons.windows(2).all(|w| w[0] <= w[1]);
    if epsilons.is_empty() || !in_range || !ascending {
        return Err(AllocationError::InvalidGrid);
    }
    Ok(())
}

/// Smallest band width in `epsilons` (ascending) for which the banded model is feasible.
pub fn infeasibility_threshold(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
    epsilons: &[f64],
) -> Result<Option<f64>, AllocationError> {
    check_grid(epsilons)?;
    for &epsilon in epsilons {
        let trial = PlanningParams {
            equity_deviation: epsilon,
            exact_equity: false,
            ..*params
        };
        if solve_allocation(district, need, times, &trial)?.is_optimal() {
            return Ok(Some(epsilon));
        }
    }
    Ok(None)
}
