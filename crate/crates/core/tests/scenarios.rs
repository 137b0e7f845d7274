mod common;

use common::load_fixture;
use vaxplan_core::allocation::{infeasibility_threshold, solve_allocation, AllocationError, AllocationOutcome, PlanningParams};
use vaxplan_core::district::District;
use vaxplan_core::need::{compute_need, NeedMatrix};
use vaxplan_core::report::{self, to_json};
use vaxplan_core::scenario::{compare_models, percent_saving, sweep, RowStatus};
use vaxplan_core::traveltime::build_matrix;
use vaxplan_core::{SpeedModel, TravelTimeMatrix};

const GRID: [f64; 6] = [0.03, 0.05, 0.10, 0.15, 0.20, 0.25];

fn prepared(name: &str) -> (District, NeedMatrix, TravelTimeMatrix) {
    let d = load_fixture(name);
    let need = compute_need(&d);
    let times = build_matrix(&d, &SpeedModel::default()).unwrap();
    (d, need, times)
}

fn threshold_params() -> PlanningParams {
    PlanningParams::model_one(3, 0.0)
}

#[test]
fn threshold_fixture_finds_the_smallest_feasible_band() {
    let (d, need, times) = prepared("threshold.json");
    let p = threshold_params();
    assert_eq!(infeasibility_threshold(&d, &need, &times, &p, &[0.0, 0.05, 0.10]).unwrap(), Some(0.10));
    assert_eq!(infeasibility_threshold(&d, &need, &times, &p, &[0.0, 0.05]).unwrap(), None);
    assert_eq!(infeasibility_threshold(&d, &need, &times, &p, &[0.10, 0.5]).unwrap(), Some(0.10));
}

#[test]
fn threshold_fixture_cross_boundary_reaches_exact_equity() {
    let (d, need, times) = prepared("threshold.json");
    let plan = solve_allocation(&d, &need, &times, &PlanningParams::model_two(3)).unwrap();
    let plan = plan.plan().expect("feasible");
    assert!((plan.alpha_min - 4095.0 / 30000.0).abs() < 1e-9);
    assert!(plan.alpha_spread() < 1e-9);
    // One vaccinator's surplus crosses the 10 km road: 1365 - 15000 * alpha visits.
    let crossing = 1365.0 * 2.0 - 15000.0 * 4095.0 / 30000.0;
    let expected = crossing * 2.0 * 20.0 / 60.0 / 5.0;
    assert!((plan.total_travel_hours - expected).abs() < 1e-6, "{}", plan.total_travel_hours);
}

#[test]
fn infeasible_rows_stay_in_the_sweep() {
    let (d, need, times) = prepared("threshold.json");
    let table = sweep(&d, &need, &times, &threshold_params(), &[0.0, 0.05, 0.10, 0.2]).unwrap();
    let status: Vec<RowStatus> = table.rows.iter().map(|r| r.status).collect();
    assert_eq!(status, [RowStatus::Infeasible, RowStatus::Infeasible, RowStatus::Optimal, RowStatus::Optimal]);
    assert_eq!(table.baseline_epsilon, Some(0.10));
    assert!(table.rows[0].note.is_some() && table.rows[0].saving.is_none());
    // Co-located centres travel nowhere, so there is no base for a percentage.
    assert_eq!(table.rows[2].travel_hours, Some(0.0));
    assert!(table.rows[2].saving.is_none());
}

#[test]
fn descending_grids_are_rejected() {
    let (d, need, times) = prepared("threshold.json");
    assert!(matches!(
        sweep(&d, &need, &times, &threshold_params(), &[0.1, 0.05]),
        Err(AllocationError::InvalidGrid)
    ));
}

#[test]
fn bundled_sweep_has_binding_bands_and_falling_travel() {
    let (d, need, times) = prepared("dik_synthetic.json");
    let params = PlanningParams::model_one(46, 0.03);
    let table = sweep(&d, &need, &times, &params, &GRID).unwrap();
    assert_eq!(table.rows.len(), GRID.len());
    assert_eq!(table.baseline_epsilon, Some(0.03));
    let mut previous = f64::INFINITY;
    for (row, eps) in table.rows.iter().zip(GRID) {
        assert_eq!(row.status, RowStatus::Optimal);
        let spread = row.alpha_max.unwrap() - row.alpha_min.unwrap();
        assert!((spread - eps).abs() <= 1e-4, "{eps}: spread {spread}");
        let hours = row.travel_hours.unwrap();
        assert!(hours <= previous + 1e-6);
        previous = hours;
        assert_eq!(row.vaccinators_by_locality.values().sum::<u32>(), 46);
    }
    // Rows are independent: a single solve gives the same answer as its row.
    let alone = solve_allocation(&d, &need, &times, &PlanningParams::model_one(46, 0.10)).unwrap();
    assert!((alone.travel_hours().unwrap() - table.rows[2].travel_hours.unwrap()).abs() < 1e-9);
}

#[test]
fn bundled_comparison_favours_crossing_boundaries() {
    let (d, need, times) = prepared("dik_synthetic.json");
    let cmp = compare_models(&d, &need, &times, &PlanningParams::model_one(46, 0.03)).unwrap();
    let (one, two) = (cmp.model1.plan().unwrap(), cmp.model2.plan().unwrap());
    assert_eq!(one.model, 1);
    assert_eq!(two.model, 2);
    assert!(two.exact_equity);
    let alpha = two.alpha_min;
    assert!((0.551..0.59).contains(&alpha), "{alpha}");
    let saving = cmp.saving.unwrap();
    assert!(saving.percent >= 0.0);
    assert_eq!(saving, percent_saving(one.total_travel_hours, two.total_travel_hours).unwrap());
    assert_eq!(cmp.locality_shift.len(), 3);
    let moved: u32 = cmp.locality_shift.iter().map(|s| s.model2.unwrap()).sum();
    assert_eq!(moved, 46);
}

#[test]
fn json_reports_are_stable() {
    let (d, need, times) = prepared("threshold.json");
    let outcome = solve_allocation(&d, &need, &times, &threshold_params()).unwrap();
    let text = to_json(&outcome);
    assert!(text.ends_with("}\n"));
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["status"], "INFEASIBLE");
    let back: AllocationOutcome = serde_json::from_str(&text).unwrap();
    assert_eq!(back, outcome);
    assert_eq!(to_json(&outcome), text);

    let summary = report::district_summary(&d, &need, &times);
    assert_eq!(summary.total_need, 30000);
    assert_eq!(summary.localities.len(), 2);
}

#[test]
fn csv_tables_have_one_line_per_row() {
    let (d, need, times) = prepared("threshold.json");
    assert_eq!(report::need_csv(&need).lines().count(), 1 + 2 + 1);
    assert_eq!(report::times_csv(&times).lines().count(), 1 + 2);
    let table = sweep(&d, &need, &times, &threshold_params(), &[0.0, 0.1]).unwrap();
    let ids: Vec<String> = d.localities().iter().map(|l| l.id.clone()).collect();
    assert_eq!(report::sweep_csv(&table, &ids).lines().count(), 1 + 2);
}
