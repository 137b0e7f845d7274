mod common;

use common::{allocation_by_enumeration, allocation_case as case, close, model_variants, Case, Reference};
use proptest::prelude::*;
use vaxplan_core::allocation::{
    build_program, infeasibility_threshold, solve_allocation, AllocationError, AllocationOutcome,
    BuildError, EquityColumns, PlanningParams, PLAN_TOL,
};

fn check_against_oracle(c: &Case, params: &PlanningParams) {
    let outcome = solve_allocation(&c.district, &c.need, &c.times, params).expect("solves");
    match allocation_by_enumeration(&c.district, &c.need, &c.times, params) {
        Reference::Infeasible => assert!(!outcome.is_optimal(), "{params:?}"),
        Reference::Optimal(best) => {
            let plan = outcome.plan().unwrap_or_else(|| panic!("missed a plan: {params:?}"));
            assert!(close(plan.total_travel_hours, best, 1e-6), "{} vs {best}", plan.total_travel_hours);
        }
    }
}

#[test]
fn both_models_match_enumeration() {
    for seed in 0..60 {
        let (c, params) = case(seed);
        for p in model_variants(&params) {
            check_against_oracle(&c, &p);
        }
    }
}

#[test]
fn plans_satisfy_the_model() {
    for seed in 100..130 {
        let (c, params) = case(seed);
        for p in model_variants(&params) {
            let Some(plan) = solve_allocation(&c.district, &c.need, &c.times, &p).unwrap().plan().cloned() else {
                continue;
            };
            let capacity = p.capacity_per_vaccinator() as f64;
            let total: u32 = plan.vaccinators_by_centre.iter().map(|a| a.vaccinators).sum();
            assert_eq!(total, p.total_vaccinators);
            let by_locality: u32 = plan.vaccinators_by_locality.iter().map(|a| a.vaccinators).sum();
            assert_eq!(by_locality, p.total_vaccinators);
            for alloc in &plan.vaccinators_by_centre {
                let work: f64 = plan.flows.iter().filter(|f| f.centre_id == alloc.centre_id).map(|f| f.visits).sum();
                assert!((work - capacity * f64::from(alloc.vaccinators)).abs() <= PLAN_TOL * capacity.max(1.0) * 10.0);
            }
            for flow in &plan.flows {
                assert!(flow.visits > 0.0);
                if !p.cross_boundary {
                    let centre = c.district.centres().iter().find(|x| x.id == flow.centre_id).unwrap();
                    let uc = c.district.union_councils().iter().find(|x| x.id == flow.union_council_id).unwrap();
                    assert_eq!(centre.locality_id, uc.locality_id);
                }
            }
            for entry in &plan.coverage {
                assert!(entry.need > 0);
                assert!(entry.alpha >= plan.alpha_min - PLAN_TOL && entry.alpha <= plan.alpha_max + PLAN_TOL);
            }
            if p.exact_equity {
                assert!(plan.alpha_spread() <= PLAN_TOL);
                let expected = capacity * f64::from(p.total_vaccinators) / c.need.total_visits as f64;
                assert!((plan.alpha_min - expected).abs() <= 1e-6);
            } else {
                assert!(plan.alpha_spread() <= p.equity_deviation + PLAN_TOL);
            }
            let hours: f64 = plan.flows.iter().map(|f| f.travel_hours).sum();
            assert!(close(hours, plan.total_travel_hours, 1e-9));
        }
    }
}

#[test]
fn program_shape() {
    let (c, params) = case(3);
    let program = build_program(&c.need, &c.times, &c.district, &PlanningParams { cross_boundary: true, ..params }).unwrap();
    let demands = program.demands.len();
    let centres = c.district.centres().len();
    assert_eq!(program.flows.len(), demands * centres);
    assert_eq!(program.vaccinator_columns.len(), centres);
    assert_eq!(program.rows.coverage, demands);
    assert_eq!(program.rows.utilization, centres);
    assert_eq!(program.rows.budget, 1);
    assert_eq!(program.rows.band, demands + 1);
    assert!(matches!(program.equity, EquityColumns::Banded { .. }));
    let integer = program.instance.integer_mask.iter().filter(|&&b| b).count();
    assert_eq!(integer, centres);
}

#[test]
fn bad_parameters_are_build_errors() {
    let (c, params) = case(4);
    for bad in [
        PlanningParams { total_vaccinators: 0, ..params },
        PlanningParams { equity_deviation: 1.5, ..params },
        PlanningParams { equity_deviation: -0.1, ..params },
        PlanningParams { round_trip_factor: 0.0, ..params },
        PlanningParams { children_per_day: 0, ..params },
    ] {
        assert!(matches!(
            solve_allocation(&c.district, &c.need, &c.times, &bad),
            Err(AllocationError::Build(BuildError::Params(_)))
        ));
    }
}

#[test]
fn too_many_vaccinators_is_reported_infeasible() {
    let (c, params) = case(5);
    let capacity = params.capacity_per_vaccinator();
    let surplus = (c.need.total_visits / capacity) as u32 + 1;
    let p = PlanningParams { total_vaccinators: surplus, ..PlanningParams::model_two(0) };
    let p = PlanningParams { children_per_day: params.children_per_day, working_days: params.working_days, ..p };
    match solve_allocation(&c.district, &c.need, &c.times, &p).unwrap() {
        AllocationOutcome::Infeasible(report) => {
            assert_eq!(report.max_supportable_vaccinators, c.need.total_visits / capacity);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn grids_are_checked() {
    let (c, params) = case(6);
    for grid in [&[][..], &[0.2, 0.1][..], &[0.1, 1.2][..]] {
        assert!(matches!(
            infeasibility_threshold(&c.district, &c.need, &c.times, &params, grid),
            Err(AllocationError::InvalidGrid)
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn crossing_boundaries_never_costs_more(seed in 1000u64..100_000) {
        let (c, params) = case(seed);
        let solve = |p: &PlanningParams| solve_allocation(&c.district, &c.need, &c.times, p).unwrap().travel_hours();
        let bound = solve(&PlanningParams { cross_boundary: false, exact_equity: false, ..params });
        let free = solve(&PlanningParams { cross_boundary: true, exact_equity: false, ..params });
        if let Some(one) = bound {
            let two = free.expect("cross-boundary is a relaxation");
            prop_assert!(two <= one + 1e-6 * (1.0 + one));
        }
    }

    #[test]
    fn wider_bands_never_cost_more(seed in 1000u64..100_000, cross in any::<bool>()) {
        let (c, params) = case(seed);
        let mut previous: Option<f64> = None;
        for eps in [0.0, 0.05, 0.1, 0.2, 0.4, 1.0] {
            let p = PlanningParams { equity_deviation: eps, cross_boundary: cross, exact_equity: false, ..params };
            let hours = solve_allocation(&c.district, &c.need, &c.times, &p).unwrap().travel_hours();
            match (previous, hours) {
                (Some(a), Some(b)) => prop_assert!(b <= a + 1e-6 * (1.0 + a)),
                (Some(_), None) => prop_assert!(false, "feasibility lost at {eps}"),
                _ => {}
            }
            if hours.is_some() {
                previous = hours;
            }
        }
    }

    #[test]
    fn exact_equity_is_never_cheaper_than_a_band(seed in 1000u64..100_000, cross in any::<bool>()) {
        let (c, params) = case(seed);
        let solve = |exact| {
            let p = PlanningParams { cross_boundary: cross, exact_equity: exact, ..params };
            solve_allocation(&c.district, &c.need, &c.times, &p).unwrap().travel_hours()
        };
        if let Some(exact) = solve(true) {
            let banded = solve(false).expect("the band contains exact equity");
            prop_assert!(banded <= exact + 1e-6 * (1.0 + exact));
        }
    }

    #[test]
    fn travel_scales_with_the_round_trip_factor(seed in 1000u64..100_000, factor in 0.5f64..4.0) {
        let (c, params) = case(seed);
        let base = PlanningParams { round_trip_factor: 1.0, ..params };
        let scaled = PlanningParams { round_trip_factor: factor, ..params };
        let one = solve_allocation(&c.district, &c.need, &c.times, &base).unwrap().travel_hours();
        let many = solve_allocation(&c.district, &c.need, &c.times, &scaled).unwrap().travel_hours();
        match (one, many) {
            (Some(a), Some(b)) => prop_assert!(close(a * factor, b, 1e-6)),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }
}
