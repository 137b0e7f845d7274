//! Solves both models on a synthetic DIK-shaped district and prints timings.

use std::time::Instant;

use vaxplan_core::allocation::{solve_allocation, PlanningParams};
use vaxplan_core::district::{generate_synthetic, SyntheticShape};
use vaxplan_core::need::compute_need;
use vaxplan_core::traveltime::{build_matrix, SpeedModel};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let district = generate_synthetic(seed, &SyntheticShape::default()).unwrap();
    let need = compute_need(&district);
    let times = build_matrix(&district, &SpeedModel::default()).unwrap();
    println!("total need {}", need.total_visits);

    let runs = [
        ("model 2 exact", PlanningParams::model_two(46)),
        ("model 1 eps 0.03", PlanningParams::model_one(46, 0.03)),
        ("model 1 eps 0.25", PlanningParams::model_one(46, 0.25)),
    ];
    for (label, params) in runs {
        let start = Instant::now();
        let outcome = solve_allocation(&district, &need, &times, &params).unwrap();
        match outcome.plan() {
            Some(plan) => println!(
                "{label}: {:.1} h, alpha [{:.4}, {:.4}], localities {:?}, nodes {}, {:?}",
                plan.total_travel_hours,
                plan.alpha_min,
                plan.alpha_max,
                plan.locality_counts(),
                plan.nodes_explored,
                start.elapsed()
            ),
            None => println!("{label}: infeasible, {:?}", start.elapsed()),
        }
    }
}
