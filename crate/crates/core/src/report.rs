//! Rendering shared by the command line and the service: JSON documents,
//! delimited tables and plain-text summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::allocation::{AllocationOutcome, AllocationPlan, InfeasibilityReport};
use crate::district::{AgeCategory, District};
use crate::need::NeedMatrix;
use crate::scenario::{ModelComparison, RowStatus, TradeoffTable};
use crate::traveltime::TravelTimeMatrix;

/// Pretty JSON with a trailing newline. Every machine-readable payload goes through here.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report types serialize");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalitySummary {
    pub id: String,
    pub name: String,
    pub union_councils: usize,
    pub centres: usize,
    pub need: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub min_minutes: f64,
    pub mean_minutes: f64,
    pub max_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictSummary {
    pub localities: Vec<LocalitySummary>,
    pub union_councils: usize,
    pub centres: usize,
    pub network_nodes: usize,
    pub road_edges: usize,
    pub need_by_category: BTreeMap<AgeCategory, u64>,
    pub total_need: u64,
    pub travel_times: Option<TimeStats>,
}

pub fn district_summary(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
) -> DistrictSummary {
    let localities = district
        .localities()
        .iter()
        .map(|l| {
            let ucs: Vec<usize> = district
                .union_councils()
                .iter()
                .enumerate()
                .filter(|(_, u)| u.locality_id == l.id)
                .map(|(i, _)| i)
                .collect();
            LocalitySummary {
                id: l.id.clone(),
                name: l.name.clone(),
                union_councils: ucs.len(),
                centres: district
                    .centres()
                    .iter()
                    .filter(|c| c.locality_id == l.id)
                    .count(),
                need: ucs.iter().map(|&u| need.rows[u].total()).sum(),
            }
        })
        .collect();
    let entries: Vec<f64> = times.entries().collect();
    let travel_times = (!entries.is_empty()).then(|| TimeStats {
        min_minutes: entries.iter().copied().fold(f64::INFINITY, f64::min),
        mean_minutes: entries.iter().sum::<f64>() / entries.len() as f64,
        max_minutes: entries.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    DistrictSummary {
        localities,
        union_councils: district.union_councils().len(),
        centres: district.centres().len(),
        network_nodes: district.network().nodes.len(),
        road_edges: district.network().edges.len(),
        need_by_category: need
            .categories
            .iter()
            .map(|&a| (a, need.category_total(a)))
            .collect(),
        total_need: need.total_visits,
        travel_times,
    }
}

/// `union_council,<categories...>,total` with a closing `TOTAL` row.
pub fn need_csv(need: &NeedMatrix) -> String {
    let mut out = String::from("union_council");
    for age in &need.categories {
        write!(out, ",{age}").unwrap();
    }
    out.push_str(",total\n");
    for row in &need.rows {
        out.push_str(&row.union_council_id);
        for age in &need.categories {
            write!(out, ",{}", row.visits.get(age).copied().unwrap_or(0)).unwrap();
        }
        writeln!(out, ",{}", row.total()).unwrap();
    }
    out.push_str("TOTAL");
    for &age in &need.categories {
        write!(out, ",{}", need.category_total(age)).unwrap();
    }
    writeln!(out, ",{}", need.total_visits).unwrap();
    out
}

/// One row per centre, one column per union council, minutes to two decimals.
pub fn times_csv(times: &TravelTimeMatrix<f64>) -> String {
    let mut out = String::from("centre");
    for id in &times.union_council_ids {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for (id, row) in times.centre_ids.iter().zip(&times.minutes) {
        out.push_str(id);
        for m in row {
            write!(out, ",{m:.2}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn opt(value: Option<f64>, digits: usize) -> String {
    value.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

pub fn sweep_csv(table: &TradeoffTable, localities: &[String]) -> String {
    let mut out = String::from("epsilon,status,travel_hours,alpha_max,alpha_min,saving_percent");
    for id in localities {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for row in &table.rows {
        let status = match row.status {
            RowStatus::Optimal => "OPTIMAL",
            RowStatus::Infeasible => "INFEASIBLE",
        };
        write!(
            out,
            "{},{status},{},{},{},{}",
            row.epsilon,
            opt(row.travel_hours, 4),
            opt(row.alpha_max, 6),
            opt(row.alpha_min, 6),
            opt(row.saving.as_ref().map(|s| s.percent), 4)
        )
        .unwrap();
        for id in localities {
            match row.vaccinators_by_locality.get(id) {
                Some(v) => write!(out, ",{v}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn plan_text(plan: &AllocationPlan, out: &mut String) {
    let mode = if plan.exact_equity {
        "exact equity".to_string()
    } else {
        format!("equity band {}", pct(plan.equity_deviation))
    };
    writeln!(
        out,
        "Model {} ({mode}), {} vaccinators of {} visits/year each",
        plan.model, plan.total_vaccinators, plan.capacity_per_vaccinator
    )
    .unwrap();
    writeln!(out, "Annual travel: {:.1} hours", plan.total_travel_hours).unwrap();
    writeln!(
        out,
        "Coverage: min {}  max {}",
        pct(plan.alpha_min),
        pct(plan.alpha_max)
    )
    .unwrap();
    out.push_str("\nVaccinators by locality\n");
    for l in &plan.vaccinators_by_locality {
        writeln!(out, "  {:<8} {:<24} {:>4}", l.locality_id, l.name, l.vaccinators).unwrap();
    }
    out.push_str("\nVaccinators by centre\n");
    for c in plan.vaccinators_by_centre.iter().filter(|c| c.vaccinators > 0) {
        writeln!(out, "  {:<8} {:<8} {:>4}", c.centre_id, c.locality_id, c.vaccinators).unwrap();
    }
    out.push_str("\nCoverage by union council\n");
    for c in &plan.coverage {
        writeln!(
            out,
            "  {:<8} {:<10} need {:>7}  delivered {:>10.1}  {:>6}",
            c.union_council_id,
            c.age.as_str(),
            c.need,
            c.delivered,
            pct(c.alpha)
        )
        .unwrap();
    }
}

fn report_text(report: &InfeasibilityReport, out: &mut String) {
    writeln!(out, "Model {}: INFEASIBLE", report.model).unwrap();
    writeln!(out, "{}", report.reason).unwrap();
}

pub fn outcome_text(outcome: &AllocationOutcome) -> String {
    let mut out = String::new();
    match outcome {
        AllocationOutcome::Optimal(plan) => plan_text(plan, &mut out),
        AllocationOutcome::Infeasible(report) => report_text(report, &mut out),
    }
    out
}

pub fn sweep_text(table: &TradeoffTable) -> String {
    let mut out = format!(
        "Model {} sweep, {} vaccinators\n",
        table.model, table.total_vaccinators
    );
    out.push_str("  epsilon  status      travel h   alpha min  alpha max  saving  localities\n");
    for row in &table.rows {
        let status = match row.status {
            RowStatus::Optimal => "OPTIMAL",
            RowStatus::Infeasible => "INFEASIBLE",
        };
        let counts: Vec<String> = row
            .vaccinators_by_locality
            .iter()
            .map(|(id, v)| format!("{id}={v}"))
            .collect();
        writeln!(
            out,
            "  {:>7}  {:<10} {:>10}  {:>9}  {:>9}  {:>6}  {}",
            pct(row.epsilon),
            status,
            opt(row.travel_hours, 1),
            row.alpha_min.map(pct).unwrap_or_default(),
            row.alpha_max.map(pct).unwrap_or_default(),
            row.saving.as_ref().map(|s| s.display.as_str()).unwrap_or(""),
            counts.join(" ")
        )
        .unwrap();
    }
    out
}

pub fn comparison_text(comparison: &ModelComparison) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "Locality-bound (band {}) against cross-boundary (exact equity)",
        pct(comparison.equity_deviation)
    )
    .unwrap();
    for (label, outcome) in [("Model 1", &comparison.model1), ("Model 2", &comparison.model2)] {
        match outcome.travel_hours() {
            Some(h) => writeln!(out, "  {label}: {h:.1} travel hours").unwrap(),
            None => writeln!(out, "  {label}: INFEASIBLE").unwrap(),
        }
    }
    if let Some(s) = &comparison.saving {
        writeln!(out, "  Saving: {}", s.display).unwrap();
    }
    out.push_str("\n  locality                      model 1  model 2\n");
    let show = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
    for l in &comparison.locality_shift {
        writeln!(
            out,
            "  {:<8} {:<20} {:>7}  {:>7}",
            l.locality_id,
            l.name,
            show(l.model1),
            show(l.model2)
        )
        .unwrap();
    }
    out
}

pub fn summary_text(summary: &DistrictSummary) -> String {
    let mut out = format!(
        "{} localities, {} union councils, {} centres, {} road nodes, {} road segments\n",
        summary.localities.len(),
        summary.union_councils,
        summary.centres,
        summary.network_nodes,
        summary.road_edges
    );
    for l in &summary.localities {
        writeln!(
            out,
            "  {:<8} {:<24} {:>3} UCs {:>3} centres  need {:>8}",
            l.id, l.name, l.union_councils, l.centres, l.need
        )
        .unwrap();
    }
    for (age, n) in &summary.need_by_category {
        writeln!(out, "Need {:<10} {n:>8}", age.as_str()).unwrap();
    }
    writeln!(out, "Need total      {:>8}", summary.total_need).unwrap();
    if let Some(t) = &summary.travel_times {
        writeln!(
            out,
            "One-way minutes: min {:.1}, mean {:.1}, max {:.1}",
            t.min_minutes, t.mean_minutes, t.max_minutes
        )
        .unwrap();
    }
    out
}

/// Aligned text version of [`need_csv`].
pub fn need_text(need: &NeedMatrix) -> String {
    let mut out = format!("{:<14}", "union council");
    for age in &need.categories {
        write!(out, "{:>12}", age.as_str()).unwrap();
    }
    writeln!(out, "{:>12}", "total").unwrap();
    for row in &need.rows {
        write!(out, "{:<14}", row.union_council_id).unwrap();
        for age in &need.categories {
            write!(out, "{:>12}", row.visits.get(age).copied().unwrap_or(0)).unwrap();
        }
        writeln!(out, "{:>12}", row.total()).unwrap();
    }
    write!(out, "{:<14}", "TOTAL").unwrap();
    for &age in &need.categories {
        write!(out, "{:>12}", need.category_total(age)).unwrap();
    }
    writeln!(out, "{:>12}", need.total_visits).unwrap();
    out
}

/// Aligned text version of [`times_csv`], one decimal.
pub fn times_text(times: &TravelTimeMatrix<f64>) -> String {
    let mut out = format!("{:<8}", "");
    for id in &times.union_council_ids {
        write!(out, "{id:>8}").unwrap();
    }
    out.push('\n');
    for (id, row) in times.centre_ids.iter().zip(&times.minutes) {
        write!(out, "{id:<8}").unwrap();
        for m in row {
            write!(out, "{m:>8.1}").unwrap();
        }
        out.push('\n');
    }
    out
}
