//! Reference solvers and random instance generators shared by the integration
//! tests and the acceptance harness. Every oracle here is deliberately naive.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vaxplan_core::allocation::PlanningParams;
use vaxplan_core::district::{
    default_schedule, load_district, AgeCategory, District, DistrictData, Locality, RoadEdge,
    RoadNetwork, Surface, UnionCouncil, VaccinationCentre,
};
use vaxplan_core::lp::{LinearProgram, Relation};
use vaxplan_core::need::{compute_need, NeedMatrix};
use vaxplan_core::traveltime::{build_matrix, edge_time, TravelTimeMatrix};
use vaxplan_core::{MipInstance, SpeedModel};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_fixture(name: &str) -> District {
    load_district(fixture(name)).expect("fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Optimum of a bounded LP, or `None` if infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Infeasible,
    Optimal(f64),
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------------------
// LP vertex enumeration

/// Solves the square system `a x = b` by Gaussian elimination, `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let pivot = a[col].clone();
            for (x, p) in a[row].iter_mut().zip(&pivot).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if current.len() == k {
            visit(current);
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            go(i + 1, n, k, current, visit);
            current.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), visit);
}

/// Minimum over all basic feasible points. Every variable must have finite bounds.
pub fn lp_by_vertices(lp: &LinearProgram<f64>) -> Reference {
    let n = lp.num_vars();
    assert!(lp.lower.iter().chain(&lp.upper).all(|b| b.is_finite()));
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |pick| {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_square(a, b) else { return };
        let slack = 1e-7 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let in_bounds = (0..n).all(|j| x[j] >= lp.lower[j] - slack && x[j] <= lp.upper[j] + slack);
        if in_bounds && lp.max_violation(&x) <= slack {
            let value = lp.objective_at(&x);
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
    });
    best.map_or(Reference::Infeasible, Reference::Optimal)
}

/// Integer enumeration over the masked columns (finite bounds), each leaf solved by vertices.
pub fn mip_by_enumeration(instance: &MipInstance) -> Reference {
    let lp = &instance.base;
    let ints: Vec<usize> = (0..lp.num_vars()).filter(|&j| instance.integer_mask[j]).collect();
    let mut best: Option<f64> = None;
    let mut fixed = lp.clone();
    fn go(
        k: usize,
        ints: &[usize],
        original: &LinearProgram<f64>,
        fixed: &mut LinearProgram<f64>,
        best: &mut Option<f64>,
    ) {
        if k == ints.len() {
            if let Reference::Optimal(v) = lp_by_vertices(fixed) {
                *best = Some(best.map_or(v, |b| b.min(v)));
            }
            return;
        }
        let j = ints[k];
        let (lo, hi) = (original.lower[j].ceil() as i64, original.upper[j].floor() as i64);
        for value in lo..=hi {
            fixed.lower[j] = value as f64;
            fixed.upper[j] = value as f64;
            go(k + 1, ints, original, fixed, best);
        }
    }
    go(0, &ints, lp, &mut fixed, &mut best);
    best.map_or(Reference::Infeasible, Reference::Optimal)
}

/// Small integer coefficients, random relations, finite bounds.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram<f64> {
    let mut lp = LinearProgram::new();
    for j in 0..n {
        let lower = if rng.gen_bool(0.2) { -(rng.gen_range(1..=3) as f64) } else { 0.0 };
        let upper = lower + rng.gen_range(1..=6) as f64;
        lp.add_variable(format!("x{j}"), rng.gen_range(-5..=5) as f64, lower, upper);
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(-4..=4) as f64 })
            .collect();
        let relation = *[Relation::Le, Relation::Le, Relation::Ge, Relation::Eq]
            .choose(rng)
            .unwrap();
        lp.add_constraint(coeffs, relation, rng.gen_range(-6..=10) as f64);
    }
    lp
}

pub fn random_mip(rng: &mut ChaCha8Rng, n: usize, m: usize) -> MipInstance {
    let mut lp = random_lp(rng, n, m);
    // Fractional right-hand sides make the integrality constraints bite.
    for c in &mut lp.constraints {
        c.rhs += rng.gen_range(0..4) as f64 * 0.25;
    }
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
    mask[0] = true;
    MipInstance::new(lp, mask)
}

// ---------------------------------------------------------------------------
// Allocation oracle

/// Random district with `n_loc` localities, UCs and centres dealt round-robin,
/// and a connected road network with distinct lengths.
pub fn random_district(rng: &mut ChaCha8Rng, n_loc: usize, n_uc: usize, n_c: usize) -> District {
    let localities: Vec<Locality> = (0..n_loc)
        .map(|i| Locality {
            id: format!("L{i}"),
            name: format!("Locality {i}"),
        })
        .collect();
    let mut nodes: Vec<String> = Vec::new();
    let union_councils: Vec<UnionCouncil> = (0..n_uc)
        .map(|i| {
            nodes.push(format!("U{i}"));
            let mut population = BTreeMap::from([(AgeCategory::Infant, rng.gen_range(20..=300))]);
            if rng.gen_bool(0.7) {
                population.insert(AgeCategory::Preschool, rng.gen_range(0..=200));
            }
            UnionCouncil {
                id: format!("UC{i}"),
                name: format!("Union council {i}"),
                locality_id: format!("L{}", i % n_loc),
                population,
                network_node: format!("U{i}"),
            }
        })
        .collect();
    let centres: Vec<VaccinationCentre> = (0..n_c)
        .map(|i| {
            let node = if rng.gen_bool(0.3) {
                format!("U{}", (i % n_loc) + n_loc * rng.gen_range(0..(n_uc / n_loc).max(1)))
            } else {
                nodes.push(format!("C{i}"));
                format!("C{i}")
            };
            VaccinationCentre {
                id: format!("VC{i}"),
                name: format!("Centre {i}"),
                locality_id: format!("L{}", i % n_loc),
                network_node: node,
            }
        })
        .collect();
    let mut edges = Vec::new();
    let road = |rng: &mut ChaCha8Rng, a: &str, b: &str| RoadEdge {
        a: a.into(),
        b: b.into(),
        length_km: rng.gen_range(10..300) as f64 / 10.0 + rng.gen_range(0..1000) as f64 * 1e-5,
        surface: if rng.gen_bool(0.6) { Surface::Metalled } else { Surface::Unmetalled },
    };
    for i in 1..nodes.len() {
        let j = rng.gen_range(0..i);
        edges.push(road(rng, &nodes[i], &nodes[j]));
    }
    for _ in 0..nodes.len() / 2 {
        let (i, j) = (rng.gen_range(0..nodes.len()), rng.gen_range(0..nodes.len()));
        if i != j {
            edges.push(road(rng, &nodes[i], &nodes[j]));
        }
    }
    District::new(DistrictData {
        localities,
        union_councils,
        centres,
        network: RoadNetwork { nodes, edges },
        schedule: default_schedule(),
    })
    .expect("random district is valid")
}

/// Parameters with a capacity that covers `share` of total need.
pub fn scaled_params(need: &NeedMatrix, vaccinators: u32, share: f64) -> PlanningParams {
    let capacity = ((need.total_visits as f64 * share) / f64::from(vaccinators)).floor().max(1.0);
    PlanningParams {
        children_per_day: 1,
        working_days: capacity as u32,
        total_vaccinators: vaccinators,
        ..PlanningParams::default()
    }
}

fn compositions(total: u32, parts: usize, visit: &mut impl FnMut(&[u32])) {
    fn go(left: u32, parts: usize, current: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if current.len() + 1 == parts {
            current.push(left);
            visit(current);
            current.pop();
            return;
        }
        for take in 0..=left {
            current.push(take);
            go(left - take, parts, current, visit);
            current.pop();
        }
    }
    go(total, parts, &mut Vec::new(), visit);
}

/// Travel hours with the vaccinator counts fixed, written directly from the
/// model statement and solved with an independent LP code.
pub fn flow_lp(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
    counts: &[u32],
) -> Reference {
    let capacity = f64::from(params.children_per_day) * f64::from(params.working_days);
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let (hi, lo) = if params.exact_equity {
        let a = problem.add_var(0.0, (0.0, 1.0));
        (a, a)
    } else {
        (problem.add_var(0.0, (0.0, 1.0)), problem.add_var(0.0, (0.0, 1.0)))
    };
    let mut by_centre = vec![Vec::new(); district.centres().len()];
    for (u, uc) in district.union_councils().iter().enumerate() {
        for age in district.categories() {
            let n = need.by_id(&uc.id, age).unwrap_or(0);
            if n == 0 {
                continue;
            }
            let mut served = Vec::new();
            for (c, centre) in district.centres().iter().enumerate() {
                if !params.cross_boundary && centre.locality_id != uc.locality_id {
                    continue;
                }
                let hours = params.round_trip_factor * times.at(c, u) / 60.0
                    / f64::from(params.children_per_day);
                let x = problem.add_var(hours, (0.0, f64::INFINITY));
                served.push((x, 1.0));
                by_centre[c].push((x, 1.0));
            }
            let n = n as f64;
            let mut upper = served.clone();
            upper.push((hi, -n));
            let op = if params.exact_equity { ComparisonOp::Eq } else { ComparisonOp::Le };
            problem.add_constraint(&upper, op, 0.0);
            if !params.exact_equity {
                let mut lower = served;
                lower.push((lo, -n));
                problem.add_constraint(&lower, ComparisonOp::Ge, 0.0);
            }
        }
    }
    for (c, terms) in by_centre.iter().enumerate() {
        let work = capacity * f64::from(counts[c]);
        if terms.is_empty() {
            if work > 0.0 {
                return Reference::Infeasible;
            }
            continue;
        }
        problem.add_constraint(terms, ComparisonOp::Eq, work);
    }
    if !params.exact_equity {
        problem.add_constraint([(hi, 1.0), (lo, -1.0)], ComparisonOp::Le, params.equity_deviation);
    }
    match problem.solve() {
        Ok(solution) => Reference::Optimal(solution.objective()),
        Err(minilp::Error::Infeasible) => Reference::Infeasible,
        Err(err) => panic!("flow LP: {err}"),
    }
}

pub struct Case {
    pub district: District,
    pub need: NeedMatrix,
    pub times: TravelTimeMatrix<f64>,
}

/// At most 2 localities, 3 centres, 4 union councils and 6 vaccinators.
pub fn allocation_case(seed: u64) -> (Case, PlanningParams) {
    let mut r = rng(seed);
    let n_loc = r.gen_range(1..=2);
    let n_c = r.gen_range(n_loc..=3);
    let n_uc = r.gen_range(n_loc..=4);
    let district = random_district(&mut r, n_loc, n_uc, n_c);
    let need = compute_need(&district);
    let times = build_matrix(&district, &SpeedModel::default()).unwrap();
    let vaccinators = r.gen_range(1..=6);
    let mut params = scaled_params(&need, vaccinators, r.gen_range(0.3..0.95));
    params.equity_deviation = [0.0, 0.05, 0.1, 0.2, 0.4][r.gen_range(0..5)];
    params.round_trip_factor = [1.0, 2.0][r.gen_range(0..2)];
    (Case { district, need, times }, params)
}

/// Banded and exact equity, each with and without boundary crossing.
pub fn model_variants(base: &PlanningParams) -> [PlanningParams; 4] {
    let variant = |cross, exact| PlanningParams {
        cross_boundary: cross,
        exact_equity: exact,
        ..*base
    };
    [variant(false, false), variant(true, false), variant(false, true), variant(true, true)]
}

/// Best flow LP over every way of splitting the vaccinators between centres.
pub fn allocation_by_enumeration(
    district: &District,
    need: &NeedMatrix,
    times: &TravelTimeMatrix<f64>,
    params: &PlanningParams,
) -> Reference {
    let mut best: Option<f64> = None;
    compositions(params.total_vaccinators, district.centres().len(), &mut |counts| {
        if let Reference::Optimal(v) = flow_lp(district, need, times, params, counts) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    });
    best.map_or(Reference::Infeasible, Reference::Optimal)
}

// ---------------------------------------------------------------------------
// Travel times

/// Random multigraph on `n` nodes, possibly disconnected.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> RoadNetwork {
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut edges = Vec::new();
    for _ in 0..rng.gen_range(0..=n * 2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        edges.push(RoadEdge {
            a: nodes[a].clone(),
            b: nodes[b].clone(),
            length_km: rng.gen_range(1..200) as f64 / 10.0,
            surface: if rng.gen_bool(0.5) { Surface::Metalled } else { Surface::Unmetalled },
        });
    }
    RoadNetwork { nodes, edges }
}

/// Minimum over all simple paths, by depth-first enumeration.
pub fn fastest_simple_path(
    network: &RoadNetwork,
    from: &str,
    to: &str,
    speeds: &SpeedModel,
) -> Option<f64> {
    fn go(
        network: &RoadNetwork,
        at: &str,
        to: &str,
        speeds: &SpeedModel,
        visited: &mut Vec<String>,
        so_far: f64,
        best: &mut Option<f64>,
    ) {
        if at == to {
            *best = Some(best.map_or(so_far, |b: f64| b.min(so_far)));
            return;
        }
        for edge in &network.edges {
            let next = if edge.a == at {
                &edge.b
            } else if edge.b == at {
                &edge.a
            } else {
                continue;
            };
            if visited.contains(next) {
                continue;
            }
            visited.push(next.clone());
            let t = so_far + edge_time(edge.length_km, edge.surface, speeds);
            go(network, next, to, speeds, visited, t, best);
            visited.pop();
        }
    }
    let mut best = None;
    go(network, from, to, speeds, &mut vec![from.to_string()], 0.0, &mut best);
    best
}
