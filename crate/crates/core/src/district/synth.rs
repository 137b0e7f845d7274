//! Seeded generator for DIK-like districts.
//!
//! Each locality has a headquarters town. Union council headquarters are
//! scattered around the towns and wired to them by a nearest-neighbour road
//! network (a spanning tree plus short extra links) of mixed surface. Most
//! centres are in town at the end of their own spur road; one per locality
//! sits at a union council headquarters.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    default_schedule, AgeCategory, District, DistrictData, Locality, RoadEdge, RoadNetwork,
    Surface, UnionCouncil, VaccinationCentre,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub n_localities: usize,
    pub n_union_councils: usize,
    pub n_centres: usize,
    /// Inclusive range of infant (0-1 y) population per union council.
    pub infant_population: (u64, u64),
    /// Inclusive range of preschool (4-5 y) population per union council.
    pub preschool_population: (u64, u64),
}

impl Default for SyntheticShape {
    /// Three localities, 25 union councils and 16 centres; populations sized so
    /// that 46 vaccinators cover a little under 59% of need.
    fn default() -> Self {
        SyntheticShape {
            n_localities: 3,
            n_union_councils: 25,
            n_centres: 16,
            infant_population: (550, 850),
            preschool_population: (600, 1200),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("{0} population range is empty (min > max)")]
    EmptyRange(&'static str),
}

impl SyntheticShape {
    fn check(&self) -> Result<(), ShapeError> {
        for (name, count) in [
            ("n_localities", self.n_localities),
            ("n_union_councils", self.n_union_councils),
            ("n_centres", self.n_centres),
        ] {
            if count == 0 {
                return Err(ShapeError::ZeroCount(name));
            }
        }
        for (name, (lo, hi)) in [
            ("infant", self.infant_population),
            ("preschool", self.preschool_population),
        ] {
            if lo > hi {
                return Err(ShapeError::EmptyRange(name));
            }
        }
        Ok(())
    }
}

const RING_RADIUS_KM: f64 = 22.0;
const CLUSTER_RADIUS_KM: f64 = 20.0;
const RURAL_CENTRES_PER_LOCALITY: usize = 1;
const SPUR_KM: (f64, f64) = (0.3, 1.0);
const SPUR_STEP_KM: (f64, f64) = (6.0, 12.0);
const METALLED_PROBABILITY: f64 = 0.7;
const EXTRA_LINKS_PER_NODE: usize = 2;

struct Site {
    id: String,
    x: f64,
    y: f64,
}

fn distance(a: &Site, b: &Site) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn width(count: usize) -> usize {
    count.to_string().len().max(2)
}

/// Assigns the first `n_localities` items round-robin so every locality gets
/// one when there are enough items, the rest uniformly at random.
fn assign_localities(rng: &mut ChaCha8Rng, count: usize, n_localities: usize) -> Vec<usize> {
    (0..count)
        .map(|i| {
            if i < n_localities {
                i
            } else {
                rng.gen_range(0..n_localities)
            }
        })
        .collect()
}

fn point_in_disc(rng: &mut ChaCha8Rng, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    (cx + r * theta.cos(), cy + r * theta.sin())
}

fn surface(rng: &mut ChaCha8Rng) -> Surface {
    if rng.gen_bool(METALLED_PROBABILITY) {
        Surface::Metalled
    } else {
        Surface::Unmetalled
    }
}

fn km(value: f64) -> f64 {
    ((value * 10.0).round() / 10.0).max(0.1)
}

/// Deterministic in `(seed, shape)`; the result is always a valid, connected district.
pub fn generate_synthetic(seed: u64, shape: &SyntheticShape) -> Result<District, ShapeError> {
    shape.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let loc_width = width(shape.n_localities);
    let localities: Vec<Locality> = (0..shape.n_localities)
        .map(|k| Locality {
            id: format!("L{:0loc_width$}", k + 1),
            name: format!("Locality {}", k + 1),
        })
        .collect();

    // One town per locality; towns are network nodes of their own.
    let mut sites: Vec<Site> = (0..shape.n_localities)
        .map(|k| {
            let (x, y) = if shape.n_localities == 1 {
                (0.0, 0.0)
            } else {
                let angle = std::f64::consts::TAU * k as f64 / shape.n_localities as f64;
                (RING_RADIUS_KM * angle.cos(), RING_RADIUS_KM * angle.sin())
            };
            Site {
                id: format!("N-T{:0loc_width$}", k + 1),
                x,
                y,
            }
        })
        .collect();

    let uc_width = width(shape.n_union_councils);
    let uc_localities = assign_localities(&mut rng, shape.n_union_councils, shape.n_localities);
    let mut union_councils = Vec::with_capacity(shape.n_union_councils);
    for (i, &loc) in uc_localities.iter().enumerate() {
        let (x, y) = point_in_disc(&mut rng, sites[loc].x, sites[loc].y, CLUSTER_RADIUS_KM);
        let node = format!("N-UC{:0uc_width$}", i + 1);
        sites.push(Site {
            id: node.clone(),
            x,
            y,
        });
        let (ilo, ihi) = shape.infant_population;
        let (plo, phi) = shape.preschool_population;
        let population = BTreeMap::from([
            (AgeCategory::Infant, rng.gen_range(ilo..=ihi)),
            (AgeCategory::Preschool, rng.gen_range(plo..=phi)),
        ]);
        union_councils.push(UnionCouncil {
            id: format!("UC{:0uc_width$}", i + 1),
            name: format!("Union Council {}", i + 1),
            locality_id: localities[loc].id.clone(),
            population,
            network_node: node,
        });
    }

    // Trunk roads: nearest-neighbour spanning tree over towns and union
    // councils plus a few short extra links.
    let mut linked: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    let mut add_edge = |rng: &mut ChaCha8Rng, a: usize, b: usize, edges: &mut Vec<RoadEdge>| {
        let key = (a.min(b), a.max(b));
        if a == b || !linked.insert(key) {
            return;
        }
        let detour = rng.gen_range(1.1..1.4);
        edges.push(RoadEdge {
            a: sites[a].id.clone(),
            b: sites[b].id.clone(),
            length_km: km(distance(&sites[a], &sites[b]) * detour),
            surface: surface(rng),
        });
    };
    for k in 1..sites.len() {
        let nearest = (0..k)
            .min_by(|&i, &j| {
                distance(&sites[k], &sites[i]).total_cmp(&distance(&sites[k], &sites[j]))
            })
            .expect("k >= 1");
        add_edge(&mut rng, k, nearest, &mut edges);
    }
    for k in 0..sites.len() {
        let mut others: Vec<usize> = (0..sites.len()).filter(|&i| i != k).collect();
        others.sort_by(|&i, &j| {
            distance(&sites[k], &sites[i]).total_cmp(&distance(&sites[k], &sites[j]))
        });
        for &other in others.iter().take(EXTRA_LINKS_PER_NODE) {
            add_edge(&mut rng, k, other, &mut edges);
        }
    }

    // A few centres sit at union council headquarters; the rest are in town,
    // each at the end of its own spur road off the town node.
    let vc_width = width(shape.n_centres);
    let centre_localities = assign_localities(&mut rng, shape.n_centres, shape.n_localities);
    let mut rural_left = vec![RURAL_CENTRES_PER_LOCALITY; shape.n_localities];
    let mut spur_km = vec![0.0; shape.n_localities];
    let mut centres = Vec::with_capacity(shape.n_centres);
    let mut nodes: Vec<String> = sites.iter().map(|s| s.id.clone()).collect();
    for (i, &loc) in centre_localities.iter().enumerate() {
        let id = format!("VC{:0vc_width$}", i + 1);
        let in_town = spur_km[loc] == 0.0;
        let hosts: Vec<usize> = uc_localities
            .iter()
            .enumerate()
            .filter_map(|(u, &l)| (l == loc).then_some(u))
            .collect();
        let network_node = if !in_town && rural_left[loc] > 0 && !hosts.is_empty() {
            rural_left[loc] -= 1;
            union_councils[hosts[rng.gen_range(0..hosts.len())]]
                .network_node
                .clone()
        } else {
            spur_km[loc] += if in_town {
                rng.gen_range(SPUR_KM.0..SPUR_KM.1)
            } else {
                rng.gen_range(SPUR_STEP_KM.0..SPUR_STEP_KM.1)
            };
            let node = format!("N-{id}");
            edges.push(RoadEdge {
                a: sites[loc].id.clone(),
                b: node.clone(),
                length_km: km(spur_km[loc]),
                surface: Surface::Metalled,
            });
            nodes.push(node.clone());
            node
        };
        centres.push(VaccinationCentre {
            id,
            name: format!("Vaccination Centre {}", i + 1),
            locality_id: localities[loc].id.clone(),
            network_node,
        });
    }

    let data = DistrictData {
        localities,
        union_councils,
        centres,
        network: RoadNetwork { nodes, edges },
        schedule: default_schedule(),
    };
    Ok(District::new(data).expect("generator emits valid districts"))
}
