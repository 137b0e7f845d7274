//! Centre-to-union-council travel times over a mixed-surface road network.
//!
//! Each road segment takes `length / speed(surface)` hours; a centre-to-union
//! council time is the fastest route between their network nodes, in minutes,
//! one way.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::district::{District, RoadNetwork, Surface};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel<T> {
    pub metalled_kmh: T,
    pub unmetalled_kmh: T,
}

impl<T: Scalar> Default for SpeedModel<T> {
    /// 30 km/h on metalled roads, 10 km/h on unmetalled roads and tracks.
    fn default() -> Self {
        SpeedModel {
            metalled_kmh: T::of(30.0),
            unmetalled_kmh: T::of(10.0),
        }
    }
}

impl<T: Scalar> SpeedModel<T> {
    pub fn new(metalled_kmh: T, unmetalled_kmh: T) -> Result<Self, TravelTimeError> {
        for (surface, speed) in [("metalled", metalled_kmh), ("unmetalled", unmetalled_kmh)] {
            if !(speed.is_finite() && speed > T::zero()) {
                return Err(TravelTimeError::InvalidSpeed {
                    surface,
                    kmh: speed.as_f64(),
                });
            }
        }
        Ok(SpeedModel {
            metalled_kmh,
            unmetalled_kmh,
        })
    }

    pub fn speed(&self, surface: Surface) -> T {
        match surface {
            Surface::Metalled => self.metalled_kmh,
            Surface::Unmetalled => self.unmetalled_kmh,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TravelTimeError {
    #[error("no road path between {from} and {to}")]
    Unreachable { from: String, to: String },
    #[error("unknown network node {0:?}")]
    UnknownNode(String),
    #[error("{surface} speed must be positive, got {kmh} km/h")]
    InvalidSpeed { surface: &'static str, kmh: f64 },
}

/// Minutes to drive one segment.
pub fn edge_time<T: Scalar>(length_km: T, surface: Surface, speeds: &SpeedModel<T>) -> T {
    length_km / speeds.speed(surface) * T::of(60.0)
}

/// Adjacency view of a [`RoadNetwork`] with per-edge minutes precomputed.
pub struct RoadGraph<'a, T> {
    index: HashMap<&'a str, usize>,
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<'a, T: Scalar> RoadGraph<'a, T> {
    pub fn new(network: &'a RoadNetwork, speeds: &SpeedModel<T>) -> Self {
        let index: HashMap<&str, usize> = network
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); network.nodes.len()];
        for edge in &network.edges {
            let (Some(&a), Some(&b)) = (index.get(edge.a.as_str()), index.get(edge.b.as_str()))
            else {
                continue;
            };
            let minutes = edge_time(T::of(edge.length_km), edge.surface, speeds);
            adjacency[a].push((b, minutes));
            adjacency[b].push((a, minutes));
        }
        RoadGraph { index, adjacency }
    }

    pub fn node(&self, id: &str) -> Result<usize, TravelTimeError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TravelTimeError::UnknownNode(id.to_string()))
    }

    /// Single-source fastest times to every node (`None` when unreachable).
    pub fn times_from(&self, source: usize) -> Vec<Option<T>> {
        let mut best: Vec<Option<T>> = vec![None; self.adjacency.len()];
        let mut heap = BinaryHeap::new();
        best[source] = Some(T::zero());
        heap.push(Frontier {
            minutes: T::zero(),
            node: source,
        });
        while let Some(Frontier { minutes, node }) = heap.pop() {
            if best[node].is_some_and(|b| minutes > b) {
                continue;
            }
            for &(next, cost) in &self.adjacency[node] {
                let candidate = minutes + cost;
                if best[next].is_none_or(|b| candidate < b) {
                    best[next] = Some(candidate);
                    heap.push(Frontier {
                        minutes: candidate,
                        node: next,
                    });
                }
            }
        }
        best
    }
}

struct Frontier<T> {
    minutes: T,
    node: usize,
}

impl<T: Scalar> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Frontier<T> {}

impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Frontier<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .minutes
            .partial_cmp(&self.minutes)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

pub fn shortest_time<T: Scalar>(
    network: &RoadNetwork,
    from: &str,
    to: &str,
    speeds: &SpeedModel<T>,
) -> Result<T, TravelTimeError> {
    let graph = RoadGraph::new(network, speeds);
    let (source, target) = (graph.node(from)?, graph.node(to)?);
    graph.times_from(source)[target].ok_or_else(|| TravelTimeError::Unreachable {
        from: from.to_string(),
        to: to.to_string(),
    })
}

/// One-way minutes, rows are centres and columns union councils, both in district order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeMatrix<T> {
    pub centre_ids: Vec<String>,
    pub union_council_ids: Vec<String>,
    pub minutes: Vec<Vec<T>>,
}

impl<T: Scalar> TravelTimeMatrix<T> {
    /// Entry by position.
    pub fn at(&self, centre: usize, union_council: usize) -> T {
        self.minutes[centre][union_council]
    }

    pub fn get(&self, centre_id: &str, union_council_id: &str) -> Option<T> {
        let c = self.centre_ids.iter().position(|id| id == centre_id)?;
        let u = self
            .union_council_ids
            .iter()
            .position(|id| id == union_council_id)?;
        self.minutes.get(c)?.get(u).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = T> + '_ {
        self.minutes.iter().flatten().copied()
    }
}

/// Builds the full matrix; fails if any centre cannot reach any union council.
/// Rows are computed in parallel and are identical to a sequential build.
pub fn build_matrix<T: Scalar>(
    district: &District,
    speeds: &SpeedModel<T>,
) -> Result<TravelTimeMatrix<T>, TravelTimeError> {
    let graph = RoadGraph::new(district.network(), speeds);
    let targets: Vec<usize> = district
        .union_councils()
        .iter()
        .map(|u| graph.node(&u.network_node))
        .collect::<Result<_, _>>()?;
    let minutes = district
        .centres()
        .par_iter()
        .map(|centre| {
            let times = graph.times_from(graph.node(&centre.network_node)?);
            targets
                .iter()
                .zip(district.union_councils())
                .map(|(&t, uc)| {
                    times[t].ok_or_else(|| TravelTimeError::Unreachable {
                        from: centre.network_node.clone(),
                        to: uc.network_node.clone(),
                    })
                })
                .collect::<Result<Vec<T>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TravelTimeMatrix {
        centre_ids: district.centres().iter().map(|c| c.id.clone()).collect(),
        union_council_ids: district.union_councils().iter().map(|u| u.id.clone()).collect(),
        minutes,
    })
}
