//! Best-first LP-relaxation branch-and-bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::debug;
use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus};
use crate::scalar::Scalar;

/// Relative gap under which an open node cannot beat the incumbent.
const RELATIVE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MipInstance<T> {
    pub base: LinearProgram<T>,
    pub integer_mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MipStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution<T> {
    pub status: MipStatus,
    /// Integer-masked entries are snapped to exact integers. Empty when infeasible.
    pub values: Vec<T>,
    pub objective_value: T,
    /// LP relaxations solved.
    pub nodes_explored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MipOptions {
    pub max_nodes: usize,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions { max_nodes: 200_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MipError<T: Scalar> {
    #[error("integer mask has width {found}, program has {expected} variables")]
    MaskMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("node limit of {nodes} reached before proving optimality")]
    IterationLimit {
        nodes: usize,
        best: Option<MipSolution<T>>,
    },
}

impl<T: Scalar> MipInstance<T> {
    pub fn new(base: LinearProgram<T>, integer_mask: Vec<bool>) -> Self {
        MipInstance { base, integer_mask }
    }

    /// Treats every variable as continuous.
    pub fn relaxation(&self) -> &LinearProgram<T> {
        &self.base
    }
}

struct Node<T> {
    bound: T,
    depth: usize,
    id: usize,
    /// Bounds of the integer columns only, aligned with `integer_cols`.
    bounds: Vec<(T, T)>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Node<T> {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn distance_to_integer<T: Scalar>(x: T) -> T {
    (x - x.round()).abs()
}

fn cannot_improve<T: Scalar>(bound: T, incumbent: Option<T>) -> bool {
    incumbent.is_some_and(|best| {
        let gap = T::of(RELATIVE_GAP) * best.abs().max(T::one());
        bound >= best - gap
    })
}

pub fn solve_mip<T: Scalar>(instance: &MipInstance<T>) -> Result<MipSolution<T>, MipError<T>> {
    solve_mip_with(instance, MipOptions::default())
}

/// Branches on the most fractional integer variable (lowest index on ties),
/// floor child first, exploring nodes best-bound first.
pub fn solve_mip_with<T: Scalar>(
    instance: &MipInstance<T>,
    options: MipOptions,
) -> Result<MipSolution<T>, MipError<T>> {
    let base = &instance.base;
    base.validate()?;
    if instance.integer_mask.len() != base.num_vars() {
        return Err(MipError::MaskMismatch {
            expected: base.num_vars(),
            found: instance.integer_mask.len(),
        });
    }
    let integer_cols: Vec<usize> = instance
        .integer_mask
        .iter()
        .enumerate()
        .filter_map(|(j, &masked)| masked.then_some(j))
        .collect();

    let tol = T::INTEGRALITY_TOL;
    let mut root_bounds = Vec::with_capacity(integer_cols.len());
    for &j in &integer_cols {
        let lower = (base.lower[j] - tol).ceil();
        let upper = (base.upper[j] + tol).floor();
        if lower > upper {
            return Ok(infeasible(0));
        }
        root_bounds.push((lower, upper));
    }

    let mut working = base.clone();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: T::neg_infinity(),
        depth: 0,
        id: 0,
        bounds: root_bounds,
    });
    let mut next_id = 1;
    let mut nodes_explored = 0usize;
    let mut incumbent: Option<(Vec<T>, T)> = None;

    while let Some(node) = heap.pop() {
        let best = incumbent.as_ref().map(|(_, obj)| *obj);
        if cannot_improve(node.bound, best) {
            continue;
        }
        if nodes_explored >= options.max_nodes {
            let best = incumbent.map(|(values, objective_value)| MipSolution {
                status: MipStatus::Optimal,
                values,
                objective_value,
                nodes_explored,
            });
            return Err(MipError::IterationLimit {
                nodes: nodes_explored,
                best,
            });
        }

        for (&j, &(lower, upper)) in integer_cols.iter().zip(&node.bounds) {
            working.lower[j] = lower;
            working.upper[j] = upper;
        }
        let relaxed = solve_lp(&working)?;
        nodes_explored += 1;
        match relaxed.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(MipError::Unbounded),
            LpStatus::Optimal => {}
        }
        if cannot_improve(relaxed.objective_value, best) {
            continue;
        }

        let mut branch: Option<(usize, T)> = None;
        for (k, &j) in integer_cols.iter().enumerate() {
            let frac = distance_to_integer(relaxed.values[j]);
            if frac > tol && branch.is_none_or(|(_, worst)| frac > worst) {
                branch = Some((k, frac));
            }
        }

        match branch {
            None => {
                let mut values = relaxed.values;
                for &j in &integer_cols {
                    values[j] = values[j].round();
                }
                let objective = base.objective_at(&values);
                debug!("incumbent {objective} after {nodes_explored} nodes");
                incumbent = Some((values, objective));
            }
            Some((k, _)) => {
                let x = relaxed.values[integer_cols[k]];
                let mut floor_child = node.bounds.clone();
                floor_child[k].1 = x.floor();
                let mut ceil_child = node.bounds;
                ceil_child[k].0 = x.ceil();
                for bounds in [floor_child, ceil_child] {
                    heap.push(Node {
                        bound: relaxed.objective_value,
                        depth: node.depth + 1,
                        id: next_id,
                        bounds,
                    });
                    next_id += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some((values, objective_value)) => MipSolution {
            status: MipStatus::Optimal,
            values,
            objective_value,
            nodes_explored,
        },
        None => infeasible(nodes_explored),
    })
}

fn infeasible<T: Scalar>(nodes_explored: usize) -> MipSolution<T> {
    MipSolution {
        status: MipStatus::Infeasible,
        values: Vec::new(),
        objective_value: T::nan(),
        nodes_explored,
    }
}
