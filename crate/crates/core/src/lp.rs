//! Linear programs in a simple dense form and a bounded-variable primal simplex.
//!
//! Every program is a minimization. Variables carry a finite lower bound and an
//! optional (possibly infinite) upper bound; the solver shifts variables onto
//! their lower bound and treats upper bounds implicitly through bound flips, so
//! tightening bounds (as branch-and-bound does) never grows the tableau.

use std::fmt;

use log::trace;
use thiserror::Error;

use crate::scalar::Scalar;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_PIVOTS_BEFORE_BLAND: usize = 50;

/// Pivots between rebuilds of the tableau from the original matrix.
const REINVERSION_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    /// Residual violation of this row at `x` (zero when satisfied).
    pub fn violation(&self, x: &[T]) -> T {
        let lhs = self
            .coeffs
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&a, &v)| acc + a * v);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(T::zero()),
            Relation::Ge => (self.rhs - lhs).max(T::zero()),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization problem `min c·x  s.t.  rows, lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub lower: Vec<T>,
    /// `T::infinity()` marks an unbounded variable.
    pub upper: Vec<T>,
    pub names: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {what} has width {found}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("variable {name} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("simplex did not terminate within {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Empty unless `status` is `Optimal`.
    pub values: Vec<T>,
    pub objective_value: T,
}

impl<T: Scalar> LpSolution<T> {
    fn without_point(status: LpStatus, objective_value: T) -> Self {
        LpSolution {
            status,
            values: Vec::new(),
            objective_value,
        }
    }
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        LinearProgram {
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a variable and returns its column index. Existing rows are padded with zeros.
    pub fn add_variable(&mut self, name: impl Into<String>, cost: T, lower: T, upper: T) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name.into());
        for row in &mut self.constraints {
            row.coeffs.push(T::zero());
        }
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a row given as `(column, coefficient)` pairs; repeated columns accumulate.
    pub fn add_sparse_constraint(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) {
        let mut coeffs = vec![T::zero(); self.num_vars()];
        for &(col, value) in terms {
            coeffs[col] = coeffs[col] + value;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        let widths = [
            ("lower bounds", self.lower.len()),
            ("upper bounds", self.upper.len()),
            ("names", self.names.len()),
        ];
        for (what, found) in widths {
            if found != n {
                return Err(LpError::DimensionMismatch {
                    what: what.to_string(),
                    expected: n,
                    found,
                });
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    what: format!("constraint {i}"),
                    expected: n,
                    found: row.coeffs.len(),
                });
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || u.is_nan() || l > u {
                return Err(LpError::InvalidBounds {
                    name: self.names[j].clone(),
                    lower: l.as_f64(),
                    upper: u.as_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&c, &v)| acc + c * v)
    }

    /// Largest constraint or bound violation at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let rows = self
            .constraints
            .iter()
            .map(|row| row.violation(x))
            .fold(T::zero(), T::max);
        let bounds = x
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(T::zero()))
            .fold(T::zero(), T::max);
        rows.max(bounds)
    }
}

impl<T: Scalar> fmt::Display for LinearProgram<T> {
    /// Human-readable listing of the objective, rows and bounds.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term_list = |coeffs: &[T]| {
            let terms: Vec<String> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| format!("{} {}", c, self.names[j]))
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            }
        };
        writeln!(f, "minimize")?;
        writeln!(f, "  {}", term_list(&self.objective))?;
        writeln!(f, "subject to")?;
        for (i, row) in self.constraints.iter().enumerate() {
            writeln!(
                f,
                "  r{i}: {} {} {}",
                term_list(&row.coeffs),
                row.relation.symbol(),
                row.rhs
            )?;
        }
        writeln!(f, "bounds")?;
        for j in 0..self.num_vars() {
            writeln!(f, "  {} <= {} <= {}", self.lower[j], self.names[j], self.upper[j])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Dense tableau over shifted variables `x' = x - lower`, all bounded below by zero.
struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// B^-1 A, row-major.
    body: Vec<T>,
    /// Row-normalized original matrix, used to reinvert and recompute basic values.
    original: Vec<T>,
    rhs: Vec<T>,
    beta: Vec<T>,
    basis: Vec<usize>,
    /// Column that formed the identity basis for each row at start.
    initial_basis: Vec<usize>,
    state: Vec<VarState>,
    upper: Vec<T>,
    cost: Vec<T>,
    reduced: Vec<T>,
    enterable: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
    pivots_since_inversion: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Gauss-Jordan step on a row-major matrix. Only the nonzero columns of the
/// pivot row are touched in the other rows.
fn eliminate<T: Scalar>(body: &mut [T], cols: usize, row: usize, col: usize) {
    let p = body[row * cols + col];
    for x in &mut body[row * cols..(row + 1) * cols] {
        *x = *x / p;
    }
    let (before, rest) = body.split_at_mut(row * cols);
    let (pivot_row, after) = rest.split_at_mut(cols);
    let support: Vec<(usize, T)> = pivot_row
        .iter()
        .enumerate()
        .filter(|(_, y)| !y.is_zero())
        .map(|(j, &y)| (j, y))
        .collect();
    for other in before.chunks_mut(cols).chain(after.chunks_mut(cols)) {
        let factor = other[col];
        if factor.is_zero() {
            continue;
        }
        if support.len() * 3 > cols {
            for (x, &y) in other.iter_mut().zip(pivot_row.iter()) {
                *x = *x - factor * y;
            }
        } else {
            for &(j, y) in &support {
                other[j] = other[j] - factor * y;
            }
        }
        other[col] = T::zero();
    }
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> T {
        self.body[i * self.cols + j]
    }

    fn value(&self, j: usize, row_of: &[Option<usize>]) -> T {
        match self.state[j] {
            VarState::Basic => self.beta[row_of[j].expect("basic variable has a row")],
            VarState::AtLower => T::zero(),
            VarState::AtUpper => self.upper[j],
        }
    }

    fn values(&self) -> Vec<T> {
        let mut row_of = vec![None; self.cols];
        for (i, &j) in self.basis.iter().enumerate() {
            row_of[j] = Some(i);
        }
        (0..self.cols).map(|j| self.value(j, &row_of)).collect()
    }

    fn set_costs(&mut self, cost: Vec<T>) {
        self.cost = cost;
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        self.reduced = self.cost.clone();
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let a = self.body[i * self.cols + j];
                self.reduced[j] = self.reduced[j] - cb * a;
            }
        }
        for &j in &self.basis {
            self.reduced[j] = T::zero();
        }
    }

    /// Recomputes basic values from the original data to shed accumulated drift.
    fn refresh_basic_values(&mut self) {
        let mut adjusted = self.rhs.clone();
        for j in 0..self.cols {
            if self.state[j] == VarState::AtUpper {
                for (k, value) in adjusted.iter_mut().enumerate() {
                    *value = *value - self.original[k * self.cols + j] * self.upper[j];
                }
            }
        }
        for i in 0..self.rows {
            let mut acc = T::zero();
            for (k, &value) in adjusted.iter().enumerate() {
                acc = acc + self.at(i, self.initial_basis[k]) * value;
            }
            self.beta[i] = acc;
        }
    }

    /// Rebuilds B^-1 A from the original matrix for the current basis, then
    /// basic values and reduced costs. Keeps the old tableau if the basis
    /// looks singular.
    fn reinvert(&mut self) {
        let cols = self.cols;
        let mut body = self.original.clone();
        let mut basis = vec![usize::MAX; self.rows];
        for &j in &self.basis {
            let mut pick: Option<(usize, T)> = None;
            for (i, slot) in basis.iter().enumerate() {
                let mag = body[i * cols + j].abs();
                if *slot == usize::MAX && pick.is_none_or(|(_, best)| mag > best) {
                    pick = Some((i, mag));
                }
            }
            match pick {
                Some((i, mag)) if mag > T::PIVOT_TOL => {
                    eliminate(&mut body, cols, i, j);
                    basis[i] = j;
                }
                _ => {
                    trace!("basis looks singular, keeping the updated tableau");
                    return;
                }
            }
        }
        self.body = body;
        self.basis = basis;
        self.pivots_since_inversion = 0;
        self.refresh_basic_values();
        self.recompute_reduced_costs();
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let tol = T::REDUCED_COST_TOL;
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.cols {
            if !self.enterable[j] || self.upper[j] <= T::zero() {
                continue;
            }
            let d = self.reduced[j];
            let improving = match self.state[j] {
                VarState::Basic => false,
                VarState::AtLower => d < -tol,
                VarState::AtUpper => d > tol,
            };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, score)| d.abs() > score) {
                best = Some((j, d.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Step each blocking row allows, given a bound relaxation `slack`.
    fn row_step(&self, i: usize, entering: usize, direction: T, slack: T) -> Option<(T, VarState)> {
        let a = self.at(i, entering);
        if a.abs() <= T::PIVOT_TOL {
            return None;
        }
        let rate = -direction * a;
        let basic = self.basis[i];
        if rate < T::zero() {
            Some(((self.beta[i] + slack).max(T::zero()) / -rate, VarState::AtLower))
        } else if self.upper[basic].is_finite() {
            Some((
                (self.upper[basic] - self.beta[i] + slack).max(T::zero()) / rate,
                VarState::AtUpper,
            ))
        } else {
            None
        }
    }

    /// Ratio test. Under Bland's rule the exact minimum step wins with ties to
    /// the lowest basic variable index; otherwise rows within a small feasibility
    /// relaxation of the minimum compete on pivot magnitude.
    fn choose_leaving(&self, entering: usize, direction: T, bland: bool) -> (T, Option<(usize, VarState)>) {
        let flip = self.upper[entering];
        if bland {
            let mut limit = flip;
            let mut leaving: Option<(usize, VarState)> = None;
            for i in 0..self.rows {
                let Some((step, hit)) = self.row_step(i, entering, direction, T::zero()) else {
                    continue;
                };
                let better = step < limit
                    || (step == limit
                        && leaving.is_some_and(|(row, _)| self.basis[i] < self.basis[row]));
                if better {
                    limit = step;
                    leaving = Some((i, hit));
                }
            }
            return (limit, leaving);
        }

        let relax = T::FEASIBILITY_TOL * T::of(0.1);
        let mut bound = flip;
        for i in 0..self.rows {
            if let Some((step, _)) = self.row_step(i, entering, direction, relax) {
                bound = bound.min(step);
            }
        }
        if !bound.is_finite() {
            return (bound, None);
        }
        let mut leaving: Option<(usize, VarState, T)> = None;
        for i in 0..self.rows {
            let Some((step, hit)) = self.row_step(i, entering, direction, T::zero()) else {
                continue;
            };
            if step > bound {
                continue;
            }
            let mag = self.at(i, entering).abs();
            let better = leaving.is_none_or(|(row, _, best)| {
                mag > best || (mag == best && self.basis[i] < self.basis[row])
            });
            if better {
                leaving = Some((i, hit, mag));
            }
        }
        match leaving {
            Some((row, hit, _)) => {
                let (step, _) = self
                    .row_step(row, entering, direction, T::zero())
                    .expect("chosen row blocks");
                if flip <= step {
                    (flip, None)
                } else {
                    (step, Some((row, hit)))
                }
            }
            None => (flip, None),
        }
    }

    fn run_phase(&mut self) -> Result<PhaseOutcome, LpError> {
        let mut degenerate_streak = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            if self.pivots_since_inversion >= REINVERSION_INTERVAL {
                self.reinvert();
            }
            let bland = degenerate_streak >= DEGENERATE_PIVOTS_BEFORE_BLAND;
            let Some(entering) = self.choose_entering(bland) else {
                // Confirm optimality against freshly computed data before stopping.
                if self.pivots_since_inversion > 0 {
                    self.reinvert();
                    if self.choose_entering(bland).is_some() {
                        continue;
                    }
                }
                return Ok(PhaseOutcome::Optimal);
            };
            let direction = if self.state[entering] == VarState::AtLower {
                T::one()
            } else {
                -T::one()
            };

            let (limit, leaving) = self.choose_leaving(entering, direction, bland);
            if !limit.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }
            if limit <= T::FEASIBILITY_TOL * T::of(1e-3) {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            for i in 0..self.rows {
                let a = self.at(i, entering);
                if !a.is_zero() {
                    self.beta[i] = self.beta[i] - direction * a * limit;
                }
            }

            match leaving {
                None => {
                    // Bound flip: the entering variable runs to its opposite bound.
                    self.state[entering] = if self.state[entering] == VarState::AtLower {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Some((row, bound_hit)) => {
                    let entering_value = if self.state[entering] == VarState::AtLower {
                        limit
                    } else {
                        self.upper[entering] - limit
                    };
                    let old = self.basis[row];
                    self.state[old] = bound_hit;
                    self.state[entering] = VarState::Basic;
                    self.basis[row] = entering;
                    self.beta[row] = entering_value;
                    self.pivot(row, entering);
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        eliminate(&mut self.body, self.cols, row, col);
        let factor = self.reduced[col];
        if !factor.is_zero() {
            let pivot_row = &self.body[row * self.cols..(row + 1) * self.cols];
            for (d, &y) in self.reduced.iter_mut().zip(pivot_row) {
                *d = *d - factor * y;
            }
            self.reduced[col] = T::zero();
        }
        self.pivots_since_inversion += 1;
    }
}

/// Solves `program` with a two-phase bounded primal simplex.
///
/// Deterministic: the same program always produces the same vertex.
pub fn solve_lp<T: Scalar>(program: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    program.validate()?;
    let n = program.num_vars();
    let zero = T::zero();

    // Shift onto lower bounds and drop empty rows.
    let mut rows: Vec<(Vec<T>, Relation, T)> = Vec::with_capacity(program.constraints.len());
    for row in &program.constraints {
        let shifted_rhs = row
            .coeffs
            .iter()
            .zip(&program.lower)
            .fold(row.rhs, |acc, (&a, &l)| acc - a * l);
        if row.coeffs.iter().all(|c| c.is_zero()) {
            let tol = T::FEASIBILITY_TOL;
            let ok = match row.relation {
                Relation::Le => shifted_rhs >= -tol,
                Relation::Ge => shifted_rhs <= tol,
                Relation::Eq => shifted_rhs.abs() <= tol,
            };
            if !ok {
                return Ok(LpSolution::without_point(LpStatus::Infeasible, T::nan()));
            }
            continue;
        }
        if shifted_rhs < zero {
            let negated = row.coeffs.iter().map(|&c| -c).collect();
            rows.push((negated, row.relation.flipped(), -shifted_rhs));
        } else {
            rows.push((row.coeffs.clone(), row.relation, shifted_rhs));
        }
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + slacks + artificials;

    let mut original = vec![zero; m * cols];
    let mut upper = Vec::with_capacity(cols);
    for j in 0..n {
        upper.push(program.upper[j] - program.lower[j]);
    }
    upper.extend(std::iter::repeat_n(T::infinity(), slacks + artificials));
    let mut rhs = Vec::with_capacity(m);
    let mut initial_basis = Vec::with_capacity(m);
    let mut artificial_cols = Vec::with_capacity(artificials);
    let (mut next_slack, mut next_artificial) = (n, n + slacks);
    for (i, (coeffs, relation, b)) in rows.iter().enumerate() {
        original[i * cols..i * cols + n].copy_from_slice(coeffs);
        rhs.push(*b);
        match relation {
            Relation::Le => {
                original[i * cols + next_slack] = T::one();
                initial_basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                original[i * cols + next_slack] = -T::one();
                next_slack += 1;
                original[i * cols + next_artificial] = T::one();
                initial_basis.push(next_artificial);
                artificial_cols.push(next_artificial);
                next_artificial += 1;
            }
            Relation::Eq => {
                original[i * cols + next_artificial] = T::one();
                initial_basis.push(next_artificial);
                artificial_cols.push(next_artificial);
                next_artificial += 1;
            }
        }
    }

    let mut state = vec![VarState::AtLower; cols];
    for &j in &initial_basis {
        state[j] = VarState::Basic;
    }
    let mut tableau = Tableau {
        rows: m,
        cols,
        body: original.clone(),
        original,
        beta: rhs.clone(),
        rhs,
        basis: initial_basis.clone(),
        initial_basis,
        state,
        upper,
        cost: Vec::new(),
        reduced: Vec::new(),
        enterable: vec![true; cols],
        iterations: 0,
        pivots_since_inversion: 0,
        max_iterations: 50_000 + 200 * (m + cols),
    };

    if !artificial_cols.is_empty() {
        let mut phase_one = vec![zero; cols];
        for &j in &artificial_cols {
            phase_one[j] = T::one();
        }
        tableau.set_costs(phase_one);
        tableau.run_phase()?;
        tableau.refresh_basic_values();
        let values = tableau.values();
        let infeasibility = artificial_cols
            .iter()
            .fold(zero, |acc, &j| acc + values[j].abs());
        let scale = tableau
            .rhs
            .iter()
            .fold(T::one(), |acc, &b| acc.max(b.abs()));
        trace!(
            "phase one finished after {} iterations, infeasibility {}",
            tableau.iterations,
            infeasibility
        );
        if infeasibility > T::FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, T::nan()));
        }
        // Artificials stay pinned at zero from here on; basic ones leave through
        // degenerate pivots when the ratio test reaches them.
        for &j in &artificial_cols {
            tableau.upper[j] = zero;
            tableau.enterable[j] = false;
            if tableau.state[j] == VarState::AtUpper {
                tableau.state[j] = VarState::AtLower;
            }
        }
    }

    let mut phase_two = vec![zero; cols];
    phase_two[..n].copy_from_slice(&program.objective);
    tableau.set_costs(phase_two);
    match tableau.run_phase()? {
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution::without_point(
                LpStatus::Unbounded,
                T::neg_infinity(),
            ))
        }
        PhaseOutcome::Optimal => {}
    }
    tableau.refresh_basic_values();
    trace!("simplex finished after {} iterations", tableau.iterations);

    let shifted = tableau.values();
    let values: Vec<T> = (0..n)
        .map(|j| {
            let v = shifted[j] + program.lower[j];
            // Snap values that drifted a hair outside their bounds.
            v.max(program.lower[j]).min(program.upper[j])
        })
        .collect();
    let objective_value = program.objective_at(&values);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective_value,
    })
}
