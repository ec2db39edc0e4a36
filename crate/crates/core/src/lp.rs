//! Dense two-phase simplex with Bland's smallest-index rule.
//!
//! Problems are stated as `minimize c.x` subject to linear rows and `x >= 0`.
//! The pivoting rule is fixed, so the same problem always follows the same
//! pivot sequence and produces the same solution. Instantiated over
//! [`Rational`](crate::Rational) the solver is exact.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    constraints: Vec<Constraint<S>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("simplex did not terminate within {limit} pivots")]
    IterationCap { limit: usize },
    #[error("constraint {row} has {found} coefficients, expected {expected}")]
    Dimension { row: usize, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub objective: S,
    pub values: Vec<S>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal(LpSolution<S>),
    /// No feasible point. `residual` is the optimal phase-one objective (total
    /// artificial mass), a positive witness of infeasibility.
    Infeasible {
        residual: S,
    },
    Unbounded,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn optimal(self) -> Option<LpSolution<S>> {
        match self {
            LpOutcome::Optimal(sol) => Some(sol),
            _ => None,
        }
    }
}

impl<S: Scalar> LinearProgram<S> {
    /// A minimization problem over `objective.len()` non-negative variables.
    pub fn minimize(objective: Vec<S>) -> Self {
        Self {
            num_vars: objective.len(),
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn add(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    /// Adds a row given as `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, S)], relation: Relation, rhs: S) -> &mut Self {
        let mut coeffs = vec![S::zero(); self.num_vars];
        for (j, c) in terms {
            coeffs[*j] = coeffs[*j].clone() + c.clone();
        }
        self.add(coeffs, relation, rhs)
    }

    pub fn solve(&self) -> Result<LpOutcome<S>, LpError> {
        let limit = 1000 + 50 * (self.num_vars + self.constraints.len());
        self.solve_with_limit(limit)
    }

    pub fn solve_with_limit(&self, limit: usize) -> Result<LpOutcome<S>, LpError> {
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(LpError::Dimension {
                    row,
                    expected: self.num_vars,
                    found: c.coeffs.len(),
                });
            }
        }
        Tableau::build(self).run(&self.objective, limit)
    }
}

struct Tableau<S> {
    // rows[i] has `cols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    cols: usize,
    num_vars: usize,
    first_artificial: usize,
    cost: Vec<S>,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let num_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let num_artificial = lp
            .constraints
            .iter()
            .filter(|c| {
                let flipped = c.rhs < S::zero();
                match c.relation {
                    Relation::Eq => true,
                    Relation::Le => flipped,
                    Relation::Ge => !flipped,
                }
            })
            .count();
        let first_artificial = n + num_slack;
        let cols = first_artificial + num_artificial;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for c in &lp.constraints {
            let flip = c.rhs < S::zero();
            let sign = |v: &S| if flip { -v.clone() } else { v.clone() };
            let mut row: Vec<S> = c.coeffs.iter().map(sign).collect();
            row.resize(cols + 1, S::zero());
            row[cols] = sign(&c.rhs);
            let relation = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            match relation {
                Relation::Le => {
                    row[next_slack] = S::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -S::one();
                    next_slack += 1;
                    row[next_art] = S::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = S::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            cols,
            num_vars: n,
            first_artificial,
            cost: Vec::new(),
            pivots: 0,
        }
    }

    fn run(mut self, objective: &[S], limit: usize) -> Result<LpOutcome<S>, LpError> {
        if self.first_artificial < self.cols {
            let mut phase_one = vec![S::zero(); self.cols];
            for c in &mut phase_one[self.first_artificial..] {
                *c = S::one();
            }
            self.price(&phase_one);
            if self.iterate(self.cols, limit)?.is_none() {
                unreachable!("phase one is bounded below by zero");
            }
            let residual = -self.cost[self.cols].clone();
            if residual > S::tolerance() {
                return Ok(LpOutcome::Infeasible { residual });
            }
            self.evict_artificials();
        }
        let mut full = objective.to_vec();
        full.resize(self.cols, S::zero());
        self.price(&full);
        match self.iterate(self.first_artificial, limit)? {
            None => Ok(LpOutcome::Unbounded),
            Some(()) => {
                let mut values = vec![S::zero(); self.num_vars];
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if b < self.num_vars {
                        values[b] = row[self.cols].clone();
                    }
                }
                Ok(LpOutcome::Optimal(LpSolution {
                    objective: -self.cost[self.cols].clone(),
                    values,
                    pivots: self.pivots,
                }))
            }
        }
    }

    /// Recomputes the reduced-cost row for `costs` against the current basis.
    fn price(&mut self, costs: &[S]) {
        let mut cost: Vec<S> = costs.to_vec();
        cost.push(S::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (c, a) in cost.iter_mut().zip(row) {
                *c = c.clone() - cb.clone() * a.clone();
            }
        }
        self.cost = cost;
    }

    /// Pivots until optimal (`Some`) or unbounded (`None`). Only columns
    /// below `allowed` may enter.
    fn iterate(&mut self, allowed: usize, limit: usize) -> Result<Option<()>, LpError> {
        let tol = S::tolerance();
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.cost[j] < -tol.clone()) else {
                return Ok(Some(()));
            };
            let mut leave: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if *a <= tol {
                    continue;
                }
                let ratio = row[self.cols].clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((best_row, best)) => {
                        ratio < best.clone() - tol.clone()
                            || ((ratio.clone() - best.clone()).abs() <= tol && self.basis[i] < self.basis[*best_row])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((row, _)) = leave else {
                return Ok(None);
            };
            if self.pivots >= limit {
                return Err(LpError::IterationCap { limit });
            }
            self.pivot(row, enter);
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        let p = self.rows[r][e].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rows[r][e] = S::one();
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row, &pivot_row, e);
            }
        }
        eliminate(&mut self.cost, &pivot_row, e);
        self.basis[r] = e;
    }

    /// After phase one, replaces artificial basics (all at level zero) by
    /// structural or slack columns, dropping rows that are linearly dependent.
    fn evict_artificials(&mut self) {
        let tol = S::tolerance();
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| self.rows[r][j].abs() > tol) {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

fn eliminate<S: Scalar>(row: &mut [S], pivot_row: &[S], e: usize) {
    let factor = row[e].clone();
    if factor.is_zero() {
        return;
    }
    for (v, p) in row.iter_mut().zip(pivot_row) {
        if !p.is_zero() {
            *v = v.clone() - factor.clone() * p.clone();
        }
    }
    row[e] = S::zero();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn single_binding_constraint() {
        // vars (v, B): minimize B s.t. v >= 0.3, v - B <= 0
        let mut lp = LinearProgram::<f64>::minimize(vec![0.0, 1.0]);
        lp.add(vec![1.0, 0.0], Relation::Ge, 0.3);
        lp.add(vec![1.0, -1.0], Relation::Le, 0.0);
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert!((sol.objective - 0.3).abs() < 1e-12);
        assert!((sol.values[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn exact_rational_solution() {
        let mut lp = LinearProgram::minimize(vec![Rational::from_integer(0.into()), rat(1, 1)]);
        lp.add(vec![rat(1, 1), rat(0, 1)], Relation::Ge, rat(3, 10));
        lp.add(vec![rat(1, 1), rat(-1, 1)], Relation::Le, rat(0, 1));
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(sol.objective, rat(3, 10));
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::<f64>::minimize(vec![1.0]);
        lp.add(vec![1.0], Relation::Le, 1.0);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        match lp.solve().unwrap() {
            LpOutcome::Infeasible { residual } => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let mut zero_row = LinearProgram::<f64>::minimize(vec![1.0, 1.0]);
        zero_row.add(vec![0.0, 0.0], Relation::Eq, 0.5);
        assert!(matches!(zero_row.solve().unwrap(), LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::<f64>::minimize(vec![-1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // -x - y <= -2  (x + y >= 2), duplicated equality x - y = 0 twice.
        let mut lp = LinearProgram::<f64>::minimize(vec![1.0, 2.0]);
        lp.add(vec![-1.0, -1.0], Relation::Le, -2.0);
        lp.add(vec![1.0, -1.0], Relation::Eq, 0.0);
        lp.add(vec![2.0, -2.0], Relation::Eq, 0.0);
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut lp = LinearProgram::<f64>::minimize(vec![-1.0, -1.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 1.0);
        lp.add(vec![0.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve_with_limit(1), Err(LpError::IterationCap { limit: 1 }));
    }

    #[test]
    fn dimension_mismatch() {
        let mut lp = LinearProgram::<f64>::minimize(vec![1.0, 1.0]);
        lp.add(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Dimension { row: 0, .. })));
    }

    #[test]
    fn deterministic() {
        let mut lp = LinearProgram::<f64>::minimize(vec![1.0, 1.0, 1.0]);
        lp.add(vec![1.0, 1.0, 0.0], Relation::Ge, 1.0);
        lp.add(vec![0.0, 1.0, 1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0, 0.0, 1.0], Relation::Ge, 1.0);
        let a = lp.solve().unwrap();
        let b = lp.solve().unwrap();
        assert_eq!(a, b);
        assert!((a.optimal().unwrap().objective - 1.5).abs() < 1e-12);
    }
}
