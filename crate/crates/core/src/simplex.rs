//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c*x` subject to `A_ub*x <= b_ub`, `A_eq*x = b_eq`, `x >= 0`.
//! Phase 1 minimizes the sum of artificial variables to find a basic
//! feasible point; phase 2 optimizes the real objective.  Bland's rule
//! (smallest eligible index enters, smallest basic index among ratio-test
//! ties leaves) prevents cycling on degenerate problems, at the cost of a
//! few extra pivots, irrelevant at the sizes this crate produces (at most
//! a few dozen columns).
//!
//! The solver is deterministic: identical input produces the identical
//! vertex, pivot for pivot.

use thiserror::Error;

/// Residual tolerance for declaring phase 1 feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for declaring a basis optimal.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Smallest pivot magnitude considered usable.
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Structural variable values; all zeros unless `status` is `Optimal`.
    pub x: Vec<f64>,
    /// `c*x`; zero unless `status` is `Optimal`.
    pub objective: f64,
    /// Basic column indices over the structural+slack column space.
    pub basis: Vec<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),
}

struct Tableau {
    /// Constraint rows; each row has `cols` coefficients then the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row for the current phase (length `cols`).
    reduced: Vec<f64>,
    /// Basic column index per constraint row.
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, row: usize) -> f64 {
        self.rows[row][self.cols]
    }

    /// Reduced costs for the given column costs under the current basis.
    fn reset_objective(&mut self, costs: &[f64]) {
        self.reduced = costs.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.cols {
                    self.reduced[j] -= cb * row[j];
                }
            }
        }
    }

    fn pivot(&mut self, pivot_row: usize, enter: usize) {
        let inv = 1.0 / self.rows[pivot_row][enter];
        for v in self.rows[pivot_row].iter_mut() {
            *v *= inv;
        }
        self.rows[pivot_row][enter] = 1.0;
        let pivot_vals = self.rows[pivot_row].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pivot_row {
                continue;
            }
            let factor = row[enter];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_vals) {
                    *v -= factor * p;
                }
                row[enter] = 0.0;
            }
        }
        let factor = self.reduced[enter];
        if factor != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&pivot_vals) {
                *v -= factor * p;
            }
            self.reduced[enter] = 0.0;
        }
        self.basis[pivot_row] = enter;
    }

    /// Runs pivots until no eligible column improves the phase objective.
    /// `active_cols` excludes artificial columns during phase 2.
    fn optimize(
        &mut self,
        active_cols: usize,
        iterations: &mut usize,
        max_iterations: usize,
    ) -> Result<SimplexStatus, SimplexError> {
        loop {
            // Bland: the smallest improving index enters.
            let mut enter = None;
            for j in 0..active_cols {
                if self.reduced[j] < -OPTIMALITY_TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(enter) = enter else {
                return Ok(SimplexStatus::Optimal);
            };

            // Ratio test; Bland tie-break on the leaving basic index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < best_ratio
                                || (ratio == best_ratio && self.basis[i] < self.basis[best_row])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((leave_row, _)) = leave else {
                return Ok(SimplexStatus::Unbounded);
            };

            *iterations += 1;
            if *iterations > max_iterations {
                return Err(SimplexError::IterationLimit(max_iterations));
            }
            self.pivot(leave_row, enter);
        }
    }
}

/// Solves the LP; `max_iterations` defaults to `10*(rows+cols)^2`.
pub fn solve(
    c: &[f64],
    a_ub: &[Vec<f64>],
    b_ub: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    max_iterations: Option<usize>,
) -> Result<SimplexResult, SimplexError> {
    let n = c.len();
    let m_ub = a_ub.len();
    let m_eq = a_eq.len();
    let m = m_ub + m_eq;
    assert_eq!(b_ub.len(), m_ub, "b_ub length mismatch");
    assert_eq!(b_eq.len(), m_eq, "b_eq length mismatch");

    // Column layout: structural | slack (one per ub row) | artificial.
    let slack_start = n;
    let art_start = n + m_ub;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut needs_artificial: Vec<bool> = Vec::with_capacity(m);
    let mut b_scale: f64 = 1.0;
    for (i, a_row) in a_ub.iter().enumerate() {
        assert_eq!(a_row.len(), n, "A_ub row {i} length mismatch");
        let mut row = vec![0.0; art_start + 1];
        row[..n].copy_from_slice(a_row);
        row[slack_start + i] = 1.0;
        row[art_start] = b_ub[i];
        b_scale = b_scale.max(b_ub[i].abs());
        if b_ub[i] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            needs_artificial.push(true);
        } else {
            needs_artificial.push(false);
        }
        rows.push(row);
    }
    for (i, a_row) in a_eq.iter().enumerate() {
        assert_eq!(a_row.len(), n, "A_eq row {i} length mismatch");
        let mut row = vec![0.0; art_start + 1];
        row[..n].copy_from_slice(a_row);
        row[art_start] = b_eq[i];
        b_scale = b_scale.max(b_eq[i].abs());
        if b_eq[i] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        needs_artificial.push(true);
        rows.push(row);
    }

    let artificial_count = needs_artificial.iter().filter(|&&b| b).count();
    let total_cols = art_start + artificial_count;
    let max_iterations =
        max_iterations.unwrap_or_else(|| (10 * (m + total_cols).pow(2)).max(64));

    // Widen rows for artificial columns and pick the starting basis.
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art_start;
    for (i, row) in rows.iter_mut().enumerate() {
        let rhs = row.pop().expect("rhs present");
        row.resize(total_cols, 0.0);
        row.push(rhs);
        if needs_artificial[i] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack_start + i);
        }
    }

    let mut tableau = Tableau { rows, reduced: Vec::new(), basis, cols: total_cols };
    let mut iterations = 0usize;

    if artificial_count > 0 {
        let mut phase1_costs = vec![0.0; total_cols];
        for j in art_start..total_cols {
            phase1_costs[j] = 1.0;
        }
        tableau.reset_objective(&phase1_costs);
        let status = tableau.optimize(total_cols, &mut iterations, max_iterations)?;
        debug_assert_eq!(status, SimplexStatus::Optimal, "phase 1 is always bounded");

        let infeasibility: f64 = (0..m)
            .filter(|&i| tableau.basis[i] >= art_start)
            .map(|i| tableau.rhs(i))
            .sum();
        if infeasibility > FEASIBILITY_TOL * (1.0 + b_scale) {
            return Ok(SimplexResult {
                status: SimplexStatus::Infeasible,
                x: vec![0.0; n],
                objective: 0.0,
                basis: Vec::new(),
            });
        }

        // Drive artificials out of the basis with degenerate pivots; rows
        // with no real coefficient left are redundant and dropped.
        let mut row = 0;
        while row < tableau.rows.len() {
            if tableau.basis[row] >= art_start {
                let pivot_col = (0..art_start)
                    .find(|&j| tableau.rows[row][j].abs() > PIVOT_TOL);
                match pivot_col {
                    Some(j) => tableau.pivot(row, j),
                    None => {
                        tableau.rows.remove(row);
                        tableau.basis.remove(row);
                        continue;
                    }
                }
            }
            row += 1;
        }
    }

    let mut phase2_costs = vec![0.0; total_cols];
    phase2_costs[..n].copy_from_slice(c);
    tableau.reset_objective(&phase2_costs);
    // Artificial columns are frozen out of phase 2.
    let status = tableau.optimize(art_start, &mut iterations, max_iterations)?;

    if status == SimplexStatus::Unbounded {
        return Ok(SimplexResult {
            status,
            x: vec![0.0; n],
            objective: 0.0,
            basis: Vec::new(),
        });
    }

    let mut x = vec![0.0; n];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < n {
            x[b] = tableau.rhs(i);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(SimplexResult { status: SimplexStatus::Optimal, x, objective, basis: tableau.basis })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn maximizes_along_an_edge() {
        // min -x1-x2 s.t. x1+x2 <= 1.
        let r = solve(&[-1.0, -1.0], &[vec![1.0, 1.0]], &[1.0], &[], &[], None).unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_close(r.objective, -1.0);
        assert_close(r.x[0] + r.x[1], 1.0);
    }

    #[test]
    fn probability_simplex_picks_min_component() {
        for c in [
            vec![0.3, -0.2, 0.5],
            vec![1.0, 2.0, 3.0],
            vec![-1.0, -1.5, -0.25],
        ] {
            let r = solve(&c, &[], &[], &[vec![1.0; 3]], &[1.0], None).unwrap();
            assert_eq!(r.status, SimplexStatus::Optimal);
            let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_close(r.objective, min);
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x <= -1 with x >= 0.
        let r = solve(&[1.0], &[vec![1.0]], &[-1.0], &[], &[], None).unwrap();
        assert_eq!(r.status, SimplexStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let r = solve(&[-1.0], &[], &[], &[], &[], None).unwrap();
        assert_eq!(r.status, SimplexStatus::Unbounded);
        // Still unbounded with a lower bound x >= 2 written as -x <= -2.
        let r = solve(&[-1.0], &[vec![-1.0]], &[-2.0], &[], &[], None).unwrap();
        assert_eq!(r.status, SimplexStatus::Unbounded);
    }

    #[test]
    fn honors_binding_inequalities() {
        // min -3x1 - 2x2 s.t. x1 + x2 = 1, x1 <= 0.3.
        let r = solve(
            &[-3.0, -2.0],
            &[vec![1.0, 0.0]],
            &[0.3],
            &[vec![1.0, 1.0]],
            &[1.0],
            None,
        )
        .unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_close(r.x[0], 0.3);
        assert_close(r.x[1], 0.7);
        assert_close(r.objective, -2.3);
    }

    #[test]
    fn box_constraints_cap_each_variable() {
        let r = solve(
            &[-1.0, -2.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 1.0],
            &[],
            &[],
            None,
        )
        .unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_close(r.x[0], 1.0);
        assert_close(r.x[1], 1.0);
        assert_close(r.objective, -3.0);
    }

    #[test]
    fn survives_duplicate_and_redundant_constraints() {
        // The same facet three times plus an implied equality.
        let r = solve(
            &[-1.0, -1.0],
            &[vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            &[1.0, 1.0, 2.0],
            &[vec![1.0, 1.0]],
            &[1.0],
            None,
        )
        .unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_close(r.objective, -1.0);
    }

    #[test]
    fn zero_rhs_degeneracy_terminates() {
        // Degenerate vertex at the origin with redundant rows.
        let r = solve(
            &[-1.0, -1.0],
            &[
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 0.0],
            ],
            &[0.0, 0.0, 0.5, 0.5],
            &[],
            &[],
            None,
        )
        .unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        // x1 = x2 forced by the first two rows, both capped at 0.5.
        assert_close(r.x[0], 0.5);
        assert_close(r.x[1], 0.5);
    }

    #[test]
    fn equality_only_system_with_unique_point() {
        // x1 + x2 = 1, x1 - x2 = 0 -> x = (0.5, 0.5) regardless of c.
        let r = solve(
            &[5.0, -7.0],
            &[],
            &[],
            &[vec![1.0, 1.0], vec![1.0, -1.0]],
            &[1.0, 0.0],
            None,
        )
        .unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_close(r.x[0], 0.5);
        assert_close(r.x[1], 0.5);
        assert_close(r.objective, -1.0);
    }

    #[test]
    fn returned_point_satisfies_constraints() {
        let a_ub = vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 3.0]];
        let b_ub = vec![4.0, 6.0];
        let a_eq = vec![vec![1.0, 1.0, 1.0]];
        let b_eq = vec![2.5];
        let r = solve(&[-1.0, -2.0, -0.5], &a_ub, &b_ub, &a_eq, &b_eq, None).unwrap();
        assert_eq!(r.status, SimplexStatus::Optimal);
        for (row, &b) in a_ub.iter().zip(&b_ub) {
            let lhs: f64 = row.iter().zip(&r.x).map(|(a, x)| a * x).sum();
            assert!(lhs <= b + 1e-8);
        }
        for (row, &b) in a_eq.iter().zip(&b_eq) {
            let lhs: f64 = row.iter().zip(&r.x).map(|(a, x)| a * x).sum();
            assert!((lhs - b).abs() <= 1e-8);
        }
        for &x in &r.x {
            assert!(x >= -1e-9);
        }
    }

    #[test]
    fn tiny_iteration_cap_reports_failure() {
        // Needs several pivots; a cap of 1 must error, not mis-answer.
        let err = solve(
            &[-1.0, -2.0, -0.5],
            &[vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 3.0]],
            &[4.0, 6.0],
            &[vec![1.0, 1.0, 1.0]],
            &[2.5],
            Some(1),
        )
        .unwrap_err();
        assert_eq!(err, SimplexError::IterationLimit(1));
    }
}
