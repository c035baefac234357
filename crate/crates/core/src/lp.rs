//! Linear programs over stochastic post-processors.
//!
//! A post-processor is a conditional distribution v(yt | yhat, z).  Two LP
//! shapes are built from a set of empirical moments:
//!
//! * [`build_fair_lp`]: minimize expected loss subject to a happiness-gap
//!   bound `|gap| <= eps` (componentwise), the headline formulation.
//! * [`build_gap_lp`]: minimize the inf-norm of the happiness gap subject to
//!   an accuracy floor `accuracy >= alpha`, the shape used for tradeoff
//!   sweeps that fix accuracy and report the achievable gap.
//!
//! Both share the row-stochasticity equalities `sum_yt v(yt|yhat,z) = 1` and box
//! constraints `0 <= v <= 1`, and both are solved by the embedded simplex.

use crate::estimators::EmpiricalMoments;
use crate::simplex::{self, SimplexError, SimplexStatus};
use std::fmt::Write as _;
use thiserror::Error;

/// Residual tolerance accepted from the solver before declaring corruption.
pub const SOLUTION_RESIDUAL_TOL: f64 = 1e-8;
/// Row sums of an extracted post-processor may deviate this much before the
/// solution is rejected as corrupt.
pub const ROW_SUM_TOL: f64 = 1e-6;
/// Negative values above this magnitude are solver corruption, below it
/// they are rounding and get clamped to zero.
const NEGATIVE_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error(transparent)]
    Solver(#[from] SimplexError),
    #[error("solution is not optimal (status {0:?})")]
    NotOptimal(LpStatus),
    #[error("solver returned a corrupt solution: {0}")]
    CorruptSolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Bijection between post-processor entries (yt, yhat, z) and LP columns, with
/// an optional trailing gap variable t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    labels: usize,
    has_gap_var: bool,
}

impl VarIndex {
    fn new(labels: usize, has_gap_var: bool) -> Self {
        VarIndex { labels, has_gap_var }
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn count(&self) -> usize {
        2 * self.labels * self.labels + usize::from(self.has_gap_var)
    }

    /// Column of v(yt | yhat, z).
    pub fn column(&self, yt: usize, yhat: usize, z: usize) -> usize {
        debug_assert!(yt < self.labels && yhat < self.labels && z < 2);
        (yt * self.labels + yhat) * 2 + z
    }

    pub fn gap_column(&self) -> Option<usize> {
        self.has_gap_var.then(|| 2 * self.labels * self.labels)
    }

    /// Inverse of [`VarIndex::column`] for post-processor columns.
    pub fn decompose(&self, column: usize) -> Option<(usize, usize, usize)> {
        if column >= 2 * self.labels * self.labels {
            return None;
        }
        let z = column % 2;
        let rest = column / 2;
        Some((rest / self.labels, rest % self.labels, z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    /// Constant added to `c*x` to express the reported objective (the fair
    /// LP minimizes `1 - accuracy`, so its offset is 1).
    pub objective_offset: f64,
    vars: VarIndex,
}

impl LinearProgram {
    pub fn vars(&self) -> VarIndex {
        self.vars
    }

    pub fn var_count(&self) -> usize {
        self.c.len()
    }

    /// Offset-adjusted objective of a solution.
    pub fn objective_value(&self, sol: &LpSolution) -> f64 {
        self.objective_offset + sol.objective
    }

    /// Plain-text rendering (objective, then rows) for cross-checking
    /// against external solvers.
    pub fn dump(&self) -> String {
        let name = |j: usize| -> String {
            match self.vars.decompose(j) {
                Some((yt, yh, z)) => format!("v({yt}|{yh},{z})"),
                None => "t".to_string(),
            }
        };
        let term = |row: &[f64]| -> String {
            let mut s = String::new();
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    if !s.is_empty() {
                        s.push_str(" + ");
                    }
                    let _ = write!(s, "{a}*{}", name(j));
                }
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        };
        let mut out = String::new();
        let _ = writeln!(out, "minimize {} + {}", self.objective_offset, term(&self.c));
        for (row, b) in self.a_eq.iter().zip(&self.b_eq) {
            let _ = writeln!(out, "  {} = {b}", term(row));
        }
        for (row, b) in self.a_ub.iter().zip(&self.b_ub) {
            let _ = writeln!(out, "  {} <= {b}", term(row));
        }
        let _ = writeln!(out, "  0 <= all variables");
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    /// `c*values` (without the offset).
    pub objective: f64,
    pub status: LpStatus,
    pub basis: Vec<usize>,
}

/// Shared scaffolding: row-stochastic equalities and `v <= 1` box rows.
fn stochasticity_rows(vars: VarIndex) -> (Vec<Vec<f64>>, Vec<f64>) {
    let labels = vars.labels();
    let mut a_eq = Vec::with_capacity(labels * 2);
    let mut b_eq = Vec::with_capacity(labels * 2);
    for yhat in 0..labels {
        for z in 0..2 {
            let mut row = vec![0.0; vars.count()];
            for yt in 0..labels {
                row[vars.column(yt, yhat, z)] = 1.0;
            }
            a_eq.push(row);
            b_eq.push(1.0);
        }
    }
    (a_eq, b_eq)
}

fn upper_bound_rows(vars: VarIndex, a_ub: &mut Vec<Vec<f64>>, b_ub: &mut Vec<f64>) {
    for column in 0..2 * vars.labels() * vars.labels() {
        let mut row = vec![0.0; vars.count()];
        row[column] = 1.0;
        a_ub.push(row);
        b_ub.push(1.0);
    }
}

/// Coefficients of the happiness-gap component `k` as a linear functional
/// of the post-processor columns: `xi(yt,yhat,0)` with weight +1 for z = 0 and
/// -1 for z = 1.
fn gap_row(m: &EmpiricalMoments, vars: VarIndex, k: usize, sign: f64) -> Vec<f64> {
    let labels = m.label_count();
    let mut row = vec![0.0; vars.count()];
    for yt in 0..labels {
        for yhat in 0..labels {
            row[vars.column(yt, yhat, 0)] = sign * m.xi(yt, yhat, 0)[k];
            row[vars.column(yt, yhat, 1)] = -sign * m.xi(yt, yhat, 1)[k];
        }
    }
    row
}

/// Negated expected-accuracy coefficients: accuracy is
/// `sum p_hat(yhat,y,z) * v(y|yhat,z)`, i.e. column (yt,yhat,z) carries `p_hat(yhat,yt,z)`.
fn accuracy_coefficients(m: &EmpiricalMoments, vars: VarIndex) -> Vec<f64> {
    let labels = m.label_count();
    let mut row = vec![0.0; vars.count()];
    for yt in 0..labels {
        for yhat in 0..labels {
            for z in 0..2 {
                row[vars.column(yt, yhat, z)] = m.p_yyz(yhat, yt, z);
            }
        }
    }
    row
}

/// Minimize expected loss subject to `|happiness gap| <= eps` componentwise.
/// `epsilon` must be >= 0; `f64::INFINITY` omits the fairness rows entirely.
pub fn build_fair_lp(m: &EmpiricalMoments, epsilon: f64) -> LinearProgram {
    assert!(epsilon >= 0.0, "epsilon must be nonnegative, got {epsilon}");
    let vars = VarIndex::new(m.label_count(), false);
    let accuracy = accuracy_coefficients(m, vars);
    let c: Vec<f64> = accuracy.iter().map(|&a| -a).collect();
    let (a_eq, b_eq) = stochasticity_rows(vars);
    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    if epsilon.is_finite() {
        for k in 0..m.happiness_dim() {
            for sign in [1.0, -1.0] {
                a_ub.push(gap_row(m, vars, k, sign));
                b_ub.push(epsilon);
            }
        }
    }
    upper_bound_rows(vars, &mut a_ub, &mut b_ub);
    LinearProgram { c, a_ub, b_ub, a_eq, b_eq, objective_offset: 1.0, vars }
}

/// Minimize the inf-norm of the happiness gap subject to accuracy >= `alpha`.
/// Infeasible whenever `alpha` exceeds the best achievable accuracy.
pub fn build_gap_lp(m: &EmpiricalMoments, alpha: f64) -> LinearProgram {
    assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0,1], got {alpha}");
    let vars = VarIndex::new(m.label_count(), true);
    let gap_col = vars.gap_column().expect("gap variable present");
    let mut c = vec![0.0; vars.count()];
    c[gap_col] = 1.0;
    let (a_eq, b_eq) = stochasticity_rows(vars);
    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    for k in 0..m.happiness_dim() {
        for sign in [1.0, -1.0] {
            let mut row = gap_row(m, vars, k, sign);
            row[gap_col] = -1.0;
            a_ub.push(row);
            b_ub.push(0.0);
        }
    }
    let mut accuracy_row: Vec<f64> =
        accuracy_coefficients(m, vars).iter().map(|&a| -a).collect();
    accuracy_row[gap_col] = 0.0;
    a_ub.push(accuracy_row);
    b_ub.push(-alpha);
    upper_bound_rows(vars, &mut a_ub, &mut b_ub);
    LinearProgram { c, a_ub, b_ub, a_eq, b_eq, objective_offset: 0.0, vars }
}

/// Solves the LP, verifying feasibility residuals on optimal answers.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let result = simplex::solve(&lp.c, &lp.a_ub, &lp.b_ub, &lp.a_eq, &lp.b_eq, None)?;
    let status = match result.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => LpStatus::Infeasible,
        SimplexStatus::Unbounded => LpStatus::Unbounded,
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution { values: result.x, objective: 0.0, status, basis: result.basis });
    }
    verify_residuals(lp, &result.x)?;
    Ok(LpSolution {
        objective: lp.c.iter().zip(&result.x).map(|(c, v)| c * v).sum(),
        values: result.x,
        status,
        basis: result.basis,
    })
}

fn verify_residuals(lp: &LinearProgram, x: &[f64]) -> Result<(), LpError> {
    let mut worst: f64 = 0.0;
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        worst = worst.max(lhs - b);
    }
    for (row, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        worst = worst.max((lhs - b).abs());
    }
    for &v in x {
        worst = worst.max(-v);
    }
    if worst > SOLUTION_RESIDUAL_TOL {
        return Err(LpError::CorruptSolution(format!(
            "feasibility residual {worst:e} exceeds {SOLUTION_RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}

/// Primary objective at most this much above the phase-one optimum before
/// the canonical refinement is discarded as numerically off.
const CANONICAL_OBJECTIVE_SLACK: f64 = 1e-10;

/// Solves the LP and, when the optimum is degenerate, returns the optimal
/// solution with the largest total identity mass `sum v(yhat|yhat,z)`.
///
/// Vertex enumeration order is otherwise arbitrary among ties, which makes
/// reported secondary metrics (e.g. a happiness gap that is not part of the
/// objective) jump between equally good solutions.  Preferring the solution
/// closest to leaving predictions unchanged pins a canonical representative:
/// when the identity map is optimal, it is returned exactly.  The objective
/// value is unaffected.
pub fn solve_lp_canonical(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let first = solve_lp(lp)?;
    if first.status != LpStatus::Optimal {
        return Ok(first);
    }
    // Restrict to the optimal face: cap the primary objective at its
    // optimum (the phase-one vertex satisfies the cap with equality).
    let mut a_ub = lp.a_ub.clone();
    let mut b_ub = lp.b_ub.clone();
    a_ub.push(lp.c.clone());
    b_ub.push(first.objective);
    let vars = lp.vars();
    let mut c2 = vec![0.0; lp.var_count()];
    for yhat in 0..vars.labels() {
        for z in 0..2 {
            c2[vars.column(yhat, yhat, z)] = -1.0;
        }
    }
    let Ok(second) = simplex::solve(&c2, &a_ub, &b_ub, &lp.a_eq, &lp.b_eq, None) else {
        return Ok(first);
    };
    if second.status != SimplexStatus::Optimal || verify_residuals(lp, &second.x).is_err() {
        return Ok(first);
    }
    let objective: f64 = lp.c.iter().zip(&second.x).map(|(c, v)| c * v).sum();
    if objective > first.objective + CANONICAL_OBJECTIVE_SLACK {
        return Ok(first);
    }
    Ok(LpSolution {
        values: second.x,
        objective,
        status: LpStatus::Optimal,
        basis: second.basis,
    })
}

/// A stochastic post-processor: for each (yhat, z), a probability row over yt.
#[derive(Debug, Clone, PartialEq)]
pub struct PostProcessor {
    labels: usize,
    /// Row (yhat*2 + z) holds v(* | yhat, z).
    rows: Vec<f64>,
}

impl PostProcessor {
    /// Builds from per-(yhat,z) rows, validating and renormalizing sums.
    pub fn from_rows(labels: usize, rows: Vec<Vec<f64>>) -> Result<Self, LpError> {
        assert_eq!(rows.len(), labels * 2, "one row per (yhat, z)");
        let mut flat = Vec::with_capacity(labels * labels * 2);
        for row in &rows {
            assert_eq!(row.len(), labels, "row length must match label count");
            flat.extend(normalize_row(row)?);
        }
        Ok(PostProcessor { labels, rows: flat })
    }

    /// The identity map: yt = yhat with probability 1.
    pub fn identity(labels: usize) -> Self {
        let mut rows = vec![0.0; labels * labels * 2];
        for yhat in 0..labels {
            for z in 0..2 {
                rows[(yhat * 2 + z) * labels + yhat] = 1.0;
            }
        }
        PostProcessor { labels, rows }
    }

    /// Uniform output regardless of input.
    pub fn uniform(labels: usize) -> Self {
        PostProcessor { labels, rows: vec![1.0 / labels as f64; labels * labels * 2] }
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    /// v(* | yhat, z) as a probability row over yt.
    pub fn row(&self, yhat: usize, z: usize) -> &[f64] {
        let base = (yhat * 2 + z) * self.labels;
        &self.rows[base..base + self.labels]
    }

    /// v(yt | yhat, z).
    pub fn prob(&self, yt: usize, yhat: usize, z: usize) -> f64 {
        self.rows[(yhat * 2 + z) * self.labels + yt]
    }
}

fn normalize_row(row: &[f64]) -> Result<Vec<f64>, LpError> {
    let mut cleaned = Vec::with_capacity(row.len());
    for &v in row {
        if v < -NEGATIVE_CLAMP_TOL {
            return Err(LpError::CorruptSolution(format!("negative probability {v}")));
        }
        cleaned.push(v.max(0.0));
    }
    let sum: f64 = cleaned.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(LpError::CorruptSolution(format!("row sums to {sum}")));
    }
    for v in &mut cleaned {
        *v /= sum;
    }
    Ok(cleaned)
}

/// Reshapes an optimal solution into a [`PostProcessor`], clamping rounding
/// noise and renormalizing each row to sum exactly 1.
pub fn extract_postprocessor(
    lp: &LinearProgram,
    sol: &LpSolution,
) -> Result<PostProcessor, LpError> {
    if sol.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(sol.status));
    }
    let vars = lp.vars();
    let labels = vars.labels();
    let mut rows = Vec::with_capacity(labels * 2);
    for yhat in 0..labels {
        for z in 0..2 {
            let row: Vec<f64> =
                (0..labels).map(|yt| sol.values[vars.column(yt, yhat, z)]).collect();
            rows.push(row);
        }
    }
    PostProcessor::from_rows(labels, rows)
}
