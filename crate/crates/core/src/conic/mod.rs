//! Convex conic programs: linear equalities and inequalities, second-order
//! cones and a convex quadratic objective.
//!
//! # Dual sign convention
//!
//! Every constraint is stated as `g(x) (= | ≤) 0` with `g = a·x − b` for linear
//! rows and the solver reports the Lagrange multiplier `y` of
//! `L = f(x) + Σ y·g(x)`. Inequality multipliers are nonnegative; equality
//! multipliers are free. With this convention the sensitivity of the optimum
//! to a right-hand side is `∂f*/∂b = −y`. Second-order cone duals are reported
//! as vectors in the (self-dual) cone.

mod backend;
mod dump;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use backend::solve;
pub use dump::{dump_program, load_program};

/// Sparse `a·x rhs` row; duplicate indices are summed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearRow { coeffs, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

/// `a·x + c`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(coeffs: Vec<(usize, f64)>, constant: f64) -> Self {
        AffineExpr { coeffs, constant }
    }

    pub fn var(i: usize, scale: f64) -> Self {
        AffineExpr { coeffs: vec![(i, scale)], constant: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }
}

/// `‖(e₁, …, e_m)‖₂ ≤ e₀`, head first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SocBlock {
    pub exprs: Vec<AffineExpr>,
}

impl SocBlock {
    pub fn new(head: AffineExpr, tail: Vec<AffineExpr>) -> Self {
        let mut exprs = vec![head];
        exprs.extend(tail);
        SocBlock { exprs }
    }

    /// `‖tail‖ − head`; nonpositive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let Some((head, tail)) = self.exprs.split_first() else { return 0.0 };
        tail.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt() - head.eval(x)
    }
}

/// Minimise `Σ q_ij x_i x_j + c·x + c₀` over the constraints below.
///
/// Quadratic terms are given once per unordered pair (`i ≤ j`), so a diagonal
/// entry `(i, i, v)` contributes `v x_i²`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub n_vars: usize,
    pub quad: Vec<(usize, usize, f64)>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub eq_rows: Vec<LinearRow>,
    /// `a·x ≤ rhs`.
    pub ineq_rows: Vec<LinearRow>,
    pub soc_blocks: Vec<SocBlock>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConicProgram {
    pub fn new(n_vars: usize) -> Self {
        ConicProgram {
            n_vars,
            linear: vec![0.0; n_vars],
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            ..Default::default()
        }
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, lo: f64, hi: f64) -> usize {
        self.n_vars += 1;
        self.linear.push(0.0);
        self.lower.push(lo);
        self.upper.push(hi);
        self.n_vars - 1
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.eq_rows.push(LinearRow::new(coeffs, rhs));
        self.eq_rows.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.ineq_rows.push(LinearRow::new(coeffs, rhs));
        self.ineq_rows.len() - 1
    }

    pub fn add_soc(&mut self, head: AffineExpr, tail: Vec<AffineExpr>) -> usize {
        self.soc_blocks.push(SocBlock::new(head, tail));
        self.soc_blocks.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let q: f64 = self.quad.iter().map(|&(i, j, v)| v * x[i] * x[j]).sum();
        let l: f64 = self.linear.iter().zip(x).map(|(c, v)| c * v).sum();
        q + l + self.constant
    }

    /// Gradient of the objective.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        for &(i, j, v) in &self.quad {
            if i == j {
                g[i] += 2.0 * v * x[i];
            } else {
                g[i] += v * x[j];
                g[j] += v * x[i];
            }
        }
        g
    }

    /// Multiplies the objective by `s`.
    pub fn scaled_objective(&self, s: f64) -> ConicProgram {
        let mut p = self.clone();
        p.quad.iter_mut().for_each(|t| t.2 *= s);
        p.linear.iter_mut().for_each(|c| *c *= s);
        p.constant *= s;
        p
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self.eq_rows.iter().map(|r| (r.eval(x) - r.rhs).abs());
        let le = self.ineq_rows.iter().map(|r| (r.eval(x) - r.rhs).max(0.0));
        let soc = self.soc_blocks.iter().map(|b| b.violation(x).max(0.0));
        let bnd = (0..self.n_vars).map(|i| (self.lower[i] - x[i]).max(x[i] - self.upper[i]).max(0.0));
        eq.chain(le).chain(soc).chain(bnd).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖∇f + Σ y ∇g‖∞`.
    pub stationarity: f64,
    pub primal: f64,
    /// Most negative inequality multiplier or cone-dual violation.
    pub dual: f64,
    /// `|Σ y·g(x)|` over inequalities and cones.
    pub complementarity: f64,
    /// `|primal − dual objective| / (1 + |primal|)`.
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: ConicStatus,
    /// Backend stopped at its reduced-accuracy tolerances.
    pub reduced_accuracy: bool,
    pub x: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    /// Multipliers of `lo − x ≤ 0` and `x − hi ≤ 0`; zero for infinite bounds.
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub soc_duals: Vec<Vec<f64>>,
    pub objective: f64,
    pub residuals: KktResiduals,
    pub iterations: u32,
    pub solve_time: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == ConicStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

fn diag(severity: Severity, message: String) -> Diagnostic {
    Diagnostic { severity, message }
}

/// Structural checks; an empty list means the program is well formed.
pub fn validate_program(p: &ConicProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = p.n_vars;
    if p.linear.len() != n || p.lower.len() != n || p.upper.len() != n {
        out.push(diag(
            Severity::Error,
            format!(
                "dimension mismatch: n_vars={n}, linear={}, lower={}, upper={}",
                p.linear.len(),
                p.lower.len(),
                p.upper.len()
            ),
        ));
        return out;
    }
    for i in 0..n {
        if p.lower[i] > p.upper[i] {
            out.push(diag(Severity::Error, format!("variable {i}: lower bound {} > upper {}", p.lower[i], p.upper[i])));
        }
        if p.lower[i].is_nan() || p.upper[i].is_nan() || !p.linear[i].is_finite() {
            out.push(diag(Severity::Error, format!("variable {i}: non-finite data")));
        }
    }
    let check_coeffs = |what: String, coeffs: &[(usize, f64)], out: &mut Vec<Diagnostic>| {
        for &(i, v) in coeffs {
            if i >= n {
                out.push(diag(Severity::Error, format!("{what}: variable index {i} out of range")));
            }
            if !v.is_finite() {
                out.push(diag(Severity::Error, format!("{what}: non-finite coefficient")));
            }
        }
    };
    for (k, r) in p.eq_rows.iter().enumerate() {
        check_coeffs(format!("equality row {k}"), &r.coeffs, &mut out);
        if !r.rhs.is_finite() {
            out.push(diag(Severity::Error, format!("equality row {k}: non-finite rhs")));
        }
    }
    for (k, r) in p.ineq_rows.iter().enumerate() {
        check_coeffs(format!("inequality row {k}"), &r.coeffs, &mut out);
        if r.rhs.is_nan() || r.rhs == f64::NEG_INFINITY {
            out.push(diag(Severity::Error, format!("inequality row {k}: invalid rhs {}", r.rhs)));
        }
    }
    for (k, b) in p.soc_blocks.iter().enumerate() {
        if b.exprs.len() < 2 {
            out.push(diag(Severity::Error, format!("SOC block {k}: dimension {} < 2", b.exprs.len())));
        }
        for (r, e) in b.exprs.iter().enumerate() {
            check_coeffs(format!("SOC block {k} row {r}"), &e.coeffs, &mut out);
        }
    }
    for &(i, j, v) in &p.quad {
        if i >= n || j >= n {
            out.push(diag(Severity::Error, format!("quadratic term ({i}, {j}) out of range")));
        } else if !v.is_finite() {
            out.push(diag(Severity::Error, format!("quadratic term ({i}, {j}) non-finite")));
        }
    }
    if out.iter().any(|d| d.severity == Severity::Error) {
        return out;
    }

    if let Some(min_eig) = quad_min_eigenvalue(p) {
        let scale = p.quad.iter().map(|t| t.2.abs()).fold(1.0, f64::max);
        if min_eig < -1e-10 * scale {
            out.push(diag(
                Severity::Warning,
                format!("quadratic objective is not positive semidefinite (min eigenvalue {min_eig:.3e})"),
            ));
        }
    }

    let mut used = vec![false; n];
    let rows = p.eq_rows.iter().chain(&p.ineq_rows).flat_map(|r| r.coeffs.iter());
    let cones = p.soc_blocks.iter().flat_map(|b| b.exprs.iter()).flat_map(|e| e.coeffs.iter());
    for &(i, v) in rows.chain(cones) {
        if v != 0.0 {
            used[i] = true;
        }
    }
    for &(i, j, _) in &p.quad {
        used[i] = true;
        used[j] = true;
    }
    for i in 0..n {
        let c = p.linear[i];
        let open = (c > 0.0 && p.lower[i] == f64::NEG_INFINITY) || (c < 0.0 && p.upper[i] == f64::INFINITY);
        if !used[i] && open {
            out.push(diag(Severity::Warning, format!("objective unbounded below along free variable {i}")));
        }
    }
    out
}

/// Smallest eigenvalue of the symmetric objective Hessian restricted to the
/// variables that appear in quadratic terms.
fn quad_min_eigenvalue(p: &ConicProgram) -> Option<f64> {
    if p.quad.is_empty() {
        return None;
    }
    let mut vars: Vec<usize> = p.quad.iter().flat_map(|&(i, j, _)| [i, j]).collect();
    vars.sort_unstable();
    vars.dedup();
    let pos = |v: usize| vars.binary_search(&v).unwrap();
    let m = vars.len();
    let mut h = DMatrix::<f64>::zeros(m, m);
    for &(i, j, v) in &p.quad {
        let (a, b) = (pos(i), pos(j));
        if a == b {
            h[(a, a)] += 2.0 * v;
        } else {
            h[(a, b)] += v;
            h[(b, a)] += v;
        }
    }
    let eig = h.symmetric_eigenvalues();
    Some(eig.iter().cloned().fold(f64::INFINITY, f64::min))
}
