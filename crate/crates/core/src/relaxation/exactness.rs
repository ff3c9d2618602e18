use serde::{Deserialize, Serialize};

use super::SocaProblem;
use crate::conic::ConicSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactnessVerdict {
    /// Duals force `φ^θ = θ²` through complementary slackness.
    Positive,
    NonPositive,
    /// Value indistinguishable from zero.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exactness {
    pub branch: usize,
    pub value: f64,
    pub verdict: ExactnessVerdict,
}

/// Dual test for tightness of the angle auxiliary on every branch.
///
/// With nodal prices `λ = −y` of the balance rows and multipliers `μ ≥ 0` of
/// the polygon limit rows, the value is
/// `−Σ_ends (b^Ploss λ^P + g^Qloss λ^Q) − Σ_m μ_m (cos ψ_m b^Ploss + sin ψ_m g^Qloss)`.
/// A positive value is the multiplier pressing `φ^θ` onto its cone.
/// Returns `None` when the solution carries no duals.
pub fn exactness_condition(problem: &SocaProblem, solution: &ConicSolution) -> Option<Vec<Exactness>> {
    if !solution.is_optimal() || solution.eq_duals.len() != problem.program.eq_rows.len() {
        return None;
    }
    let rows = &problem.rows;
    let lam_p = |i: usize| -solution.eq_duals[rows.p_balance + i];
    let lam_q = |i: usize| -solution.eq_duals[rows.q_balance + i];
    let mut mu_terms = vec![(0.0, 0.0); problem.vars.n_branch];
    for &(k, end, cos, sin, r) in &rows.limits {
        let fc = if end == 0 { &problem.flow_coeffs[k].ij } else { &problem.flow_coeffs[k].ji };
        let t = solution.ineq_duals[r] * (cos * fc.b_ploss + sin * fc.g_qloss);
        mu_terms[k].0 -= t;
        mu_terms[k].1 += t.abs();
    }
    let mut ends = Vec::with_capacity(problem.vars.n_branch);
    for (k, fc) in problem.flow_coeffs.iter().enumerate() {
        let (i, j) = problem.ends[k];
        let terms = [
            fc.ij.b_ploss * lam_p(i),
            fc.ji.b_ploss * lam_p(j),
            fc.ij.g_qloss * lam_q(i),
            fc.ji.g_qloss * lam_q(j),
        ];
        let value = -terms.iter().sum::<f64>() + mu_terms[k].0;
        let scale = terms.iter().map(|t| t.abs()).sum::<f64>() + mu_terms[k].1;
        let verdict = if value.abs() <= 1e-8 * scale + 1e-12 {
            ExactnessVerdict::Inconclusive
        } else if value > 0.0 {
            ExactnessVerdict::Positive
        } else {
            ExactnessVerdict::NonPositive
        };
        ends.push(Exactness { branch: k, value, verdict });
    }
    Some(ends)
}
