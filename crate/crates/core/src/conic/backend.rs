//! Adapter over the Clarabel interior-point solver.
//!
//! Clarabel solves `min ½xᵀPx + qᵀx  s.t.  Ax + s = b, s ∈ K`, whose dual `z`
//! satisfies `Px + q + Aᵀz = 0`. Rows are laid out so that `z` is exactly the
//! multiplier of the module-level convention.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{validate_program, ConicProgram, ConicSolution, ConicStatus, KktResiduals, Severity};
use crate::error::{Error, Result};

/// Where each program constraint landed in the stacked backend rows.
enum Slot {
    Eq(usize),
    Ineq(usize),
    Lower(usize),
    Upper(usize),
    /// Fixed variable `x = lo` as an equality row.
    Fixed(usize),
}

struct Stacked {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Stacked {
    fn push(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.b.len();
        for (c, v) in coeffs {
            if v != 0.0 {
                self.rows.push(r);
                self.cols.push(c);
                self.vals.push(v);
            }
        }
        self.b.push(rhs);
    }
}

/// Solves the program to residual tolerance `tol` (1e-8 is a good default).
///
/// Structural errors reported by [`validate_program`] are returned as
/// [`Error::Assembly`]; solver outcomes are reported through the status.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<ConicSolution> {
    let errors: Vec<String> = validate_program(program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message)
        .collect();
    if !errors.is_empty() {
        return Err(Error::Assembly(errors.join("; ")));
    }
    let n = program.n_vars;
    let mut st = Stacked { rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), b: Vec::new() };
    let mut slots = Vec::new();

    for (k, r) in program.eq_rows.iter().enumerate() {
        st.push(r.coeffs.iter().cloned(), r.rhs);
        slots.push(Slot::Eq(k));
    }
    for i in 0..n {
        if program.lower[i] == program.upper[i] {
            st.push([(i, 1.0)], program.lower[i]);
            slots.push(Slot::Fixed(i));
        }
    }
    let n_zero = st.b.len();
    for (k, r) in program.ineq_rows.iter().enumerate() {
        if r.rhs < f64::INFINITY {
            st.push(r.coeffs.iter().cloned(), r.rhs);
            slots.push(Slot::Ineq(k));
        }
    }
    for i in 0..n {
        let (lo, hi) = (program.lower[i], program.upper[i]);
        if lo == hi {
            continue;
        }
        if lo > f64::NEG_INFINITY {
            st.push([(i, -1.0)], -lo);
            slots.push(Slot::Lower(i));
        }
        if hi < f64::INFINITY {
            st.push([(i, 1.0)], hi);
            slots.push(Slot::Upper(i));
        }
    }
    let n_nonneg = st.b.len() - n_zero;
    let mut cones = Vec::new();
    if n_zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_zero));
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }
    let soc_start = st.b.len();
    for blk in &program.soc_blocks {
        for e in &blk.exprs {
            st.push(e.coeffs.iter().map(|&(i, a)| (i, -a)), e.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(blk.exprs.len()));
    }
    let m = st.b.len();

    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for &(i, j, v) in &program.quad {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        pi.push(r);
        pj.push(c);
        pv.push(if i == j { 2.0 * v } else { v });
    }
    let p = CscMatrix::new_from_triplets(n, n, pi, pj, pv);
    let a = CscMatrix::new_from_triplets(m, n, st.rows, st.cols, st.vals);

    let settings = DefaultSettings::<f64> {
        verbose: false,
        max_iter: 200,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        tol_feas: tol,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &program.linear, &a, &st.b, &cones, settings)
        .map_err(|e| Error::Assembly(format!("conic backend rejected the program: {e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    let (status, reduced_accuracy) = match sol.status {
        SolverStatus::Solved => (ConicStatus::Optimal, false),
        SolverStatus::AlmostSolved => (ConicStatus::Optimal, true),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => (ConicStatus::Infeasible, false),
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => (ConicStatus::Unbounded, false),
        _ => (ConicStatus::NumericalFailure, false),
    };
    if reduced_accuracy {
        log::warn!("conic solve stopped at reduced accuracy");
    }

    let z = &sol.z;
    let mut out = ConicSolution {
        status,
        reduced_accuracy,
        x: sol.x.clone(),
        eq_duals: vec![0.0; program.eq_rows.len()],
        ineq_duals: vec![0.0; program.ineq_rows.len()],
        lower_duals: vec![0.0; n],
        upper_duals: vec![0.0; n],
        soc_duals: Vec::with_capacity(program.soc_blocks.len()),
        objective: program.objective(&sol.x),
        residuals: KktResiduals::default(),
        iterations: sol.iterations,
        solve_time: sol.solve_time,
    };
    for (r, slot) in slots.iter().enumerate() {
        match *slot {
            Slot::Eq(k) => out.eq_duals[k] = z[r],
            Slot::Ineq(k) => out.ineq_duals[k] = z[r],
            Slot::Lower(i) => out.lower_duals[i] = z[r],
            Slot::Upper(i) => out.upper_duals[i] = z[r],
            Slot::Fixed(i) => {
                if z[r] >= 0.0 {
                    out.upper_duals[i] = z[r];
                } else {
                    out.lower_duals[i] = -z[r];
                }
            }
        }
    }
    let mut r = soc_start;
    for blk in &program.soc_blocks {
        out.soc_duals.push(z[r..r + blk.exprs.len()].to_vec());
        r += blk.exprs.len();
    }
    out.residuals = kkt_residuals(program, &out, sol.obj_val, sol.obj_val_dual);
    Ok(out)
}

fn kkt_residuals(p: &ConicProgram, s: &ConicSolution, primal_obj: f64, dual_obj: f64) -> KktResiduals {
    let x = &s.x;
    let mut grad = p.gradient(x);
    let mut compl = 0.0;
    let mut dual: f64 = 0.0;
    for (row, &y) in p.eq_rows.iter().zip(&s.eq_duals) {
        row.coeffs.iter().for_each(|&(i, a)| grad[i] += y * a);
    }
    for (row, &y) in p.ineq_rows.iter().zip(&s.ineq_duals) {
        row.coeffs.iter().for_each(|&(i, a)| grad[i] += y * a);
        if row.rhs.is_finite() {
            compl += y * (row.eval(x) - row.rhs);
        }
        dual = dual.max(-y);
    }
    for i in 0..p.n_vars {
        grad[i] += s.upper_duals[i] - s.lower_duals[i];
        if p.upper[i].is_finite() {
            compl += s.upper_duals[i] * (x[i] - p.upper[i]);
        }
        if p.lower[i].is_finite() {
            compl += s.lower_duals[i] * (p.lower[i] - x[i]);
        }
        dual = dual.max(-s.upper_duals[i]).max(-s.lower_duals[i]);
    }
    for (blk, z) in p.soc_blocks.iter().zip(&s.soc_duals) {
        for (e, &zk) in blk.exprs.iter().zip(z) {
            e.coeffs.iter().for_each(|&(i, a)| grad[i] -= zk * a);
            compl -= zk * e.eval(x);
        }
        let tail = z[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        dual = dual.max(tail - z[0]);
    }
    KktResiduals {
        stationarity: grad.iter().map(|g| g.abs()).fold(0.0, f64::max),
        primal: p.max_violation(x),
        dual,
        complementarity: compl.abs(),
        duality_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::super::AffineExpr;
    use super::*;

    #[test]
    fn one_variable_kkt() {
        // min x² s.t. x ≥ 3  ⇒  x = 3, multiplier 6.
        let mut p = ConicProgram::new(1);
        p.quad.push((0, 0, 1.0));
        p.add_le(vec![(0, -1.0)], -3.0);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-7);
        assert!((s.ineq_duals[0] - 6.0).abs() < 1e-6);
        assert!((s.objective - 9.0).abs() < 1e-6);
    }

    #[test]
    fn rotated_cone_geometric_mean() {
        // max φ s.t. ‖(2φ, u₁ − u₂)‖ ≤ u₁ + u₂, u = (4, 9)  ⇒  φ = 6.
        let mut p = ConicProgram::new(3);
        p.linear[0] = -1.0;
        p.lower[1] = 4.0;
        p.upper[1] = 4.0;
        p.lower[2] = 9.0;
        p.upper[2] = 9.0;
        p.add_soc(
            AffineExpr::new(vec![(1, 1.0), (2, 1.0)], 0.0),
            vec![AffineExpr::var(0, 2.0), AffineExpr::new(vec![(1, 1.0), (2, -1.0)], 0.0)],
        );
        let s = solve(&p, 1e-9).unwrap();
        assert!((s.x[0] - 6.0).abs() < 1e-6, "{}", s.x[0]);
        assert!(s.residuals.stationarity < 1e-6);
    }

    #[test]
    fn equality_dual_is_negative_sensitivity() {
        // min x² s.t. x = b: y = −2b.
        let mut p = ConicProgram::new(1);
        p.quad.push((0, 0, 1.0));
        p.add_eq(vec![(0, 1.0)], 2.0);
        let s = solve(&p, 1e-10).unwrap();
        assert!((s.eq_duals[0] + 4.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = ConicProgram::new(1);
        p.add_le(vec![(0, 1.0)], 1.0);
        p.add_le(vec![(0, -1.0)], -2.0);
        assert_eq!(solve(&p, 1e-8).unwrap().status, ConicStatus::Infeasible);

        let mut q = ConicProgram::new(1);
        q.linear[0] = -1.0;
        q.add_le(vec![(0, -1.0)], 0.0);
        assert_eq!(solve(&q, 1e-8).unwrap().status, ConicStatus::Unbounded);
    }

    #[test]
    fn invalid_program_is_rejected() {
        let mut p = ConicProgram::new(1);
        p.add_eq(vec![(5, 1.0)], 0.0);
        assert!(matches!(solve(&p, 1e-8), Err(Error::Assembly(_))));
    }
}
