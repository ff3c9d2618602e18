use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{flow_coefficients, linearize_flow_limits, BranchFlowCoefficients, CutSet, OperatingPoint};
use crate::conic::{AffineExpr, ConicProgram};
use crate::error::{Error, Result};
use crate::netmodel::{BranchCoefficients, PowerNetwork};
use crate::pf::BranchFlow;
use crate::windcost::PwlCost;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Tangent rows per branch end for the apparent-power limit.
    pub segments: usize,
    /// Tangent-angle arc in radians.
    pub arc: (f64, f64),
    /// Upper bound on φ^θ; defaults to `(θ_max − θ_min)²` per branch.
    pub eta: Option<f64>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { segments: 16, arc: (0.0, TAU), eta: None }
    }
}

/// Offsets of each variable group in the program's variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarIndex {
    pub n_gen: usize,
    pub n_bus: usize,
    pub n_branch: usize,
    pub n_wind: usize,
    pub pg: usize,
    pub qg: usize,
    pub u: usize,
    pub theta: usize,
    pub phi_v: usize,
    pub phi_theta: usize,
    pub p_ij: usize,
    pub p_ji: usize,
    pub q_ij: usize,
    pub q_ji: usize,
    /// Scheduled wind output (p.u.).
    pub p_w: usize,
    pub q_w: usize,
    /// Wind cost epigraph ($/h).
    pub gamma: usize,
    pub total: usize,
}

impl VarIndex {
    fn new(n_gen: usize, n_bus: usize, n_branch: usize, n_wind: usize) -> Self {
        let pg = 0;
        let qg = pg + n_gen;
        let u = qg + n_gen;
        let theta = u + n_bus;
        let phi_v = theta + n_bus;
        let phi_theta = phi_v + n_branch;
        let p_ij = phi_theta + n_branch;
        let p_ji = p_ij + n_branch;
        let q_ij = p_ji + n_branch;
        let q_ji = q_ij + n_branch;
        let p_w = q_ji + n_branch;
        let q_w = p_w + n_wind;
        let gamma = q_w + n_wind;
        let total = gamma + n_wind;
        VarIndex {
            n_gen,
            n_bus,
            n_branch,
            n_wind,
            pg,
            qg,
            u,
            theta,
            phi_v,
            phi_theta,
            p_ij,
            p_ji,
            q_ij,
            q_ji,
            p_w,
            q_w,
            gamma,
            total,
        }
    }
}

/// Where the structured constraints live in the program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowIndex {
    /// Equality rows: active then reactive balance, one per bus.
    pub p_balance: usize,
    pub q_balance: usize,
    /// Flow definitions `P_ij, P_ji, Q_ij, Q_ji`, four consecutive rows per branch.
    pub flow: usize,
    /// `Q_w = tan φ · P_w`, one per farm.
    pub wind_q: usize,
    /// Inequality rows `θ_ij ≤ θ_max`, `−θ_ij ≤ −θ_min`, two per branch.
    pub angle: usize,
    /// `(branch, end, cos ψ, sin ψ, row)` with end 0 = from side.
    pub limits: Vec<(usize, u8, f64, f64, usize)>,
    /// `(farm, row)` wind cost segments.
    pub pwl: Vec<(usize, usize)>,
    pub cut_theta: Vec<Option<usize>>,
    pub cut_v: Vec<Option<usize>>,
    /// Cone blocks: the magnitude cone then the angle cone, per branch.
    pub soc_voltage: usize,
    pub soc_angle: usize,
}

/// Conic program of the approximate OPF at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocaProblem {
    pub program: ConicProgram,
    pub vars: VarIndex,
    pub rows: RowIndex,
    pub point: OperatingPoint,
    /// Internal `(from, to)` bus indices per branch.
    pub ends: Vec<(usize, usize)>,
    pub branch_coeffs: Vec<BranchCoefficients>,
    pub flow_coeffs: Vec<BranchFlowCoefficients>,
}

impl SocaProblem {
    /// Approximate branch flows carried by a primal vector.
    pub fn branch_flows(&self, x: &[f64]) -> Vec<BranchFlow> {
        let v = &self.vars;
        (0..v.n_branch)
            .map(|k| BranchFlow {
                p_ij: x[v.p_ij + k],
                q_ij: x[v.q_ij + k],
                p_ji: x[v.p_ji + k],
                q_ji: x[v.q_ji + k],
            })
            .collect()
    }

    /// Checks the variable and equality-row counts against the model layout.
    pub fn audit(&self) -> Result<()> {
        let v = &self.vars;
        let n_vars = 2 * v.n_gen + 2 * v.n_bus + 6 * v.n_branch + 3 * v.n_wind;
        let n_eq = 2 * v.n_bus + 4 * v.n_branch + v.n_wind;
        if self.program.n_vars != n_vars || self.program.eq_rows.len() != n_eq {
            return Err(Error::Assembly(format!(
                "layout mismatch: {} vars (expected {n_vars}), {} equalities (expected {n_eq})",
                self.program.n_vars,
                self.program.eq_rows.len()
            )));
        }
        if self.program.soc_blocks.len() != 2 * v.n_branch {
            return Err(Error::Assembly("one magnitude and one angle cone per branch expected".into()));
        }
        Ok(())
    }
}

/// Builds the wind-integrated approximate OPF around `point`.
///
/// Variables are `P_g, Q_g, u = v², θ, φ^v, φ^θ, P_ij, P_ji, Q_ij, Q_ji` and
/// per wind farm `P_w, Q_w, γ`. The objective is the quadratic fossil cost
/// plus `Σ γ`, where each `γ` is bounded below by the farm's PWL segments.
pub fn assemble_soca_problem(
    net: &PowerNetwork,
    point: &OperatingPoint,
    cuts: &CutSet,
    options: &AssemblyOptions,
    wind_pwl: &[PwlCost],
) -> Result<SocaProblem> {
    let n = net.n_buses();
    let ne = net.n_branches();
    let gens = net.generators();
    let farms = net.wind_farms();
    if point.v.len() != n || point.theta.len() != n {
        return Err(Error::Assembly(format!("operating point has {} entries for {n} buses", point.v.len())));
    }
    if cuts.cuts.len() != ne {
        return Err(Error::Assembly(format!("cut set covers {} of {ne} branches", cuts.cuts.len())));
    }
    if wind_pwl.len() != farms.len() {
        return Err(Error::Config(format!("{} wind farms but {} PWL costs", farms.len(), wind_pwl.len())));
    }
    let base = net.base_mva();
    let vars = VarIndex::new(gens.len(), n, ne, farms.len());
    let mut p = ConicProgram::new(vars.total);

    // Bounds and objective.
    for (g, gen) in gens.iter().enumerate() {
        p.lower[vars.pg + g] = gen.p_min;
        p.upper[vars.pg + g] = gen.p_max;
        p.lower[vars.qg + g] = gen.q_min;
        p.upper[vars.qg + g] = gen.q_max;
        if gen.c2 != 0.0 {
            p.quad.push((vars.pg + g, vars.pg + g, gen.c2));
        }
        p.linear[vars.pg + g] = gen.c1;
        p.constant += gen.c0;
    }
    for (i, b) in net.buses().iter().enumerate() {
        p.lower[vars.u + i] = b.v_min * b.v_min;
        p.upper[vars.u + i] = b.v_max * b.v_max;
    }
    p.lower[vars.theta + net.slack()] = 0.0;
    p.upper[vars.theta + net.slack()] = 0.0;
    for (k, br) in net.branches().iter().enumerate() {
        p.lower[vars.phi_v + k] = 0.0;
        p.lower[vars.phi_theta + k] = 0.0;
        let span = br.angle_max - br.angle_min;
        p.upper[vars.phi_theta + k] = options.eta.unwrap_or(span * span);
    }
    for (w, farm) in farms.iter().enumerate() {
        p.lower[vars.p_w + w] = farm.p_min_mw / base;
        p.upper[vars.p_w + w] = farm.p_max_mw / base;
        p.linear[vars.gamma + w] = 1.0;
    }

    // Balance rows: generation + wind − outgoing flows ∓ shunt = demand.
    let by_bus = net.generators_by_bus();
    let wind_by_bus = net.wind_by_bus();
    let mut p_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut q_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &g in &by_bus[i] {
            p_rows[i].push((vars.pg + g, 1.0));
            q_rows[i].push((vars.qg + g, 1.0));
        }
        for &w in &wind_by_bus[i] {
            p_rows[i].push((vars.p_w + w, 1.0));
            q_rows[i].push((vars.q_w + w, 1.0));
        }
        let b = &net.buses()[i];
        if b.gs != 0.0 {
            p_rows[i].push((vars.u + i, -b.gs));
        }
        if b.bs != 0.0 {
            q_rows[i].push((vars.u + i, b.bs));
        }
    }
    for k in 0..ne {
        let (i, j) = net.branch_ends(k);
        p_rows[i].push((vars.p_ij + k, -1.0));
        q_rows[i].push((vars.q_ij + k, -1.0));
        p_rows[j].push((vars.p_ji + k, -1.0));
        q_rows[j].push((vars.q_ji + k, -1.0));
    }
    let p_balance = p.eq_rows.len();
    for (i, row) in p_rows.into_iter().enumerate() {
        p.add_eq(row, net.buses()[i].pd);
    }
    let q_balance = p.eq_rows.len();
    for (i, row) in q_rows.into_iter().enumerate() {
        p.add_eq(row, net.buses()[i].qd);
    }

    // Flow definitions.
    let branch_coeffs = net.branch_coefficients()?;
    let mut flow_coeffs = Vec::with_capacity(ne);
    let flow = p.eq_rows.len();
    for (k, c) in branch_coeffs.iter().enumerate() {
        let (i, j) = net.branch_ends(k);
        let tk = point.theta[i] - point.theta[j];
        let fc = flow_coefficients(c, tk, point.v[i], point.v[j]).map_err(|e| match e {
            Error::Validation(m) => Error::Assembly(format!("branch {k}: {m}")),
            other => other,
        })?;
        let (ti, tj, pv, pt) = (vars.theta + i, vars.theta + j, vars.phi_v + k, vars.phi_theta + k);
        let t2 = tk * tk;
        // P_ij − g_f u_i + gP φ^v + bP θ_ij + bPloss φ^θ = bP θ_k + bPloss θ_k²
        let d = &fc.ij;
        p.add_eq(
            vec![(vars.p_ij + k, 1.0), (vars.u + i, -c.g_f), (pv, d.g_p), (ti, d.b_p), (tj, -d.b_p), (pt, d.b_ploss)],
            d.b_p * tk + d.b_ploss * t2,
        );
        let d = &fc.ji;
        p.add_eq(
            vec![(vars.p_ji + k, 1.0), (vars.u + j, -c.g_t), (pv, d.g_p), (tj, d.b_p), (ti, -d.b_p), (pt, d.b_ploss)],
            -d.b_p * tk + d.b_ploss * t2,
        );
        // Q_ij + b_f u_i − bQ φ^v + gQ θ_ij + gQloss φ^θ = gQ θ_k + gQloss θ_k²
        let d = &fc.ij;
        p.add_eq(
            vec![(vars.q_ij + k, 1.0), (vars.u + i, c.b_f), (pv, -d.b_q), (ti, d.g_q), (tj, -d.g_q), (pt, d.g_qloss)],
            d.g_q * tk + d.g_qloss * t2,
        );
        let d = &fc.ji;
        p.add_eq(
            vec![(vars.q_ji + k, 1.0), (vars.u + j, c.b_t), (pv, -d.b_q), (tj, d.g_q), (ti, -d.g_q), (pt, d.g_qloss)],
            -d.g_q * tk + d.g_qloss * t2,
        );
        flow_coeffs.push(fc);
    }
    let wind_q = p.eq_rows.len();
    for (w, farm) in farms.iter().enumerate() {
        p.add_eq(vec![(vars.q_w + w, 1.0), (vars.p_w + w, -farm.q_ratio())], 0.0);
    }

    // Angle-difference bounds.
    let angle = p.ineq_rows.len();
    for (k, br) in net.branches().iter().enumerate() {
        let (i, j) = net.branch_ends(k);
        let (ti, tj) = (vars.theta + i, vars.theta + j);
        p.add_le(vec![(ti, 1.0), (tj, -1.0)], br.angle_max);
        p.add_le(vec![(ti, -1.0), (tj, 1.0)], -br.angle_min);
    }

    // Apparent-power limits on both ends.
    let mut limits = Vec::new();
    for (k, br) in net.branches().iter().enumerate() {
        for row in linearize_flow_limits(br.s_max, options.segments, options.arc)? {
            let r = p.add_le(vec![(vars.p_ij + k, row.cos), (vars.q_ij + k, row.sin)], row.rhs);
            limits.push((k, 0, row.cos, row.sin, r));
            let r = p.add_le(vec![(vars.p_ji + k, row.cos), (vars.q_ji + k, row.sin)], row.rhs);
            limits.push((k, 1, row.cos, row.sin, r));
        }
    }

    // Wind cost epigraph: η_l P_MW + χ_l ≤ γ.
    let mut pwl = Vec::new();
    for (w, cost) in wind_pwl.iter().enumerate() {
        if cost.segments.is_empty() {
            return Err(Error::Config(format!("wind farm {w} has an empty PWL cost")));
        }
        for seg in &cost.segments {
            let r = p.add_le(vec![(vars.p_w + w, seg.slope * base), (vars.gamma + w, -1.0)], -seg.intercept);
            pwl.push((w, r));
        }
    }

    // Rolling cuts.
    let mut cut_theta = vec![None; ne];
    let mut cut_v = vec![None; ne];
    for (k, c) in cuts.cuts.iter().enumerate() {
        let Some(c) = c else { continue };
        let (i, j) = net.branch_ends(k);
        let (a, b, r) = c.theta_row();
        cut_theta[k] = Some(p.add_le(
            vec![(vars.theta + i, a), (vars.theta + j, -a), (vars.phi_theta + k, b)],
            r,
        ));
        let (a, b, cv, r) = c.v_row();
        cut_v[k] = Some(p.add_le(vec![(vars.u + i, a), (vars.u + j, b), (vars.phi_v + k, cv)], r));
    }

    // Cones: ‖(2φ^v, u_i − u_j)‖ ≤ u_i + u_j and ‖(2θ_ij, φ^θ − 1)‖ ≤ φ^θ + 1.
    let soc_voltage = p.soc_blocks.len();
    for k in 0..ne {
        let (i, j) = net.branch_ends(k);
        let (ui, uj) = (vars.u + i, vars.u + j);
        p.add_soc(
            AffineExpr::new(vec![(ui, 1.0), (uj, 1.0)], 0.0),
            vec![AffineExpr::var(vars.phi_v + k, 2.0), AffineExpr::new(vec![(ui, 1.0), (uj, -1.0)], 0.0)],
        );
    }
    let soc_angle = p.soc_blocks.len();
    for k in 0..ne {
        let (i, j) = net.branch_ends(k);
        let pt = vars.phi_theta + k;
        p.add_soc(
            AffineExpr::new(vec![(pt, 1.0)], 1.0),
            vec![
                AffineExpr::new(vec![(vars.theta + i, 2.0), (vars.theta + j, -2.0)], 0.0),
                AffineExpr::new(vec![(pt, 1.0)], -1.0),
            ],
        );
    }

    let problem = SocaProblem {
        program: p,
        vars,
        rows: RowIndex {
            p_balance,
            q_balance,
            flow,
            wind_q,
            angle,
            limits,
            pwl,
            cut_theta,
            cut_v,
            soc_voltage,
            soc_angle,
        },
        point: point.clone(),
        ends: (0..ne).map(|k| net.branch_ends(k)).collect(),
        branch_coeffs,
        flow_coeffs,
    };
    problem.audit()?;
    Ok(problem)
}
