//! The outer solve loop: expand, solve, tighten with rolling cuts, re-expand
//! until the approximate flows match the exact ones, then restore AC
//! feasibility.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conic::{dump_program, solve, ConicSolution, ConicStatus};
use crate::error::{Error, Result};
use crate::netmodel::PowerNetwork;
use crate::pf::{
    exact_branch_flows, normalized_flow_error, restore_ac_feasibility, solution_error_report, ApproxDispatch,
    BranchFlow, ErrorReport, PowerFlowSolution, RestoreOptions, VoltageState,
};
use crate::relaxation::{
    assemble_soca_problem, dc_opf_initializer, exactness_condition, generate_rolling_cuts, AssemblyOptions, CutSet,
    Exactness, OperatingPoint, SocaProblem, VarIndex,
};
use crate::windcost::{build_pwl_cost, PwlCost};

/// Cut slacks below this stop the halving.
pub const DELTA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Flat,
    DcOpf,
    User(OperatingPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub init: InitMode,
    /// Combined relaxation-gap tolerance Δ̄ (p.u.).
    pub tol_gap: f64,
    /// Flow-error limit Γ̄ (p.u.).
    pub tol_gamma: f64,
    pub max_outer_iterations: usize,
    pub max_cut_rounds: usize,
    /// Tangent rows per branch end for the flow limits.
    pub segments: usize,
    pub solver_tol: f64,
    /// Operating-point update factor in (0, 1]; 1 is full replacement.
    pub damping: f64,
    /// Overrides each farm's PWL segment count.
    pub wind_pwl_segments: Option<usize>,
    pub restore: RestoreOptions,
    /// Keep a text dump of every assembled program in the trace.
    pub dump_programs: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            init: InitMode::Flat,
            tol_gap: 1e-4,
            tol_gamma: 1e-3,
            max_outer_iterations: 10,
            max_cut_rounds: 8,
            segments: 16,
            solver_tol: 1e-8,
            damping: 1.0,
            wind_pwl_segments: None,
            restore: RestoreOptions::default(),
            dump_programs: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_gap", self.tol_gap),
            ("tol_gamma", self.tol_gamma),
            ("solver_tol", self.solver_tol),
            ("restore.tol", self.restore.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be at least 1".into()));
        }
        if self.segments < 4 {
            return Err(Error::Config(format!("segments must be at least 4, got {}", self.segments)));
        }
        Ok(())
    }
}

/// One round of the inner cut loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRound {
    pub objective: f64,
    pub max_gap: f64,
    /// Branches whose cuts were rebuilt after this solve.
    pub tightened: Vec<usize>,
    /// Smallest active cut slack when the round was solved.
    pub min_delta: Option<f64>,
    pub solve_time: f64,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Expansion point of this iteration.
    pub point: OperatingPoint,
    /// Point recovered from the final solve, `(√u, θ)`.
    pub recovered: OperatingPoint,
    pub objective: f64,
    pub max_gap: f64,
    pub approx_flows: Vec<BranchFlow>,
    pub gamma: Vec<f64>,
    pub max_gamma: f64,
    pub rounds: Vec<CutRound>,
    pub time: f64,
    pub anomalies: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub program_dumps: Vec<String>,
}

impl IterationRecord {
    pub fn cut_rounds(&self) -> usize {
        self.rounds.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iterations: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    NotConverged,
    Infeasible,
    SolverFailure,
}

impl SolveStatus {
    /// Process exit code used by the command line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Converged => 0,
            SolveStatus::NotConverged => 1,
            SolveStatus::Infeasible | SolveStatus::SolverFailure => 3,
        }
    }
}

/// Scheduled output and cost of one wind farm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindSchedule {
    pub bus: usize,
    pub p_mw: f64,
    pub q_mvar: f64,
    /// Epigraph value in the solution.
    pub gamma: f64,
    /// PWL cost evaluated at `p_mw`.
    pub pwl_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocaSolution {
    pub status: SolveStatus,
    pub vars: Option<VarIndex>,
    /// Primal vector of the last successful solve.
    pub x: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    /// Approximate dispatch at the last solve.
    pub dispatch: Option<ApproxDispatch>,
    pub gaps: Vec<(f64, f64)>,
    pub exactness: Option<Vec<Exactness>>,
    /// Branches whose cut slack underflowed without closing the gap.
    pub cut_underflow: Vec<usize>,
    pub wind: Vec<WindSchedule>,
    pub wind_pwl: Vec<PwlCost>,
    pub objective: f64,
    pub fossil_cost: f64,
    pub wind_cost: f64,
    pub trace: IterationTrace,
    pub restored: Option<PowerFlowSolution>,
    pub report: Option<ErrorReport>,
    /// Program of the failing iteration when the solver did not return an optimum.
    pub failed_program: Option<String>,
    pub message: Option<String>,
    pub solve_time: f64,
}

impl SocaSolution {
    pub fn iterations(&self) -> usize {
        self.trace.iterations.len()
    }

    /// Fossil and wind shares of the objective in percent.
    pub fn cost_split_pct(&self) -> (f64, f64) {
        let total = self.fossil_cost + self.wind_cost;
        if total == 0.0 {
            return (100.0, 0.0);
        }
        (100.0 * self.fossil_cost / total, 100.0 * self.wind_cost / total)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copy with every wall-clock field zeroed, so repeated runs serialize identically.
    pub fn without_timings(&self) -> SocaSolution {
        let mut out = self.clone();
        out.solve_time = 0.0;
        for it in &mut out.trace.iterations {
            it.time = 0.0;
            it.rounds.iter_mut().for_each(|r| r.solve_time = 0.0);
        }
        out
    }
}

/// Γ per branch; see [`normalized_flow_error`].
pub fn convergence_metric(approx: &[BranchFlow], exact: &[BranchFlow]) -> Vec<f64> {
    normalized_flow_error(approx, exact)
}

/// `(φ^θ − θ_ij², φ^v − √(u_i u_j))` per branch from a primal vector.
pub fn relaxation_gap(problem: &SocaProblem, x: &[f64]) -> Vec<(f64, f64)> {
    let v = &problem.vars;
    problem
        .ends
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let t = x[v.theta + i] - x[v.theta + j];
            let uu = (x[v.u + i] * x[v.u + j]).max(0.0);
            (x[v.phi_theta + k] - t * t, x[v.phi_v + k] - uu.sqrt())
        })
        .collect()
}

/// Combined test `|gap_θ| + |gap_v|`, the largest over branches.
pub fn max_combined_gap(gaps: &[(f64, f64)]) -> f64 {
    gaps.iter().map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max)
}

/// PWL wind costs for every farm of the network.
pub fn wind_pwl_costs(net: &PowerNetwork, segments: Option<usize>) -> Result<Vec<PwlCost>> {
    net.wind_farms()
        .iter()
        .map(|f| {
            let n = segments.unwrap_or(f.pwl_segments);
            Ok(build_pwl_cost(&f.gmm, f.k_l, f.k_h, f.p_min_mw, f.p_max_mw, n)?.cost)
        })
        .collect()
}

fn recover_point(net: &PowerNetwork, problem: &SocaProblem, x: &[f64], tol: f64, anomalies: &mut Vec<String>) -> OperatingPoint {
    let vars = &problem.vars;
    let v = net
        .buses()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let u = x[vars.u + i];
            if u < b.v_min * b.v_min - tol {
                anomalies.push(format!("bus {}: u = {u:.6e} below v_min²", b.id));
            }
            u.max(0.0).sqrt()
        })
        .collect();
    let theta = x[vars.theta..vars.theta + vars.n_bus].to_vec();
    OperatingPoint::new(net, v, theta)
}

fn damped(net: &PowerNetwork, old: &OperatingPoint, new: &OperatingPoint, rho: f64) -> OperatingPoint {
    if rho == 1.0 {
        return new.clone();
    }
    let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| (1.0 - rho) * a + rho * b).collect();
    OperatingPoint::new(net, mix(&old.v, &new.v), mix(&old.theta, &new.theta))
}

fn dispatch_of(problem: &SocaProblem, x: &[f64], point: &OperatingPoint, objective: f64) -> ApproxDispatch {
    let v = &problem.vars;
    ApproxDispatch {
        state: VoltageState { v: point.v.clone(), theta: point.theta.clone() },
        gen: (0..v.n_gen).map(|g| (x[v.pg + g], x[v.qg + g])).collect(),
        wind: (0..v.n_wind).map(|w| (x[v.p_w + w], x[v.q_w + w])).collect(),
        branch_flows: problem.branch_flows(x),
        objective,
    }
}

fn failure_status(sol: &ConicSolution) -> SolveStatus {
    match sol.status {
        ConicStatus::Infeasible => SolveStatus::Infeasible,
        _ => SolveStatus::SolverFailure,
    }
}

/// Runs the full approximate OPF with wind and restores AC feasibility.
///
/// Each outer iteration assembles the model at the current point and
/// solves it; while a branch fails the combined gap test its cuts are
/// rebuilt at the latest solution with halved slack and the model is
/// solved again, up to `max_cut_rounds`. The point then moves to the
/// recovered `(√u, θ)` and Γ is evaluated against the exact flows there.
/// The loop stops when Γ and the gaps are within tolerance; otherwise the
/// last iterate is returned as not converged.
pub fn solve_wind_opf(net: &PowerNetwork, options: &SolveOptions) -> Result<SocaSolution> {
    options.validate()?;
    let started = Instant::now();
    let wind_pwl = wind_pwl_costs(net, options.wind_pwl_segments)?;
    let assembly = AssemblyOptions { segments: options.segments, ..AssemblyOptions::default() };

    let mut point = match &options.init {
        InitMode::Flat => OperatingPoint::flat(net),
        InitMode::DcOpf => dc_opf_initializer(net),
        InitMode::User(p) => {
            if p.v.len() != net.n_buses() || p.theta.len() != net.n_buses() {
                return Err(Error::Config(format!("user start has {} entries for {} buses", p.v.len(), net.n_buses())));
            }
            OperatingPoint::new(net, p.v.clone(), p.theta.clone())
        }
    };
    let mut cuts = CutSet::new(net.n_branches());
    let mut trace = IterationTrace::default();
    let mut underflow = Vec::new();
    let mut last: Option<(SocaProblem, ConicSolution, Vec<(f64, f64)>, OperatingPoint)> = None;
    let mut status = SolveStatus::NotConverged;

    'outer: for iteration in 1..=options.max_outer_iterations {
        let t_iter = Instant::now();
        let mut rounds = Vec::new();
        let mut dumps = Vec::new();
        let mut anomalies = Vec::new();
        let (problem, sol, gaps, recovered) = loop {
            let problem = assemble_soca_problem(net, &point, &cuts, &assembly, &wind_pwl)?;
            if options.dump_programs {
                dumps.push(dump_program(&problem.program));
            }
            let t_solve = Instant::now();
            let sol = solve(&problem.program, options.solver_tol)?;
            if !sol.is_optimal() {
                status = failure_status(&sol);
                log::warn!("iteration {iteration}: conic solver returned {:?}", sol.status);
                let record = IterationRecord {
                    iteration,
                    point: point.clone(),
                    recovered: point.clone(),
                    objective: f64::NAN,
                    max_gap: f64::NAN,
                    approx_flows: Vec::new(),
                    gamma: Vec::new(),
                    max_gamma: f64::NAN,
                    rounds,
                    time: t_iter.elapsed().as_secs_f64(),
                    anomalies,
                    program_dumps: dumps,
                };
                trace.iterations.push(record);
                return Ok(failed_solution(status, &sol, &problem, trace, wind_pwl, last, started));
            }
            if sol.reduced_accuracy {
                anomalies.push("solver returned a reduced-accuracy optimum".into());
            }
            let gaps = relaxation_gap(&problem, &sol.x);
            let mut found = Vec::new();
            let recovered = recover_point(net, &problem, &sol.x, options.solver_tol.sqrt(), &mut found);
            let flagged = gaps.iter().filter(|(a, b)| a.abs() + b.abs() >= options.tol_gap).count();
            let mut round = CutRound {
                objective: sol.objective,
                max_gap: max_combined_gap(&gaps),
                tightened: Vec::new(),
                min_delta: cuts.min_delta(),
                solve_time: t_solve.elapsed().as_secs_f64(),
            };
            let exhausted = rounds.len() >= options.max_cut_rounds;
            let floor = cuts.min_delta().is_some_and(|d| d < DELTA_FLOOR);
            if flagged == 0 || exhausted || floor {
                if floor && flagged > 0 {
                    underflow = gaps
                        .iter()
                        .enumerate()
                        .filter(|(k, (a, b))| {
                            a.abs() + b.abs() >= options.tol_gap
                                && cuts.cuts[*k].is_some_and(|c| c.delta_theta.min(c.delta_v) < DELTA_FLOOR)
                        })
                        .map(|(k, _)| k)
                        .collect();
                }
                rounds.push(round);
                anomalies.extend(found);
                break (problem, sol, gaps, recovered);
            }
            let (next, tightened) = generate_rolling_cuts(&cuts, net, &recovered, &gaps, options.tol_gap)?;
            round.tightened = tightened;
            rounds.push(round);
            cuts = next;
        };

        let next = damped(net, &point, &recovered, options.damping);
        let approx_flows = problem.branch_flows(&sol.x);
        let exact = exact_branch_flows(net, &VoltageState { v: recovered.v.clone(), theta: recovered.theta.clone() })?;
        let gamma = convergence_metric(&approx_flows, &exact);
        let max_gamma = gamma.iter().map(|g| g.abs()).fold(0.0, f64::max);
        let max_gap = max_combined_gap(&gaps);
        log::info!(
            "iteration {iteration}: objective {:.6}, max gap {max_gap:.3e}, max |Γ| {max_gamma:.3e}, {} cut rounds",
            sol.objective,
            rounds.len() - 1
        );
        trace.iterations.push(IterationRecord {
            iteration,
            point: point.clone(),
            recovered: recovered.clone(),
            objective: sol.objective,
            max_gap,
            approx_flows,
            gamma,
            max_gamma,
            rounds,
            time: t_iter.elapsed().as_secs_f64(),
            anomalies,
            program_dumps: dumps,
        });
        let done = max_gamma <= options.tol_gamma && max_gap < options.tol_gap;
        last = Some((problem, sol, gaps, recovered));
        if done {
            status = SolveStatus::Converged;
            break 'outer;
        }
        cuts = cuts.rolled_to(net, &next)?;
        point = next;
    }

    let (problem, sol, gaps, recovered) = last.expect("at least one outer iteration ran");
    let dispatch = dispatch_of(&problem, &sol.x, &recovered, sol.objective);
    let restored = restore_ac_feasibility(net, &dispatch, &options.restore)?;
    let wind = wind_schedules(net, &problem, &sol.x, &wind_pwl);
    let wind_cost: f64 = wind.iter().fold(0.0, |a, w| a + w.pwl_cost);
    let restored_wind: f64 = restored
        .wind_outputs
        .iter()
        .zip(&wind_pwl)
        .map(|(&(p, _), c)| c.eval(p * net.base_mva()))
        .sum();
    let restored_objective = restored.generation_cost(net) + restored_wind;
    let report = solution_error_report(net, &dispatch, &restored, restored_objective);
    let fossil_cost = sol.objective - wind.iter().map(|w| w.gamma).sum::<f64>();
    if !restored.converged {
        log::warn!("{}", restored.diagnostic.as_deref().unwrap_or("restoration failed"));
    }
    Ok(SocaSolution {
        status,
        vars: Some(problem.vars),
        exactness: exactness_condition(&problem, &sol),
        x: sol.x,
        eq_duals: sol.eq_duals,
        ineq_duals: sol.ineq_duals,
        dispatch: Some(dispatch),
        gaps,
        cut_underflow: underflow,
        wind,
        wind_pwl,
        objective: sol.objective,
        fossil_cost,
        wind_cost,
        trace,
        message: restored.diagnostic.clone(),
        restored: Some(restored),
        report: Some(report),
        failed_program: None,
        solve_time: started.elapsed().as_secs_f64(),
    })
}

fn wind_schedules(net: &PowerNetwork, problem: &SocaProblem, x: &[f64], pwl: &[PwlCost]) -> Vec<WindSchedule> {
    let v = &problem.vars;
    let base = net.base_mva();
    net.wind_farms()
        .iter()
        .enumerate()
        .map(|(w, f)| {
            let p_mw = x[v.p_w + w] * base;
            WindSchedule {
                bus: f.bus,
                p_mw,
                q_mvar: x[v.q_w + w] * base,
                gamma: x[v.gamma + w],
                pwl_cost: pwl[w].eval(p_mw),
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn failed_solution(
    status: SolveStatus,
    sol: &ConicSolution,
    problem: &SocaProblem,
    trace: IterationTrace,
    wind_pwl: Vec<PwlCost>,
    last: Option<(SocaProblem, ConicSolution, Vec<(f64, f64)>, OperatingPoint)>,
    started: Instant,
) -> SocaSolution {
    let (x, gaps, dispatch) = match &last {
        Some((p, s, g, r)) => (s.x.clone(), g.clone(), Some(dispatch_of(p, &s.x, r, s.objective))),
        None => (Vec::new(), Vec::new(), None),
    };
    SocaSolution {
        status,
        vars: Some(problem.vars),
        x,
        eq_duals: Vec::new(),
        ineq_duals: Vec::new(),
        dispatch,
        gaps,
        exactness: None,
        cut_underflow: Vec::new(),
        wind: Vec::new(),
        wind_pwl,
        objective: f64::NAN,
        fossil_cost: f64::NAN,
        wind_cost: f64::NAN,
        trace,
        restored: None,
        report: None,
        failed_program: Some(dump_program(&problem.program)),
        message: Some(format!("conic solver returned {:?}", sol.status)),
        solve_time: started.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::tests::{case, two_bus};

    #[test]
    fn gap_threshold_arithmetic() {
        let net = two_bus(0.01, 0.1, 0.5);
        let prob = assemble_soca_problem(
            &net,
            &OperatingPoint::flat(&net),
            &CutSet::new(1),
            &AssemblyOptions::default(),
            &[],
        )
        .unwrap();
        let v = prob.vars;
        let mut x = vec![0.0; v.total];
        x[v.u] = 1.0;
        x[v.u + 1] = 0.9;
        x[v.theta + 1] = -0.05;
        x[v.phi_theta] = 0.0025 + 5e-5;
        x[v.phi_v] = 0.9_f64.sqrt();
        let gaps = relaxation_gap(&prob, &x);
        assert!((gaps[0].0 - 5e-5).abs() < 1e-15);
        assert!(gaps[0].1.abs() < 1e-15);
        assert!(max_combined_gap(&gaps) < 1e-4);
    }

    #[test]
    fn single_branch_gamma() {
        let a = [BranchFlow { p_ij: 1.001, q_ij: 0.0, p_ji: -1.0, q_ji: 0.0 }];
        let e = [BranchFlow { p_ij: 1.0, q_ij: 0.0, p_ji: -1.0, q_ji: 0.0 }];
        assert!((convergence_metric(&a, &e)[0] - 0.001).abs() < 1e-12);
        assert_eq!(convergence_metric(&e, &e), vec![0.0]);
    }

    #[test]
    fn no_load_network() {
        let net = two_bus(0.01, 0.1, 0.0);
        let sol = solve_wind_opf(&net, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(sol.iterations(), 1);
        let d = sol.dispatch.as_ref().unwrap();
        assert!(d.gen[0].0.abs() < 1e-6);
        assert!(d.state.theta.iter().all(|t| t.abs() < 1e-6));
    }

    #[test]
    fn converged_point_is_a_fixed_point() {
        let net = case("case14");
        let first = solve_wind_opf(&net, &SolveOptions::default()).unwrap();
        assert_eq!(first.status, SolveStatus::Converged);
        let start = first.trace.iterations.last().unwrap().recovered.clone();
        let opts = SolveOptions { init: InitMode::User(start), ..SolveOptions::default() };
        let again = solve_wind_opf(&net, &opts).unwrap();
        assert_eq!(again.status, SolveStatus::Converged);
        assert_eq!(again.iterations(), 1);
        assert_eq!(again.trace.iterations[0].cut_rounds(), 0);
    }

    #[test]
    fn trace_gamma_matches_recomputation() {
        let net = case("case9");
        let sol = solve_wind_opf(&net, &SolveOptions::default()).unwrap();
        let trace = IterationTrace::from_json(&sol.trace.to_json().unwrap()).unwrap();
        for it in &trace.iterations {
            let st = VoltageState { v: it.recovered.v.clone(), theta: it.recovered.theta.clone() };
            let g = convergence_metric(&it.approx_flows, &exact_branch_flows(&net, &st).unwrap());
            for (a, b) in g.iter().zip(&it.gamma) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn overloaded_network_is_infeasible() {
        // The single generator tops out at its p_max, far below this load.
        let mut net = two_bus(0.01, 0.1, 0.5);
        net = net.with_load_scale(1000.0);
        let sol = solve_wind_opf(&net, &SolveOptions::default()).unwrap();
        assert!(matches!(sol.status, SolveStatus::Infeasible | SolveStatus::SolverFailure));
        assert!(sol.failed_program.is_some());
        assert!(sol.restored.is_none());
    }

    #[test]
    fn invalid_options_are_rejected() {
        let net = two_bus(0.01, 0.1, 0.5);
        for opts in [
            SolveOptions { tol_gap: 0.0, ..SolveOptions::default() },
            SolveOptions { tol_gamma: -1.0, ..SolveOptions::default() },
            SolveOptions { damping: 1.5, ..SolveOptions::default() },
            SolveOptions { segments: 2, ..SolveOptions::default() },
            SolveOptions { init: InitMode::User(OperatingPoint { v: vec![1.0], theta: vec![0.0] }), ..SolveOptions::default() },
        ] {
            assert!(matches!(solve_wind_opf(&net, &opts), Err(Error::Config(_))));
        }
    }

    #[test]
    fn damped_update_still_converges() {
        let net = case("case9");
        let opts = SolveOptions { damping: 0.7, max_outer_iterations: 20, ..SolveOptions::default() };
        let sol = solve_wind_opf(&net, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
    }
}
