use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ApproxDispatch, BranchFlow, PowerFlowSolution};
use crate::error::Result;
use crate::netmodel::PowerNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchError {
    pub index: usize,
    pub from: usize,
    pub to: usize,
    pub p_loss_error: f64,
    pub q_loss_error: f64,
    /// Largest active-flow error over both ends.
    pub p_flow_error: f64,
    pub q_flow_error: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusError {
    pub id: usize,
    pub v_error: f64,
    pub theta_error: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_p_loss_error: f64,
    pub max_q_loss_error: f64,
    pub max_p_flow_error: f64,
    pub max_q_flow_error: f64,
    pub max_v_error: f64,
    pub max_theta_error: f64,
    pub max_abs_gamma: f64,
    pub objective_approx: f64,
    /// Objective of the restored AC operating point, the reference value.
    pub objective_restored: f64,
    pub objective_error_pct: f64,
}

/// Errors of an approximate solution against an exact AC solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub branches: Vec<BranchError>,
    pub buses: Vec<BusError>,
    pub summary: ErrorSummary,
}

/// Largest exact flow (p.u.) still treated as an unloaded network.
pub const NO_FLOW: f64 = 1e-9;

/// `(|S_approx| − |S_exact|) / max |S_exact|` per branch, taking the end with
/// the larger deviation. All zeros when no branch carries more than [`NO_FLOW`].
pub fn normalized_flow_error(approx: &[BranchFlow], exact: &[BranchFlow]) -> Vec<f64> {
    let scale = exact.iter().map(|f| f.s_ij().max(f.s_ji())).fold(0.0, f64::max);
    if scale <= NO_FLOW {
        return vec![0.0; approx.len()];
    }
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            let dij = a.s_ij() - e.s_ij();
            let dji = a.s_ji() - e.s_ji();
            (if dij.abs() >= dji.abs() { dij } else { dji }) / scale
        })
        .collect()
}

/// Compares the approximate dispatch with the exact solution.
///
/// The objective error is `|f_approx − f_restored| / |f_restored| × 100`; when
/// the reference objective is zero the absolute difference is reported.
pub fn solution_error_report(
    net: &PowerNetwork,
    approx: &ApproxDispatch,
    exact: &PowerFlowSolution,
    exact_objective: f64,
) -> ErrorReport {
    let gammas = normalized_flow_error(&approx.branch_flows, &exact.branch_flows);
    let branches: Vec<BranchError> = approx
        .branch_flows
        .iter()
        .zip(&exact.branch_flows)
        .enumerate()
        .map(|(k, (a, e))| BranchError {
            index: k,
            from: net.branches()[k].from,
            to: net.branches()[k].to,
            p_loss_error: (a.p_loss() - e.p_loss()).abs(),
            q_loss_error: (a.q_loss() - e.q_loss()).abs(),
            p_flow_error: (a.p_ij - e.p_ij).abs().max((a.p_ji - e.p_ji).abs()),
            q_flow_error: (a.q_ij - e.q_ij).abs().max((a.q_ji - e.q_ji).abs()),
            gamma: gammas[k],
        })
        .collect();
    let buses: Vec<BusError> = net
        .buses()
        .iter()
        .enumerate()
        .map(|(i, b)| BusError {
            id: b.id,
            v_error: (approx.state.v[i] - exact.state.v[i]).abs(),
            theta_error: (approx.state.theta[i] - exact.state.theta[i]).abs(),
        })
        .collect();

    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let denom = if exact_objective != 0.0 { exact_objective.abs() / 100.0 } else { 1.0 };
    let summary = ErrorSummary {
        max_p_loss_error: max(&mut branches.iter().map(|b| b.p_loss_error)),
        max_q_loss_error: max(&mut branches.iter().map(|b| b.q_loss_error)),
        max_p_flow_error: max(&mut branches.iter().map(|b| b.p_flow_error)),
        max_q_flow_error: max(&mut branches.iter().map(|b| b.q_flow_error)),
        max_v_error: max(&mut buses.iter().map(|b| b.v_error)),
        max_theta_error: max(&mut buses.iter().map(|b| b.theta_error)),
        max_abs_gamma: max(&mut branches.iter().map(|b| b.gamma.abs())),
        objective_approx: approx.objective,
        objective_restored: exact_objective,
        objective_error_pct: (approx.objective - exact_objective).abs() / denom,
    };
    ErrorReport { branches, buses, summary }
}

impl ErrorReport {
    /// One row per branch followed by one row per bus; unused columns are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "kind",
            "index",
            "from",
            "to",
            "p_loss_error",
            "q_loss_error",
            "p_flow_error",
            "q_flow_error",
            "gamma",
            "v_error",
            "theta_error",
        ])?;
        for b in &self.branches {
            w.write_record([
                "branch".to_string(),
                b.index.to_string(),
                b.from.to_string(),
                b.to.to_string(),
                b.p_loss_error.to_string(),
                b.q_loss_error.to_string(),
                b.p_flow_error.to_string(),
                b.q_flow_error.to_string(),
                b.gamma.to_string(),
                String::new(),
                String::new(),
            ])?;
        }
        for b in &self.buses {
            let mut rec = vec!["bus".to_string(), b.id.to_string()];
            rec.extend(std::iter::repeat_n(String::new(), 7));
            rec.push(b.v_error.to_string());
            rec.push(b.theta_error.to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }
}
