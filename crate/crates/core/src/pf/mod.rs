//! Exact AC power flow: branch flows from a voltage state, nodal admittance,
//! Newton-Raphson, restoration of an approximate dispatch to an AC-feasible
//! operating point, and error reports between the two.

mod newton;
mod report;
mod restore;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BranchCoefficients, PowerNetwork};

pub use newton::{newton_raphson, solve_power_flow, BusKind, PowerFlowSpec};
pub use report::{normalized_flow_error, solution_error_report, NO_FLOW, BranchError, BusError, ErrorReport, ErrorSummary};
pub use restore::{allocate_generation, restore_ac_feasibility, ApproxDispatch, RestoreOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageState {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl VoltageState {
    pub fn flat(n: usize) -> Self {
        VoltageState { v: vec![1.0; n], theta: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    fn check(&self, net: &PowerNetwork) -> Result<()> {
        if self.v.len() != net.n_buses() || self.theta.len() != net.n_buses() {
            return Err(Error::Validation(format!(
                "voltage state has {}/{} entries for {} buses",
                self.v.len(),
                self.theta.len(),
                net.n_buses()
            )));
        }
        Ok(())
    }
}

/// Flows into a branch from each end (p.u.).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub p_ij: f64,
    pub q_ij: f64,
    pub p_ji: f64,
    pub q_ji: f64,
}

impl BranchFlow {
    pub fn p_loss(&self) -> f64 {
        self.p_ij + self.p_ji
    }

    pub fn q_loss(&self) -> f64 {
        self.q_ij + self.q_ji
    }

    pub fn s_ij(&self) -> f64 {
        self.p_ij.hypot(self.q_ij)
    }

    pub fn s_ji(&self) -> f64 {
        self.p_ji.hypot(self.q_ji)
    }
}

/// Flows through one branch in terms of its constant coefficients.
pub fn branch_flow(c: &BranchCoefficients, vi: f64, vj: f64, theta_ij: f64) -> BranchFlow {
    let (s, co) = theta_ij.sin_cos();
    let vv = vi * vj;
    BranchFlow {
        p_ij: c.g_f * vi * vi - vv * (c.g_c_ij * co + c.b_c_ij * s),
        q_ij: -c.b_f * vi * vi + vv * (c.b_c_ij * co - c.g_c_ij * s),
        p_ji: c.g_t * vj * vj - vv * (c.g_c_ji * co - c.b_c_ji * s),
        q_ji: -c.b_t * vj * vj + vv * (c.b_c_ji * co + c.g_c_ji * s),
    }
}

pub fn exact_branch_flows(net: &PowerNetwork, state: &VoltageState) -> Result<Vec<BranchFlow>> {
    state.check(net)?;
    let coeffs = net.branch_coefficients()?;
    Ok(flows_with(net, &coeffs, state))
}

pub(crate) fn flows_with(net: &PowerNetwork, coeffs: &[BranchCoefficients], state: &VoltageState) -> Vec<BranchFlow> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (i, j) = net.branch_ends(k);
            branch_flow(c, state.v[i], state.v[j], state.theta[i] - state.theta[j])
        })
        .collect()
}

/// Net injections `(P_i, Q_i)` leaving every bus into branches and shunts.
pub fn bus_injections(net: &PowerNetwork, state: &VoltageState, flows: &[BranchFlow]) -> (Vec<f64>, Vec<f64>) {
    let n = net.n_buses();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for (i, b) in net.buses().iter().enumerate() {
        let v2 = state.v[i] * state.v[i];
        p[i] += b.gs * v2;
        q[i] -= b.bs * v2;
    }
    for (k, f) in flows.iter().enumerate() {
        let (i, j) = net.branch_ends(k);
        p[i] += f.p_ij;
        q[i] += f.q_ij;
        p[j] += f.p_ji;
        q[j] += f.q_ji;
    }
    (p, q)
}

/// Nodal admittance matrix in row-adjacency form, diagonal entry first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ybus {
    pub rows: Vec<Vec<(usize, Complex64)>>,
}

impl Ybus {
    pub fn build(net: &PowerNetwork) -> Result<Ybus> {
        let n = net.n_buses();
        let mut rows: Vec<Vec<(usize, Complex64)>> =
            net.buses().iter().enumerate().map(|(i, b)| vec![(i, Complex64::new(b.gs, b.bs))]).collect();
        let mut add = |i: usize, j: usize, y: Complex64| match rows[i].iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += y,
            None => rows[i].push((j, y)),
        };
        for (k, br) in net.branches().iter().enumerate() {
            let z = Complex64::new(br.r, br.x);
            if z.norm_sqr() == 0.0 || br.tau <= 0.0 {
                return Err(Error::InvalidBranch { index: k, reason: "zero impedance or nonpositive tap".into() });
            }
            let y = z.inv();
            let t = Complex64::from_polar(br.tau, br.shift);
            let ych = Complex64::new(0.0, br.b_ch / 2.0);
            let (i, j) = net.branch_ends(k);
            add(i, i, (y + ych) / (br.tau * br.tau));
            add(i, j, -y / t.conj());
            add(j, i, -y / t);
            add(j, j, y + ych);
        }
        debug_assert_eq!(rows.len(), n);
        Ok(Ybus { rows })
    }

    /// Complex injections `S_i = V_i · conj(Σ_j Y_ij V_j)`.
    pub fn injections(&self, state: &VoltageState) -> Vec<Complex64> {
        let volt: Vec<Complex64> =
            state.v.iter().zip(&state.theta).map(|(&v, &t)| Complex64::from_polar(v, t)).collect();
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cur: Complex64 = row.iter().map(|&(j, y)| y * volt[j]).sum();
                volt[i] * cur.conj()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub state: VoltageState,
    pub branch_flows: Vec<BranchFlow>,
    /// `(P, Q)` per generator (p.u.).
    pub gen_outputs: Vec<(f64, f64)>,
    /// `(P, Q)` per wind farm (p.u.).
    pub wind_outputs: Vec<(f64, f64)>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Bus ids switched from voltage control to fixed reactive output.
    pub pv_to_pq: Vec<usize>,
    pub diagnostic: Option<String>,
}

impl PowerFlowSolution {
    /// Total fossil generation cost of the solved dispatch.
    pub fn generation_cost(&self, net: &PowerNetwork) -> f64 {
        net.generators().iter().zip(&self.gen_outputs).map(|(g, &(p, _))| g.cost(p)).sum()
    }
}
