use serde::{Deserialize, Serialize};

use super::newton::{solve_power_flow, BusKind, PowerFlowSpec};
use super::{bus_injections, flows_with, BranchFlow, PowerFlowSolution, VoltageState, Ybus};
use crate::error::Result;
use crate::netmodel::{BusType, PowerNetwork};

/// An approximate operating point handed to restoration (all p.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxDispatch {
    pub state: VoltageState,
    /// `(P, Q)` per generator.
    pub gen: Vec<(f64, f64)>,
    /// `(P, Q)` per wind farm.
    pub wind: Vec<(f64, f64)>,
    /// Branch flows of the approximate model.
    pub branch_flows: Vec<BranchFlow>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestoreOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Reactive-limit violations below this (p.u.) are ignored.
    pub q_tol: f64,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        RestoreOptions { tol: 1e-8, max_iter: 30, q_tol: 1e-6 }
    }
}

/// Re-solves the exact power flow keeping P and Q at PQ buses, P and v at PV
/// buses and v at the slack. Generators pushed past a reactive limit are
/// pinned there one bus at a time (worst violation first) and their bus
/// loses voltage control.
///
/// If Newton-Raphson fails from both the approximate and a flat start, the
/// approximate point is returned with `converged = false` and a diagnostic.
pub fn restore_ac_feasibility(net: &PowerNetwork, approx: &ApproxDispatch, opts: &RestoreOptions) -> Result<PowerFlowSolution> {
    let n = net.n_buses();
    let ybus = Ybus::build(net)?;
    let by_bus = net.generators_by_bus();
    let wind_by_bus = net.wind_by_bus();
    let gens = net.generators();

    let mut wind_q = vec![0.0; n];
    let mut spec = PowerFlowSpec {
        kind: vec![BusKind::PQ; n],
        p_spec: vec![0.0; n],
        q_spec: vec![0.0; n],
        v_set: approx.state.v.clone(),
        slack_angle: 0.0,
    };
    for (i, b) in net.buses().iter().enumerate() {
        spec.kind[i] = match b.bus_type {
            BusType::Ref => BusKind::Slack,
            BusType::PV if !by_bus[i].is_empty() => BusKind::PV,
            _ => BusKind::PQ,
        };
        let (mut p, mut q) = (-b.pd, -b.qd);
        for &g in &by_bus[i] {
            p += approx.gen[g].0;
            q += approx.gen[g].1;
        }
        for &w in &wind_by_bus[i] {
            p += approx.wind[w].0;
            q += approx.wind[w].1;
            wind_q[i] += approx.wind[w].1;
        }
        spec.p_spec[i] = p;
        spec.q_spec[i] = q;
    }

    let coeffs = net.branch_coefficients()?;
    let mut start = approx.state.clone();
    let mut converted = Vec::new();
    let mut total_iterations = 0;
    let pv_count = spec.kind.iter().filter(|k| **k == BusKind::PV).count();

    for _ in 0..=pv_count {
        let mut out = solve_power_flow(net, &ybus, &spec, &start, opts.tol, opts.max_iter)?;
        if !out.converged {
            out = solve_power_flow(net, &ybus, &spec, &VoltageState::flat(n), opts.tol, opts.max_iter)?;
        }
        total_iterations += out.iterations;
        if !out.converged {
            return Ok(PowerFlowSolution {
                state: approx.state.clone(),
                branch_flows: approx.branch_flows.clone(),
                gen_outputs: approx.gen.clone(),
                wind_outputs: approx.wind.clone(),
                converged: false,
                iterations: total_iterations,
                max_mismatch: out.max_mismatch,
                pv_to_pq: converted,
                diagnostic: Some(format!(
                    "restoration power flow did not converge (mismatch {:.3e}); approximate point returned",
                    out.max_mismatch
                )),
            });
        }
        let flows = flows_with(net, &coeffs, &out.state);
        let (p_inj, q_inj) = bus_injections(net, &out.state, &flows);

        let mut worst: Option<(usize, f64, f64)> = None;
        for i in 0..n {
            if spec.kind[i] != BusKind::PV {
                continue;
            }
            let q_gen = q_inj[i] + net.buses()[i].qd - wind_q[i];
            let q_min: f64 = by_bus[i].iter().map(|&g| gens[g].q_min).sum();
            let q_max: f64 = by_bus[i].iter().map(|&g| gens[g].q_max).sum();
            let (excess, limit) = if q_gen > q_max { (q_gen - q_max, q_max) } else { (q_min - q_gen, q_min) };
            if excess > opts.q_tol && worst.is_none_or(|w| excess > w.1) {
                worst = Some((i, excess, limit));
            }
        }
        if let Some((i, _, limit)) = worst {
            spec.kind[i] = BusKind::PQ;
            spec.q_spec[i] = limit - net.buses()[i].qd + wind_q[i];
            converted.push(net.buses()[i].id);
            start = out.state;
            continue;
        }

        let p_ref: Vec<f64> = approx.gen.iter().map(|g| g.0).collect();
        let q_ref: Vec<f64> = approx.gen.iter().map(|g| g.1).collect();
        let gen_outputs = allocate_generation(net, &p_inj, &q_inj, &approx.wind, &p_ref, &q_ref);
        return Ok(PowerFlowSolution {
            state: out.state,
            branch_flows: flows,
            gen_outputs,
            wind_outputs: approx.wind.clone(),
            converged: true,
            iterations: total_iterations,
            max_mismatch: out.max_mismatch,
            pv_to_pq: converted,
            diagnostic: None,
        });
    }
    unreachable!("each pass either returns or converts one of finitely many PV buses")
}

/// Splits each bus's required generation among its units.
///
/// Active power keeps the reference dispatch and spreads any difference in
/// proportion to the units' P ranges; reactive power puts every unit at the
/// same fraction of its Q range. Equal shares are used when ranges vanish.
pub fn allocate_generation(
    net: &PowerNetwork,
    p_inj: &[f64],
    q_inj: &[f64],
    wind: &[(f64, f64)],
    p_ref: &[f64],
    q_ref: &[f64],
) -> Vec<(f64, f64)> {
    let gens = net.generators();
    let mut out = vec![(0.0, 0.0); gens.len()];
    let wind_by_bus = net.wind_by_bus();
    for (i, units) in net.generators_by_bus().iter().enumerate() {
        if units.is_empty() {
            continue;
        }
        let b = &net.buses()[i];
        let wp: f64 = wind_by_bus[i].iter().map(|&w| wind[w].0).sum();
        let wq: f64 = wind_by_bus[i].iter().map(|&w| wind[w].1).sum();
        let p_need = p_inj[i] + b.pd - wp;
        let q_need = q_inj[i] + b.qd - wq;

        let share = |range: &dyn Fn(usize) -> f64| -> Vec<f64> {
            let total: f64 = units.iter().map(|&g| range(g)).sum();
            if total > 0.0 && total.is_finite() {
                units.iter().map(|&g| range(g) / total).collect()
            } else {
                vec![1.0 / units.len() as f64; units.len()]
            }
        };
        let p_share = share(&|g| gens[g].p_max - gens[g].p_min);
        let dp = p_need - units.iter().map(|&g| p_ref[g]).sum::<f64>();
        for (k, &g) in units.iter().enumerate() {
            out[g].0 = p_ref[g] + dp * p_share[k];
        }

        if units.len() == 1 {
            out[units[0]].1 = q_need;
            continue;
        }
        let q_min: f64 = units.iter().map(|&g| gens[g].q_min).sum();
        let q_range: f64 = units.iter().map(|&g| gens[g].q_max - gens[g].q_min).sum();
        if q_range > 0.0 && q_range.is_finite() {
            let frac = (q_need - q_min) / q_range;
            for &g in units {
                out[g].1 = gens[g].q_min + frac * (gens[g].q_max - gens[g].q_min);
            }
        } else {
            let dq = q_need - units.iter().map(|&g| q_ref[g]).sum::<f64>();
            for &g in units {
                out[g].1 = q_ref[g] + dq / units.len() as f64;
            }
        }
    }
    out
}
