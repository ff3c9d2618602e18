use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::{allocate_generation, bus_injections, flows_with, PowerFlowSolution, VoltageState, Ybus};
use crate::error::{Error, Result};
use crate::netmodel::{BusType, PowerNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

/// Specified quantities for a power-flow solve. `p_spec` / `q_spec` are net
/// injections (generation minus demand, p.u.); `v_set` is held at slack and
/// PV buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSpec {
    pub kind: Vec<BusKind>,
    pub p_spec: Vec<f64>,
    pub q_spec: Vec<f64>,
    pub v_set: Vec<f64>,
    /// Angle held at the slack bus (rad).
    pub slack_angle: f64,
}

impl PowerFlowSpec {
    /// Scheduled injections and voltage set-points taken from the network data.
    pub fn from_network(net: &PowerNetwork) -> PowerFlowSpec {
        let n = net.n_buses();
        let by_bus = net.generators_by_bus();
        let wind = net.wind_by_bus();
        let gens = net.generators();
        let farms = net.wind_farms();
        let base = net.base_mva();
        let mut spec = PowerFlowSpec {
            kind: vec![BusKind::PQ; n],
            p_spec: vec![0.0; n],
            q_spec: vec![0.0; n],
            v_set: vec![1.0; n],
            slack_angle: 0.0,
        };
        for (i, b) in net.buses().iter().enumerate() {
            spec.kind[i] = match b.bus_type {
                BusType::Ref => BusKind::Slack,
                BusType::PV if !by_bus[i].is_empty() => BusKind::PV,
                _ => BusKind::PQ,
            };
            spec.p_spec[i] = by_bus[i].iter().map(|&g| gens[g].pg).sum::<f64>() - b.pd;
            spec.q_spec[i] = by_bus[i].iter().map(|&g| gens[g].qg).sum::<f64>() - b.qd;
            for &w in &wind[i] {
                let p = farms[w].gmm.mean().clamp(farms[w].p_min_mw, farms[w].p_max_mw) / base;
                spec.p_spec[i] += p;
                spec.q_spec[i] += p * farms[w].q_ratio();
            }
            spec.v_set[i] = by_bus[i].first().map(|&g| gens[g].vg).unwrap_or(b.vm);
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrOutcome {
    pub state: VoltageState,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

/// Polar-form Newton-Raphson on the given bus setpoints.
///
/// Returns a non-converged outcome when the iteration cap is hit or the
/// iterate blows up; a singular Jacobian is a numerical error.
pub fn solve_power_flow(
    net: &PowerNetwork,
    ybus: &Ybus,
    spec: &PowerFlowSpec,
    start: &VoltageState,
    tol: f64,
    max_iter: usize,
) -> Result<NrOutcome> {
    let n = net.n_buses();
    if start.len() != n || spec.kind.len() != n {
        return Err(Error::Validation("power-flow dimensions do not match the network".into()));
    }
    let mut state = start.clone();
    let mut ang = vec![usize::MAX; n];
    let mut mag = vec![usize::MAX; n];
    let mut m = 0;
    for i in 0..n {
        match spec.kind[i] {
            BusKind::Slack => {
                state.v[i] = spec.v_set[i];
                state.theta[i] = spec.slack_angle;
            }
            BusKind::PV => {
                state.v[i] = spec.v_set[i];
                ang[i] = m;
                m += 1;
            }
            BusKind::PQ => {
                ang[i] = m;
                m += 1;
            }
        }
    }
    for i in 0..n {
        if spec.kind[i] == BusKind::PQ {
            mag[i] = m;
            m += 1;
        }
    }

    let mismatch = |s: &VoltageState| -> (Vec<f64>, Vec<num_complex::Complex64>) {
        let inj = ybus.injections(s);
        let mut f = vec![0.0; m];
        for i in 0..n {
            if ang[i] != usize::MAX {
                f[ang[i]] = spec.p_spec[i] - inj[i].re;
            }
            if mag[i] != usize::MAX {
                f[mag[i]] = spec.q_spec[i] - inj[i].im;
            }
        }
        (f, inj)
    };

    let mut iterations = 0;
    loop {
        let (f, inj) = mismatch(&state);
        let worst = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if !worst.is_finite() {
            return Ok(NrOutcome { state, converged: false, iterations, max_mismatch: f64::INFINITY });
        }
        if worst < tol {
            return Ok(NrOutcome { state, converged: true, iterations, max_mismatch: worst });
        }
        if iterations == max_iter {
            return Ok(NrOutcome { state, converged: false, iterations, max_mismatch: worst });
        }
        if m == 0 {
            return Ok(NrOutcome { state, converged: true, iterations, max_mismatch: worst });
        }

        let mut trip = Vec::new();
        for i in 0..n {
            let (vi, ti) = (state.v[i], state.theta[i]);
            let (pi, qi) = (inj[i].re, inj[i].im);
            for &(j, y) in &ybus.rows[i] {
                let (g, b) = (y.re, y.im);
                if i == j {
                    if ang[i] != usize::MAX {
                        trip.push(Triplet::new(ang[i], ang[i], -qi - b * vi * vi));
                        if mag[i] != usize::MAX {
                            trip.push(Triplet::new(ang[i], mag[i], pi / vi + g * vi));
                        }
                    }
                    if mag[i] != usize::MAX {
                        trip.push(Triplet::new(mag[i], ang[i], pi - g * vi * vi));
                        trip.push(Triplet::new(mag[i], mag[i], qi / vi - b * vi));
                    }
                    continue;
                }
                let vj = state.v[j];
                let (s, c) = (ti - state.theta[j]).sin_cos();
                let h = vi * vj * (g * s - b * c);
                let k = vi * vj * (g * c + b * s);
                if ang[i] != usize::MAX {
                    if ang[j] != usize::MAX {
                        trip.push(Triplet::new(ang[i], ang[j], h));
                    }
                    if mag[j] != usize::MAX {
                        trip.push(Triplet::new(ang[i], mag[j], k / vj));
                    }
                }
                if mag[i] != usize::MAX {
                    if ang[j] != usize::MAX {
                        trip.push(Triplet::new(mag[i], ang[j], -k));
                    }
                    if mag[j] != usize::MAX {
                        trip.push(Triplet::new(mag[i], mag[j], h / vj));
                    }
                }
            }
        }
        let jac = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &trip)
            .map_err(|e| Error::Numerical(format!("Jacobian assembly failed: {e:?}")))?;
        let lu = jac.sp_lu().map_err(|e| Error::Numerical(format!("Jacobian factorization failed: {e:?}")))?;
        let dx = lu.solve(&Col::from_fn(m, |r| f[r]));
        if (0..m).any(|r| !dx[r].is_finite()) {
            return Err(Error::Numerical("singular power-flow Jacobian".into()));
        }
        for i in 0..n {
            if ang[i] != usize::MAX {
                state.theta[i] += dx[ang[i]];
            }
            if mag[i] != usize::MAX {
                state.v[i] += dx[mag[i]];
            }
        }
        iterations += 1;
    }
}

/// Power flow with injections and set-points from the network data.
pub fn newton_raphson(net: &PowerNetwork, start: &VoltageState, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    let ybus = Ybus::build(net)?;
    let spec = PowerFlowSpec::from_network(net);
    let out = solve_power_flow(net, &ybus, &spec, start, tol, max_iter)?;
    let coeffs = net.branch_coefficients()?;
    let flows = flows_with(net, &coeffs, &out.state);
    let (p_inj, q_inj) = bus_injections(net, &out.state, &flows);

    let base = net.base_mva();
    let wind_outputs: Vec<(f64, f64)> = net
        .wind_farms()
        .iter()
        .map(|w| {
            let p = w.gmm.mean().clamp(w.p_min_mw, w.p_max_mw) / base;
            (p, p * w.q_ratio())
        })
        .collect();
    let p_ref: Vec<f64> = net.generators().iter().map(|g| g.pg).collect();
    let q_ref: Vec<f64> = net.generators().iter().map(|g| g.qg).collect();
    let gen_outputs = allocate_generation(net, &p_inj, &q_inj, &wind_outputs, &p_ref, &q_ref);
    Ok(PowerFlowSolution {
        state: out.state,
        branch_flows: flows,
        gen_outputs,
        wind_outputs,
        converged: out.converged,
        iterations: out.iterations,
        max_mismatch: out.max_mismatch,
        pv_to_pq: Vec::new(),
        diagnostic: (!out.converged).then(|| format!("Newton-Raphson did not converge (mismatch {:.3e})", out.max_mismatch)),
    })
}
