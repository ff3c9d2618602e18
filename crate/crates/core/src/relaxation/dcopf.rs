use super::OperatingPoint;
use crate::conic::{solve, ConicProgram};
use crate::netmodel::PowerNetwork;

/// Lossless B-θ dispatch with `v = 1`; returns its angles as an operating point.
///
/// Branch flow is `(θ_i − θ_j − shift) / (x τ)`; shunt conductance is served as
/// load. Falls back to a flat point with a warning if the DC problem fails.
pub fn dc_opf_initializer(net: &PowerNetwork) -> OperatingPoint {
    let n = net.n_buses();
    let ng = net.generators().len();
    let mut p = ConicProgram::new(ng + n);
    for (g, gen) in net.generators().iter().enumerate() {
        p.lower[g] = gen.p_min;
        p.upper[g] = gen.p_max;
        if gen.c2 != 0.0 {
            p.quad.push((g, g, gen.c2));
        }
        p.linear[g] = gen.c1;
        p.constant += gen.c0;
    }
    p.lower[ng + net.slack()] = 0.0;
    p.upper[ng + net.slack()] = 0.0;

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rhs: Vec<f64> = net.buses().iter().map(|b| b.pd + b.gs).collect();
    for (g, gen) in net.generators().iter().enumerate() {
        rows[net.bus_index(gen.bus).unwrap()].push((g, 1.0));
    }
    let base = net.base_mva();
    // Wind enters as a fixed injection at its expected output.
    for farm in net.wind_farms() {
        let i = net.bus_index(farm.bus).unwrap();
        rhs[i] -= farm.gmm.mean().clamp(farm.p_min_mw, farm.p_max_mw) / base;
    }
    for (k, br) in net.branches().iter().enumerate() {
        let (i, j) = net.branch_ends(k);
        let x = if br.x.abs() < 1e-6 { 1e-6_f64.copysign(br.x) } else { br.x };
        let b = 1.0 / (x * br.tau);
        let (ti, tj) = (ng + i, ng + j);
        rows[i].push((ti, -b));
        rows[i].push((tj, b));
        rhs[i] -= b * br.shift;
        rows[j].push((ti, b));
        rows[j].push((tj, -b));
        rhs[j] += b * br.shift;
        p.add_le(vec![(ti, 1.0), (tj, -1.0)], br.angle_max);
        p.add_le(vec![(ti, -1.0), (tj, 1.0)], -br.angle_min);
        if let Some(s) = br.s_max.filter(|s| *s > 0.0) {
            p.add_le(vec![(ti, b), (tj, -b)], s + b * br.shift);
            p.add_le(vec![(ti, -b), (tj, b)], s - b * br.shift);
        }
    }
    for (row, r) in rows.into_iter().zip(rhs) {
        p.add_eq(row, r);
    }

    match solve(&p, 1e-8) {
        Ok(sol) if sol.is_optimal() => OperatingPoint::new(net, vec![1.0; n], sol.x[ng..].to_vec()),
        Ok(sol) => {
            log::warn!("DC OPF initializer ended with {:?}; using a flat start", sol.status);
            OperatingPoint::flat(net)
        }
        Err(e) => {
            log::warn!("DC OPF initializer failed ({e}); using a flat start");
            OperatingPoint::flat(net)
        }
    }
}
