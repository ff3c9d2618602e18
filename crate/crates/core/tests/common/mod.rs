//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver's numerics: quadrature is a plain
//! Gauss-Kronrod rule and the 3-bus oracle builds its own admittances.
#![allow(dead_code)]

use num_complex::Complex64;
use windopf::netmodel::PowerNetwork;
use windopf::windcost::GmmModel;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7-K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive G7-K15 over the finite interval `[a, b]`, absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adapt(&f, a, b, tol, 40)
}

fn gauss(x: f64, m: f64, s: f64) -> f64 {
    let z = (x - m) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn mixture_pdf(model: &GmmModel, x: f64) -> f64 {
    model.weights.iter().zip(&model.means).zip(&model.stddevs).map(|((w, m), s)| w * gauss(x, *m, *s)).sum()
}

/// `∫_a^b g(v) f(v) dv` for the mixture density `f`. Infinite bounds are cut
/// 40σ beyond the outermost component, and the range is split at `μ ± kσ` so
/// narrow peaks cannot fall between nodes.
pub fn mixture_integral<G: Fn(f64) -> f64>(model: &GmmModel, g: G, a: f64, b: f64, tol: f64) -> f64 {
    let lo = model.means.iter().zip(&model.stddevs).map(|(m, s)| m - 40.0 * s).fold(f64::INFINITY, f64::min);
    let hi = model.means.iter().zip(&model.stddevs).map(|(m, s)| m + 40.0 * s).fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (a.max(lo), b.min(hi));
    if b <= a {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    for (m, s) in model.means.iter().zip(&model.stddevs) {
        for k in -10..=10 {
            let x = m + f64::from(k) * s;
            if x > a && x < b {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let pieces = cuts.len() - 1;
    cuts.windows(2).map(|w| integrate(|v| g(v) * mixture_pdf(model, v), w[0], w[1], tol / pieces as f64)).sum()
}

/// Expected shortage plus surplus penalty by direct quadrature:
/// `k_L ∫_0^Ps (Ps − v) f + k_H ∫_Ps^pmax (v − Ps) f`.
pub fn penalty_quadrature(model: &GmmModel, ps: f64, k_l: f64, k_h: f64, p_max: f64) -> f64 {
    let short = mixture_integral(model, |v| ps - v, 0.0, ps, 1e-12);
    let surplus = mixture_integral(model, |v| v - ps, ps, p_max, 1e-12);
    k_l * short + k_h * surplus
}

/// Raw per-unit data of a 3-bus network: bus 1 slack, bus 2 generator, bus 3 load.
pub struct ThreeBus {
    pub base: f64,
    /// `(Pd, Qd)` in MW / MVAr per bus.
    pub load: [(f64, f64); 3],
    pub v_min: f64,
    pub v_max: f64,
    /// `(bus, Pmin, Pmax, Qmin, Qmax, c2, c1, c0)` with MW-based costs.
    pub gens: [(usize, f64, f64, f64, f64, f64, f64, f64); 2],
    /// `(from, to, r, x, b)`.
    pub lines: [(usize, usize, f64, f64, f64); 3],
}

pub fn three_bus() -> ThreeBus {
    ThreeBus {
        base: 100.0,
        load: [(0.0, 0.0), (20.0, 10.0), (150.0, 50.0)],
        v_min: 0.95,
        v_max: 1.05,
        gens: [
            (0, 0.0, 250.0, -150.0, 150.0, 0.11, 5.0, 150.0),
            (1, 10.0, 200.0, -150.0, 150.0, 0.085, 1.2, 600.0),
        ],
        lines: [(0, 1, 0.02, 0.10, 0.03), (0, 2, 0.03, 0.12, 0.02), (1, 2, 0.025, 0.11, 0.025)],
    }
}

impl ThreeBus {
    pub fn matpower(&self) -> String {
        let mut s = String::from("function mpc = case3\nmpc.version = '2';\n");
        s += &format!("mpc.baseMVA = {};\nmpc.bus = [\n", self.base);
        for (i, &(pd, qd)) in self.load.iter().enumerate() {
            let kind = [3, 2, 1][i];
            s += &format!("\t{}\t{kind}\t{pd}\t{qd}\t0\t0\t1\t1\t0\t230\t1\t{}\t{};\n", i + 1, self.v_max, self.v_min);
        }
        s += "];\nmpc.gen = [\n";
        for g in &self.gens {
            s += &format!("\t{}\t0\t0\t{}\t{}\t1\t100\t1\t{}\t{};\n", g.0 + 1, g.4, g.3, g.2, g.1);
        }
        s += "];\nmpc.branch = [\n";
        for l in &self.lines {
            s += &format!("\t{}\t{}\t{}\t{}\t{}\t0\t0\t0\t0\t0\t1\t-360\t360;\n", l.0 + 1, l.1 + 1, l.2, l.3, l.4);
        }
        s += "];\nmpc.gencost = [\n";
        for g in &self.gens {
            s += &format!("\t2\t0\t0\t3\t{}\t{}\t{};\n", g.5, g.6, g.7);
        }
        s + "];\n"
    }

    pub fn network(&self) -> PowerNetwork {
        windopf::netmodel::parse_matpower_case(&self.matpower()).expect("3-bus case parses")
    }

    fn ybus(&self) -> [[Complex64; 3]; 3] {
        let mut y = [[Complex64::new(0.0, 0.0); 3]; 3];
        for &(f, t, r, x, b) in &self.lines {
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
            let half = Complex64::new(0.0, 0.5 * b);
            y[f][f] += ys + half;
            y[t][t] += ys + half;
            y[f][t] -= ys;
            y[t][f] -= ys;
        }
        y
    }
}

/// Best point of the exhaustive search.
#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub objective: f64,
    /// Largest objective change to a feasible grid neighbour of the optimum.
    pub grid_error: f64,
    pub v: [f64; 3],
    pub theta: [f64; 3],
    pub feasible_points: usize,
}

/// Solves the load bus for `(v3, θ3)` given the two generator buses.
fn solve_load_bus(y: &[[Complex64; 3]; 3], v12: [Complex64; 2], s3: Complex64, start: (f64, f64)) -> Option<(f64, f64)> {
    let (mut vm, mut va) = start;
    for _ in 0..30 {
        let v3 = Complex64::from_polar(vm, va);
        let i3 = y[2][0] * v12[0] + y[2][1] * v12[1] + y[2][2] * v3;
        let mis = v3 * i3.conj() - s3;
        if mis.norm() < 1e-12 {
            return Some((vm, va));
        }
        let e = Complex64::from_polar(1.0, va);
        let d_va = Complex64::new(0.0, 1.0) * v3 * (i3 - y[2][2] * v3).conj();
        let d_vm = e * i3.conj() + v3 * (y[2][2] * e).conj();
        let det = d_vm.re * d_va.im - d_va.re * d_vm.im;
        if det.abs() < 1e-14 {
            return None;
        }
        vm -= (mis.re * d_va.im - d_va.re * mis.im) / det;
        va -= (d_vm.re * mis.im - mis.re * d_vm.im) / det;
        if !(vm > 0.3 && vm < 2.0) {
            return None;
        }
    }
    None
}

/// Exhaustive search over `v1, v2 ∈ [v_min, v_max]` and `θ2 ∈ [-θmax, θmax]`
/// with step `h`; `(v3, θ3)` follow from the load-bus balance. Points breaking
/// any generator limit or the bus-3 voltage band are infeasible.
pub fn brute_force(net: &ThreeBus, h: f64, theta_max: f64) -> GridOptimum {
    let y = net.ybus();
    let nv = ((net.v_max - net.v_min) / h).round() as usize + 1;
    let nt = (2.0 * theta_max / h).round() as usize + 1;
    let s3 = -Complex64::new(net.load[2].0, net.load[2].1) / net.base;
    let mut cost = vec![f64::INFINITY; nv * nv * nt];
    let idx = |a: usize, b: usize, c: usize| (a * nv + b) * nt + c;
    let mut feasible_points = 0;
    let mut best = (f64::INFINITY, 0usize, [0.0; 3], [0.0; 3]);
    for a in 0..nv {
        let v1 = net.v_min + h * a as f64;
        for b in 0..nv {
            let v2 = net.v_min + h * b as f64;
            let mut guess = (1.0, 0.0);
            for c in 0..nt {
                let t2 = -theta_max + h * c as f64;
                let v12 = [Complex64::from_polar(v1, 0.0), Complex64::from_polar(v2, t2)];
                let Some((v3, t3)) = solve_load_bus(&y, v12, s3, guess).or_else(|| solve_load_bus(&y, v12, s3, (1.0, 0.0)))
                else {
                    continue;
                };
                guess = (v3, t3);
                if v3 < net.v_min || v3 > net.v_max {
                    continue;
                }
                let v = [v12[0], v12[1], Complex64::from_polar(v3, t3)];
                let mut total = 0.0;
                let mut ok = true;
                for g in &net.gens {
                    let bus = g.0;
                    let i: Complex64 = (0..3).map(|k| y[bus][k] * v[k]).sum();
                    let s = v[bus] * i.conj() * net.base + Complex64::new(net.load[bus].0, net.load[bus].1);
                    if s.re < g.1 || s.re > g.2 || s.im < g.3 || s.im > g.4 {
                        ok = false;
                        break;
                    }
                    total += g.5 * s.re * s.re + g.6 * s.re + g.7;
                }
                if !ok {
                    continue;
                }
                feasible_points += 1;
                let n = idx(a, b, c);
                cost[n] = total;
                if total < best.0 {
                    best = (total, n, [v1, v2, v3], [0.0, t2, t3]);
                }
            }
        }
    }
    assert!(best.0.is_finite(), "no feasible grid point");
    let n = best.1;
    let (a, b, c) = (n / (nv * nt), (n / nt) % nv, n % nt);
    let mut grid_error: f64 = 0.0;
    for da in -1i64..=1 {
        for db in -1i64..=1 {
            for dc in -1i64..=1 {
                let (na, nb, nc) = (a as i64 + da, b as i64 + db, c as i64 + dc);
                if na < 0 || nb < 0 || nc < 0 || na >= nv as i64 || nb >= nv as i64 || nc >= nt as i64 {
                    continue;
                }
                let f = cost[idx(na as usize, nb as usize, nc as usize)];
                if f.is_finite() {
                    grid_error = grid_error.max(f - best.0);
                }
            }
        }
    }
    GridOptimum { objective: best.0, grid_error, v: best.2, theta: best.3, feasible_points }
}
