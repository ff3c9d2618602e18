//! Second-order cone approximation of the AC branch flow equations.
//!
//! Around an operating point `(v_k, θ_k)` the flows become linear in the
//! squared magnitudes `u = v²`, the bus angles, and two auxiliaries per
//! branch: `φ^v ≈ v_i v_j` and `φ^θ ≈ θ_ij²`. The auxiliaries are bounded by
//! second-order cones and, when the relaxation is loose, by rolling cutting
//! planes.

mod assemble;
mod cuts;
mod dcopf;
mod exactness;
mod limits;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BranchCoefficients, PowerNetwork};

pub use assemble::{assemble_soca_problem, AssemblyOptions, RowIndex, SocaProblem, VarIndex};
pub use cuts::{generate_rolling_cuts, BranchCuts, CutSet, INITIAL_CUT_DELTA};
pub use dcopf::dc_opf_initializer;
pub use exactness::{exactness_condition, Exactness, ExactnessVerdict};
pub use limits::{linearize_flow_limits, LimitRow};

/// Linearization point: per-bus magnitudes and angles (slack angle 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl OperatingPoint {
    pub fn flat(net: &PowerNetwork) -> Self {
        OperatingPoint::new(net, vec![1.0; net.n_buses()], vec![0.0; net.n_buses()])
    }

    /// Projects magnitudes into their bounds and shifts angles so the slack is 0.
    pub fn new(net: &PowerNetwork, mut v: Vec<f64>, mut theta: Vec<f64>) -> Self {
        for (vi, b) in v.iter_mut().zip(net.buses()) {
            *vi = vi.clamp(b.v_min, b.v_max);
        }
        let t0 = theta[net.slack()];
        theta.iter_mut().for_each(|t| *t -= t0);
        OperatingPoint { v, theta }
    }

    pub fn theta_ij(&self, net: &PowerNetwork, k: usize) -> f64 {
        let (i, j) = net.branch_ends(k);
        self.theta[i] - self.theta[j]
    }
}

/// Affine `sin θ ≈ α¹θ + α⁰` and quadratic `cos θ ≈ β²θ² + β¹θ + β⁰` around θ_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    pub alpha1: f64,
    pub alpha0: f64,
    pub beta2: f64,
    pub beta1: f64,
    pub beta0: f64,
}

impl TaylorCoefficients {
    pub fn sin(&self, theta: f64) -> f64 {
        self.alpha1 * theta + self.alpha0
    }

    pub fn cos(&self, theta: f64) -> f64 {
        (self.beta2 * theta + self.beta1) * theta + self.beta0
    }
}

/// Expansion coefficients at `theta_k`; meaningful for `|θ_k| < π/2`.
pub fn taylor_coefficients(theta_k: f64) -> TaylorCoefficients {
    let (s, c) = theta_k.sin_cos();
    TaylorCoefficients {
        alpha1: c,
        alpha0: s - theta_k * c,
        beta2: -0.5 * c,
        beta1: -s + theta_k * c,
        beta0: c + theta_k * s - 0.5 * theta_k * theta_k * c,
    }
}

/// Coefficients of the approximate flow of one branch end.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowCoefficients {
    pub g_p: f64,
    pub b_p: f64,
    pub b_q: f64,
    pub g_q: f64,
    pub b_ploss: f64,
    pub g_qloss: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchFlowCoefficients {
    pub ij: FlowCoefficients,
    pub ji: FlowCoefficients,
    /// Expansion angle in the ij direction.
    pub theta_k: f64,
}

fn direction(g_c: f64, b_c: f64, theta_k: f64, vv: f64) -> FlowCoefficients {
    let (s, c) = theta_k.sin_cos();
    FlowCoefficients {
        g_p: g_c * c + b_c * s,
        b_p: (-g_c * s + b_c * c + g_c * theta_k * c) * vv,
        b_q: -g_c * s + b_c * c,
        g_q: (g_c * c + b_c * s - b_c * theta_k * c) * vv,
        b_ploss: -0.5 * g_c * c * vv,
        g_qloss: 0.5 * b_c * c * vv,
    }
}

/// Both directions; `ji` is expanded at `θ_ji,k = −θ_k` with its own couplings.
pub fn flow_coefficients(c: &BranchCoefficients, theta_k: f64, v_ik: f64, v_jk: f64) -> Result<BranchFlowCoefficients> {
    if !(v_ik > 0.0 && v_jk > 0.0) {
        return Err(Error::Validation(format!("expansion magnitudes must be positive, got {v_ik}, {v_jk}")));
    }
    let vv = v_ik * v_jk;
    Ok(BranchFlowCoefficients {
        ij: direction(c.g_c_ij, c.b_c_ij, theta_k, vv),
        ji: direction(c.g_c_ji, c.b_c_ji, -theta_k, vv),
        theta_k,
    })
}

/// Approximate flow `(P, Q)` at one branch end.
///
/// `g_self`/`b_self` are that end's self terms, `u_self` its squared
/// magnitude, and `theta`/`theta_k` the angle difference seen from that end.
#[allow(clippy::too_many_arguments)]
pub fn approx_branch_flow(
    fc: &FlowCoefficients,
    g_self: f64,
    b_self: f64,
    u_self: f64,
    phi_v: f64,
    theta: f64,
    phi_theta: f64,
    theta_k: f64,
) -> (f64, f64) {
    let dq = phi_theta - theta_k * theta_k;
    let dt = theta - theta_k;
    let p = g_self * u_self - fc.g_p * phi_v - fc.b_p * dt - fc.b_ploss * dq;
    let q = -b_self * u_self + fc.b_q * phi_v - fc.g_q * dt - fc.g_qloss * dq;
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{derive_branch_coefficients, Branch};
    use crate::pf::branch_flow;

    fn coeffs() -> BranchCoefficients {
        derive_branch_coefficients(&Branch {
            from: 1,
            to: 2,
            r: 0.02,
            x: 0.12,
            b_ch: 0.03,
            tau: 1.02,
            shift: 0.03,
            s_max: None,
            angle_min: -1.0,
            angle_max: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn maclaurin_case() {
        let t = taylor_coefficients(0.0);
        assert_eq!((t.alpha1, t.alpha0, t.beta2, t.beta1, t.beta0), (1.0, 0.0, -0.5, 0.0, 1.0));
    }

    #[test]
    fn coefficients_at_one_tenth() {
        let t = taylor_coefficients(0.1);
        assert!((t.alpha1 - 0.995004).abs() < 1e-6);
        assert!((t.alpha0 - 3.33e-4).abs() < 1e-6);
        assert!((t.beta2 + 0.497502).abs() < 1e-6);
        assert!((t.beta1 + 3.33e-4).abs() < 1e-6);
        assert!((t.beta0 - 1.000012).abs() < 1e-6);
    }

    #[test]
    fn flat_start_flow_coefficients() {
        let c = coeffs();
        let f = flow_coefficients(&c, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(f.ij.g_p, c.g_c_ij);
        assert_eq!(f.ij.b_p, c.b_c_ij);
        assert_eq!(f.ij.b_q, c.b_c_ij);
        assert_eq!(f.ij.g_q, c.g_c_ij);
        assert_eq!(f.ij.b_ploss, -c.g_c_ij / 2.0);
        assert_eq!(f.ij.g_qloss, c.b_c_ij / 2.0);
        assert!(f.ij.b_ploss < 0.0 && f.ij.g_qloss < 0.0);
    }

    #[test]
    fn expansion_is_exact_at_its_point() {
        let c = coeffs();
        let (vi, vj, th) = (1.03, 0.97, 0.08);
        let f = flow_coefficients(&c, th, vi, vj).unwrap();
        let e = branch_flow(&c, vi, vj, th);
        let (p, q) = approx_branch_flow(&f.ij, c.g_f, c.b_f, vi * vi, vi * vj, th, th * th, th);
        assert!((p - e.p_ij).abs() < 1e-14 && (q - e.q_ij).abs() < 1e-14);
        let (p, q) = approx_branch_flow(&f.ji, c.g_t, c.b_t, vj * vj, vi * vj, -th, th * th, -th);
        assert!((p - e.p_ji).abs() < 1e-14 && (q - e.q_ji).abs() < 1e-14);
    }

    #[test]
    fn angle_error_shrinks_cubically() {
        // With φ^v, φ^θ tight the error is the Taylor remainder in θ. Away from
        // θ_k = 0 the b_c·sin curvature is dropped and the error is quadratic.
        let c = coeffs();
        let (vi, vj, th) = (1.0, 1.0, 0.0);
        let f = flow_coefficients(&c, th, vi, vj).unwrap();
        let err = |h: f64| {
            let t = th + h;
            let e = branch_flow(&c, vi, vj, t);
            let (p, _) = approx_branch_flow(&f.ij, c.g_f, c.b_f, 1.0, 1.0, t, t * t, th);
            (p - e.p_ij).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!(ratio > 7.0 && ratio < 9.0, "{ratio}");
    }

    #[test]
    fn rejects_nonpositive_magnitudes() {
        assert!(flow_coefficients(&coeffs(), 0.0, 0.0, 1.0).is_err());
    }
}
