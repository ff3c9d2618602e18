use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Branch;
use crate::error::{Error, Result};

/// Constant π-model terms of one branch.
///
/// With `y` the series admittance, `t = τ e^{jφ}` the complex tap and
/// `a = y* − j b_ch/2`:
///
/// ```text
/// g_f + ... : g_f = Re(a / |t|²)   b_f = −Im(a / |t|²)
///             g_t = Re(a)          b_t = −Im(a)
///             g_c_ij = Re(y*/t)    b_c_ij = −Im(y*/t)
///             g_c_ji = Re(y*/t*)   b_c_ji = −Im(y*/t*)
/// ```
///
/// The from-end flow is then
/// `P_ij = g_f v_i² − g_c_ij v_i v_j cos θ_ij − b_c_ij v_i v_j sin θ_ij`
/// and the to-end flow uses `g_t`, `b_t` and the `ji` coupling terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCoefficients {
    pub g_f: f64,
    pub b_f: f64,
    pub g_t: f64,
    pub b_t: f64,
    pub g_c_ij: f64,
    pub b_c_ij: f64,
    pub g_c_ji: f64,
    pub b_c_ji: f64,
}

pub fn derive_branch_coefficients(branch: &Branch) -> Result<BranchCoefficients> {
    if !(branch.tau > 0.0) || !branch.tau.is_finite() {
        return Err(Error::InvalidBranch { index: 0, reason: format!("tap ratio {}", branch.tau) });
    }
    let z = Complex64::new(branch.r, branch.x);
    if z.norm_sqr() == 0.0 {
        return Err(Error::InvalidBranch { index: 0, reason: "zero series impedance".into() });
    }
    let y = z.inv();
    let t = Complex64::from_polar(branch.tau, branch.shift);
    let a = y.conj() - Complex64::new(0.0, 0.5 * branch.b_ch);
    let a_from = a / (branch.tau * branch.tau);
    let c_ij = y.conj() / t;
    let c_ji = y.conj() / t.conj();
    Ok(BranchCoefficients {
        g_f: a_from.re,
        b_f: -a_from.im,
        g_t: a.re,
        b_t: -a.im,
        g_c_ij: c_ij.re,
        b_c_ij: -c_ij.im,
        g_c_ji: c_ji.re,
        b_c_ji: -c_ji.im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(r: f64, x: f64, b: f64, tau: f64, shift: f64) -> Branch {
        Branch {
            from: 1,
            to: 2,
            r,
            x,
            b_ch: b,
            tau,
            shift,
            s_max: None,
            angle_min: -1.0,
            angle_max: 1.0,
        }
    }

    #[test]
    fn symmetric_line() {
        let c = derive_branch_coefficients(&line(1e-4, 0.1, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(c.g_c_ij, c.g_c_ji);
        assert_eq!(c.b_c_ij, c.b_c_ji);
        assert_eq!(c.b_f, c.b_t);
        assert_eq!(c.g_f, c.g_t);
        // y = 1/(r + jx); for a plain line without charging g_f = g = g_c.
        let den = 1e-8 + 0.01;
        assert!((c.g_f - 1e-4 / den).abs() < 1e-12);
        assert!((c.b_c_ij - (-0.1 / den)).abs() < 1e-9);
    }

    #[test]
    fn off_nominal_tap_scales_terms() {
        let base = derive_branch_coefficients(&line(0.01, 0.1, 0.02, 1.0, 0.0)).unwrap();
        let tapped = derive_branch_coefficients(&line(0.01, 0.1, 0.02, 1.05, 0.0)).unwrap();
        assert!((tapped.g_f - tapped.g_t / 1.05_f64.powi(2)).abs() < 1e-14);
        assert!((tapped.b_f - tapped.b_t / 1.05_f64.powi(2)).abs() < 1e-12);
        assert!((tapped.g_c_ij - base.g_c_ij / 1.05).abs() < 1e-12);
        assert!((tapped.b_c_ij - base.b_c_ij / 1.05).abs() < 1e-12);
        assert!((tapped.g_c_ji - tapped.g_c_ij).abs() < 1e-14);
        // Charging: b_t = b + b_ch/2 where b = Im(y) = -x/(r²+x²).
        let den = 0.01f64 * 0.01 + 0.1 * 0.1;
        assert!((base.b_t - (-0.1 / den + 0.01)).abs() < 1e-10);
    }

    #[test]
    fn phase_shift_breaks_coupling_symmetry() {
        let c = derive_branch_coefficients(&line(0.01, 0.1, 0.0, 1.0, 0.1)).unwrap();
        assert!((c.g_c_ij - c.g_c_ji).abs() > 1e-3);
        // Independent evaluation: y* / t with t = e^{j0.1}.
        let den = 0.0101;
        let (g, b) = (0.01 / den, -0.1 / den);
        let (cs, sn) = (0.1f64.cos(), 0.1f64.sin());
        // (g - jb)(cos - j sin) = (g cos - b sin) - j(g sin + b cos)
        assert!((c.g_c_ij - (g * cs - b * sn)).abs() < 1e-10);
        assert!((c.b_c_ij - (g * sn + b * cs)).abs() < 1e-10);
        assert!((c.g_c_ji - (g * cs + b * sn)).abs() < 1e-10);
    }

    #[test]
    fn zero_tap_is_rejected() {
        assert!(derive_branch_coefficients(&line(0.01, 0.1, 0.0, 0.0, 0.0)).is_err());
    }
}
