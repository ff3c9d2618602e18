use serde::{Deserialize, Serialize};

use super::OperatingPoint;
use crate::error::{Error, Result};
use crate::netmodel::PowerNetwork;

/// Slack before the first halving.
pub const INITIAL_CUT_DELTA: f64 = 1e-2;

/// The two cutting planes of one branch and the point they were built at.
///
/// Angle cut: `φ^θ ≤ 2θ_s·θ_ij − θ_s² + Δ^θ`.
/// Magnitude cut: `φ^v ≥ (v_j / 2v_i)·u_i + (v_i / 2v_j)·u_j − Δ^v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCuts {
    pub theta_s: f64,
    pub v_i: f64,
    pub v_j: f64,
    pub delta_theta: f64,
    pub delta_v: f64,
}

impl BranchCuts {
    pub fn new(theta_s: f64, v_i: f64, v_j: f64, delta_theta: f64, delta_v: f64) -> Self {
        BranchCuts { theta_s, v_i, v_j, delta_theta, delta_v }
    }

    /// `(coef θ_ij, coef φ^θ, rhs)` of the angle cut in `≤` form.
    pub fn theta_row(&self) -> (f64, f64, f64) {
        (-2.0 * self.theta_s, 1.0, self.delta_theta - self.theta_s * self.theta_s)
    }

    /// `(coef u_i, coef u_j, coef φ^v, rhs)` of the magnitude cut in `≤` form.
    pub fn v_row(&self) -> (f64, f64, f64, f64) {
        (self.v_j / (2.0 * self.v_i), self.v_i / (2.0 * self.v_j), -1.0, self.delta_v)
    }

    /// `rhs − lhs` of the angle cut; nonnegative when satisfied.
    pub fn theta_slack(&self, theta_ij: f64, phi_theta: f64) -> f64 {
        let (a, b, r) = self.theta_row();
        r - a * theta_ij - b * phi_theta
    }

    pub fn v_slack(&self, u_i: f64, u_j: f64, phi_v: f64) -> f64 {
        let (a, b, c, r) = self.v_row();
        r - a * u_i - b * u_j - c * phi_v
    }
}

/// Current rolling cuts, at most one pair per branch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutSet {
    pub cuts: Vec<Option<BranchCuts>>,
}

impl CutSet {
    pub fn new(n_branches: usize) -> Self {
        CutSet { cuts: vec![None; n_branches] }
    }

    pub fn active(&self) -> usize {
        self.cuts.iter().filter(|c| c.is_some()).count()
    }

    /// Smallest slack among active cuts.
    pub fn min_delta(&self) -> Option<f64> {
        self.cuts.iter().flatten().map(|c| c.delta_theta.min(c.delta_v)).reduce(f64::min)
    }

    /// Moves every existing cut to `point`, keeping its slack.
    pub fn rolled_to(&self, net: &PowerNetwork, point: &OperatingPoint) -> Result<CutSet> {
        let mut out = self.clone();
        for (k, c) in out.cuts.iter_mut().enumerate() {
            if let Some(c) = c {
                *c = build(net, point, k, c.delta_theta, c.delta_v)?;
            }
        }
        Ok(out)
    }
}

fn build(net: &PowerNetwork, point: &OperatingPoint, k: usize, dt: f64, dv: f64) -> Result<BranchCuts> {
    let (i, j) = net.branch_ends(k);
    let (vi, vj) = (point.v[i], point.v[j]);
    if !(vi > 0.0 && vj > 0.0) {
        return Err(Error::CutGeneration { branch: k, reason: format!("nonpositive magnitudes {vi}, {vj}") });
    }
    Ok(BranchCuts::new(point.theta[i] - point.theta[j], vi, vj, dt, dv))
}

/// Halves the slacks of branches whose combined gap `|gap_θ| + |gap_v|`
/// reaches `tol_gap` and rebuilds their cuts at `point`, replacing any earlier
/// cut. Other branches keep their cuts. Returns the new set and the indices
/// of the tightened branches.
pub fn generate_rolling_cuts(
    prev: &CutSet,
    net: &PowerNetwork,
    point: &OperatingPoint,
    gaps: &[(f64, f64)],
    tol_gap: f64,
) -> Result<(CutSet, Vec<usize>)> {
    let mut next = prev.clone();
    let mut tightened = Vec::new();
    for (k, &(gt, gv)) in gaps.iter().enumerate() {
        if gt.abs() + gv.abs() < tol_gap {
            continue;
        }
        let (dt, dv) = prev.cuts[k].map_or((INITIAL_CUT_DELTA, INITIAL_CUT_DELTA), |c| (c.delta_theta, c.delta_v));
        next.cuts[k] = Some(build(net, point, k, 0.5 * dt, 0.5 * dv)?);
        tightened.push(k);
    }
    Ok((next, tightened))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_cut_slack_at_generation_point() {
        let c = BranchCuts::new(0.1, 1.0, 1.0, 1e-4, 1e-4);
        assert!((c.theta_slack(0.1, 0.01) - 1e-4).abs() < 1e-17);
        let (a, b, r) = c.theta_row();
        assert!(((r - a * 0.1) / b - (0.01 + 1e-4)).abs() < 1e-16);
    }

    #[test]
    fn magnitude_cut_slack_at_generation_point() {
        let c = BranchCuts::new(0.0, 1.0, 1.0, 1e-4, 1e-4);
        assert!((c.v_slack(1.0, 1.0, 1.0) - 1e-4).abs() < 1e-16);
        assert!(c.v_slack(1.0, 1.0, 1.0 - 1e-4).abs() < 1e-16);
    }

    #[test]
    fn geometric_mean_stays_above_cut_except_near_tangent() {
        // √(u_i u_j) is concave and the cut is its tangent plane shifted down by Δ.
        let c = BranchCuts::new(0.0, 1.05, 0.95, 0.0, 1e-3);
        for a in 1..60 {
            for b in 1..60 {
                let (ui, uj) = (0.8 + 0.01 * a as f64, 0.8 + 0.01 * b as f64);
                assert!(c.v_slack(ui, uj, (ui * uj).sqrt()) <= 1e-3 + 1e-15);
            }
        }
    }

    #[test]
    fn rolling_replaces_and_halves() {
        let net = crate::netmodel::tests::two_bus(0.01, 0.1, 0.5);
        let point = OperatingPoint { v: vec![1.0, 0.98], theta: vec![0.0, -0.05] };
        let (first, t) = generate_rolling_cuts(&CutSet::new(1), &net, &point, &[(2e-4, 0.0)], 1e-4).unwrap();
        assert_eq!(t, vec![0]);
        assert_eq!(first.cuts[0].unwrap().delta_theta, 5e-3);
        let (second, _) = generate_rolling_cuts(&first, &net, &point, &[(2e-4, 0.0)], 1e-4).unwrap();
        assert_eq!(second.active(), 1);
        assert_eq!(second.cuts[0].unwrap().delta_theta, 2.5e-3);
        let (same, t) = generate_rolling_cuts(&second, &net, &point, &[(5e-5, 0.0)], 1e-4).unwrap();
        assert!(t.is_empty());
        assert_eq!(same, second);
    }

    #[test]
    fn zero_magnitude_is_rejected() {
        let net = crate::netmodel::tests::two_bus(0.01, 0.1, 0.5);
        let point = OperatingPoint { v: vec![0.0, 1.0], theta: vec![0.0, 0.0] };
        let err = generate_rolling_cuts(&CutSet::new(1), &net, &point, &[(1.0, 0.0)], 1e-4).unwrap_err();
        assert!(matches!(err, Error::CutGeneration { branch: 0, .. }));
    }
}
