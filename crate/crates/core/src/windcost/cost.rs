use std::io::Write;

use serde::{Deserialize, Serialize};

use super::GmmModel;
use crate::error::Result;

const PROB_FLOOR: f64 = 1e-12;

/// Expected shortage / surplus penalties at one scheduled output (MW, $/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub p_schedule: f64,
    pub prob_shortage: f64,
    pub prob_surplus: f64,
    /// Conditional expected output given a shortage, `None` when its probability vanishes.
    pub e_l: Option<f64>,
    pub e_h: Option<f64>,
    pub f_l: f64,
    pub f_h: f64,
    pub total: f64,
}

/// Shortage cost `F_L = k_L Pr(P_W < Ps) (Ps − E_L)` and surplus cost
/// `F_H = k_H Pr(P_W > Ps) (E_H − Ps)`, where `E_L` integrates the output from
/// 0 and `E_H` up to `p_max`.
pub fn shortage_surplus_cost(model: &GmmModel, p_schedule: f64, k_l: f64, k_h: f64, p_max: f64) -> CostPoint {
    let prob_shortage = model.cdf(p_schedule);
    let prob_surplus = model.sf(p_schedule);

    let (e_l, f_l) = if prob_shortage < PROB_FLOOR {
        (None, 0.0)
    } else {
        let e = model.truncated_first_moment(0.0, p_schedule) / prob_shortage;
        (Some(e), k_l * prob_shortage * (p_schedule - e))
    };
    let (e_h, f_h) = if prob_surplus < PROB_FLOOR {
        (None, 0.0)
    } else {
        let e = model.truncated_first_moment(p_schedule, p_max) / prob_surplus;
        (Some(e), k_h * prob_surplus * (e - p_schedule))
    };
    CostPoint { p_schedule, prob_shortage, prob_surplus, e_l, e_h, f_l, f_h, total: f_l + f_h }
}

/// Slope of the total cost with respect to the schedule: `k_L F(Ps) − k_H (1 − F(Ps))`.
pub(crate) fn cost_slope(model: &GmmModel, p_schedule: f64, k_l: f64, k_h: f64) -> f64 {
    k_l * model.cdf(p_schedule) - k_h * model.sf(p_schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindCostCurve {
    pub k_l: f64,
    pub k_h: f64,
    pub points: Vec<CostPoint>,
}

impl WindCostCurve {
    /// Grid point with the smallest total cost.
    pub fn argmin(&self) -> Option<&CostPoint> {
        self.points.iter().min_by(|a, b| a.total.total_cmp(&b.total))
    }

    /// Decreasing-then-increasing total, allowing `tol` of numerical noise.
    pub fn is_unimodal(&self, tol: f64) -> bool {
        let Some(best) = self.argmin() else { return true };
        let split = self.points.iter().position(|p| p.p_schedule == best.p_schedule).unwrap_or(0);
        let falling = self.points[..=split].windows(2).all(|w| w[1].total <= w[0].total + tol);
        let rising = self.points[split..].windows(2).all(|w| w[1].total + tol >= w[0].total);
        falling && rising
    }
}

/// Evaluates the cost on `n` evenly spaced schedules in `[lo, hi]`.
pub fn cost_curve(model: &GmmModel, k_l: f64, k_h: f64, lo: f64, hi: f64, n: usize) -> WindCostCurve {
    let points = (0..n)
        .map(|i| {
            let p = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            shortage_surplus_cost(model, p, k_l, k_h, model.support_max)
        })
        .collect();
    WindCostCurve { k_l, k_h, points }
}

/// Writes `k_l,k_h,p_schedule,f_l,f_h,total` rows for every curve.
pub fn write_cost_curve_csv<W: Write>(out: W, curves: &[WindCostCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k_l", "k_h", "p_schedule", "f_l", "f_h", "total"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.k_l.to_string(),
                c.k_h.to_string(),
                p.p_schedule.to_string(),
                p.f_l.to_string(),
                p.f_h.to_string(),
                p.total.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> GmmModel {
        GmmModel::new(vec![0.4, 0.6], vec![60.0, 150.0], vec![10.0, 20.0], 225.0).unwrap()
    }

    #[test]
    fn shortage_vanishes_far_below_support() {
        let m = GmmModel::single(150.0, 5.0, 225.0);
        let c = shortage_surplus_cost(&m, 0.0, 60.0, 50.0, 225.0);
        assert!(c.prob_shortage < 1e-12);
        assert_eq!(c.f_l, 0.0);
        assert!(c.e_l.is_none());
        assert!(c.f_h > 0.0);
    }

    #[test]
    fn components_are_monotone() {
        let curve = cost_curve(&model(), 60.0, 50.0, 0.0, 225.0, 451);
        for w in curve.points.windows(2) {
            assert!(w[1].f_l >= w[0].f_l - 1e-9);
            assert!(w[1].f_h <= w[0].f_h + 1e-9);
        }
        assert!(curve.is_unimodal(1e-9));
    }

    #[test]
    fn slope_matches_finite_difference() {
        let m = model();
        for p in [20.0, 90.0, 160.0] {
            let h = 1e-4;
            let fd = (shortage_surplus_cost(&m, p + h, 60.0, 50.0, 225.0).total
                - shortage_surplus_cost(&m, p - h, 60.0, 50.0, 225.0).total)
                / (2.0 * h);
            assert!((fd - cost_slope(&m, p, 60.0, 50.0)).abs() < 1e-6, "{fd}");
        }
    }

    #[test]
    fn empty_grid_csv_is_header_only() {
        let mut buf = Vec::new();
        write_cost_curve_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k_l,k_h,p_schedule,f_l,f_h,total\n");
    }
}
