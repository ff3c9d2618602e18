use serde::{Deserialize, Serialize};

use super::cost::{cost_slope, shortage_surplus_cost};
use super::GmmModel;
use crate::error::{Error, Result};

const GRID_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlSegment {
    /// $/h per MW.
    pub slope: f64,
    /// $/h.
    pub intercept: f64,
}

impl PwlSegment {
    pub fn eval(&self, p: f64) -> f64 {
        self.slope * p + self.intercept
    }
}

/// Convex piecewise-linear under-estimator `max_l (η_l P + χ_l)`, slopes sorted
/// nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlCost {
    pub segments: Vec<PwlSegment>,
    pub p_min: f64,
    pub p_max: f64,
}

impl PwlCost {
    pub fn eval(&self, p: f64) -> f64 {
        self.segments.iter().map(|s| s.eval(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Tangents of a convex function at `n` evenly spaced points of `[lo, hi]`.
    pub fn tangents<F, D>(f: F, df: D, lo: f64, hi: f64, n: usize) -> PwlCost
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let segments = tangent_points(lo, hi, n)
            .into_iter()
            .map(|x| {
                let slope = df(x);
                PwlSegment { slope, intercept: f(x) - slope * x }
            })
            .collect();
        let mut out = PwlCost { segments, p_min: lo, p_max: hi };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        self.segments.sort_by(|a, b| a.slope.total_cmp(&b.slope).then(a.intercept.total_cmp(&b.intercept)));
        self.segments.dedup_by(|a, b| a.slope == b.slope && a.intercept == b.intercept);
    }

    /// Largest `f(x) − eval(x)` over the given samples.
    pub fn max_gap(&self, xs: &[f64], ys: &[f64]) -> f64 {
        xs.iter().zip(ys).map(|(&x, &y)| y - self.eval(x)).fold(0.0, f64::max)
    }
}

fn tangent_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Result of envelope construction with its measured accuracy on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlBuild {
    pub cost: PwlCost,
    /// Largest under-estimation on the dense grid ($/h).
    pub max_gap: f64,
    /// `max_gap` relative to the range of the curve on the grid.
    pub relative_gap: f64,
    /// Distance between the sampled curve and its convex hull; 0 when convex.
    pub convexity_deviation: f64,
}

/// Builds an `segments`-piece tangent envelope of the wind cost over `[lo, hi]` MW.
pub fn build_pwl_cost(model: &GmmModel, k_l: f64, k_h: f64, lo: f64, hi: f64, segments: usize) -> Result<PwlBuild> {
    if segments < 2 {
        return Err(Error::Config("PWL wind cost needs at least 2 segments".into()));
    }
    if !(lo <= hi) {
        return Err(Error::Config(format!("invalid PWL range [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = tangent_points(lo, hi, GRID_POINTS);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&p| shortage_surplus_cost(model, p, k_l, k_h, model.support_max).total)
        .collect();

    let hull = lower_hull(&xs, &ys);
    let convexity_deviation = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| y - hull_eval(&hull, x))
        .fold(0.0, f64::max);
    let span = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let convex = convexity_deviation <= 1e-9 * span.abs().max(1.0);

    let cost = if convex {
        PwlCost::tangents(
            |p| shortage_surplus_cost(model, p, k_l, k_h, model.support_max).total,
            |p| cost_slope(model, p, k_l, k_h),
            lo,
            hi,
            segments,
        )
    } else {
        log::warn!("wind cost curve is not convex on the grid (deviation {convexity_deviation:.3e}); using hull");
        hull_segments(&hull, lo, hi, segments)
    };
    let max_gap = cost.max_gap(&xs, &ys);
    let relative_gap = if span > 0.0 { max_gap / span } else { 0.0 };
    Ok(PwlBuild { cost, max_gap, relative_gap, convexity_deviation })
}

/// Andrew's monotone chain, lower part; `xs` sorted ascending.
fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    hull
}

fn hull_eval(hull: &[(f64, f64)], x: f64) -> f64 {
    if hull.len() == 1 {
        return hull[0].1;
    }
    let k = hull.partition_point(|p| p.0 <= x).clamp(1, hull.len() - 1);
    let (x1, y1) = hull[k - 1];
    let (x2, y2) = hull[k];
    y1 + (y2 - y1) * (x - x1) / (x2 - x1)
}

fn hull_segments(hull: &[(f64, f64)], lo: f64, hi: f64, n: usize) -> PwlCost {
    let mut segments = Vec::new();
    if hull.len() == 1 {
        segments.push(PwlSegment { slope: 0.0, intercept: hull[0].1 });
    } else {
        for x in tangent_points(lo, hi, n) {
            let k = hull.partition_point(|p| p.0 <= x).clamp(1, hull.len() - 1);
            let (x1, y1) = hull[k - 1];
            let (x2, y2) = hull[k];
            let slope = (y2 - y1) / (x2 - x1);
            segments.push(PwlSegment { slope, intercept: y1 - slope * x1 });
        }
    }
    let mut out = PwlCost { segments, p_min: lo, p_max: hi };
    out.normalize();
    out
}
