use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cos ψ · P + sin ψ · Q ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub cos: f64,
    pub sin: f64,
    pub rhs: f64,
}

/// Tangent rows of the circle `P² + Q² ≤ S_max²`, an outer polygon.
///
/// Tangent angles are uniform over `arc = (ψ_start, ψ_end)`; a full circle
/// uses `M` distinct angles, a partial arc includes both endpoints. A missing
/// or nonpositive rating means an unlimited branch and yields no rows.
pub fn linearize_flow_limits(s_max: Option<f64>, m: usize, arc: (f64, f64)) -> Result<Vec<LimitRow>> {
    if m < 4 {
        return Err(Error::Config(format!("flow-limit linearization needs at least 4 segments, got {m}")));
    }
    let s = match s_max {
        Some(s) if s > 0.0 && s.is_finite() => s,
        _ => return Ok(Vec::new()),
    };
    let (a, b) = arc;
    let full = (b - a - TAU).abs() < 1e-12;
    Ok((0..m)
        .map(|k| {
            let psi = if full { a + TAU * k as f64 / m as f64 } else { a + (b - a) * k as f64 / (m - 1) as f64 };
            let (sin, cos) = psi.sin_cos();
            LimitRow { cos, sin, rhs: s }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FULL: (f64, f64) = (0.0, TAU);

    #[test]
    fn tangency_points_are_tight() {
        let rows = linearize_flow_limits(Some(2.0), 16, FULL).unwrap();
        for r in &rows {
            let (p, q) = (2.0 * r.cos, 2.0 * r.sin);
            assert!((r.cos * p + r.sin * q - r.rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn disc_is_inside_polygon() {
        let rows = linearize_flow_limits(Some(1.5), 16, FULL).unwrap();
        for k in 0..720 {
            let a = k as f64 * PI / 360.0;
            let (p, q) = (1.5 * a.cos(), 1.5 * a.sin());
            assert!(rows.iter().all(|r| r.cos * p + r.sin * q <= r.rhs + 1e-12));
        }
    }

    #[test]
    fn worst_overshoot_is_secant_factor() {
        let m = 16;
        let rows = linearize_flow_limits(Some(1.0), m, FULL).unwrap();
        // Polygon vertex halfway between tangents sits at radius 1/cos(π/M).
        let mut worst: f64 = 0.0;
        for k in 0..20000 {
            let a = k as f64 * TAU / 20000.0;
            let r = rows.iter().map(|r| 1.0 / (r.cos * a.cos() + r.sin * a.sin())).filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
            worst = worst.max(r);
        }
        assert!((worst - 1.0 / (PI / m as f64).cos()).abs() < 1e-6);
    }

    #[test]
    fn unlimited_branch_has_no_rows() {
        assert!(linearize_flow_limits(None, 16, FULL).unwrap().is_empty());
        assert!(linearize_flow_limits(Some(0.0), 16, FULL).unwrap().is_empty());
        assert!(linearize_flow_limits(Some(1.0), 3, FULL).is_err());
    }
}
