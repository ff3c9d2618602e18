//! Wind-output uncertainty pricing.
//!
//! A one-dimensional Gaussian mixture describes the realised farm output. The
//! expected shortage and surplus penalties for a scheduled output are then
//! closed-form in the mixture parameters, and a tangent-line envelope of the
//! resulting convex curve is handed to the optimizer.

mod cost;
mod em;
mod pwl;

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

pub use cost::{cost_curve, shortage_surplus_cost, write_cost_curve_csv, CostPoint, WindCostCurve};
pub use em::{fit_gmm_em, EmFit, EmOptions};
pub use pwl::{build_pwl_cost, PwlBuild, PwlCost, PwlSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    /// Installed capacity P_max in MW.
    pub support_max: f64,
}

#[derive(Serialize, Deserialize)]
struct GmmJson {
    #[serde(rename = "K")]
    k: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    stddevs: Vec<f64>,
    support_max: f64,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, stddevs: Vec<f64>, support_max: f64) -> Result<Self> {
        let m = GmmModel { weights, means, stddevs, support_max };
        m.validate()?;
        Ok(m)
    }

    pub fn single(mean: f64, stddev: f64, support_max: f64) -> Self {
        GmmModel { weights: vec![1.0], means: vec![mean], stddevs: vec![stddev], support_max }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.stddevs.len() != k {
            return Err(Error::Validation("GMM needs K >= 1 equally sized parameter vectors".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Validation("GMM weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("GMM weights sum to {total}, expected 1")));
        }
        if self.stddevs.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Validation("GMM standard deviations must be positive".into()));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("GMM means must be finite".into()));
        }
        Ok(())
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((&w, &m), &s)| (w, m, s))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components().map(|(w, m, s)| w * normal_pdf(x, m, s)).sum()
    }

    /// Mixture CDF, clamped to [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        let v: f64 = self.components().map(|(w, m, s)| w * normal_cdf(x, m, s)).sum();
        v.clamp(0.0, 1.0)
    }

    /// Upper tail `1 − F(x)`, evaluated without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        let v: f64 = self.components().map(|(w, m, s)| w * normal_sf(x, m, s)).sum();
        v.clamp(0.0, 1.0)
    }

    /// `∫_dn^up v f(v) dv` in closed form; either bound may be infinite.
    ///
    /// Per component: `σ² [N(dn) − N(up)] + μ [Φ(up) − Φ(dn)]`.
    pub fn truncated_first_moment(&self, dn: f64, up: f64) -> f64 {
        self.components()
            .map(|(w, m, s)| {
                let dens = normal_pdf(dn, m, s) - normal_pdf(up, m, s);
                w * (s * s * dens + m * normal_mass(dn, up, m, s))
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components().map(|(w, m, _)| w * m).sum()
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.pdf(x).max(f64::MIN_POSITIVE).ln()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let j = GmmJson {
            k: self.k(),
            weights: self.weights.clone(),
            means: self.means.clone(),
            stddevs: self.stddevs.clone(),
            support_max: self.support_max,
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: GmmJson = serde_json::from_str(text)?;
        if j.k != j.weights.len() {
            return Err(Error::Validation(format!(
                "GMM JSON declares K={} but has {} weights",
                j.k,
                j.weights.len()
            )));
        }
        GmmModel::new(j.weights, j.means, j.stddevs, j.support_max)
    }

    pub fn load(path: &Path) -> Result<Self> {
        GmmModel::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    0.5 * erfc(-(x - mean) / (sd * SQRT_2))
}

fn normal_sf(x: f64, mean: f64, sd: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    0.5 * erfc((x - mean) / (sd * SQRT_2))
}

/// `Φ(up) − Φ(dn)` choosing the tail that avoids cancellation.
fn normal_mass(dn: f64, up: f64, mean: f64, sd: f64) -> f64 {
    if dn >= mean {
        normal_sf(dn, mean, sd) - normal_sf(up, mean, sd)
    } else {
        normal_cdf(up, mean, sd) - normal_cdf(dn, mean, sd)
    }
}

/// Reads one column of MW values; a non-numeric first line is taken as a header.
pub fn read_wind_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_wind_csv(&text)
}

pub fn parse_wind_csv(text: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let Some(field) = rec.get(0) else { continue };
        let field = field.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse { line: i + 1, msg: format!("invalid wind sample '{field}'") })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_limits_and_symmetry() {
        let m = GmmModel::single(0.0, 1.0, 1.0);
        assert_eq!(m.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(m.cdf(f64::INFINITY), 1.0);
        assert!(m.cdf(-1e3) < 1e-300);
        assert_eq!(m.cdf(1e3), 1.0);
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn first_moment_standard_normal() {
        let m = GmmModel::single(0.0, 1.0, 1.0);
        assert!(m.truncated_first_moment(f64::NEG_INFINITY, f64::INFINITY).abs() < 1e-16);
        let half = m.truncated_first_moment(0.0, f64::INFINITY);
        assert!((half - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((half - 0.398942).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(GmmModel::new(vec![0.5, 0.4], vec![0.0, 1.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(GmmModel::new(vec![1.0], vec![0.0], vec![0.0], 1.0).is_err());
    }

    #[test]
    fn shortage_plus_surplus_probability_is_one() {
        let m = GmmModel::new(vec![0.3, 0.7], vec![40.0, 150.0], vec![15.0, 30.0], 225.0).unwrap();
        for p in [0.0, 20.0, 75.0, 140.0, 225.0] {
            assert!((m.cdf(p) + m.sf(p) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_optional_header() {
        assert_eq!(parse_wind_csv("power_mw\n1.5\n2\n").unwrap(), vec![1.5, 2.0]);
        assert_eq!(parse_wind_csv("3\n4.25\n").unwrap(), vec![3.0, 4.25]);
        assert!(parse_wind_csv("1\nabc\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = GmmModel::new(vec![0.25, 0.75], vec![10.0, 80.0], vec![3.0, 12.5], 100.0).unwrap();
        let back = GmmModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_json().unwrap().contains("\"K\": 2"));
    }
}
