use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GmmModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop when the relative log-likelihood improvement drops below this.
    pub tol: f64,
    pub seed: u64,
    /// Installed capacity stored on the model; defaults to the largest sample.
    pub support_max: Option<f64>,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { max_iter: 500, tol: 1e-10, seed: 42, support_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub model: GmmModel,
    /// Log-likelihood after initialisation and after every EM step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits a `k`-component 1-D mixture by expectation-maximisation.
///
/// Means start from k-means++ seeding drawn with `opts.seed`; variances are
/// floored at `1e-6 · range²`. A sample set with zero range yields a single
/// component.
pub fn fit_gmm_em(samples: &[f64], k: usize, opts: &EmOptions) -> Result<EmFit> {
    if k == 0 {
        return Err(Error::Config("GMM needs at least one component".into()));
    }
    if samples.len() < 10 * k {
        return Err(Error::InsufficientSamples { needed: 10 * k, got: samples.len() });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("wind samples must be finite".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let support_max = opts.support_max.unwrap_or(hi);
    let range = hi - lo;

    if range == 0.0 {
        let sd = 1e-3 * lo.abs().max(1.0);
        let model = GmmModel::single(lo, sd, support_max);
        let ll = model.log_likelihood(samples);
        return Ok(EmFit { model, log_likelihood: vec![ll], iterations: 0, converged: true });
    }
    let var_floor = 1e-6 * range * range;
    let n = samples.len();

    let (mut w, mut mu, mut var) = initialise(samples, k, var_floor, opts.seed);
    let mut resp = vec![0.0; n * k];
    let mut trace = vec![log_likelihood(samples, &w, &mu, &var)];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        // E-step
        for (i, &x) in samples.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for c in 0..k {
                row[c] = w[c].ln() + log_normal(x, mu[c], var[c]);
            }
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for r in row.iter_mut() {
                *r = (*r - m).exp();
                s += *r;
            }
            for r in row.iter_mut() {
                *r /= s;
            }
        }
        // M-step
        for c in 0..k {
            let mut nk = 0.0;
            let mut sx = 0.0;
            for (i, &x) in samples.iter().enumerate() {
                let r = resp[i * k + c];
                nk += r;
                sx += r * x;
            }
            if nk <= 0.0 {
                continue;
            }
            let m = sx / nk;
            let mut sv = 0.0;
            for (i, &x) in samples.iter().enumerate() {
                let d = x - m;
                sv += resp[i * k + c] * d * d;
            }
            mu[c] = m;
            var[c] = (sv / nk).max(var_floor);
            w[c] = (nk / n as f64).max(f64::MIN_POSITIVE);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);

        let ll = log_likelihood(samples, &w, &mu, &var);
        let prev = *trace.last().unwrap();
        trace.push(ll);
        if (ll - prev).abs() <= opts.tol * prev.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    let model = GmmModel::new(w, mu, var.iter().map(|v| v.sqrt()).collect(), support_max)?;
    Ok(EmFit { model, log_likelihood: trace, iterations, converged })
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + var.ln() + (2.0 * std::f64::consts::PI).ln())
}

fn log_likelihood(samples: &[f64], w: &[f64], mu: &[f64], var: &[f64]) -> f64 {
    samples
        .iter()
        .map(|&x| {
            let terms: Vec<f64> = (0..w.len()).map(|c| w[c].ln() + log_normal(x, mu[c], var[c])).collect();
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
        })
        .sum()
}

/// k-means++ seeding followed by hard assignment to get weights and variances.
fn initialise(samples: &[f64], k: usize, var_floor: f64, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![samples[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = samples.iter().map(|&x| (x - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            samples[pick]
        } else {
            samples[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, &x) in d2.iter_mut().zip(samples) {
            *d = d.min((x - next).powi(2));
        }
    }

    let mut count = vec![0usize; k];
    let mut sum = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for &x in samples {
        let c = (0..k)
            .min_by(|&a, &b| (x - centers[a]).abs().total_cmp(&(x - centers[b]).abs()))
            .unwrap();
        count[c] += 1;
        sum[c] += x;
        sq[c] += x * x;
    }
    let global_mean = samples.iter().sum::<f64>() / n as f64;
    let global_var = samples.iter().map(|x| (x - global_mean).powi(2)).sum::<f64>() / n as f64;
    let mut w = Vec::with_capacity(k);
    let mut mu = Vec::with_capacity(k);
    let mut var = Vec::with_capacity(k);
    for c in 0..k {
        if count[c] == 0 {
            w.push(0.5 / n as f64);
            mu.push(centers[c]);
            var.push(global_var.max(var_floor));
        } else {
            let m = sum[c] / count[c] as f64;
            w.push(count[c] as f64 / n as f64);
            mu.push(m);
            var.push((sq[c] / count[c] as f64 - m * m).max(var_floor));
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    (w, mu, var)
}
