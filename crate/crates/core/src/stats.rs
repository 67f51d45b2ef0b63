//! Means, covariances with bootstrap errors, standardized histograms and a
//! Kolmogorov–Smirnov distance to the standard normal law.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng;
use crate::simulate::SampleResult;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_RANGE: (f64, f64) = (-5.0, 5.0);

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Sample means and covariances (per unit window area) of `(V0, V1, V2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub mean: Vec3,
    /// Bootstrap standard errors of `mean`.
    pub mean_se: Vec3,
    /// Sample covariance divided by the window area.
    pub cov: Mat3,
    /// Bootstrap standard errors of `cov`.
    pub se: Mat3,
    pub m: usize,
    pub b: usize,
    pub area: f64,
}

/// Shifted one-pass accumulation; the first sample is the shift.
fn moments(values: &[Vec3], pick: impl Fn(usize) -> usize) -> (Vec3, Mat3) {
    let n = values.len();
    let shift = values[pick(0)];
    let mut s = [0.0; 3];
    let mut ss = [[0.0; 3]; 3];
    for k in 0..n {
        let x = values[pick(k)];
        let d = [x[0] - shift[0], x[1] - shift[1], x[2] - shift[2]];
        for i in 0..3 {
            s[i] += d[i];
            for j in i..3 {
                ss[i][j] += d[i] * d[j];
            }
        }
    }
    let nf = n as f64;
    let mean = [shift[0] + s[0] / nf, shift[1] + s[1] / nf, shift[2] + s[2] / nf];
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let c = (ss[i][j] - s[i] * s[j] / nf) / (nf - 1.0);
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    (mean, cov)
}

/// Sample mean and unbiased sample covariance.
pub fn mean_and_cov(values: &[Vec3]) -> Result<(Vec3, Mat3)> {
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: values.len(),
            need: 2,
        });
    }
    Ok(moments(values, |k| k))
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Estimates means and covariances of `values`, normalizing the covariance
/// by `area`, with `bootstrap` resamples drawn from `seed`.
pub fn estimate_cov_values(values: &[Vec3], area: f64, bootstrap: usize, seed: u64) -> Result<CovarianceEstimate> {
    let (mean, raw) = mean_and_cov(values)?;
    let cov = raw.map(|row| row.map(|c| c / area));
    let m = values.len();

    // resample r draws from its own stream so the result does not depend on
    // the thread layout
    let replicas: Vec<(Vec3, Mat3)> = (0..bootstrap as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r);
            let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            moments(values, |k| idx[k])
        })
        .collect();

    let mut mean_se = [0.0; 3];
    let mut se = [[0.0; 3]; 3];
    for i in 0..3 {
        let col: Vec<f64> = replicas.iter().map(|r| r.0[i]).collect();
        mean_se[i] = std_dev(&col);
        for j in 0..3 {
            let col: Vec<f64> = replicas.iter().map(|r| r.1[i][j] / area).collect();
            se[i][j] = std_dev(&col);
        }
    }
    Ok(CovarianceEstimate {
        mean,
        mean_se,
        cov,
        se,
        m,
        b: bootstrap,
        area,
    })
}

pub fn values_of(results: &[SampleResult]) -> Vec<Vec3> {
    results.iter().map(|r| r.functionals.as_array()).collect()
}

/// [`estimate_cov_values`] over replication results.
pub fn estimate_cov(results: &[SampleResult], area: f64, bootstrap: usize, seed: u64) -> Result<CovarianceEstimate> {
    estimate_cov_values(&values_of(results), area, bootstrap, seed)
}

/// Centers every component and scales it to unit sample variance.
pub fn standardize(values: &[Vec3]) -> Result<Vec<Vec3>> {
    let (mean, cov) = mean_and_cov(values)?;
    let mut scale = [0.0; 3];
    for i in 0..3 {
        if !(cov[i][i] > 0.0) {
            return Err(Error::DegenerateComponent { component: i });
        }
        scale[i] = cov[i][i].sqrt();
    }
    Ok(values
        .iter()
        .map(|v| [0, 1, 2].map(|i| (v[i] - mean[i]) / scale[i]))
        .collect())
}

/// Density-normalized histogram: `weight = count / (total * width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub weights: Vec<f64>,
    pub underflow: usize,
    pub overflow: usize,
    pub total: usize,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.counts.len()).map(|k| self.lo + (k as f64 + 0.5) * w).collect()
    }

    /// `sum weight * width`, the fraction of samples inside the range.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.bin_width()
    }
}

pub fn histogram(values: &[f64], range: (f64, f64), bins: usize) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidHistogram(format!("range [{lo}, {hi}] with {bins} bins")));
    }
    if values.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &v in values {
        if v < lo {
            underflow += 1;
        } else if v > hi || v.is_nan() {
            overflow += 1;
        } else {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let total = values.len();
    let weights = counts.iter().map(|&c| c as f64 / (total as f64 * width)).collect();
    Ok(Histogram {
        lo,
        hi,
        counts,
        weights,
        underflow,
        overflow,
        total,
    })
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_n(x) - Phi(x)|` for the empirical distribution `F_n`.
pub fn ks_normal(values: &[f64]) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            ((i + 1) as f64 / n - phi).max(phi - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
