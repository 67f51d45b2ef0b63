//! Closed-form asymptotic covariances and mean densities for Boolean models
//! of aligned `a x b` rectangles, with quadrature oracles.
//!
//! Every covariance depends on the model through `r = gamma * v2`, the
//! factor `1 - p = exp(-r)` and the series [`h_series`].

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, Box2};

/// Largest argument accepted by [`h_series`]; `e^r` overflows shortly after.
pub const H_SERIES_MAX_ARG: f64 = 700.0;

/// Absolute tolerance of the covariogram quadrature.
pub const QUAD_ABS_TOL: f64 = 1e-9;

/// Boolean model with deterministic `a x b` grains aligned to the axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectModel {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
}

impl RectModel {
    pub fn new(a: f64, b: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { a, b, gamma })
    }

    /// Grain area.
    pub fn v2(&self) -> f64 {
        self.a * self.b
    }

    /// Half the grain perimeter.
    pub fn v1(&self) -> f64 {
        self.a + self.b
    }

    /// `gamma * v2`, the mean number of grains covering a point.
    pub fn load(&self) -> f64 {
        self.gamma * self.v2()
    }

    /// Volume fraction `1 - exp(-gamma v2)`.
    pub fn p(&self) -> f64 {
        -(-self.load()).exp_m1()
    }

    /// `1 - p`, computed without cancellation.
    pub fn q(&self) -> f64 {
        (-self.load()).exp()
    }

    /// `v_{1,1}`, which equals the grain area for rectangles.
    pub fn v11(&self) -> f64 {
        self.v2()
    }
}

/// Symmetric matrix of `sigma(V_i, V_j)`, indices `0..3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix(pub [[f64; 3]; 3]);

impl CovMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let m = Matrix3::from_fn(|i, j| self.0[i][j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.0[i][j] == self.0[j][i]))
    }
}

/// `H(r) = sum_{k>=1} r^k / (k! (k+1)^2)`.
pub fn h_series(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::OutOfRange {
            value: r,
            reason: "H(r) requires r >= 0".into(),
        });
    }
    if r > H_SERIES_MAX_ARG {
        return Err(Error::OutOfRange {
            value: r,
            reason: format!("H(r) overflows for r > {H_SERIES_MAX_ARG}"),
        });
    }
    let mut sum = 0.0;
    let mut power = 1.0; // r^k / k!
    let mut k = 1.0_f64;
    loop {
        power *= r / k;
        let term = power / ((k + 1.0) * (k + 1.0));
        sum += term;
        if term <= 1e-16 * sum || term == 0.0 {
            break;
        }
        k += 1.0;
    }
    Ok(sum)
}

// The callers validate r through RectModel, which keeps r finite and
// positive; an overflowing load is reported as NaN.
fn h(r: f64) -> f64 {
    h_series(r).unwrap_or(f64::NAN)
}

/// `sigma(V2, V2) = 4 (1-p)^2 v2 H(gamma v2)`.
pub fn cov_v2_v2(m: &RectModel) -> f64 {
    let q = m.q();
    4.0 * q * q * m.v2() * h(m.load())
}

/// `sigma(V1, V2)`.
pub fn cov_v1_v2(m: &RectModel) -> f64 {
    let r = m.load();
    let q = m.q();
    2.0 * q * q * m.v1() * (r.exp_m1() / r - 1.0 - 2.0 * r * h(r))
}

/// `sigma(V0, V2) = (1-p) [4 (1-p) r - 3p - 4 (1-p) r (1 - r) H(r)]` with
/// `r = gamma v2`.
pub fn cov_v0_v2(m: &RectModel) -> f64 {
    let r = m.load();
    let (p, q) = (m.p(), m.q());
    q * (4.0 * q * r - 3.0 * p - 4.0 * q * r * (1.0 - r) * h(r))
}

/// `sigma(V1, V1)`; the only entry that depends on the aspect ratio beyond
/// `v1` and `v2`.
pub fn cov_v1_v1(m: &RectModel) -> f64 {
    let (g, v1, v2) = (m.gamma, m.v1(), m.v2());
    let r = m.load();
    let (p, q) = (m.p(), m.q());
    let sq = m.a * m.a + m.b * m.b;
    q * (2.0 * p + 4.0 * q * g * g * v1 * v1 * v2 * h(r)
        - 4.0 * g * g * v1 * v1 * (p / (g * g * v2) - q / g)
        + 2.0 * sq * (1.0 / v2 - p / (g * v2 * v2)))
}

/// `sigma(V0, V1)`.
pub fn cov_v0_v1(m: &RectModel) -> f64 {
    let r = m.load();
    let (p, q) = (m.p(), m.q());
    q * m.gamma * m.v1() * (1.0 + 2.0 * p + q * r * (4.0 * (1.0 - r) * h(r) - 6.0))
}

/// `sigma(V0, V0)`.
pub fn cov_v0_v0(m: &RectModel) -> f64 {
    let r = m.load();
    let (p, q) = (m.p(), m.q());
    q * m.gamma
        * (1.0 + 2.0 * p + (4.0 * p - 7.0) * r + 4.0 * q * r * (2.0 * r + (1.0 - r) * (1.0 - r) * h(r)))
}

/// `sigma(V_i, V_j)` for `i, j` in `0..3`.
pub fn cov_entry(m: &RectModel, i: usize, j: usize) -> f64 {
    match (i.min(j), i.max(j)) {
        (0, 0) => cov_v0_v0(m),
        (0, 1) => cov_v0_v1(m),
        (0, 2) => cov_v0_v2(m),
        (1, 1) => cov_v1_v1(m),
        (1, 2) => cov_v1_v2(m),
        (2, 2) => cov_v2_v2(m),
        _ => panic!("intrinsic volume index out of range: ({i}, {j})"),
    }
}

pub fn cov_matrix(m: &RectModel) -> CovMatrix {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = cov_entry(m, i, j);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    CovMatrix(out)
}

/// Mean densities `(d0, d1, d2)` of Euler characteristic, half perimeter and
/// area per unit area.
pub fn mean_densities(m: &RectModel) -> (f64, f64, f64) {
    let q = m.q();
    let d0 = q * m.gamma * (1.0 - m.load());
    let d1 = q * m.gamma * m.v1();
    (d0, d1, m.p())
}

/// Set covariogram `C2(x) = area(K ∩ (K + x))` of the model's grain.
pub fn covariogram(x: f64, y: f64, m: &RectModel) -> f64 {
    let (dx, dy) = (x.abs(), y.abs());
    if dx > m.a || dy > m.b {
        0.0
    } else {
        (m.a - dx) * (m.b - dy)
    }
}

/// `(1-p)^2 * int (exp(gamma C(x)) - 1) dx` by adaptive quadrature over
/// `support`, for any covariogram `C` vanishing outside of it.
///
/// The area of the grain is taken as `C(0)`. Boxes straddling an axis are
/// split there since covariograms typically have kinks on the axes.
pub fn quad_cov_v2_v2<C: Fn(f64, f64) -> f64>(covariogram: C, gamma: f64, support: Box2) -> Result<f64> {
    let area = covariogram(0.0, 0.0);
    let q = (-gamma * area).exp();
    let integral = quad_exp_covariogram(&covariogram, gamma, support)?;
    Ok(q * q * integral)
}

/// `int (exp(gamma C(x)) - 1) dx` over `support`.
pub fn quad_exp_covariogram<C: Fn(f64, f64) -> f64>(covariogram: C, gamma: f64, support: Box2) -> Result<f64> {
    let split = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        if lo < 0.0 && hi > 0.0 {
            vec![(lo, 0.0), (0.0, hi)]
        } else {
            vec![(lo, hi)]
        }
    };
    let xs = split(support.x0, support.x1);
    let ys = split(support.y0, support.y1);
    let parts = (xs.len() * ys.len()) as f64;
    let mut total = 0.0;
    for &(x0, x1) in &xs {
        for &(y0, y1) in &ys {
            total += integrate_2d(
                |x, y| (gamma * covariogram(x, y)).exp_m1(),
                Box2::new(x0, x1, y0, y1),
                QUAD_ABS_TOL / parts,
            )?;
        }
    }
    Ok(total)
}

/// Evaluates the right-hand side of the aligned-rectangle scaling relation:
/// the covariance of the unit-square model with the same `gamma * v2`,
/// multiplied by the appropriate power of the side lengths.
///
/// For `i, j` in `{0, 2}` the factor is `v2^{i/2 + j/2 - 1}`; for a pair
/// `(i, 1)` with `i` in `{0, 2}` it is `v2^{i/2 - 1} v1 / 2`. The pair
/// `(1, 1)` has no such relation and is rejected.
pub fn rescale(m: &RectModel, i: usize, j: usize) -> Result<f64> {
    let (lo, hi) = (i.min(j), i.max(j));
    if hi > 2 {
        return Err(Error::InvalidModel(format!("intrinsic volume index out of range: ({i}, {j})")));
    }
    let unit = RectModel::new(1.0, 1.0, m.load())?;
    let v2 = m.v2();
    let factor = match (lo, hi) {
        (1, 1) => {
            return Err(Error::InvalidModel(
                "sigma(V1, V1) depends on the aspect ratio and has no scaling relation".into(),
            ))
        }
        (k, 1) | (1, k) => v2.powf(k as f64 / 2.0 - 1.0) * m.v1() / 2.0,
        (k, l) => v2.powf((k + l) as f64 / 2.0 - 1.0),
    };
    Ok(factor * cov_entry(&unit, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(gamma: f64) -> RectModel {
        RectModel::new(1.0, 1.0, gamma).unwrap()
    }

    #[test]
    fn h_series_edge_values() {
        assert_eq!(h_series(0.0).unwrap(), 0.0);
        assert!((h_series(1.0).unwrap() - 0.3179021).abs() < 1e-7);
        assert!(h_series(-1.0).is_err());
        assert!(h_series(700.0).unwrap().is_finite());
        assert!(matches!(h_series(700.5), Err(Error::OutOfRange { .. })));
        assert!(h_series(f64::NAN).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(RectModel::new(0.0, 1.0, 1.0).is_err());
        assert!(RectModel::new(1.0, -1.0, 1.0).is_err());
        assert!(RectModel::new(1.0, 1.0, f64::INFINITY).is_err());
        let m = RectModel::new(2.0, 0.5, 3.0).unwrap();
        assert_eq!(m.v2(), 1.0);
        assert_eq!(m.v1(), 2.5);
        assert_eq!(m.v11(), m.v2());
    }

    #[test]
    fn unit_square_v2_variance() {
        let e2 = (-2.0_f64).exp();
        let expected = 4.0 * e2 * h_series(1.0).unwrap();
        assert!((cov_v2_v2(&unit(1.0)) - expected).abs() < 1e-15);
        assert!((cov_v2_v2(&unit(1.0)) - 0.172094).abs() < 1e-6);
    }

    #[test]
    fn v2_variance_depends_on_load_only() {
        let m = RectModel::new(2.0, 0.5, 1.0).unwrap();
        assert_eq!(cov_v2_v2(&m), cov_v2_v2(&unit(1.0)));
    }

    #[test]
    fn unit_square_substitutions() {
        let e = std::f64::consts::E;
        let h1 = h_series(1.0).unwrap();
        let em1 = (-1.0_f64).exp();
        let m = unit(1.0);
        let s12 = 2.0 * em1 * em1 * 2.0 * ((e - 1.0) - 1.0 - 2.0 * h1);
        assert!((cov_v1_v2(&m) - s12).abs() < 1e-14);
        // at r = 1 the H(r) term drops out
        let s02 = em1 * (4.0 * em1 - 3.0 * (1.0 - em1));
        assert!((cov_v0_v2(&m) - s02).abs() < 1e-14);
    }

    #[test]
    fn all_entries_vanish_in_sparse_and_dense_limits() {
        for m in [unit(1e-9), unit(1e-12), unit(60.0), unit(200.0)] {
            let c = cov_matrix(&m);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(c.get(i, j).abs() < 1e-6, "{m:?} ({i},{j}) = {}", c.get(i, j));
                }
            }
        }
    }

    #[test]
    fn euler_variance_sparse_limit() {
        for g in [1e-3, 1e-5, 1e-7] {
            let ratio = cov_v0_v0(&unit(g)) / g;
            assert!((ratio - 1.0).abs() < 20.0 * g, "{g}: {ratio}");
        }
    }

    #[test]
    fn v1_variance_sparse_limit_is_single_grain() {
        let m = RectModel::new(1.0, 0.5, 1e-6).unwrap();
        let ratio = cov_v1_v1(&m) / (m.gamma * m.v1() * m.v1());
        assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
    }

    #[test]
    fn sign_patterns() {
        assert!(cov_v1_v2(&unit(0.1)) > 0.0);
        assert!(cov_v0_v2(&unit(0.05)) > 0.0);
        assert!(cov_v0_v2(&unit(3.0)) < 0.0);
        for k in 1..=25 {
            assert!(cov_v0_v1(&unit(0.1 * k as f64)) > 0.0);
        }
        assert!(cov_v0_v1(&unit(4.0)) < 0.0);
        for k in 1..=200 {
            let m = unit(0.1 * k as f64);
            assert!(cov_v0_v0(&m) > 0.0, "{m:?}");
        }
    }

    #[test]
    fn v1_variance_depends_on_aspect_ratio() {
        let square = RectModel::new(1.0, 1.0, 2.0).unwrap();
        let s = 0.5_f64.sqrt();
        let rect = RectModel::new(2.0 * s, s, 2.0).unwrap();
        assert!((rect.v2() - 1.0).abs() < 1e-15);
        let a = cov_v1_v1(&square) / (square.v1() * square.v1());
        let b = cov_v1_v1(&rect) / (rect.v1() * rect.v1());
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn mean_densities_examples() {
        let m = unit(1.0);
        let (d0, d1, d2) = mean_densities(&m);
        assert_eq!(d0, 0.0);
        assert!((d2 - (1.0 - (-1.0_f64).exp())).abs() < 1e-16);
        assert!(d1 > 0.0);
        let g = 1e-9;
        let (d0, d1, d2) = mean_densities(&RectModel::new(1.0, 0.5, g).unwrap());
        assert!((d0 / g - 1.0).abs() < 1e-8);
        assert!((d1 / g - 1.5).abs() < 1e-8);
        assert!((d2 / g - 0.5).abs() < 1e-8);
    }

    #[test]
    fn covariogram_examples() {
        let m = RectModel::new(2.0, 0.5, 1.0).unwrap();
        assert_eq!(covariogram(0.0, 0.0, &m), 1.0);
        assert_eq!(covariogram(2.0, 0.0, &m), 0.0);
        assert_eq!(covariogram(1.0, 0.25, &m), 0.25);
        assert_eq!(covariogram(-1.0, -0.25, &m), 0.25);
        assert_eq!(covariogram(3.0, 0.0, &m), 0.0);
    }

    #[test]
    fn quadrature_oracle_unit_square() {
        let m = unit(1.0);
        let q = quad_cov_v2_v2(|x, y| covariogram(x, y, &m), 1.0, Box2::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        let closed = cov_v2_v2(&m);
        assert!(((q - closed) / closed).abs() < 1e-6, "{q} vs {closed}");
        let tiny = quad_cov_v2_v2(|x, y| covariogram(x, y, &m), 1e-12, Box2::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert!(tiny.abs() < 1e-10);
    }

    #[test]
    fn rescale_examples() {
        let a = RectModel::new(2.0, 0.5, 3.0).unwrap();
        assert_eq!(cov_v2_v2(&a), cov_v2_v2(&unit(3.0)));
        let m = RectModel::new(4.0, 1.0, 0.25).unwrap();
        let lhs = cov_v0_v2(&m);
        let rhs = rescale(&m, 0, 2).unwrap();
        assert!(((lhs - rhs) / lhs).abs() < 1e-12);
        assert!((rhs - cov_v0_v2(&unit(1.0))).abs() < 1e-15);
        assert!(rescale(&m, 1, 1).is_err());
        assert!(rescale(&m, 3, 0).is_err());
    }

    #[test]
    fn positive_definite_examples() {
        assert!(cov_matrix(&unit(1.0)).min_eigenvalue() > 0.0);
        assert!(cov_matrix(&unit(4.0)).min_eigenvalue() > 0.0);
        assert!(cov_matrix(&unit(4.0)).is_symmetric());
    }
}
