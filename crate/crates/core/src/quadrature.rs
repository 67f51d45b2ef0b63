//! Adaptive Gauss–Kronrod quadrature in one and two dimensions.
//!
//! The 2D rule is a tensor product of nested 1D adaptive integrations. It is
//! meant for smooth (or piecewise smooth with kinks on known lines) integrands
//! such as `exp(gamma * C(x)) - 1` for a covariogram `C`.

use crate::error::{Error, Result};

// 15-point Kronrod nodes on [0, 1) (symmetric about 0) and weights; the
// odd-indexed nodes are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to the requested absolute tolerance by
/// globally adaptive bisection of the worst interval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let mut segments = vec![gauss_kronrod(&mut f, lo, hi)];
    loop {
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= abs_tol {
            break;
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureDiverged {
                error: total_err,
                tolerance: abs_tol,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi {
            // interval can no longer be split in floating point
            return Err(Error::QuadratureDiverged {
                error: total_err,
                tolerance: abs_tol,
            });
        }
        segments.push(gauss_kronrod(&mut f, seg.lo, mid));
        segments.push(gauss_kronrod(&mut f, mid, seg.hi));
    }
    // sum in ascending position for reproducibility
    segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(segments.iter().map(|s| s.value).sum())
}

/// Axis-parallel integration box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Box2 {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Tensor-product adaptive integration of `f(x, y)` over `region`.
///
/// The inner integrals are solved to a tolerance scaled so that their
/// accumulated error stays well below `abs_tol`.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, region: Box2, abs_tol: f64) -> Result<f64> {
    let width = region.x1 - region.x0;
    if width == 0.0 || region.y1 == region.y0 {
        return Ok(0.0);
    }
    let inner_tol = 0.1 * abs_tol / width.abs();
    let mut failure = None;
    let outer = integrate(
        |x| match integrate(|y| f(x, y), region.y0, region.y1, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        region.x0,
        region.x1,
        0.5 * abs_tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}
