//! Test helpers: a pixel rasterizer and digital topology labeling.
#![allow(dead_code)]

use boolean_lab::PlacedGrain;
use rand::Rng;

/// Raster of `[0, side]^2` with `n x n` pixels; a pixel is set when its
/// center lies in some grain.
pub struct Raster {
    pub n: usize,
    pub side: f64,
    pub set: Vec<bool>,
}

impl Raster {
    pub fn of_grains(grains: &[PlacedGrain], side: f64, n: usize) -> Self {
        let mut set = vec![false; n * n];
        let h = side / n as f64;
        for g in grains {
            let corners = g.corners();
            let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for &(x, y) in &corners {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
            let lo = |v: f64| ((v / h - 0.5).ceil().max(0.0) as usize).min(n);
            let hi = |v: f64| ((v / h - 0.5).floor() + 1.0).clamp(0.0, n as f64) as usize;
            for j in lo(y0)..hi(y1) {
                for i in lo(x0)..hi(x1) {
                    let p = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                    if g.is_aligned() || inside(&corners, p) {
                        set[j * n + i] = true;
                    }
                }
            }
        }
        Self { n, side, set }
    }

    pub fn area(&self) -> f64 {
        let h = self.side / self.n as f64;
        self.set.iter().filter(|&&s| s).count() as f64 * h * h
    }

    /// Components of the set pixels (8-connected) minus holes (4-connected
    /// components of the complement that do not reach the border). This pair
    /// matches the closed-set convention.
    pub fn euler(&self) -> i64 {
        let fg = label(self.n, |i| self.set[i], true);
        let n2 = self.n + 2;
        // pad with a background ring so the outside is one component
        let padded = |k: usize| {
            let (i, j) = (k % n2, k / n2);
            if i == 0 || j == 0 || i == n2 - 1 || j == n2 - 1 {
                true
            } else {
                !self.set[(j - 1) * self.n + (i - 1)]
            }
        };
        let bg = label(n2, padded, false);
        fg as i64 - (bg as i64 - 1)
    }
}

fn inside(corners: &[(f64, f64); 4], p: (f64, f64)) -> bool {
    (0..4).all(|k| {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
    })
}

/// Number of connected components of the pixels selected by `on`.
fn label(n: usize, on: impl Fn(usize) -> bool, eight: bool) -> usize {
    let mut seen = vec![false; n * n];
    let mut stack = Vec::new();
    let mut count = 0;
    let steps: &[(i64, i64)] = if eight {
        &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    } else {
        &[(1, 0), (-1, 0), (0, 1), (0, -1)]
    };
    for start in 0..n * n {
        if seen[start] || !on(start) {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = ((k % n) as i64, (k / n) as i64);
            for &(di, dj) in steps {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                    continue;
                }
                let m = b as usize * n + a as usize;
                if !seen[m] && on(m) {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
    }
    count
}

/// Up to `max` aligned rectangles in `[0, 1]^2` with corners on the lattice
/// `Z / 64`, so every feature of a 2048 raster spans at least 32 pixels.
pub fn lattice_rectangles(rng: &mut impl Rng, max: usize) -> Vec<PlacedGrain> {
    let count = rng.random_range(1..=max);
    (0..count)
        .map(|_| {
            let x0 = rng.random_range(0..60u32);
            let y0 = rng.random_range(0..60u32);
            let x1 = rng.random_range(x0 + 1..=(x0 + 20).min(64));
            let y1 = rng.random_range(y0 + 1..=(y0 + 20).min(64));
            let s = |v: u32| v as f64 / 64.0;
            PlacedGrain::from_bounds(s(x0), s(y0), s(x1), s(y1))
        })
        .collect()
}

/// Aligned rectangle with random bounds inside `[lo, hi]^2`.
pub fn random_rectangle(rng: &mut impl Rng, lo: f64, hi: f64, max_side: f64) -> PlacedGrain {
    let w = rng.random_range(0.01..max_side);
    let h = rng.random_range(0.01..max_side);
    let x0 = rng.random_range(lo..hi - w);
    let y0 = rng.random_range(lo..hi - h);
    PlacedGrain::from_bounds(x0, y0, x0 + w, y0 + h)
}

/// Half perimeter of a grain.
pub fn half_perimeter(g: &PlacedGrain) -> f64 {
    2.0 * (g.hx + g.hy)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) || a == b
}
