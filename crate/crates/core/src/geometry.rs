//! Exact intrinsic volumes of unions of axis-aligned rectangles.
//!
//! All rectangle edge coordinates are collected per axis, sorted and
//! deduplicated. The resulting grid induces a cell complex (vertices, edges,
//! open cells); a cell of any dimension is covered iff it lies in the closed
//! union of the grains. Area, boundary length and Euler characteristic
//! (`V - E + F` of the covered subcomplex) follow by counting.
//!
//! On the torus every coordinate is folded into `[0, L)` and the grid is
//! cyclic: the last cell of each axis wraps from the largest coordinate to
//! the smallest one plus `L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular grain: center, half extents and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedGrain {
    pub cx: f64,
    pub cy: f64,
    pub hx: f64,
    pub hy: f64,
    /// Orientation in radians, in `[0, pi)`.
    pub theta: f64,
}

impl PlacedGrain {
    pub fn new(cx: f64, cy: f64, hx: f64, hy: f64, theta: f64) -> Self {
        Self { cx, cy, hx, hy, theta }
    }

    pub fn aligned(cx: f64, cy: f64, hx: f64, hy: f64) -> Self {
        Self::new(cx, cy, hx, hy, 0.0)
    }

    /// Aligned grain spanning `[x0, x1] x [y0, y1]`.
    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::aligned(0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (x1 - x0), 0.5 * (y1 - y0))
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    pub fn circumradius(&self) -> f64 {
        self.hx.hypot(self.hy)
    }

    pub fn is_aligned(&self) -> bool {
        self.theta == 0.0
    }

    /// `[x0, x1, y0, y1]` of an aligned grain.
    pub fn bounds(&self) -> [f64; 4] {
        [self.cx - self.hx, self.cx + self.hx, self.cy - self.hy, self.cy + self.hy]
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [(f64, f64); 4] {
        if self.is_aligned() {
            let [x0, x1, y0, y1] = self.bounds();
            return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
        }
        let (s, c) = self.theta.sin_cos();
        let local = [(-self.hx, -self.hy), (self.hx, -self.hy), (self.hx, self.hy), (-self.hx, self.hy)];
        local.map(|(u, v)| (self.cx + c * u - s * v, self.cy + s * u + c * v))
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidGrain {
                index,
                reason: reason.to_string(),
            })
        };
        if ![self.cx, self.cy, self.hx, self.hy, self.theta].iter().all(|v| v.is_finite()) {
            return fail("non-finite coordinate");
        }
        if !(self.hx > 0.0 && self.hy > 0.0) {
            return fail("half extents must be positive");
        }
        if !(0.0..std::f64::consts::PI).contains(&self.theta) {
            return fail("orientation must lie in [0, pi)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    Plane,
    Torus,
}

/// Square window or flat torus of side `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub side: f64,
}

impl Domain {
    pub fn plane(side: f64) -> Self {
        Self {
            kind: DomainKind::Plane,
            side,
        }
    }

    pub fn torus(side: f64) -> Self {
        Self {
            kind: DomainKind::Torus,
            side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side.is_finite() && self.side > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("domain side must be positive, got {}", self.side)))
        }
    }

    /// Rejects grains whose diameter is not below `L/2`. Under this bound the
    /// covariances on the torus equal the asymptotic ones.
    pub fn check_torus_exactness(&self, grains: &[PlacedGrain]) -> Result<()> {
        let half = 0.5 * self.side;
        for (index, g) in grains.iter().enumerate() {
            let diameter = g.diameter();
            if !(diameter < half) {
                return Err(Error::GrainTooLargeForTorus {
                    index,
                    diameter,
                    half_side: half,
                });
            }
        }
        Ok(())
    }
}

/// Intrinsic volumes of a planar set plus the boundary parts carried by the
/// two axis directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalVector {
    /// Euler characteristic.
    pub v0: i64,
    /// Half the boundary length.
    pub v1: f64,
    /// Area.
    pub v2: f64,
    /// Half the length of boundary with normal `±e1` (vertical edges).
    pub b_e1: Option<f64>,
    /// Half the length of boundary with normal `±e2` (horizontal edges).
    pub b_e2: Option<f64>,
}

impl FunctionalVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.v0 as f64, self.v1, self.v2]
    }
}

/// Which boundary segments count towards `v1` when measuring inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WindowBoundary {
    /// Ignore boundary lying on the window frame.
    #[default]
    Exclude,
    /// Count the window frame where it bounds the clipped union.
    Include,
}

/// Sorted distinct coordinates along one axis.
#[derive(Debug, Clone, PartialEq)]
struct Axis {
    coords: Vec<f64>,
    period: Option<f64>,
}

impl Axis {
    fn new(mut coords: Vec<f64>, period: Option<f64>) -> Self {
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        Self { coords, period }
    }

    fn vertices(&self) -> usize {
        self.coords.len()
    }

    fn cells(&self) -> usize {
        match (self.period, self.coords.len()) {
            (_, 0) => 0,
            (Some(_), n) => n,
            (None, n) => n - 1,
        }
    }

    fn cell_len(&self, i: usize) -> f64 {
        let n = self.coords.len();
        if i + 1 < n {
            self.coords[i + 1] - self.coords[i]
        } else {
            self.coords[0] + self.period.expect("wrap cell only exists on the torus") - self.coords[n - 1]
        }
    }

    fn index_of(&self, x: f64) -> usize {
        self.coords
            .binary_search_by(|c| c.total_cmp(&x))
            .expect("grain coordinate missing from the grid")
    }

    /// Neighbouring cell index, or `None` past the end of a planar axis.
    fn cell_offset(&self, i: usize, delta: isize) -> Option<usize> {
        let n = self.cells() as isize;
        let j = i as isize + delta;
        match self.period {
            Some(_) => Some(j.rem_euclid(n) as usize),
            None if (0..n).contains(&j) => Some(j as usize),
            None => None,
        }
    }

    /// First vertex index and number of cells spanned by `[lo, hi]` (already
    /// folded on the torus).
    fn span(&self, lo: f64, hi: f64) -> (usize, usize) {
        let a = self.index_of(lo);
        let b = self.index_of(hi);
        match self.period {
            Some(_) => {
                let n = self.vertices();
                (a, (b + n - a) % n)
            }
            None => (a, b - a),
        }
    }

    fn wrap(&self, i: usize) -> usize {
        match self.period {
            Some(_) => i % self.vertices(),
            None => i,
        }
    }
}

fn fold(x: f64, period: Option<f64>) -> f64 {
    match period {
        Some(l) => {
            let y = x.rem_euclid(l);
            // rem_euclid may round up to exactly l
            if y >= l {
                0.0
            } else {
                y
            }
        }
        None => x,
    }
}

/// Cell complex induced by the union of aligned grains.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionComplex {
    xs: Axis,
    ys: Axis,
    /// `[cx * cy]` open 2-cells, row-major in y.
    cells: Vec<bool>,
    /// `[vx * vy]` vertices.
    vertices: Vec<bool>,
    /// `[cx * vy]` horizontal edges.
    h_edges: Vec<bool>,
    /// `[vx * cy]` vertical edges.
    v_edges: Vec<bool>,
    domain: Domain,
}

impl UnionComplex {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs.coords
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys.coords
    }

    pub fn covered_cell_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Whether the open cell `(i, j)` (x-cell `i`, y-cell `j`) is covered.
    pub fn cell_covered(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.xs.cells() + i]
    }

    pub fn h_edge_covered(&self, i: usize, j: usize) -> bool {
        self.h_edges[j * self.xs.cells() + i]
    }

    pub fn v_edge_covered(&self, i: usize, j: usize) -> bool {
        self.v_edges[j * self.xs.vertices() + i]
    }

    pub fn functionals(&self) -> FunctionalVector {
        self.measure(None)
    }

    fn cell_at(&self, i: Option<usize>, j: Option<usize>) -> bool {
        match (i, j) {
            (Some(i), Some(j)) => self.cell_covered(i, j),
            _ => false,
        }
    }

    /// Counts everything; boundary edges lying on `frame` (a window side
    /// length) are dropped when given.
    fn measure(&self, frame: Option<f64>) -> FunctionalVector {
        let (ncx, ncy) = (self.xs.cells(), self.ys.cells());
        let (nvx, nvy) = (self.xs.vertices(), self.ys.vertices());
        let on_frame = |c: f64| frame.is_some_and(|l| c == 0.0 || c == l);

        let mut area = 0.0;
        let mut faces = 0i64;
        for j in 0..ncy {
            let h = self.ys.cell_len(j);
            for i in 0..ncx {
                if self.cell_covered(i, j) {
                    faces += 1;
                    area += self.xs.cell_len(i) * h;
                }
            }
        }

        let mut edges = 0i64;
        let mut horizontal = 0.0;
        for j in 0..nvy {
            // cells directly below and above the line y = ys[j]
            let below = if j == 0 { self.ys.cell_offset(0, -1) } else { Some(j - 1) };
            let above = if j < ncy { Some(j) } else { None };
            for i in 0..ncx {
                if !self.h_edge_covered(i, j) {
                    continue;
                }
                edges += 1;
                let sides = self.cell_at(Some(i), below) as u8 + self.cell_at(Some(i), above) as u8;
                if sides == 1 && !on_frame(self.ys.coords[j]) {
                    horizontal += self.xs.cell_len(i);
                }
            }
        }
        let mut vertical = 0.0;
        for j in 0..ncy {
            for i in 0..nvx {
                if !self.v_edge_covered(i, j) {
                    continue;
                }
                edges += 1;
                let left = if i == 0 { self.xs.cell_offset(0, -1) } else { Some(i - 1) };
                let right = if i < ncx { Some(i) } else { None };
                let sides = self.cell_at(left, Some(j)) as u8 + self.cell_at(right, Some(j)) as u8;
                if sides == 1 && !on_frame(self.xs.coords[i]) {
                    vertical += self.ys.cell_len(j);
                }
            }
        }
        let vertices = self.vertices.iter().filter(|&&v| v).count() as i64;

        let b_e1 = 0.5 * vertical;
        let b_e2 = 0.5 * horizontal;
        FunctionalVector {
            v0: vertices - edges + faces,
            v1: b_e1 + b_e2,
            v2: area,
            b_e1: Some(b_e1),
            b_e2: Some(b_e2),
        }
    }
}

/// Builds the covered cell complex of the union of aligned `grains`.
///
/// On the torus every grain must be shorter than the side `L` along both
/// axes so that it embeds without overlapping itself; the stronger bound
/// needed for exact covariances is [`Domain::check_torus_exactness`].
pub fn build_complex(grains: &[PlacedGrain], domain: Domain) -> Result<UnionComplex> {
    domain.validate()?;
    let period = match domain.kind {
        DomainKind::Plane => None,
        DomainKind::Torus => Some(domain.side),
    };
    let mut bounds = Vec::with_capacity(grains.len());
    for (index, g) in grains.iter().enumerate() {
        g.validate(index)?;
        if !g.is_aligned() {
            return Err(Error::InvalidGrain {
                index,
                reason: "rotated grain passed to the aligned engine".into(),
            });
        }
        if let Some(l) = period {
            let extent = 2.0 * g.hx.max(g.hy);
            if !(extent < l) {
                return Err(Error::GrainTooLargeForTorus {
                    index,
                    diameter: g.diameter(),
                    half_side: 0.5 * l,
                });
            }
        }
        let [x0, x1, y0, y1] = g.bounds();
        bounds.push([fold(x0, period), fold(x1, period), fold(y0, period), fold(y1, period)]);
    }
    Ok(complex_from_bounds(&bounds, domain, period))
}

/// `bounds` are `[x0, x1, y0, y1]`, already folded into `[0, L)` on the torus.
fn complex_from_bounds(bounds: &[[f64; 4]], domain: Domain, period: Option<f64>) -> UnionComplex {
    // `+ 0.0` maps -0.0 to 0.0 so that total ordering sees one zero
    let bounds: Vec<[f64; 4]> = bounds.iter().map(|b| b.map(|c| c + 0.0)).collect();
    let xs = Axis::new(bounds.iter().flat_map(|b| [b[0], b[1]]).collect(), period);
    let ys = Axis::new(bounds.iter().flat_map(|b| [b[2], b[3]]).collect(), period);
    let (ncx, ncy) = (xs.cells(), ys.cells());
    let (nvx, nvy) = (xs.vertices(), ys.vertices());
    let mut cx = UnionComplex {
        cells: vec![false; ncx * ncy],
        vertices: vec![false; nvx * nvy],
        h_edges: vec![false; ncx * nvy],
        v_edges: vec![false; nvx * ncy],
        xs,
        ys,
        domain,
    };

    for b in &bounds {
        let (x_start, x_cells) = cx.xs.span(b[0], b[1]);
        let (y_start, y_cells) = cx.ys.span(b[2], b[3]);
        for dj in 0..=y_cells {
            let vj = cx.ys.wrap(y_start + dj);
            for di in 0..=x_cells {
                let vi = cx.xs.wrap(x_start + di);
                cx.vertices[vj * nvx + vi] = true;
                if di < x_cells {
                    cx.h_edges[vj * ncx + vi] = true;
                }
                if dj < y_cells {
                    cx.v_edges[vj * nvx + vi] = true;
                    if di < x_cells {
                        cx.cells[vj * ncx + vi] = true;
                    }
                }
            }
        }
    }
    cx
}

/// Intrinsic volumes of the union represented by `complex`.
pub fn intrinsic_volumes(complex: &UnionComplex) -> FunctionalVector {
    complex.functionals()
}

/// Intrinsic volumes of `union ∩ [0, L]^2` for grains sampled in the box
/// enlarged by `margin`.
///
/// With [`WindowBoundary::Exclude`] boundary lying on the window frame does
/// not contribute to `v1`.
pub fn clip_to_window(grains: &[PlacedGrain], side: f64, margin: f64, frame: WindowBoundary) -> Result<FunctionalVector> {
    let domain = Domain::plane(side);
    domain.validate()?;
    let mut clipped = Vec::with_capacity(grains.len());
    for (index, g) in grains.iter().enumerate() {
        g.validate(index)?;
        check_margin(index, g, margin)?;
        if !g.is_aligned() {
            return Err(Error::InvalidGrain {
                index,
                reason: "rotated grain passed to the aligned engine".into(),
            });
        }
        let [x0, x1, y0, y1] = g.bounds();
        let (x0, x1) = (x0.max(0.0), x1.min(side));
        let (y0, y1) = (y0.max(0.0), y1.min(side));
        // lower-dimensional intersections with the window have probability
        // zero under Poisson sampling and are dropped
        if x0 < x1 && y0 < y1 {
            clipped.push([x0, x1, y0, y1]);
        }
    }
    let complex = complex_from_bounds(&clipped, domain, None);
    Ok(match frame {
        WindowBoundary::Exclude => complex.measure(Some(side)),
        WindowBoundary::Include => complex.measure(None),
    })
}

pub(crate) fn check_margin(index: usize, g: &PlacedGrain, margin: f64) -> Result<()> {
    let circumradius = g.circumradius();
    if circumradius > margin {
        return Err(Error::MarginTooSmall {
            index,
            circumradius,
            margin,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: f64, y0: f64, x1: f64, y1: f64) -> PlacedGrain {
        PlacedGrain::from_bounds(x0, y0, x1, y1)
    }

    fn fv(grains: &[PlacedGrain], domain: Domain) -> FunctionalVector {
        build_complex(grains, domain).unwrap().functionals()
    }

    #[test]
    fn empty_union() {
        let c = build_complex(&[], Domain::plane(4.0)).unwrap();
        assert_eq!(c.functionals(), FunctionalVector { b_e1: Some(0.0), b_e2: Some(0.0), ..Default::default() });
        let c = build_complex(&[], Domain::torus(4.0)).unwrap();
        assert_eq!(c.functionals().v0, 0);
    }

    #[test]
    fn single_unit_square() {
        let c = build_complex(&[PlacedGrain::aligned(0.5, 0.5, 0.5, 0.5)], Domain::plane(4.0)).unwrap();
        assert_eq!(c.xs(), &[0.0, 1.0]);
        assert_eq!(c.ys(), &[0.0, 1.0]);
        assert_eq!(c.covered_cell_count(), 1);
        let f = c.functionals();
        assert_eq!((f.v0, f.v1, f.v2), (1, 2.0, 1.0));
        assert_eq!((f.b_e1, f.b_e2), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn disjoint_squares() {
        let g = [PlacedGrain::aligned(0.5, 0.5, 0.5, 0.5), PlacedGrain::aligned(2.5, 0.5, 0.5, 0.5)];
        let c = build_complex(&g, Domain::plane(4.0)).unwrap();
        assert_eq!(c.covered_cell_count(), 2);
        // the middle cell [1, 2] x [0, 1] is uncovered, so no edge is shared
        assert!(!c.cell_covered(1, 0));
        let f = c.functionals();
        assert_eq!((f.v0, f.v1, f.v2), (2, 4.0, 2.0));
    }

    #[test]
    fn band_wrapping_the_torus() {
        let g = [PlacedGrain::aligned(0.5, 0.5, 0.5, 0.5), PlacedGrain::aligned(1.5, 0.5, 0.5, 0.5)];
        let c = build_complex(&g, Domain::torus(2.0)).unwrap();
        assert_eq!(c.covered_cell_count(), 2);
        let f = c.functionals();
        assert_eq!((f.v0, f.v1, f.v2), (0, 2.0, 2.0));
        assert_eq!((f.b_e1, f.b_e2), (Some(0.0), Some(2.0)));
    }

    #[test]
    fn square_annulus() {
        let g = [sq(0.0, 0.0, 3.0, 1.0), sq(0.0, 2.0, 3.0, 3.0), sq(0.0, 0.0, 1.0, 3.0), sq(2.0, 0.0, 3.0, 3.0)];
        let f = fv(&g, Domain::plane(10.0));
        assert_eq!((f.v0, f.v1, f.v2), (0, 8.0, 8.0));
    }

    #[test]
    fn overlapping_squares() {
        let f = fv(&[sq(0.0, 0.0, 1.0, 1.0), sq(0.5, 0.0, 1.5, 1.0)], Domain::plane(4.0));
        assert_eq!((f.v0, f.v1, f.v2), (1, 2.5, 1.5));
    }

    #[test]
    fn corner_touching_squares_are_connected() {
        let f = fv(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 1.0, 2.0, 2.0)], Domain::plane(4.0));
        assert_eq!((f.v0, f.v1, f.v2), (1, 4.0, 2.0));
    }

    #[test]
    fn edge_touching_squares_merge() {
        let f = fv(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0)], Domain::plane(4.0));
        assert_eq!((f.v0, f.v1, f.v2), (1, 3.0, 2.0));
    }

    #[test]
    fn full_torus_cover() {
        // four 1x1 squares tile the 2-torus
        let g = [sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0), sq(0.0, 1.0, 1.0, 2.0), sq(1.0, 1.0, 2.0, 2.0)];
        let f = fv(&g, Domain::torus(2.0));
        assert_eq!((f.v0, f.v1, f.v2), (0, 0.0, 4.0));
    }

    #[test]
    fn grain_across_torus_seam() {
        let g = [PlacedGrain::aligned(0.0, 3.9, 0.5, 0.5)];
        let f = fv(&g, Domain::torus(4.0));
        assert_eq!(f.v0, 1);
        assert!((f.v1 - 2.0).abs() < 1e-14);
        assert!((f.v2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn torus_rejects_grain_longer_than_side() {
        let err = build_complex(&[PlacedGrain::aligned(0.0, 0.0, 1.0, 0.2)], Domain::torus(2.0)).unwrap_err();
        assert!(matches!(err, Error::GrainTooLargeForTorus { index: 0, .. }));
        let g = [PlacedGrain::aligned(0.5, 0.5, 0.5, 0.5), PlacedGrain::aligned(1.5, 0.5, 0.5, 0.5)];
        let err = Domain::torus(2.0).check_torus_exactness(&g).unwrap_err();
        assert!(err.to_string().contains("grain #0"));
        assert!(Domain::torus(4.0).check_torus_exactness(&g).is_ok());
    }

    #[test]
    fn invalid_grains_rejected() {
        let bad = [
            PlacedGrain::aligned(f64::NAN, 0.0, 1.0, 1.0),
            PlacedGrain::aligned(0.0, 0.0, 0.0, 1.0),
            PlacedGrain::new(0.0, 0.0, 1.0, 1.0, 0.3),
        ];
        for g in bad {
            assert!(build_complex(&[g], Domain::plane(4.0)).is_err());
        }
        assert!(build_complex(&[], Domain::plane(0.0)).is_err());
    }

    #[test]
    fn clipping_examples() {
        let none = clip_to_window(&[], 4.0, 1.0, WindowBoundary::Exclude).unwrap();
        assert_eq!((none.v0, none.v1, none.v2), (0, 0.0, 0.0));
        let inside = clip_to_window(&[PlacedGrain::aligned(2.0, 2.0, 0.5, 0.5)], 4.0, 1.0, WindowBoundary::Exclude).unwrap();
        assert_eq!((inside.v0, inside.v1, inside.v2), (1, 2.0, 1.0));
        let edge = clip_to_window(&[PlacedGrain::aligned(0.0, 2.0, 0.5, 0.5)], 4.0, 1.0, WindowBoundary::Exclude).unwrap();
        assert_eq!((edge.v0, edge.v1, edge.v2), (1, 1.0, 0.5));
        let with_frame = clip_to_window(&[PlacedGrain::aligned(0.0, 2.0, 0.5, 0.5)], 4.0, 1.0, WindowBoundary::Include).unwrap();
        assert_eq!(with_frame.v1, 1.5);
        let outside = clip_to_window(&[PlacedGrain::aligned(-0.6, 2.0, 0.5, 0.5)], 4.0, 1.0, WindowBoundary::Exclude).unwrap();
        assert_eq!(outside, FunctionalVector { b_e1: Some(0.0), b_e2: Some(0.0), ..Default::default() });
    }

    #[test]
    fn clipping_rejects_small_margin() {
        let err = clip_to_window(&[PlacedGrain::aligned(2.0, 2.0, 0.5, 0.5)], 4.0, 0.5, WindowBoundary::Exclude).unwrap_err();
        assert!(matches!(err, Error::MarginTooSmall { index: 0, .. }));
    }
}
