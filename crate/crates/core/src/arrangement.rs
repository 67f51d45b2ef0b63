//! Intrinsic volumes of unions of arbitrarily rotated rectangles.
//!
//! Every polygon edge is split at its intersections with all other edges.
//! Each resulting piece knows the coverage depth on its two sides; pieces
//! with depth zero on the outer side form the boundary of the union. Area
//! follows from the shoelace sum over boundary pieces, half the perimeter
//! from their lengths, and the Euler characteristic from the orientation of
//! the traced boundary cycles (counter-clockwise outer boundaries count +1,
//! clockwise hole boundaries -1).
//!
//! Cycles are traced by taking the sharpest right turn at every vertex, so
//! components touching in a single point are merged (closed-set convention).

use rustc_hash::FxHashMap as HashMap;

use crate::error::{Error, Result};
use crate::geometry::{check_margin, FunctionalVector, PlacedGrain, WindowBoundary};

/// Relative snapping tolerance applied to the scene scale.
pub const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn norm(self) -> f64 {
        // hypot is several times slower and its extra range is not needed here
        (self.x * self.x + self.y * self.y).sqrt()
    }

    fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

/// Square observation window `[0, side]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub side: f64,
    pub frame: WindowBoundary,
}

/// A convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon(pub Vec<Point>);

impl ConvexPolygon {
    pub fn from_grain(g: &PlacedGrain) -> Self {
        Self(g.corners().iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.0.len();
        (0..n).map(|i| self.0[i].cross(self.0[(i + 1) % n])).sum::<f64>() * 0.5
    }

    fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &self.0 {
            b[0] = b[0].min(p.x);
            b[1] = b[1].max(p.x);
            b[2] = b[2].min(p.y);
            b[3] = b[3].max(p.y);
        }
        b
    }

    /// Intersection with the half-plane on the left of the directed line
    /// `a -> b` (Sutherland–Hodgman step).
    pub fn clip_half_plane(&self, a: Point, b: Point) -> ConvexPolygon {
        let d = b.sub(a);
        let side = |p: Point| d.cross(p.sub(a));
        let n = self.0.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (p, q) = (self.0[i], self.0[(i + 1) % n]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                out.push(p.lerp(q, sp / (sp - sq)));
            }
        }
        ConvexPolygon(out)
    }

    /// Intersection with another convex polygon.
    pub fn intersect(&self, other: &ConvexPolygon) -> ConvexPolygon {
        let n = other.0.len();
        let mut out = self.clone();
        for i in 0..n {
            if out.0.is_empty() {
                break;
            }
            out = out.clip_half_plane(other.0[i], other.0[(i + 1) % n]);
        }
        out
    }

    /// Intersection with `[0, side]^2`; points created on the frame get the
    /// exact frame coordinate.
    fn clip_to_square(&self, side: f64) -> ConvexPolygon {
        let mut pts = self.0.clone();
        // (axis, bound, keep_below)
        for (axis, bound, below) in [(0, 0.0, false), (0, side, true), (1, 0.0, false), (1, side, true)] {
            let coord = |p: &Point| if axis == 0 { p.x } else { p.y };
            let inside = |p: &Point| if below { coord(p) <= bound } else { coord(p) >= bound };
            let n = pts.len();
            let mut out = Vec::with_capacity(n + 1);
            for i in 0..n {
                let (p, q) = (pts[i], pts[(i + 1) % n]);
                if inside(&p) {
                    out.push(p);
                }
                if inside(&p) != inside(&q) {
                    let t = (bound - coord(&p)) / (coord(&q) - coord(&p));
                    let mut r = p.lerp(q, t);
                    if axis == 0 {
                        r.x = bound;
                    } else {
                        r.y = bound;
                    }
                    out.push(r);
                }
            }
            pts = out;
            if pts.is_empty() {
                break;
            }
        }
        ConvexPolygon(pts)
    }
}

/// An edge piece between two consecutive split points of a polygon edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub from: usize,
    pub to: usize,
    pub polygon: usize,
    /// Number of polygons covering the side left of `from -> to`.
    pub left_depth: u32,
    /// Number of polygons covering the side right of `from -> to`.
    pub right_depth: u32,
    /// A lower-indexed polygon contributes the same piece in the same
    /// direction.
    pub duplicate: bool,
}

impl Piece {
    pub fn is_boundary(&self) -> bool {
        self.right_depth == 0 && !self.duplicate
    }
}

/// Split polygon edges with coverage depths on both sides.
#[derive(Debug, Clone)]
pub struct Arrangement {
    pub vertices: Vec<Point>,
    pub pieces: Vec<Piece>,
    window: Option<Window>,
    tol: f64,
}

struct VertexRegistry {
    points: Vec<Point>,
    /// Bucket key to the most recent point in it; `next` chains the rest.
    heads: HashMap<(i64, i64), usize>,
    next: Vec<usize>,
    tol: f64,
    cell: f64,
}

impl VertexRegistry {
    fn new(tol: f64) -> Self {
        Self {
            points: Vec::new(),
            heads: HashMap::default(),
            next: Vec::new(),
            tol,
            cell: 4.0 * tol,
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        // a match within tol can only sit in a neighbor bucket when p is
        // within tol of that side
        let (fx, fy) = (p.x - kx as f64 * self.cell, p.y - ky as f64 * self.cell);
        let range = |f: f64| (if f <= self.tol { -1 } else { 0 })..=(if self.cell - f <= self.tol { 1 } else { 0 });
        for dx in range(fx) {
            for dy in range(fy) {
                let mut id = self.heads.get(&(kx + dx, ky + dy)).copied().unwrap_or(usize::MAX);
                while id != usize::MAX {
                    let q = self.points[id];
                    if (q.x - p.x).abs() <= self.tol && (q.y - p.y).abs() <= self.tol {
                        return id;
                    }
                    id = self.next[id];
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.next.push(self.heads.insert((kx, ky), id).unwrap_or(usize::MAX));
        id
    }
}

/// Dense uniform bucket grid over polygon bounding boxes.
struct BucketGrid {
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(boxes: &[[f64; 4]], pad: f64) -> Self {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut cell: f64 = 0.0;
        for b in boxes {
            lo = (lo.0.min(b[0] - pad), lo.1.min(b[2] - pad));
            hi = (hi.0.max(b[1] + pad), hi.1.max(b[3] + pad));
            cell = cell.max(b[1] - b[0]).max(b[3] - b[2]);
        }
        if boxes.is_empty() {
            lo = (0.0, 0.0);
            hi = (0.0, 0.0);
        }
        // half the largest extent: fewer candidates per lookup, each box in at most 9 cells
        let cell = (0.5 * cell + 2.0 * pad).max(f64::MIN_POSITIVE);
        let nx = ((hi.0 - lo.0) / cell).floor() as usize + 1;
        let ny = ((hi.1 - lo.1) / cell).floor() as usize + 1;
        let mut grid = Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (i, b) in boxes.iter().enumerate() {
            let (x0, y0) = grid.key(b[0] - pad, b[2] - pad);
            let (x1, y1) = grid.key(b[1] + pad, b[3] + pad);
            for kx in x0..=x1 {
                for ky in y0..=y1 {
                    grid.buckets[kx * ny + ky].push(i);
                }
            }
        }
        grid
    }

    /// Cell of a point, clamped to the grid.
    fn key(&self, x: f64, y: f64) -> (usize, usize) {
        // float-to-int casts saturate, so negative offsets land in cell 0
        let k = |v: f64, n: usize| ((v / self.cell) as usize).min(n - 1);
        (k(x - self.origin.0, self.nx), k(y - self.origin.1, self.ny))
    }

    fn at(&self, p: Point) -> &[usize] {
        let (kx, ky) = self.key(p.x, p.y);
        &self.buckets[kx * self.ny + ky]
    }
}

fn boxes_overlap(a: &[f64; 4], b: &[f64; 4], pad: f64) -> bool {
    a[0] <= b[1] + pad && b[0] <= a[1] + pad && a[2] <= b[3] + pad && b[2] <= a[3] + pad
}

/// Where a point sits relative to a convex polygon.
enum Location {
    Inside,
    Outside,
    /// On the edge with the given index.
    OnEdge(usize),
}

fn locate(poly: &ConvexPolygon, p: Point, tol: f64) -> Location {
    let n = poly.0.len();
    let mut on_edge = None;
    for i in 0..n {
        let a = poly.0[i];
        let d = poly.0[(i + 1) % n].sub(a);
        let dist = d.cross(p.sub(a)) / d.norm();
        if dist < -tol {
            return Location::Outside;
        }
        if dist <= tol {
            on_edge = Some(i);
        }
    }
    match on_edge {
        Some(i) => Location::OnEdge(i),
        None => Location::Inside,
    }
}

impl Arrangement {
    /// Builds the arrangement of the given counter-clockwise convex polygons,
    /// clipped to `window` when given.
    pub fn build(polygons: &[ConvexPolygon], window: Option<Window>) -> Result<Self> {
        Self::build_with(polygons, window, true)
    }

    /// Like [`Arrangement::build`] but keeps only boundary pieces, whose
    /// depths are then exact. Much cheaper for dense scenes.
    pub fn build_boundary(polygons: &[ConvexPolygon], window: Option<Window>) -> Result<Self> {
        Self::build_with(polygons, window, false)
    }

    fn build_with(polygons: &[ConvexPolygon], window: Option<Window>, exact: bool) -> Result<Self> {
        let mut scale: f64 = window.map_or(0.0, |w| w.side);
        for p in polygons {
            let b = p.bbox();
            scale = scale.max(b[1].abs()).max(b[0].abs()).max(b[2].abs()).max(b[3].abs());
        }
        let tol = SNAP_TOLERANCE * scale.max(1.0);

        let mut polys = Vec::with_capacity(polygons.len());
        for (index, poly) in polygons.iter().enumerate() {
            for i in 0..poly.0.len() {
                if poly.0[i].sub(poly.0[(i + 1) % poly.0.len()]).norm() <= tol {
                    return Err(Error::DegenerateSegment { index });
                }
            }
            if poly.0.len() < 3 || poly.signed_area() <= 0.0 {
                return Err(Error::InvalidGrain {
                    index,
                    reason: "polygon must have at least three counter-clockwise vertices".into(),
                });
            }
            let clipped = match window {
                Some(w) => simplify(poly.clip_to_square(w.side), tol),
                None => poly.clone(),
            };
            if clipped.0.len() >= 3 && clipped.signed_area() > tol * tol {
                polys.push(clipped);
            }
        }

        let mut registry = VertexRegistry::new(tol);
        let mut splits = Splits::default();
        for poly in &polys {
            splits.offset.push(splits.corners.len());
            splits.corners.extend(poly.0.iter().map(|&p| registry.insert(p)));
        }
        for (pi, poly) in polys.iter().enumerate() {
            for e in 0..poly.0.len() {
                let edge = splits.offset[pi] + e;
                splits.entries.push((edge, 0.0, splits.endpoint(&polys, pi, e, 0)));
                splits.entries.push((edge, 1.0, splits.endpoint(&polys, pi, e, 1)));
            }
        }

        let boxes: Vec<[f64; 4]> = polys.iter().map(|p| p.bbox()).collect();
        let grid = BucketGrid::new(&boxes, tol);
        // last[j] == i marks j as already paired with i
        let mut last = vec![usize::MAX; polys.len()];
        for i in 0..polys.len() {
            let (x0, y0) = grid.key(boxes[i][0] - tol, boxes[i][2] - tol);
            let (x1, y1) = grid.key(boxes[i][1] + tol, boxes[i][3] + tol);
            for kx in x0..=x1 {
                for ky in y0..=y1 {
                    for &j in &grid.buckets[kx * grid.ny + ky] {
                        if j <= i || last[j] == i {
                            continue;
                        }
                        last[j] = i;
                        if boxes_overlap(&boxes[i], &boxes[j], tol) {
                            intersect_polygons(&polys, i, j, &mut registry, &mut splits, tol);
                        }
                    }
                }
            }
        }

        let vertices = registry.points;
        let mut pieces = Vec::new();
        // group split points by edge (counting sort), then order each edge
        let edges = splits.corners.len();
        let mut start = vec![0usize; edges + 1];
        for e in &splits.entries {
            start[e.0 + 1] += 1;
        }
        for k in 0..edges {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut along = vec![(0.0, 0usize); splits.entries.len()];
        for &(e, t, id) in &splits.entries {
            along[fill[e]] = (t, id);
            fill[e] += 1;
        }
        let mut pi = 0;
        for edge in 0..edges {
            while pi + 1 < polys.len() && splits.offset[pi + 1] <= edge {
                pi += 1;
            }
            let split = &mut along[start[edge]..start[edge + 1]];
            split.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
            let mut from = split[0].1;
            for &(_, to) in &split[1..] {
                if to == from {
                    continue;
                }
                let mut piece = Piece {
                    from,
                    to,
                    polygon: pi,
                    left_depth: 1,
                    right_depth: 0,
                    duplicate: false,
                };
                classify(&mut piece, &vertices, &polys, &boxes, &grid, tol, exact);
                if exact || piece.is_boundary() {
                    pieces.push(piece);
                }
                from = to;
            }
        }
        Ok(Self {
            vertices,
            pieces,
            window,
            tol,
        })
    }

    pub fn from_grains(grains: &[PlacedGrain], window: Option<Window>) -> Result<Self> {
        Self::build(&grain_polygons(grains)?, window)
    }

    pub fn boundary(&self) -> impl Iterator<Item = &Piece> {
        self.pieces.iter().filter(|p| p.is_boundary())
    }

    fn on_frame(&self, piece: &Piece) -> bool {
        let Some(w) = self.window else { return false };
        let (a, b) = (self.vertices[piece.from], self.vertices[piece.to]);
        [0.0, w.side].iter().any(|&c| {
            ((a.x - c).abs() <= self.tol && (b.x - c).abs() <= self.tol)
                || ((a.y - c).abs() <= self.tol && (b.y - c).abs() <= self.tol)
        })
    }

    /// Signed areas of the boundary cycles.
    pub fn cycles(&self) -> Vec<f64> {
        let boundary: Vec<&Piece> = self.boundary().collect();
        let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::default();
        for (k, p) in boundary.iter().enumerate() {
            outgoing.entry(p.from).or_default().push(k);
        }
        let mut used = vec![false; boundary.len()];
        let mut areas = Vec::new();
        for start in 0..boundary.len() {
            if used[start] {
                continue;
            }
            let mut area = 0.0;
            let mut current = start;
            loop {
                used[current] = true;
                let p = boundary[current];
                let (a, b) = (self.vertices[p.from], self.vertices[p.to]);
                area += 0.5 * a.cross(b);
                let d_in = b.sub(a);
                let next = outgoing.get(&p.to).and_then(|cands| {
                    cands
                        .iter()
                        .copied()
                        .filter(|&k| !used[k])
                        .map(|k| {
                            let q = boundary[k];
                            let d_out = self.vertices[q.to].sub(self.vertices[q.from]);
                            (k, d_in.cross(d_out).atan2(d_in.dot(d_out)))
                        })
                        .min_by(|x, y| x.1.total_cmp(&y.1))
                        .map(|(k, _)| k)
                });
                match next {
                    Some(k) => current = k,
                    None => break,
                }
            }
            areas.push(area);
        }
        areas
    }

    pub fn functionals(&self) -> FunctionalVector {
        let mut area = 0.0;
        let mut perimeter = 0.0;
        for p in self.boundary() {
            let (a, b) = (self.vertices[p.from], self.vertices[p.to]);
            area += 0.5 * a.cross(b);
            let frame_excluded = self.window.is_some_and(|w| w.frame == WindowBoundary::Exclude);
            if !(frame_excluded && self.on_frame(p)) {
                perimeter += b.sub(a).norm();
            }
        }
        let v0 = self.cycles().iter().map(|&a| if a > 0.0 { 1 } else { -1 }).sum();
        FunctionalVector {
            v0,
            v1: 0.5 * perimeter,
            v2: area,
            b_e1: None,
            b_e2: None,
        }
    }
}

/// Drops consecutive vertices closer than `tol`.
fn simplify(poly: ConvexPolygon, tol: f64) -> ConvexPolygon {
    let mut out: Vec<Point> = Vec::with_capacity(poly.0.len());
    for p in poly.0 {
        if out.last().is_none_or(|q| p.sub(*q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].sub(*out.last().unwrap()).norm() <= tol {
        out.pop();
    }
    ConvexPolygon(out)
}

/// Split points of all polygon edges. Edges are numbered globally, polygon
/// `i` owning `offset[i]..offset[i] + n_i`; corner `k` of polygon `i` is the
/// vertex `corners[offset[i] + k]`.
#[derive(Default)]
struct Splits {
    offset: Vec<usize>,
    corners: Vec<usize>,
    /// (edge, parameter along the edge, vertex id)
    entries: Vec<(usize, f64, usize)>,
}

impl Splits {
    /// Vertex id of the start (`k == 0`) or end (`k == 1`) of an edge.
    fn endpoint(&self, polys: &[ConvexPolygon], poly: usize, edge: usize, k: usize) -> usize {
        self.corners[self.offset[poly] + (edge + k) % polys[poly].0.len()]
    }
}

fn intersect_polygons(
    polys: &[ConvexPolygon],
    i: usize,
    j: usize,
    registry: &mut VertexRegistry,
    splits: &mut Splits,
    tol: f64,
) {
    let (pa, pb) = (&polys[i].0, &polys[j].0);
    for ea in 0..pa.len() {
        let (a0, a1) = (pa[ea], pa[(ea + 1) % pa.len()]);
        let da = a1.sub(a0);
        let la = da.norm();
        for eb in 0..pb.len() {
            let (b0, b1) = (pb[eb], pb[(eb + 1) % pb.len()]);
            let db = b1.sub(b0);
            let lb = db.norm();
            let denom = da.cross(db);
            if denom.abs() <= 1e-12 * la * lb {
                // parallel: only collinear overlaps matter
                if (da.cross(b0.sub(a0)) / la).abs() > tol || (da.cross(b1.sub(a0)) / la).abs() > tol {
                    continue;
                }
                for (k, q) in [b0, b1].into_iter().enumerate() {
                    let t = da.dot(q.sub(a0)) / (la * la);
                    if t * la > tol && (1.0 - t) * la > tol {
                        // entries 0 and 1 are always the edge's own endpoints
                        let id = splits.endpoint(polys, j, eb, k);
                        splits.entries.push((splits.offset[i] + ea, t, id));
                    }
                }
                for (k, q) in [a0, a1].into_iter().enumerate() {
                    let u = db.dot(q.sub(b0)) / (lb * lb);
                    if u * lb > tol && (1.0 - u) * lb > tol {
                        let id = splits.endpoint(polys, i, ea, k);
                        splits.entries.push((splits.offset[j] + eb, u, id));
                    }
                }
                continue;
            }
            let w = b0.sub(a0);
            let t = w.cross(db) / denom;
            let u = w.cross(da) / denom;
            let (et, eu) = (tol / la, tol / lb);
            if t < -et || t > 1.0 + et || u < -eu || u > 1.0 + eu {
                continue;
            }
            let id = registry.insert(a0.lerp(a1, t));
            splits.entries.push((splits.offset[i] + ea, t, id));
            splits.entries.push((splits.offset[j] + eb, u, id));
        }
    }
}

fn grain_polygons(grains: &[PlacedGrain]) -> Result<Vec<ConvexPolygon>> {
    grains
        .iter()
        .enumerate()
        .map(|(i, g)| g.validate(i).map(|_| ConvexPolygon::from_grain(g)))
        .collect()
}

fn classify(
    piece: &mut Piece,
    vertices: &[Point],
    polys: &[ConvexPolygon],
    boxes: &[[f64; 4]],
    grid: &BucketGrid,
    tol: f64,
    exact: bool,
) {
    let (a, b) = (vertices[piece.from], vertices[piece.to]);
    let mid = a.lerp(b, 0.5);
    let dir = b.sub(a);
    for &q in grid.at(mid) {
        let b = &boxes[q];
        if q == piece.polygon || mid.x < b[0] - tol || mid.x > b[1] + tol || mid.y < b[2] - tol || mid.y > b[3] + tol {
            continue;
        }
        match locate(&polys[q], mid, tol) {
            Location::Outside => {}
            Location::Inside => {
                piece.left_depth += 1;
                piece.right_depth += 1;
            }
            Location::OnEdge(e) => {
                let poly = &polys[q].0;
                let edge_dir = poly[(e + 1) % poly.len()].sub(poly[e]);
                if edge_dir.dot(dir) > 0.0 {
                    piece.left_depth += 1;
                    if q < piece.polygon {
                        piece.duplicate = true;
                    }
                } else {
                    piece.right_depth += 1;
                }
            }
        }
        if !exact && piece.right_depth > 0 {
            return;
        }
    }
}

/// Intrinsic volumes of the union of `grains`, optionally measured inside a
/// window.
pub fn union_functionals(grains: &[PlacedGrain], window: Option<Window>) -> Result<FunctionalVector> {
    Ok(Arrangement::build_boundary(&grain_polygons(grains)?, window)?.functionals())
}

/// Minus-sampling measurement: like [`union_functionals`] with a window, after
/// checking that every grain fits in the sampling margin.
pub fn clip_to_window(grains: &[PlacedGrain], side: f64, margin: f64, frame: WindowBoundary) -> Result<FunctionalVector> {
    for (i, g) in grains.iter().enumerate() {
        g.validate(i)?;
        check_margin(i, g, margin)?;
    }
    union_functionals(grains, Some(Window { side, frame }))
}
