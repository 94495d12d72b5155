//! Geometry primitives: cubic windows, erosion, point patterns and a
//! cell-grid index sized by the interaction range.
//!
//! Points always carry three coordinates; in dimensions one and two the
//! trailing coordinates are zero, so distance code never branches on the
//! dimension.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point(pub [f64; MAX_DIM]);

impl Point {
    /// Builds a point from up to three coordinates, zero-padding the rest.
    ///
    /// Panics when more than three coordinates are given.
    pub fn new(coords: &[f64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point(c)
    }

    #[inline]
    pub fn coords(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let a = self.0;
        let b = other.0;
        let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    /// `self + scale * dir`.
    #[inline]
    pub fn offset(&self, dir: &[f64; MAX_DIM], scale: f64) -> Point {
        Point([
            self.0[0] + scale * dir[0],
            self.0[1] + scale * dir[1],
            self.0[2] + scale * dir[2],
        ])
    }
}

/// How distances are measured inside a window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Plain Euclidean distance; nothing exists outside the window.
    #[default]
    Free,
    /// Opposite faces identified (minimum-image distance).
    Torus,
}

impl Boundary {
    #[inline]
    pub fn dist(self, a: &Point, b: &Point, side: f64) -> f64 {
        match self {
            Boundary::Free => a.dist(b),
            Boundary::Torus => {
                let mut s = 0.0;
                for k in 0..MAX_DIM {
                    let mut d = (a.0[k] - b.0[k]).abs();
                    if d > 0.5 * side {
                        d = side - d;
                    }
                    s += d * d;
                }
                s.sqrt()
            }
        }
    }
}

/// The cube `[0, side]^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    dim: usize,
    side: f64,
}

impl Window {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::arg(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::arg(format!("window side must be positive, got {side}")));
        }
        Ok(Window { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.0[..self.dim].iter().all(|&c| (0.0..=self.side).contains(&c))
            && p.0[self.dim..].iter().all(|&c| c == 0.0)
    }

    /// Minkowski erosion by a ball of radius `margin`: the set of points
    /// whose `margin`-ball lies inside the window.
    pub fn erode(&self, margin: f64) -> Result<ErodedRegion> {
        ErodedRegion::full(self).erode(margin)
    }

    /// Maps a point into the window, wrapping each coordinate.
    pub fn wrap(&self, p: &Point) -> Point {
        let mut q = *p;
        for c in &mut q.0[..self.dim] {
            *c = c.rem_euclid(self.side);
        }
        q
    }
}

/// An inner box `[lo, hi]^dim` of a window; empty when `hi <= lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErodedRegion {
    dim: usize,
    lo: f64,
    hi: f64,
    margin: f64,
}

impl ErodedRegion {
    fn full(w: &Window) -> Self {
        ErodedRegion { dim: w.dim, lo: 0.0, hi: w.side, margin: 0.0 }
    }

    pub fn erode(&self, margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::arg(format!("erosion margin must be nonnegative, got {margin}")));
        }
        Ok(ErodedRegion {
            dim: self.dim,
            lo: self.lo + margin,
            hi: self.hi - margin,
            margin: self.margin + margin,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Total erosion depth relative to the original window.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn side(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.side().powi(self.dim as i32)
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        !self.is_empty() && p.0[..self.dim].iter().all(|&c| c >= self.lo && c <= self.hi)
    }
}

/// Cells per axis and cell edge for query radius `reach`, with the total
/// cell count bounded in 3-d.
fn grid_shape(window: &Window, reach: f64) -> (usize, f64) {
    let mut per_axis = if reach > 0.0 && reach.is_finite() {
        ((window.side / reach).floor() as usize).clamp(1, 1 << 10)
    } else {
        1
    };
    while per_axis.pow(window.dim as u32) > 1 << 24 {
        per_axis /= 2;
    }
    (per_axis, window.side / per_axis as f64)
}

#[inline]
fn axis_cell(c: f64, edge: f64, per_axis: usize) -> usize {
    let k = (c / edge).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(per_axis - 1)
    }
}

/// A uniform cell list over a window.
///
/// The cell edge is `side / floor(side / reach)`, which is at least
/// `reach`, so every point within `reach` of a query lies in the
/// `3^dim` block of cells around it.
#[derive(Clone, Debug)]
pub(crate) struct CellGrid {
    dim: usize,
    side: f64,
    per_axis: usize,
    edge: f64,
    boundary: Boundary,
    cells: Vec<Vec<u32>>,
}

impl CellGrid {
    pub(crate) fn new(window: &Window, reach: f64, boundary: Boundary) -> Self {
        let (per_axis, edge) = grid_shape(window, reach);
        CellGrid {
            dim: window.dim,
            side: window.side,
            per_axis,
            edge,
            boundary,
            cells: vec![Vec::new(); per_axis.pow(window.dim as u32)],
        }
    }

    /// Largest radius a block query answers exactly.
    pub(crate) fn reach(&self) -> f64 {
        self.edge
    }

    #[inline]
    fn axis_cell(&self, c: f64) -> usize {
        axis_cell(c, self.edge, self.per_axis)
    }

    #[inline]
    fn cell_of(&self, p: &Point) -> usize {
        let mut idx = 0;
        for k in (0..self.dim).rev() {
            idx = idx * self.per_axis + self.axis_cell(p.0[k]);
        }
        idx
    }

    pub(crate) fn insert(&mut self, id: usize, p: &Point) {
        let c = self.cell_of(p);
        self.cells[c].push(id as u32);
    }

    pub(crate) fn remove(&mut self, id: usize, p: &Point) {
        let c = self.cell_of(p);
        let cell = &mut self.cells[c];
        if let Some(pos) = cell.iter().position(|&j| j as usize == id) {
            cell.swap_remove(pos);
        }
    }

    /// Calls `f` with every stored id in the cell block around `p`.
    #[inline]
    pub(crate) fn for_each_candidate(&self, p: &Point, mut f: impl FnMut(usize)) {
        let n = self.per_axis as isize;
        let mut base = [0isize; MAX_DIM];
        for k in 0..self.dim {
            base[k] = self.axis_cell(p.0[k]) as isize;
        }
        let periodic = self.boundary == Boundary::Torus;
        if periodic && n < 3 {
            // the block wraps onto itself; every cell is a candidate
            for cell in &self.cells {
                cell.iter().for_each(|&j| f(j as usize));
            }
            return;
        }
        let span = |k: usize| if k < self.dim { -1..=1 } else { 0..=0 };
        for dz in span(2) {
            for dy in span(1) {
                for dx in span(0) {
                    let mut idx = 0isize;
                    let mut ok = true;
                    for (k, d) in [(2, dz), (1, dy), (0, dx)] {
                        if k >= self.dim {
                            continue;
                        }
                        let mut c = base[k] + d;
                        if c < 0 || c >= n {
                            if periodic {
                                c = c.rem_euclid(n);
                            } else {
                                ok = false;
                                break;
                            }
                        }
                        idx = idx * n + c;
                    }
                    if ok {
                        self.cells[idx as usize].iter().for_each(|&j| f(j as usize));
                    }
                }
            }
        }
    }

    #[inline]
    pub(crate) fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.boundary.dist(a, b, self.side)
    }
}

/// Cell list of a fixed point set: ids sorted by cell with copies of the
/// points in the same order. Axis 0 varies fastest, so the cells of one
/// row of a `3^dim` block are a contiguous range.
#[derive(Clone, Debug)]
struct StaticGrid {
    dim: usize,
    per_axis: usize,
    edge: f64,
    start: Vec<u32>,
    ids: Vec<u32>,
    pts: Vec<Point>,
}

impl StaticGrid {
    fn build(window: &Window, reach: f64, points: &[Point]) -> Self {
        let (per_axis, edge) = grid_shape(window, reach);
        let dim = window.dim;
        let ncells = per_axis.pow(dim as u32);
        let cell = |p: &Point| {
            (0..dim).rev().fold(0, |idx, k| idx * per_axis + axis_cell(p.0[k], edge, per_axis))
        };
        let cells: Vec<u32> = points.iter().map(|p| cell(p) as u32).collect();
        let mut start = vec![0u32; ncells + 1];
        for &c in &cells {
            start[c as usize + 1] += 1;
        }
        for k in 0..ncells {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut ids = vec![0u32; points.len()];
        let mut pts = vec![Point::default(); points.len()];
        for (i, &c) in cells.iter().enumerate() {
            let slot = fill[c as usize] as usize;
            fill[c as usize] += 1;
            ids[slot] = i as u32;
            pts[slot] = points[i];
        }
        StaticGrid { dim, per_axis, edge, start, ids, pts }
    }

    /// First pair of coincident points, as `(earlier, later)` indices.
    fn duplicate(&self) -> Option<(usize, usize)> {
        for c in self.start.windows(2) {
            let (a, b) = (c[0] as usize, c[1] as usize);
            for k in a..b {
                for m in k + 1..b {
                    if self.pts[k] == self.pts[m] {
                        let (i, j) = (self.ids[k] as usize, self.ids[m] as usize);
                        return Some((i.min(j), i.max(j)));
                    }
                }
            }
        }
        None
    }

    #[inline]
    fn for_each_candidate(&self, p: &Point, mut f: impl FnMut(usize, &Point)) {
        let n = self.per_axis;
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let c = axis_cell(p.0[k], self.edge, n);
            lo[k] = c.saturating_sub(1);
            hi[k] = (c + 1).min(n - 1);
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                let row = (z * n + y) * n;
                let a = self.start[row + lo[0]] as usize;
                let b = self.start[row + hi[0] + 1] as usize;
                for k in a..b {
                    f(self.ids[k] as usize, &self.pts[k]);
                }
            }
        }
    }
}

/// One answer of a neighborhood query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub point: Point,
    pub distance: f64,
}

/// A finite set of distinct points inside a window, indexed by a cell grid.
#[derive(Clone, Debug)]
pub struct PointPattern {
    window: Window,
    points: Vec<Point>,
    grid: StaticGrid,
}

impl PointPattern {
    /// Builds an indexed pattern. `reach` is the largest query radius the
    /// grid answers without falling back to a full scan; pass the
    /// interaction range.
    pub fn new(window: Window, points: Vec<Point>, reach: f64) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !window.contains(p)) {
            return Err(Error::arg(format!(
                "point {i} {:?} lies outside the window",
                points[i].coords(window.dim)
            )));
        }
        let grid = StaticGrid::build(&window, reach, &points);
        if let Some((j, i)) = grid.duplicate() {
            return Err(Error::arg(format!("points {j} and {i} coincide")));
        }
        Ok(PointPattern { window, points, grid })
    }

    pub fn empty(window: Window, reach: f64) -> Self {
        PointPattern { window, points: Vec::new(), grid: StaticGrid::build(&window, reach, &[]) }
    }

    /// The same points re-indexed for a different query radius.
    pub fn with_reach(&self, reach: f64) -> Self {
        let grid = StaticGrid::build(&self.window, reach, &self.points);
        PointPattern { window: self.window, points: self.points.clone(), grid }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reach(&self) -> f64 {
        self.grid.edge
    }

    /// Visits every stored point `v` with `‖v−u‖ <= radius`, passing its
    /// index and distance. Pattern points equal to `u` are included.
    #[inline]
    pub fn for_each_within(&self, u: &Point, radius: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = radius * radius;
        if radius <= self.grid.edge {
            self.grid.for_each_candidate(u, |j, p| {
                let d2 = p.dist2(u);
                if d2 <= r2 {
                    f(j, d2.sqrt());
                }
            });
        } else {
            for (j, p) in self.points.iter().enumerate() {
                let d2 = p.dist2(u);
                if d2 <= r2 {
                    f(j, d2.sqrt());
                }
            }
        }
    }

    /// Points `v ≠ u` with `‖v−u‖ <= radius`.
    pub fn neighbors_within(&self, u: &Point, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        self.for_each_within(u, radius, |j, d| {
            let p = self.points[j];
            if p != *u {
                out.push(Neighbor { index: j, point: p, distance: d });
            }
        });
        out
    }

    /// Number of stored points within `radius` of `u`, skipping the indices
    /// in `exclude`.
    #[inline]
    pub fn count_within(&self, u: &Point, radius: f64, exclude: &[usize]) -> usize {
        let mut n = 0;
        self.for_each_within(u, radius, |j, _| {
            if !exclude.contains(&j) {
                n += 1;
            }
        });
        n
    }

    /// Minimum distance from `u` to the pattern; `+∞` when empty.
    pub fn dist_to(&self, u: &Point) -> f64 {
        let mut best = f64::INFINITY;
        self.grid.for_each_candidate(u, |_, p| {
            best = best.min(p.dist2(u));
        });
        let best = best.sqrt();
        if best <= self.grid.edge {
            return best;
        }
        self.points.iter().map(|p| p.dist(u)).fold(f64::INFINITY, f64::min)
    }
}

pub fn erode(window: &Window, margin: f64) -> Result<ErodedRegion> {
    window.erode(margin)
}

pub fn neighbors_within(pattern: &PointPattern, u: &Point, radius: f64) -> Vec<Neighbor> {
    pattern.neighbors_within(u, radius)
}

pub fn dist_to_pattern(u: &Point, pattern: &PointPattern) -> f64 {
    pattern.dist_to(u)
}
