//! Uniform square-cell grids, cell-centered scalar fields and the geometric
//! reductions used throughout the solver (support, diameter, centroid, norms).
//!
//! A half-plane grid covers the window `[-L, L] x (0, H]`; a centered grid
//! covers `[-L, L] x [-H/2, H/2]` and is used for rescaled profiles, which
//! live on the whole plane. Cell coordinates are always computed from integer
//! offsets so that mirror cells have coordinates that are exact negatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// `true` for the half-plane window, `false` for an origin-centered grid.
    pub half_plane: bool,
}

impl Grid {
    /// Half-plane window `[-L, L] x (0, H]` with `nx` cells across.
    pub fn half_plane(half_width: f64, height: f64, nx: usize) -> Result<Self> {
        if !(half_width > 0.0 && height > 0.0) || !half_width.is_finite() || !height.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "window extents must be positive, got L = {half_width}, H = {height}"
            )));
        }
        let h = 2.0 * half_width / nx as f64;
        let ny_real = height / h;
        let ny = ny_real.round() as usize;
        if ny == 0 || (ny_real - ny as f64).abs() > 1e-9 * ny_real.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "H = {height} is not a whole number of cells of side {h}"
            )));
        }
        Self::half_plane_cells(nx, ny, h)
    }

    pub fn half_plane_cells(nx: usize, ny: usize, h: f64) -> Result<Self> {
        Self::checked(nx, ny, h, true)
    }

    /// Grid centered on the origin; `nx` and `ny` must both be even.
    pub fn centered(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if !ny.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("centered grid needs even ny, got {ny}")));
        }
        Self::checked(nx, ny, h, false)
    }

    fn checked(nx: usize, ny: usize, h: f64, half_plane: bool) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("grid needs at least one cell".into()));
        }
        if !nx.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("nx must be even, got {nx}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("cell side must be positive, got {h}")));
        }
        Ok(Self { nx, ny, h, half_plane })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Horizontal position of column `i` in units of `h`.
    #[inline]
    pub fn col_offset(&self, i: usize) -> f64 {
        i as f64 + 0.5 - 0.5 * self.nx as f64
    }

    /// Vertical position of row `j` in units of `h`.
    #[inline]
    pub fn row_offset(&self, j: usize) -> f64 {
        if self.half_plane {
            j as f64 + 0.5
        } else {
            j as f64 + 0.5 - 0.5 * self.ny as f64
        }
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.col_offset(i) * self.h
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        self.row_offset(j) * self.h
    }

    #[inline]
    pub fn center(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        [self.x1(i), self.x2(j)]
    }

    /// Index of the cell mirrored about the `x2` axis.
    #[inline]
    pub fn mirror_index(&self, k: usize) -> usize {
        let (i, j) = self.ij(k);
        self.index(self.nx - 1 - i, j)
    }

    /// Cell containing `x`, if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let fi = x[0] / self.h + 0.5 * self.nx as f64;
        let fj = if self.half_plane {
            x[1] / self.h
        } else {
            x[1] / self.h + 0.5 * self.ny as f64
        };
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi.floor() as usize, fj.floor() as usize);
        (i < self.nx && j < self.ny).then(|| self.index(i, j))
    }

    /// Number of cells between cell `k` and the nearest artificial window edge
    /// (left, right, top). The wall `x2 = 0` of a half-plane grid is physical
    /// and does not count.
    pub fn edge_distance(&self, k: usize) -> usize {
        let (i, j) = self.ij(k);
        let mut d = i.min(self.nx - 1 - i).min(self.ny - 1 - j);
        if !self.half_plane {
            d = d.min(j);
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Vorticity,
    Stream,
    Generic,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Vorticity => "vorticity",
            FieldKind::Stream => "stream",
            FieldKind::Generic => "generic",
        }
    }
}

/// Cell-centered values on a [`Grid`], stored row-major (rows run along `x1`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    kind: FieldKind,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite value {v} at cell {k}")));
        }
        if kind == FieldKind::Vorticity {
            if let Some((cell, &value)) = values.iter().enumerate().find(|(_, &v)| v < 0.0) {
                return Err(Error::NegativeValue { cell, value });
            }
        }
        Ok(Self { grid, values, kind })
    }

    pub fn zeros(grid: Grid, kind: FieldKind) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            kind,
        }
    }

    /// Samples `f` at every cell center. Panics in debug builds if a
    /// vorticity sample is negative.
    pub fn from_fn(grid: Grid, kind: FieldKind, f: impl Fn(Point) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|k| f(grid.center(k))).collect();
        debug_assert!(kind != FieldKind::Vorticity || values.iter().all(|&v| v >= 0.0));
        Self { grid, values, kind }
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, kind: FieldKind) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, kind }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Midpoint-rule integral `h^2 * sum(values)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The field reflected about the `x2` axis.
    pub fn mirror(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|k| self.values[self.grid.mirror_index(k)])
            .collect();
        Self {
            grid: self.grid,
            values,
            kind: self.kind,
        }
    }

    /// Shift by whole cells; cells shifted in from outside are zero.
    pub fn shifted(&self, di: isize, dj: isize) -> Self {
        let g = self.grid;
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            let sj = j as isize - dj;
            if sj < 0 || sj >= g.ny as isize {
                continue;
            }
            for i in 0..g.nx {
                let si = i as isize - di;
                if si < 0 || si >= g.nx as isize {
                    continue;
                }
                out[g.index(i, j)] = self.values[g.index(si as usize, sj as usize)];
            }
        }
        Self {
            grid: g,
            values: out,
            kind: self.kind,
        }
    }

    /// Multiplies all values so that the integral equals `target`.
    pub fn renormalized(mut self, target: f64) -> Result<Self> {
        let m = self.integral();
        if m <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let s = target / m;
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    /// `||self - other||_p` on a shared grid.
    pub fn distance(&self, other: &ScalarField, p: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("distance between fields on different grids".into()));
        }
        let diff: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        lp_norm(&ScalarField::from_parts(self.grid, diff, FieldKind::Generic), p)
    }
}

/// Cell indices on a specific grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    grid: Grid,
    cells: Vec<usize>,
}

impl CellSet {
    pub fn new(grid: Grid, mut cells: Vec<usize>) -> Result<Self> {
        cells.sort_unstable();
        let before = cells.len();
        cells.dedup();
        if cells.len() != before {
            return Err(Error::InvalidGrid("duplicate cell indices".into()));
        }
        if cells.last().is_some_and(|&k| k >= grid.len()) {
            return Err(Error::InvalidGrid("cell index out of range".into()));
        }
        Ok(Self { grid, cells })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.cells.binary_search(&k).is_ok()
    }

    pub fn mirror(&self) -> Self {
        let mut cells: Vec<usize> = self.cells.iter().map(|&k| self.grid.mirror_index(k)).collect();
        cells.sort_unstable();
        Self { grid: self.grid, cells }
    }

    /// Smallest distance (in cells) from any member to an artificial window edge.
    pub fn edge_distance(&self) -> Option<usize> {
        self.cells.iter().map(|&k| self.grid.edge_distance(k)).min()
    }
}

/// Cells whose value exceeds `tau`.
pub fn support(f: &ScalarField, tau: f64) -> CellSet {
    let cells = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tau)
        .map(|(k, _)| k)
        .collect();
    CellSet { grid: f.grid, cells }
}

/// Largest distance between cell centers of `s`.
///
/// Only cells with at least one 4-neighbour outside the set are compared: an
/// interior center is the midpoint of its neighbours and cannot be extreme.
pub fn diameter(s: &CellSet) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySupport);
    }
    let g = s.grid;
    let rim: Vec<Point> = s
        .cells
        .iter()
        .copied()
        .filter(|&k| {
            let (i, j) = g.ij(k);
            i == 0
                || j == 0
                || i + 1 == g.nx
                || j + 1 == g.ny
                || !s.contains(k - 1)
                || !s.contains(k + 1)
                || !s.contains(k - g.nx)
                || !s.contains(k + g.nx)
        })
        .map(|k| g.center(k))
        .collect();
    let mut best = 0.0f64;
    for (a, pa) in rim.iter().enumerate() {
        for pb in &rim[a + 1..] {
            let d = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
            best = best.max(d);
        }
    }
    Ok(best)
}

/// Value-weighted mean of the cell centers.
pub fn centroid(f: &ScalarField) -> Result<Point> {
    let g = f.grid;
    let mut m = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    // mirror pairs are accumulated together so even fields give exactly x1 = 0
    for j in 0..g.ny {
        let row = &f.values[j * g.nx..(j + 1) * g.nx];
        let mut row_mass = 0.0;
        for i in 0..g.nx / 2 {
            let (a, b) = (row[i], row[g.nx - 1 - i]);
            row_mass += a + b;
            s1 += g.col_offset(i) * (a - b);
        }
        m += row_mass;
        s2 += g.row_offset(j) * row_mass;
    }
    if m <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok([s1 / m * g.h, s2 / m * g.h])
}

/// `(h^2 sum |v|^p)^(1/p)`, or `max |v|` for `p = inf`.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let area = f.grid.cell_area();
    if p == 1.0 {
        return Ok(area * f.values.iter().map(|v| v.abs()).sum::<f64>());
    }
    let s: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((area * s).powf(1.0 / p))
}
