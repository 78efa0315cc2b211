//! Discrete rearrangement classes on equal-area cells.
//!
//! Two fields on the same grid are rearrangements of each other exactly when
//! their sorted value lists agree, so a class is stored as its descending
//! value list. The inner step of the solver, [`maximize_linear`], pairs the
//! k-th largest class value with the k-th largest potential value, which is
//! the exact maximizer of `sum v_i phi_i` over the class.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::{FieldKind, Grid, Point, ScalarField};

#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    values: Vec<f64>,
    cell_area: f64,
}

impl MassProfile {
    /// Sorted values of a nonnegative field.
    pub fn from_field(f: &ScalarField) -> Result<Self> {
        Self::from_values(f.values().to_vec(), f.grid().cell_area())
    }

    pub fn from_values(mut values: Vec<f64>, cell_area: f64) -> Result<Self> {
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, &v)| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeValue { cell, value });
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values, cell_area })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().take_while(|&&v| v > 0.0).count()
    }

    /// `h^2 * sum(values)`.
    pub fn kappa(&self) -> f64 {
        self.cell_area * self.values.iter().sum::<f64>()
    }

    /// Largest gap between consecutive sorted values.
    pub fn max_gap(&self) -> f64 {
        self.values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    /// The class padded with zeros (or trimmed of zeros) to exactly `n` cells.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let pos = self.positive_count();
        if pos > n {
            return Err(Error::GridTooSmall(format!(
                "{pos} positive values do not fit in {n} cells"
            )));
        }
        let mut values = self.values.clone();
        values.resize(n, 0.0);
        Ok(Self {
            values,
            cell_area: self.cell_area,
        })
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        let rel = (grid.cell_area() - self.cell_area).abs() / self.cell_area;
        if rel > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "class cell area {} differs from grid cell area {}",
                self.cell_area,
                grid.cell_area()
            )));
        }
        Ok(())
    }
}

/// Distribution of a nonnegative field.
pub fn profile_of(f: &ScalarField) -> Result<MassProfile> {
    MassProfile::from_field(f)
}

/// Tie-break for cells with equal potential: mirror pairs adjacent
/// (`|x1|` ascending, then `x2` ascending, then `x1 >= 0` first).
#[inline]
fn tie_key(g: &Grid, k: usize) -> (usize, usize, bool) {
    let (i, j) = g.ij(k);
    let twice = (2 * i + 1).abs_diff(g.nx);
    (twice, j, 2 * i + 1 < g.nx)
}

/// Cells in the order in which the largest class values are placed.
fn assignment_order(g: &Grid, mut cmp_primary: impl FnMut(usize, usize) -> Ordering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| cmp_primary(a, b).then_with(|| tie_key(g, a).cmp(&tie_key(g, b))));
    order
}

fn assign(class: &MassProfile, grid: Grid, order: &[usize]) -> ScalarField {
    let mut vals = vec![0.0; grid.len()];
    for (&k, &v) in order.iter().zip(class.values()) {
        vals[k] = v;
    }
    ScalarField::from_parts(grid, vals, FieldKind::Vorticity)
}

/// Symmetric-decreasing rearrangement about the origin of `grid`.
pub fn symmetric_decreasing(class: &MassProfile, grid: Grid) -> Result<ScalarField> {
    symmetric_decreasing_about(class, grid, [0.0, 0.0])
}

/// Places the class values in descending order on cells sorted by distance
/// from `center` (ties: smaller `x2`, then smaller `x1`).
pub fn symmetric_decreasing_about(class: &MassProfile, grid: Grid, center: Point) -> Result<ScalarField> {
    class.check_grid(&grid)?;
    let class = class.resized(grid.len())?;
    // distances in cell units so that equidistant cells compare equal
    let (c1, c2) = (center[0] / grid.h, center[1] / grid.h);
    let d2: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            (grid.col_offset(i) - c1).powi(2) + (grid.row_offset(j) - c2).powi(2)
        })
        .collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ja) = grid.ij(a);
        let (ib, jb) = grid.ij(b);
        d2[a].total_cmp(&d2[b]).then(ja.cmp(&jb)).then(ia.cmp(&ib))
    });
    Ok(assign(&class, grid, &order))
}

/// Exact maximizer of `sum v_i phi_i` over the class: the k-th largest value
/// goes to the cell with the k-th largest `phi`. Cells with `phi = -inf` are
/// filled last, and only with zeros.
pub fn maximize_linear(class: &MassProfile, phi: &ScalarField) -> Result<ScalarField> {
    let grid = *phi.grid();
    class.check_grid(&grid)?;
    let class = class.resized(grid.len())?;
    let p = phi.values();
    let admissible = p.iter().filter(|v| v.is_finite()).count();
    if class.positive_count() > admissible {
        return Err(Error::GridTooSmall(format!(
            "{} positive values but only {admissible} admissible cells",
            class.positive_count()
        )));
    }
    let order = assignment_order(&grid, |a, b| p[b].total_cmp(&p[a]));
    Ok(assign(&class, grid, &order))
}

/// Per-row symmetric rearrangement about the `x2` axis.
///
/// Each row is treated as a piecewise-constant function of `x1`; its exact
/// Steiner rearrangement is averaged back onto the cells. The column pair at
/// distance `m` from the axis receives the mean of the `(2m+1)`-th and
/// `(2m+2)`-th largest row values, so rows stay even, decrease in `|x1|`, and
/// keep their sums.
pub fn steiner_symmetrize(f: &ScalarField) -> Result<ScalarField> {
    let g = *f.grid();
    if let Some((cell, &value)) = f.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeValue { cell, value });
    }
    let half = g.nx / 2;
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        let mut row: Vec<f64> = (0..g.nx).map(|i| f.get(i, j)).collect();
        row.sort_by(|a, b| b.total_cmp(a));
        for m in 0..half {
            let v = 0.5 * (row[2 * m] + row[2 * m + 1]);
            out[g.index(half + m, j)] = v;
            out[g.index(half - 1 - m, j)] = v;
        }
    }
    Ok(ScalarField::from_parts(g, out, f.kind()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityOutcome {
    pub original: f64,
    pub rearranged: f64,
}

impl InequalityOutcome {
    pub fn holds(&self) -> bool {
        self.original <= self.rearranged + 1e-12 * self.rearranged.abs().max(1.0)
    }
}

/// `h^2 sum u v` against `h^2 sum u* v*` on a centered grid.
pub fn hardy_littlewood_check(u: &ScalarField, v: &ScalarField) -> Result<InequalityOutcome> {
    let g = *u.grid();
    if *v.grid() != g {
        return Err(Error::GridMismatch("hardy-littlewood inputs on different grids".into()));
    }
    let us = symmetric_decreasing(&profile_of(u)?, g)?;
    let vs = symmetric_decreasing(&profile_of(v)?, g)?;
    let dot = |a: &ScalarField, b: &ScalarField| {
        g.cell_area() * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>()
    };
    Ok(InequalityOutcome {
        original: dot(u, v),
        rearranged: dot(&us, &vs),
    })
}

/// `h^4 sum_{x,y} u(x) k(x - y) w(y)` against the same sum with `u`, `w`
/// replaced by their symmetric-decreasing rearrangements. `kernel` must be
/// radial and nonincreasing in `|x - y|`.
pub fn riesz_check(u: &ScalarField, w: &ScalarField, kernel: impl Fn(Point) -> f64) -> Result<InequalityOutcome> {
    let g = *u.grid();
    if *w.grid() != g {
        return Err(Error::GridMismatch("riesz inputs on different grids".into()));
    }
    let us = symmetric_decreasing(&profile_of(u)?, g)?;
    let ws = symmetric_decreasing(&profile_of(w)?, g)?;
    let triple = |a: &ScalarField, b: &ScalarField| {
        let mut s = 0.0;
        for (x, &ax) in a.values().iter().enumerate() {
            if ax == 0.0 {
                continue;
            }
            let cx = g.center(x);
            for (y, &by) in b.values().iter().enumerate() {
                let cy = g.center(y);
                s += ax * kernel([cx[0] - cy[0], cx[1] - cy[1]]) * by;
            }
        }
        s * g.cell_area() * g.cell_area()
    };
    Ok(InequalityOutcome {
        original: triple(u, w),
        rearranged: triple(&us, &ws),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(g: Grid, vals: &[f64]) -> ScalarField {
        ScalarField::new(g, vals.to_vec(), FieldKind::Vorticity).unwrap()
    }

    #[test]
    fn profile_examples() {
        let g = Grid::half_plane_cells(2, 2, 1.0).unwrap();
        let p = profile_of(&field(g, &[0.0, 3.0, 1.0, 0.0])).unwrap();
        assert_eq!(p.values(), &[3.0, 1.0, 0.0, 0.0]);
        let q = profile_of(&field(g, &[1.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(p, q);
        let bad = ScalarField::new(g, vec![1.0, -1.0, 0.0, 0.0], FieldKind::Generic).unwrap();
        assert!(matches!(profile_of(&bad), Err(Error::NegativeValue { .. })));
    }

    #[test]
    fn maximize_linear_example() {
        let g = Grid::half_plane_cells(4, 1, 1.0).unwrap();
        let phi = ScalarField::from_parts(g, vec![0.1, 0.9, 0.5, f64::NEG_INFINITY], FieldKind::Generic);
        let class = MassProfile::from_values(vec![3.0, 2.0, 1.0], 1.0).unwrap();
        let out = maximize_linear(&class, &phi).unwrap();
        assert_eq!(out.values(), &[1.0, 3.0, 2.0, 0.0]);
    }

    #[test]
    fn constant_phi_is_reproducible() {
        let g = Grid::half_plane_cells(6, 3, 0.5).unwrap();
        let phi = ScalarField::zeros(g, FieldKind::Generic);
        let class = MassProfile::from_values(vec![5.0, 4.0, 3.0, 2.0, 1.0], 0.25).unwrap();
        let a = maximize_linear(&class, &phi).unwrap();
        let b = maximize_linear(&class, &phi).unwrap();
        assert_eq!(a, b);
        // first placements: lowest row, the two center columns, right first
        assert_eq!(a.get(3, 0), 5.0);
        assert_eq!(a.get(2, 0), 4.0);
        assert_eq!(a.get(3, 1), 3.0);
    }

    #[test]
    fn symmetric_decreasing_unit_disk() {
        let h = 1.0 / 32.0;
        let g = Grid::centered(80, 80, h).unwrap();
        let n = (PI / (h * h)).round() as usize;
        let class = MassProfile::from_values(vec![1.0; n], h * h).unwrap();
        let s = symmetric_decreasing(&class, g).unwrap();
        let mut sym_diff = 0;
        for k in 0..g.len() {
            let c = g.center(k);
            let inside = c[0].hypot(c[1]) < 1.0;
            if inside != (s.values()[k] > 0.0) {
                sym_diff += 1;
            }
        }
        assert!(sym_diff as f64 * h * h <= 8.0 * h, "{sym_diff}");
    }

    #[test]
    fn symmetric_decreasing_preserves_norms_and_radial_fields() {
        let g = Grid::centered(20, 20, 0.1).unwrap();
        let radial = ScalarField::from_fn(g, FieldKind::Vorticity, |x| (1.0 - x[0].hypot(x[1])).max(0.0));
        let s = symmetric_decreasing(&profile_of(&radial).unwrap(), g).unwrap();
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let (a, b) = (
                crate::grid::lp_norm(&radial, p).unwrap(),
                crate::grid::lp_norm(&s, p).unwrap(),
            );
            assert!((a - b).abs() <= 1e-14 * a);
        }
        // equidistant cells share values up to rounding
        for (a, b) in s.values().iter().zip(radial.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let tiny = Grid::centered(2, 2, 0.1).unwrap();
        assert!(matches!(
            symmetric_decreasing(&profile_of(&radial).unwrap(), tiny),
            Err(Error::GridMismatch(_)) | Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn steiner_rows() {
        let g = Grid::half_plane_cells(4, 1, 1.0).unwrap();
        let out = steiner_symmetrize(&field(g, &[0.0, 2.0, 1.0, 0.0])).unwrap();
        // oracle: level-set rearrangement of the row sampled on 1000 sub-points per cell
        let row = [0.0, 2.0, 1.0, 0.0];
        let mut expect = [0.0; 4];
        let sub = 1000;
        for (c, e) in expect.iter_mut().enumerate() {
            for s in 0..sub {
                let x = -2.0 + c as f64 + (s as f64 + 0.5) / sub as f64;
                // Steiner value at x: sup{t : |{row > t}| > 2|x|}
                let mut best = 0.0f64;
                for &t in &row {
                    let measure = row.iter().filter(|&&r| r >= t).count() as f64;
                    if measure > 2.0 * x.abs() {
                        best = best.max(t);
                    }
                }
                *e += best / sub as f64;
            }
        }
        for (a, b) in out.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-2, "{:?} vs {:?}", out.values(), expect);
        }
        assert_eq!(out.values(), &[0.0, 1.5, 1.5, 0.0]);
        assert_eq!(steiner_symmetrize(&out).unwrap(), out);
        assert_eq!(crate::grid::centroid(&out).unwrap()[0], 0.0);
    }

    #[test]
    fn hardy_littlewood_equality_for_equal_inputs() {
        let g = Grid::centered(4, 4, 0.5).unwrap();
        let u = field(
            g,
            &[
                0.3, 1.0, 0.0, 2.0, 0.1, 0.5, 0.0, 0.0, 4.0, 0.2, 0.2, 0.0, 0.0, 1.0, 1.0, 3.0,
            ],
        );
        let r = hardy_littlewood_check(&u, &u).unwrap();
        assert!((r.original - r.rearranged).abs() < 1e-12);
        assert!(r.holds());
    }
}
