//! Half-plane Green's function and the operators built from it.
//!
//! `G(x, y) = (1/2pi) ln(|x - y_bar| / |x - y|)` with `y_bar = (y1, -y2)`
//! vanishes on the wall `x2 = 0`. The stream function of a cell field is the
//! midpoint sum over source cells; the singular self-cell integral is replaced
//! by the integral of `ln(1/|y|)` over the disk of equal area, which is
//! `h^2 (1/2 - ln(h / sqrt(pi)))`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FieldKind, Grid, Point, ScalarField};
use crate::lattice::LatticeConvolver;

const INV_2PI: f64 = 0.5 / PI;

/// Half-plane Green's function.
pub fn green(x: Point, y: Point) -> Result<f64> {
    let d1 = x[0] - y[0];
    let dm2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    if dm2 == 0.0 {
        return Err(Error::KernelSingularity);
    }
    let di2 = d1 * d1 + (x[1] + y[1]).powi(2);
    Ok(0.25 / PI * (di2 / dm2).ln())
}

/// `int_{disk of area h^2} ln(1/|y|) dy`.
pub fn self_cell_constant(h: f64) -> f64 {
    h * h * (0.5 - (h / PI.sqrt()).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KernelMode {
    Direct,
    #[default]
    Fast,
}

/// Cell-centered velocity `(u, v) = (d psi / d x2, -d psi / d x1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VelocityField {
    pub fn max_speed(&self) -> f64 {
        self.u.iter().zip(&self.v).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Bilinear interpolation between cell centers, clamped at the window.
    pub fn sample(&self, x: Point) -> [f64; 2] {
        let g = &self.grid;
        let (i0, j0, tx, ty) = bilinear_stencil(g, x);
        let at = |f: &[f64]| {
            let c = |i: usize, j: usize| f[g.index(i, j)];
            let i1 = (i0 + 1).min(g.nx - 1);
            let j1 = (j0 + 1).min(g.ny - 1);
            (1.0 - ty) * ((1.0 - tx) * c(i0, j0) + tx * c(i1, j0)) + ty * ((1.0 - tx) * c(i0, j1) + tx * c(i1, j1))
        };
        [at(&self.u), at(&self.v)]
    }
}

/// Lower-left cell and fractional weights for bilinear interpolation at `x`,
/// clamped to the range of cell centers.
pub(crate) fn bilinear_stencil(g: &Grid, x: Point) -> (usize, usize, f64, f64) {
    let fi = (x[0] / g.h + 0.5 * g.nx as f64 - 0.5).clamp(0.0, (g.nx - 1) as f64);
    let off = if g.half_plane { 0.5 } else { 0.5 - 0.5 * g.ny as f64 };
    let fj = (x[1] / g.h - off).clamp(0.0, (g.ny - 1) as f64);
    let (i0, j0) = (fi.floor() as usize, fj.floor() as usize);
    (i0, j0, fi - i0 as f64, fj - j0 as f64)
}

/// Evaluates `psi = G f` and the induced velocity on one grid.
pub struct KernelEvaluator {
    grid: Grid,
    mode: KernelMode,
    self_cell_constant: f64,
    stream_conv: OnceLock<LatticeConvolver>,
    velocity_conv: OnceLock<LatticeConvolver>,
}

impl std::fmt::Debug for KernelEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelEvaluator")
            .field("grid", &self.grid)
            .field("mode", &self.mode)
            .field("self_cell_constant", &self.self_cell_constant)
            .finish()
    }
}

impl KernelEvaluator {
    pub fn new(grid: Grid, mode: KernelMode) -> Result<Self> {
        if !grid.half_plane {
            return Err(Error::InvalidGrid("kernel needs a half-plane grid".into()));
        }
        Ok(Self {
            grid,
            mode,
            self_cell_constant: self_cell_constant(grid.h),
            stream_conv: OnceLock::new(),
            velocity_conv: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn self_cell_constant(&self) -> f64 {
        self.self_cell_constant
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch("field grid differs from kernel grid".into()));
        }
        Ok(())
    }

    /// `psi = G f` using the evaluator's mode.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        match self.mode {
            KernelMode::Direct => self.apply_direct(f),
            KernelMode::Fast => self.apply_fast(f),
        }
    }

    /// Direct summation over nonzero source cells.
    pub fn apply_direct(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let g = self.grid;
        let sources = nonzero_sources(f);
        let area = g.cell_area();
        let s0 = self.self_cell_constant;
        let out: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = g.ij(k);
                let (ci, cj) = (g.col_offset(i), g.row_offset(j));
                let mut acc = 0.0;
                let mut self_term = 0.0;
                for &(m, a, b, w) in &sources {
                    if m == k {
                        self_term = w * (s0 + area * (2.0 * cj * g.h).ln());
                        continue;
                    }
                    let d1 = ci - a;
                    let dm = d1 * d1 + (cj - b) * (cj - b);
                    let di = d1 * d1 + (cj + b) * (cj + b);
                    acc += w * 0.5 * (di / dm).ln();
                }
                INV_2PI * (area * acc + self_term)
            })
            .collect();
        Ok(ScalarField::from_parts(g, out, FieldKind::Stream))
    }

    /// Same operator as [`apply_direct`](Self::apply_direct), evaluated as two
    /// lattice convolutions.
    pub fn apply_fast(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let conv = self.stream_conv.get_or_init(|| {
            let h = self.grid.h;
            let area = h * h;
            let s0 = self.self_cell_constant;
            let free = move |di: isize, dj: isize| {
                if di == 0 && dj == 0 {
                    INV_2PI * s0
                } else {
                    let r2 = ((di * di + dj * dj) as f64) * area;
                    -INV_2PI * area * 0.5 * r2.ln()
                }
            };
            let image = move |di: isize, s: isize| {
                let r2 = ((di * di) as f64 + ((s + 1) as f64).powi(2)) * area;
                INV_2PI * area * 0.5 * r2.ln()
            };
            LatticeConvolver::new(self.grid, vec![(free, image)])
        });
        let out = conv.apply(f.values()).remove(0);
        Ok(ScalarField::from_parts(self.grid, out, FieldKind::Stream))
    }

    /// `psi(x)` at an arbitrary point that is not a source cell center.
    pub fn stream_at(&self, f: &ScalarField, x: Point) -> Result<f64> {
        self.check(f)?;
        let g = self.grid;
        let mut acc = 0.0;
        for (k, &w) in f.values().iter().enumerate() {
            if w != 0.0 {
                acc += w * green(x, g.center(k))?;
            }
        }
        Ok(g.cell_area() * acc)
    }

    /// Velocity by direct summation of the analytic kernel gradient. The
    /// self cell contributes only its image part.
    pub fn velocity(&self, f: &ScalarField) -> Result<VelocityField> {
        match self.mode {
            KernelMode::Direct => self.velocity_direct(f),
            KernelMode::Fast => self.velocity_fast(f),
        }
    }

    pub fn velocity_direct(&self, f: &ScalarField) -> Result<VelocityField> {
        self.check(f)?;
        let g = self.grid;
        let sources = nonzero_sources(f);
        let c = INV_2PI * g.h;
        let (u, v): (Vec<f64>, Vec<f64>) = (0..g.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = g.ij(k);
                let (ci, cj) = (g.col_offset(i), g.row_offset(j));
                let (mut su, mut sv) = (0.0, 0.0);
                for &(m, a, b, w) in &sources {
                    let d1 = ci - a;
                    let (dm2, sm2) = (cj - b, cj + b);
                    let ri = d1 * d1 + sm2 * sm2;
                    su += w * sm2 / ri;
                    sv -= w * d1 / ri;
                    if m != k {
                        let rm = d1 * d1 + dm2 * dm2;
                        su -= w * dm2 / rm;
                        sv += w * d1 / rm;
                    }
                }
                (c * su, c * sv)
            })
            .unzip();
        Ok(VelocityField { grid: g, u, v })
    }

    pub fn velocity_fast(&self, f: &ScalarField) -> Result<VelocityField> {
        self.check(f)?;
        let conv = self.velocity_conv.get_or_init(|| {
            let c = INV_2PI * self.grid.h;
            type K = Box<dyn Fn(isize, isize) -> f64 + Send + Sync>;
            let u_free: K = Box::new(move |di, dj| {
                if di == 0 && dj == 0 {
                    0.0
                } else {
                    -c * dj as f64 / (di * di + dj * dj) as f64
                }
            });
            let u_image: K = Box::new(move |di, s| {
                let t = (s + 1) as f64;
                c * t / ((di * di) as f64 + t * t)
            });
            let v_free: K = Box::new(move |di, dj| {
                if di == 0 && dj == 0 {
                    0.0
                } else {
                    c * di as f64 / (di * di + dj * dj) as f64
                }
            });
            let v_image: K = Box::new(move |di, s| {
                let t = (s + 1) as f64;
                -c * di as f64 / ((di * di) as f64 + t * t)
            });
            LatticeConvolver::new(self.grid, vec![(u_free, u_image), (v_free, v_image)])
        });
        let mut out = conv.apply(f.values());
        let v = out.pop().unwrap_or_default();
        let u = out.pop().unwrap_or_default();
        Ok(VelocityField { grid: self.grid, u, v })
    }
}

/// `(cell, col offset, row offset, value)` for every nonzero cell.
fn nonzero_sources(f: &ScalarField) -> Vec<(usize, f64, f64, f64)> {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(k, &w)| {
            let (i, j) = g.ij(k);
            (k, g.col_offset(i), g.row_offset(j), w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(nx: usize, ny: usize, h: f64) -> Grid {
        Grid::half_plane_cells(nx, ny, h).unwrap()
    }

    fn random_field(g: Grid, rng: &mut ChaCha8Rng, signed: bool) -> ScalarField {
        let lo = if signed { -1.0 } else { 0.0 };
        let vals = (0..g.len()).map(|_| rng.gen_range(lo..1.0)).collect();
        let kind = if signed {
            FieldKind::Generic
        } else {
            FieldKind::Vorticity
        };
        ScalarField::new(g, vals, kind).unwrap()
    }

    #[test]
    fn green_examples() {
        let v = green([0.0, 1.0], [0.0, 2.0]).unwrap();
        assert!((v - 3f64.ln() / (2.0 * PI)).abs() < 1e-12);
        assert!((v - 0.1748495).abs() < 1e-7);
        assert_eq!(green([0.3, 1.0], [0.3, 1.0]), Err(Error::KernelSingularity));
        let x = [0.4, 0.7];
        let mut prev = f64::INFINITY;
        for delta in [0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let g = green(x, [1.0, delta]).unwrap();
            assert!(g >= 0.0 && g < prev);
            prev = g;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn self_constant_matches_refined_square_quadrature() {
        // 64x64 sub-cell midpoint quadrature of ln(1/|y|) over the square cell
        let h = 0.1;
        let n = 64;
        let s = h / n as f64;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let y1 = -0.5 * h + (a as f64 + 0.5) * s;
                let y2 = -0.5 * h + (b as f64 + 0.5) * s;
                acc -= 0.5 * (y1 * y1 + y2 * y2).ln() * s * s;
            }
        }
        assert!((acc - 0.0336374).abs() < 1e-6, "square quadrature {acc}");
        // equal-area disk value, 0.33% above the square-cell integral
        assert!((self_cell_constant(h) - 0.033749).abs() < 1e-6);
        assert!((self_cell_constant(h) - acc).abs() < 0.005 * acc);
    }

    #[test]
    fn zero_field_gives_zero_stream() {
        let g = grid(8, 4, 0.25);
        let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let z = ScalarField::zeros(g, FieldKind::Vorticity);
        assert!(ev.apply_direct(&z).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(ev.apply_fast(&z).unwrap().values().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn point_mass_far_field_matches_green() {
        let g = grid(40, 20, 0.1);
        let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let src = g.index(20, 9);
        let mut f = ScalarField::zeros(g, FieldKind::Vorticity);
        f.values_mut()[src] = 1.0 / g.cell_area();
        let psi = ev.apply(&f).unwrap();
        let far = g.index(2, 15);
        let exact = green(g.center(far), g.center(src)).unwrap();
        assert!((psi.values()[far] - exact).abs() < 1e-8);
        assert!(psi.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn point_mass_drift_velocity() {
        let g = grid(40, 20, 0.05);
        let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let src = g.index(20, 9);
        let d = g.center(src)[1];
        let mut f = ScalarField::zeros(g, FieldKind::Vorticity);
        f.values_mut()[src] = 1.0 / g.cell_area();
        let vel = ev.velocity_direct(&f).unwrap();
        assert!((vel.u[src] - 1.0 / (4.0 * PI * d)).abs() < 1e-12);
        assert!(vel.v[src].abs() < 1e-15);
    }

    #[test]
    fn velocity_symmetry_and_wall() {
        let g = grid(32, 16, 1.0 / 16.0);
        let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let f = ScalarField::from_fn(g, FieldKind::Vorticity, |x| {
            (1.0 - ((x[0] / 0.3).powi(2) + ((x[1] - 0.5) / 0.2).powi(2))).max(0.0)
        });
        let vel = ev.velocity_direct(&f).unwrap();
        for k in 0..g.len() {
            let m = g.mirror_index(k);
            assert!((vel.u[k] - vel.u[m]).abs() < 1e-12);
            assert!((vel.v[k] + vel.v[m]).abs() < 1e-12);
        }
        // normal velocity at the first row against the tangential scale at matched height
        let first: f64 = (0..g.nx).map(|i| vel.v[g.index(i, 0)].abs()).fold(0.0, f64::max);
        let interior: f64 = (0..g.nx).map(|i| vel.v[g.index(i, 8)].abs()).fold(0.0, f64::max);
        assert!(first < 0.5 * interior, "wall {first} vs interior {interior}");
        let fast = ev.velocity_fast(&f).unwrap();
        let scale = vel.max_speed();
        for k in 0..g.len() {
            assert!((fast.u[k] - vel.u[k]).abs() < 1e-10 * scale);
            assert!((fast.v[k] - vel.v[k]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn fast_matches_direct_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = grid(32, 16, 0.05);
        let ev = KernelEvaluator::new(g, KernelMode::Fast).unwrap();
        for signed in [false, true] {
            let f = random_field(g, &mut rng, signed);
            let a = ev.apply_direct(&f).unwrap();
            let b = ev.apply_fast(&f).unwrap();
            let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dev = a
                .values()
                .iter()
                .zip(b.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(dev <= 1e-10 * scale, "{dev} vs {scale}");
        }
    }

    #[test]
    fn fast_translation_matches_direct() {
        let g = grid(32, 16, 0.05);
        let ev = KernelEvaluator::new(g, KernelMode::Fast).unwrap();
        let f = ScalarField::from_fn(g, FieldKind::Vorticity, |x| {
            (0.04 - (x[0] - 0.1).powi(2) - (x[1] - 0.3).powi(2)).max(0.0)
        });
        let t = f.shifted(1, 0);
        let a = ev.apply_direct(&t).unwrap();
        let b = ev.apply_fast(&t).unwrap();
        let scale = a.max();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
        // the kernel depends on x1 - y1 only, so psi translates with the field
        let p0 = ev.apply_direct(&f).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                assert!((a.get(i + 1, j) - p0.get(i, j)).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn mirror_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid(16, 8, 0.1);
        let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let f = random_field(g, &mut rng, false);
        let a = ev.apply(&f.mirror()).unwrap();
        let b = ev.apply(&f).unwrap().mirror();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn energy_form_nearly_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = grid(8, 4, rng.gen_range(0.02..0.5));
            let ev = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
            let u = random_field(g, &mut rng, true);
            let psi = ev.apply_direct(&u).unwrap();
            let area = g.cell_area();
            let form: f64 = 0.5 * area * u.values().iter().zip(psi.values()).map(|(a, b)| a * b).sum::<f64>();
            let norm2: f64 = u.values().iter().map(|v| v * v).sum();
            assert!(form >= -1e-10 * norm2, "{form}");
        }
    }
}
