//! Kinetic energy `E = 1/2 int v G v`, impulse `I = int x2 v`, the penalized
//! objective `E - qI`, and the eps-scaling of profiles.

use crate::error::{Error, Result};
use crate::grid::{FieldKind, Grid, Point, ScalarField};
use crate::kernel::{KernelEvaluator, KernelMode};
use crate::profile::Profile;

/// `1/2 h^2 sum v_i psi_i` for a precomputed stream function.
pub fn energy_with_stream(f: &ScalarField, psi: &ScalarField) -> f64 {
    0.5 * f.grid().cell_area() * f.values().iter().zip(psi.values()).map(|(v, p)| v * p).sum::<f64>()
}

pub fn energy(kernel: &KernelEvaluator, f: &ScalarField) -> Result<f64> {
    let psi = kernel.apply(f)?;
    Ok(energy_with_stream(f, &psi))
}

/// `h^2 sum x2_i v_i`.
pub fn impulse(f: &ScalarField) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for j in 0..g.ny {
        let row: f64 = f.values()[j * g.nx..(j + 1) * g.nx].iter().sum();
        acc += g.x2(j) * row;
    }
    g.cell_area() * acc
}

/// `E - qI` with travel speed `q`.
#[derive(Debug)]
pub struct PenalizedObjective {
    q: f64,
    kernel: KernelEvaluator,
}

impl PenalizedObjective {
    pub fn new(q: f64, kernel: KernelEvaluator) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidConfig(format!("q must be positive, got {q}")));
        }
        Ok(Self { q, kernel })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn kernel(&self) -> &KernelEvaluator {
        &self.kernel
    }

    pub fn value(&self, f: &ScalarField) -> Result<f64> {
        objective(&self.kernel, f, self.q)
    }
}

pub fn objective(kernel: &KernelEvaluator, f: &ScalarField, q: f64) -> Result<f64> {
    Ok(energy(kernel, f)? - q * impulse(f))
}

/// `eps^-2 rho(x / eps)` sampled by nearest reference cell on `target`,
/// renormalized so that its integral equals that of `rho`.
pub fn scale_profile(rho: &ScalarField, eps: f64, target: Grid) -> Result<ScalarField> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let href = rho.grid().h;
    if target.h > eps * href * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse {
            h: target.h,
            needed: eps * href,
        });
    }
    let inv = 1.0 / eps;
    let src = rho.grid();
    let f = ScalarField::from_fn(target, FieldKind::Vorticity, |x| {
        src.locate([x[0] * inv, x[1] * inv])
            .map_or(0.0, |k| inv * inv * rho.values()[k])
    });
    f.renormalized(rho.integral())
}

/// Smallest mirror-symmetric half-plane window (same `h`) that holds the
/// support of `f`, with `margin` empty cells on the artificial edges.
pub fn crop_to_support(f: &ScalarField, margin: usize) -> Result<ScalarField> {
    let g = f.grid();
    if !g.half_plane {
        return Err(Error::InvalidGrid("crop needs a half-plane grid".into()));
    }
    let (mut reach, mut top) = (0usize, 0usize);
    let mut any = false;
    for (k, &v) in f.values().iter().enumerate() {
        if v != 0.0 {
            let (i, j) = g.ij(k);
            let half = g.nx / 2;
            let r = if i >= half { i - half + 1 } else { half - i };
            reach = reach.max(r);
            top = top.max(j + 1);
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptySupport);
    }
    let half_new = reach + margin;
    let ny_new = top + margin;
    let ng = Grid::half_plane_cells(2 * half_new, ny_new, g.h)?;
    let mut vals = vec![0.0; ng.len()];
    for j in 0..ny_new.min(g.ny) {
        for i in 0..ng.nx {
            let src_i = i as isize - half_new as isize + (g.nx / 2) as isize;
            if src_i >= 0 && (src_i as usize) < g.nx {
                vals[ng.index(i, j)] = f.get(src_i as usize, j);
            }
        }
    }
    Ok(ScalarField::from_parts(ng, vals, f.kind()))
}

/// Both sides of `(E - qI)(v) = (E - eps q I)(w)` with `w(x) = eps^2 v(eps x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Evaluates `(E - qI)(zeta)` on the grid of `zeta`, and `(E - eps q I)(w)`
/// with `w` sampled by nearest cell on a window in unscaled variables whose
/// cells have the same side `h`. Since `w` varies on scales `1/eps` times
/// larger, the two sides use different effective resolutions and their
/// discrepancy is a quadrature error that vanishes under refinement.
pub fn scaling_identity_check(zeta: &ScalarField, eps: f64, q: f64) -> Result<ScalingCheck> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let v = crop_to_support(zeta, 1)?;
    let g = *v.grid();
    let kv = KernelEvaluator::new(g, KernelMode::Fast)?;
    let lhs = objective(&kv, &v, q)?;

    let h = g.h;
    let nx_w = 4 * ((g.nx as f64 / eps / 4.0).ceil() as usize).max(1);
    let ny_w = (g.ny as f64 / eps).ceil() as usize;
    let wg = Grid::half_plane_cells(nx_w, ny_w, h)?;
    let w = ScalarField::from_fn(wg, FieldKind::Vorticity, |x| {
        g.locate([eps * x[0], eps * x[1]])
            .map_or(0.0, |k| eps * eps * v.values()[k])
    })
    .renormalized(v.integral())?;
    let kw = KernelEvaluator::new(wg, KernelMode::Fast)?;
    let rhs = objective(&kw, &w, eps * q)?;
    let discrepancy = if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    };
    Ok(ScalingCheck { lhs, rhs, discrepancy })
}

/// Relative l2 error `||-Lap_h psi - zeta|| / ||zeta||` of the five-point
/// Laplacian, taken over support cells whose four neighbours are also in the
/// support.
pub fn elliptic_residual(zeta: &ScalarField, psi: &ScalarField) -> Result<f64> {
    let g = *zeta.grid();
    if psi.grid() != &g {
        return Err(Error::GridMismatch("stream and vorticity grids differ".into()));
    }
    let (z, p) = (zeta.values(), psi.values());
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..g.ny.saturating_sub(1) {
        for i in 1..g.nx - 1 {
            let k = g.index(i, j);
            let nb = [
                g.index(i - 1, j),
                g.index(i + 1, j),
                g.index(i, j - 1),
                g.index(i, j + 1),
            ];
            if z[k] <= 0.0 || nb.iter().any(|&n| z[n] <= 0.0) {
                continue;
            }
            let lap = (nb.iter().map(|&n| p[n]).sum::<f64>() - 4.0 * p[k]) / (g.h * g.h);
            num += (-lap - z[k]).powi(2);
            den += z[k] * z[k];
        }
    }
    if den == 0.0 {
        return Err(Error::EmptySupport);
    }
    Ok((num / den).sqrt())
}

/// `v(x) = eps^-2 rho*((x - center) / eps)` on `grid`: the comparison field
/// used for the lower bound on the maximal objective.
pub fn comparison_field(profile: &Profile, eps: f64, grid: Grid, center: Point) -> Result<ScalarField> {
    if profile.is_radial() {
        return profile.sample_scaled(eps, grid, center);
    }
    let class = profile.scaled_class(eps, grid.h)?;
    crate::rearrange::symmetric_decreasing_about(&class, grid, center)
}
