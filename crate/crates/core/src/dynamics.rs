//! Half-plane Euler evolution by semi-Lagrangian advection, analytic
//! references (point-vortex pair, Lamb dipole) and the stability experiment.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{j0, j1, j1_first_zero};
use crate::error::{Error, Result};
use crate::functionals::{energy, impulse};
use crate::grid::{centroid, FieldKind, Grid, Point, ScalarField};
use crate::kernel::{bilinear_stencil, KernelEvaluator, KernelMode, VelocityField};

/// Values below this fraction of the initial maximum do not count as support
/// in the boundary check.
const SUPPORT_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub omega: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub mass0: f64,
    pub impulse0: f64,
    pub energy0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub centroid: Point,
    /// Stability deviation, when tracked.
    pub deviation: Option<f64>,
    pub mass: f64,
    pub energy: f64,
    pub impulse: f64,
}

/// Time stepper on a fixed grid.
#[derive(Debug)]
pub struct Evolver {
    kernel: KernelEvaluator,
    /// Cells between the support and an artificial edge; `None` disables the check.
    pub boundary_margin: Option<usize>,
    /// Velocity added to the flow; `[-c, 0]` gives the frame moving at speed `c`.
    pub frame_velocity: [f64; 2],
    support_floor: f64,
}

impl Evolver {
    /// Stepper with the direct velocity sum.
    pub fn new(grid: Grid) -> Result<Self> {
        Self::with_mode(grid, KernelMode::Direct)
    }

    pub fn with_mode(grid: Grid, mode: KernelMode) -> Result<Self> {
        Ok(Self {
            kernel: KernelEvaluator::new(grid, mode)?,
            boundary_margin: Some(2),
            frame_velocity: [0.0, 0.0],
            support_floor: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn init(&mut self, omega: ScalarField, dt: f64) -> Result<EvolutionState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        self.support_floor = SUPPORT_FLOOR * omega.max().max(0.0);
        Ok(EvolutionState {
            mass0: omega.integral(),
            impulse0: impulse(&omega),
            energy0: energy(&self.kernel, &omega)?,
            omega,
            t: 0.0,
            dt,
        })
    }

    fn velocity(&self, omega: &ScalarField) -> Result<VelocityField> {
        let mut vel = self.kernel.velocity(omega)?;
        let [a, b] = self.frame_velocity;
        if a != 0.0 || b != 0.0 {
            vel.u.iter_mut().for_each(|u| *u += a);
            vel.v.iter_mut().for_each(|v| *v += b);
        }
        Ok(vel)
    }

    /// Largest stable time step `h / (2 max|v|)` for the current field.
    pub fn cfl_limit(&self, omega: &ScalarField) -> Result<f64> {
        let s = self.velocity(omega)?.max_speed();
        Ok(if s > 0.0 {
            self.grid().h / (2.0 * s)
        } else {
            f64::INFINITY
        })
    }

    /// One semi-Lagrangian step: departure points by the midpoint rule,
    /// bilinear interpolation, negative values clipped to zero.
    pub fn step(&self, s: &EvolutionState) -> Result<EvolutionState> {
        let g = *self.grid();
        let vel = self.velocity(&s.omega)?;
        let speed = vel.max_speed();
        if speed > 0.0 {
            let limit = g.h / (2.0 * speed);
            if s.dt > limit * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt: s.dt, limit });
            }
        }
        let dt = s.dt;
        let w = s.omega.values();
        let values: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|k| {
                let x = g.center(k);
                let v0 = [vel.u[k], vel.v[k]];
                let mid = [x[0] - 0.5 * dt * v0[0], x[1] - 0.5 * dt * v0[1]];
                let vm = vel.sample(mid);
                let dep = [x[0] - dt * vm[0], x[1] - dt * vm[1]];
                sample_field(&g, w, dep).max(0.0)
            })
            .collect();
        let omega = ScalarField::from_parts(g, values, FieldKind::Vorticity);
        if let Some(margin) = self.boundary_margin {
            let touches = omega
                .values()
                .iter()
                .enumerate()
                .any(|(k, &v)| v > self.support_floor && g.edge_distance(k) < margin);
            if touches {
                return Err(Error::SupportTouchesBoundary);
            }
        }
        Ok(EvolutionState {
            omega,
            t: s.t + dt,
            ..s.clone()
        })
    }

    pub fn sample(&self, s: &EvolutionState) -> Result<TrajectorySample> {
        let mass = s.omega.integral();
        let c = if mass > 0.0 {
            centroid(&s.omega)?
        } else {
            [f64::NAN, f64::NAN]
        };
        Ok(TrajectorySample {
            t: s.t,
            centroid: c,
            deviation: None,
            mass,
            energy: energy(&self.kernel, &s.omega)?,
            impulse: impulse(&s.omega),
        })
    }

    /// `steps` steps, sampling every `stride` steps (and at both ends).
    pub fn evolve(
        &self,
        s: EvolutionState,
        steps: usize,
        stride: usize,
    ) -> Result<(EvolutionState, Vec<TrajectorySample>)> {
        let stride = stride.max(1);
        let mut traj = vec![self.sample(&s)?];
        let mut cur = s;
        for n in 1..=steps {
            cur = self.step(&cur)?;
            if n % stride == 0 || n == steps {
                traj.push(self.sample(&cur)?);
            }
        }
        Ok((cur, traj))
    }
}

fn sample_field(g: &Grid, w: &[f64], x: Point) -> f64 {
    let (i0, j0, tx, ty) = bilinear_stencil(g, x);
    let i1 = (i0 + 1).min(g.nx - 1);
    let j1 = (j0 + 1).min(g.ny - 1);
    let c = |i: usize, j: usize| w[g.index(i, j)];
    (1.0 - ty) * ((1.0 - tx) * c(i0, j0) + tx * c(i1, j0)) + ty * ((1.0 - tx) * c(i0, j1) + tx * c(i1, j1))
}

/// Time step as a fraction `cfl` of the stability limit, rounded so that
/// `horizon` is a whole number of steps. Returns `(dt, steps)`.
pub fn plan_steps(ev: &Evolver, omega: &ScalarField, horizon: f64, cfl: f64) -> Result<(f64, usize)> {
    if !(horizon > 0.0) || !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidConfig(format!("horizon {horizon}, cfl {cfl}")));
    }
    let limit = ev.cfl_limit(omega)?;
    let steps = (horizon / (cfl * limit)).ceil().max(1.0) as usize;
    Ok((horizon / steps as f64, steps))
}

/// Least-squares slope of centroid `x1` against `t`.
pub fn measure_speed(samples: &[TrajectorySample]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.centroid[0])).collect();
    slope(&pts)
}

pub fn slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 5 {
        return Err(Error::DegenerateSamples);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::DegenerateSamples);
    }
    let stx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    Ok(stx / stt)
}

/// `(t, x1, x2)` of the upper point vortex of a pair with circulation `kappa`
/// at half-separation `d`, integrated by the classical fourth-order scheme.
pub fn point_vortex_pair(kappa: f64, d: f64, horizon: f64, dt: f64) -> Result<Vec<(f64, f64, f64)>> {
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("d must be positive, got {d}")));
    }
    if !(dt > 0.0) || horizon < 0.0 {
        return Err(Error::InvalidConfig(format!("dt {dt}, horizon {horizon}")));
    }
    let rhs = |x: [f64; 2]| [kappa / (4.0 * PI * x[1]), 0.0];
    let mut x = [0.0, d];
    let mut t = 0.0;
    let mut out = vec![(t, x[0], x[1])];
    let steps = (horizon / dt).round() as usize;
    for _ in 0..steps {
        let k1 = rhs(x);
        let k2 = rhs([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs([x[0] + dt * k3[0], x[1] + dt * k3[1]]);
        for c in 0..2 {
            x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t += dt;
        out.push((t, x[0], x[1]));
    }
    Ok(out)
}

/// Upper half of the Lamb dipole of radius `a` and speed `w` centred at
/// `(x1c, 0)`: `omega = -2 w k J1(k r) sin(theta) / J0(k a)` for `r < a`,
/// with `k a` the first zero of `J1`. Positive in the upper half-plane, so
/// the dipole travels in `+x1`.
pub fn lamb_dipole(a: f64, w: f64, x1c: f64, grid: Grid) -> Result<ScalarField> {
    if !(a > 0.0) || !(w > 0.0) {
        return Err(Error::InvalidConfig(format!("radius {a}, speed {w}")));
    }
    let margin = 2.0 * grid.h;
    if x1c - a < -grid.half_width() + margin || x1c + a > grid.half_width() - margin || a > grid.height() - margin {
        return Err(Error::GridTooSmall(format!(
            "dipole of radius {a} at x1 = {x1c} does not fit"
        )));
    }
    let k = j1_first_zero() / a;
    let amp = -2.0 * w * k / j0(k * a);
    Ok(ScalarField::from_fn(grid, FieldKind::Vorticity, |x| {
        let (dx, dy) = (x[0] - x1c, x[1]);
        let r = dx.hypot(dy);
        if r >= a || r == 0.0 {
            0.0
        } else {
            (amp * j1(k * r) * dy / r).max(0.0)
        }
    }))
}

/// Initial perturbation for the stability experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    None,
    /// Blend with the one-cell upward shift so that `||omega0 - zeta||_2 = rel ||zeta||_2`.
    Shift {
        rel: f64,
    },
    /// Left and right halves moved apart by `cells` cells each.
    Split {
        cells: usize,
    },
}

pub fn perturb(zeta: &ScalarField, p: Perturbation) -> Result<ScalarField> {
    match p {
        Perturbation::None => Ok(zeta.clone()),
        Perturbation::Shift { rel } => {
            let up = zeta.shifted(0, 1);
            let gap = up.distance(zeta, 2.0)?;
            let norm = crate::grid::lp_norm(zeta, 2.0)?;
            if gap == 0.0 {
                return Err(Error::ZeroMass);
            }
            let s = rel * norm / gap;
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidConfig(format!("perturbation size {rel} too large")));
            }
            let vals = zeta
                .values()
                .iter()
                .zip(up.values())
                .map(|(a, b)| (1.0 - s) * a + s * b)
                .collect();
            Ok(ScalarField::from_parts(*zeta.grid(), vals, FieldKind::Vorticity))
        }
        Perturbation::Split { cells } => {
            let g = *zeta.grid();
            let half = g.nx / 2;
            let mut lv = vec![0.0; g.len()];
            let mut rv = vec![0.0; g.len()];
            for k in 0..g.len() {
                if g.ij(k).0 < half {
                    lv[k] = zeta.values()[k];
                } else {
                    rv[k] = zeta.values()[k];
                }
            }
            let l = ScalarField::from_parts(g, lv, FieldKind::Vorticity).shifted(-(cells as isize), 0);
            let r = ScalarField::from_parts(g, rv, FieldKind::Vorticity).shifted(cells as isize, 0);
            let vals = l.values().iter().zip(r.values()).map(|(a, b)| a + b).collect();
            Ok(ScalarField::from_parts(g, vals, FieldKind::Vorticity))
        }
    }
}

/// `min over whole-cell shifts c of ||omega - zeta(. - c e1)||_2`, searched
/// around the shift suggested by the centroids.
pub fn orbital_deviation(omega: &ScalarField, zeta: &ScalarField) -> Result<f64> {
    let g = *zeta.grid();
    let guess = match (centroid(omega), centroid(zeta)) {
        (Ok(a), Ok(b)) => ((a[0] - b[0]) / g.h).round() as isize,
        _ => 0,
    };
    let reach = 8isize;
    let mut best = f64::INFINITY;
    for di in guess - reach..=guess + reach {
        best = best.min(omega.distance(&zeta.shifted(di, 0), 2.0)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityCurve {
    /// `||omega0 - zeta||_2`.
    pub delta: f64,
    pub zeta_norm: f64,
    pub samples: Vec<TrajectorySample>,
    pub max_deviation: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub impulse_drift: f64,
}

/// Evolves the perturbed `zeta` to `horizon` and tracks the distance to the
/// translates of `zeta`.
pub fn stability_experiment(
    zeta: &ScalarField,
    p: Perturbation,
    horizon: f64,
    cfl: f64,
    samples: usize,
    mode: KernelMode,
) -> Result<StabilityCurve> {
    let omega0 = perturb(zeta, p)?;
    let mut ev = Evolver::with_mode(*zeta.grid(), mode)?;
    let delta = omega0.distance(zeta, 2.0)?;
    let (dt, steps) = plan_steps(&ev, &omega0, horizon, cfl)?;
    let state = ev.init(omega0, dt)?;
    let stride = (steps / samples.max(1)).max(1);
    let tracked = |cur: &EvolutionState| -> Result<TrajectorySample> {
        let mut s = ev.sample(cur)?;
        s.deviation = Some(orbital_deviation(&cur.omega, zeta)?);
        Ok(s)
    };
    let mut traj = vec![tracked(&state)?];
    let mut cur = state.clone();
    for n in 1..=steps {
        cur = ev.step(&cur)?;
        if n % stride == 0 || n == steps {
            traj.push(tracked(&cur)?);
        }
    }
    let max_deviation = traj.iter().filter_map(|s| s.deviation).fold(0.0, f64::max);
    let last = traj.last().expect("trajectory has the initial sample");
    Ok(StabilityCurve {
        delta,
        zeta_norm: crate::grid::lp_norm(zeta, 2.0)?,
        max_deviation,
        mass_drift: (last.mass - state.mass0).abs() / state.mass0,
        energy_drift: (last.energy - state.energy0).abs() / state.energy0.abs(),
        impulse_drift: (last.impulse - state.impulse0).abs() / state.impulse0.abs(),
        samples: traj,
    })
}
