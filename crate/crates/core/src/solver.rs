//! Monotone ascent to a discrete maximizer of `E - qI` over a rearrangement
//! class.
//!
//! Each step replaces `zeta` by the class member that maximizes the
//! linearization `sum v_i phi_i` with `phi = G zeta - q x2`. Since the discrete
//! energy form is (numerically) positive semidefinite, the objective never
//! decreases, and fixed points satisfy `zeta = f(G zeta - q x2)` for an
//! increasing `f`.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{energy_with_stream, impulse};
use crate::grid::{support, CellSet, FieldKind, Grid, Point, ScalarField};
use crate::kernel::{KernelEvaluator, KernelMode};
use crate::profile::Profile;
use crate::rearrange::{maximize_linear, symmetric_decreasing_about, MassProfile};

const CYCLE_WINDOW: usize = 8;
const PLATEAU_STEPS: usize = 3;
const DECREASE_SLACK: f64 = 1e-9;
const EXCHANGE_LIMIT: usize = 64;
const EXCHANGE_GAIN: f64 = 1e-13;

/// Explicit window: half-width `L`, height `H`, `nx` columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub height: f64,
    pub nx: usize,
}

impl GridSpec {
    /// Builds the grid; the height is rounded up to a whole number of cells.
    pub fn build(&self) -> Result<Grid> {
        if self.nx == 0 || !(self.half_width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidGrid(format!("{self:?}")));
        }
        let h = 2.0 * self.half_width / self.nx as f64;
        let ny = ((self.height / h) - 1e-9).ceil().max(1.0) as usize;
        Grid::half_plane_cells(self.nx, ny, h)
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub eps: f64,
    pub q: f64,
    pub profile: Profile,
    /// `None` selects the default window around the expected core.
    pub grid: Option<GridSpec>,
    pub max_iters: usize,
    /// Relative objective increment below which a step counts as a plateau step.
    pub tolerance: f64,
    pub symmetric: bool,
    /// Support constraint radius `r0` about the placement point.
    pub r0: Option<f64>,
    /// Initial placement point; defaults to `(0, kappa / (4 pi q))`.
    pub init: Option<Point>,
    pub kernel: KernelMode,
    /// Minimum number of cells between the support and an artificial edge.
    pub boundary_margin: usize,
}

impl SolverConfig {
    pub fn new(profile: Profile, eps: f64, q: f64) -> Self {
        Self {
            eps,
            q,
            profile,
            grid: None,
            max_iters: 500,
            tolerance: 1e-10,
            symmetric: true,
            r0: None,
            init: None,
            kernel: KernelMode::Fast,
            boundary_margin: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::EpsOutOfRange(self.eps));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidConfig(format!("q must be positive, got {}", self.q)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0) || !r0.is_finite() {
                return Err(Error::InvalidConfig(format!("r0 must be positive, got {r0}")));
            }
        }
        Ok(())
    }

    /// `(0, kappa / (4 pi q))`, the limiting position of the core.
    pub fn expected_center(&self) -> Point {
        [0.0, self.profile.kappa() / (4.0 * PI * self.q)]
    }

    pub fn placement(&self) -> Point {
        self.init.unwrap_or_else(|| self.expected_center())
    }

    /// The explicit grid, or `L = H = max(4 x2, 10 eps a)`, `h = eps / 8` with
    /// `x2` the height of the expected center and `a` the profile radius.
    pub fn resolve_grid(&self) -> Result<Grid> {
        let g = match self.grid {
            Some(spec) => spec.build()?,
            None => {
                let x2 = self.expected_center()[1];
                let h = self.eps / 8.0;
                let l = (4.0 * x2).max(10.0 * self.eps * self.profile.support_radius());
                let nx = 2 * (l / h - 1e-9).ceil() as usize;
                let ny = (l / h - 1e-9).ceil() as usize;
                Grid::half_plane_cells(nx, ny, h)?
            }
        };
        if g.h > self.eps / 8.0 * (1.0 + 1e-9) {
            return Err(Error::GridTooCoarse {
                h: g.h,
                needed: self.eps / 8.0,
            });
        }
        Ok(g)
    }
}

/// Options of the ascent loop that do not depend on how the class was built.
#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub q: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub symmetric: bool,
    /// `(center, r0)`: only cells whose center lies in the closed ball may be positive.
    pub constraint: Option<(Point, f64)>,
    pub kernel: KernelMode,
    /// `None` disables the boundary check.
    pub boundary_margin: Option<usize>,
}

impl AscentOptions {
    pub fn new(q: f64) -> Self {
        Self {
            q,
            max_iters: 500,
            tolerance: 1e-10,
            symmetric: true,
            constraint: None,
            kernel: KernelMode::Fast,
            boundary_margin: Some(2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The assignment reproduced itself.
    FixedPoint,
    /// Relative increments stayed below the tolerance.
    Plateau,
    /// An earlier assignment recurred; the best one seen is returned.
    Cycle,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::FixedPoint => "fixed_point",
            Termination::Plateau => "plateau",
            Termination::Cycle => "cycle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub mu: f64,
    pub support: usize,
}

#[derive(Clone, Debug)]
pub struct MaximizerResult {
    pub zeta: ScalarField,
    /// `G zeta`.
    pub psi: ScalarField,
    /// The potential `G zeta - q x2` as seen by the solver (mirror-averaged,
    /// `-inf` outside the constraint ball).
    pub phi: ScalarField,
    pub objective: f64,
    pub mu: f64,
    /// Largest excess of `psi - q x2` over `mu` outside the core.
    pub mu_gap: f64,
    pub core: CellSet,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// `||zeta - mirror zeta||_1 / kappa`.
    pub asymmetry: f64,
    pub monotone_violations: usize,
    pub q: f64,
    pub log: Vec<IterationRecord>,
}

impl MaximizerResult {
    pub fn grid(&self) -> &Grid {
        self.zeta.grid()
    }
}

/// Runs the ascent for a scaled profile.
pub fn ascend(cfg: &SolverConfig) -> Result<MaximizerResult> {
    cfg.validate()?;
    let grid = cfg.resolve_grid()?;
    let class = cfg.profile.scaled_class(cfg.eps, grid.h)?;
    let center = cfg.placement();
    let init = symmetric_decreasing_about(&class, grid, center)?;
    let opts = AscentOptions {
        q: cfg.q,
        max_iters: cfg.max_iters,
        tolerance: cfg.tolerance,
        symmetric: cfg.symmetric,
        constraint: cfg.r0.map(|r| (center, r)),
        kernel: cfg.kernel,
        boundary_margin: Some(cfg.boundary_margin),
    };
    ascend_from(&class, init, &opts)
}

fn assignment_hash(f: &ScalarField) -> u64 {
    let mut h = DefaultHasher::new();
    for v in f.values() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// `G zeta - q x2`, mirror-averaged in symmetric mode and `-inf` outside the
/// constraint ball.
fn potential(psi: &ScalarField, opts: &AscentOptions) -> ScalarField {
    let g = *psi.grid();
    let p = psi.values();
    let vals = (0..g.len())
        .map(|k| {
            let (_, j) = g.ij(k);
            let raw = if opts.symmetric {
                let m = g.mirror_index(k);
                let (a, b) = if k < m { (p[k], p[m]) } else { (p[m], p[k]) };
                0.5 * (a + b)
            } else {
                p[k]
            };
            let inside = opts.constraint.is_none_or(|(c, r0)| {
                let x = g.center(k);
                (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= r0 * r0 * (1.0 + 1e-12)
            });
            if inside {
                raw - opts.q * g.x2(j)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    ScalarField::from_parts(g, vals, FieldKind::Generic)
}

fn min_over_support(zeta: &ScalarField, phi: &ScalarField) -> f64 {
    zeta.values()
        .iter()
        .zip(phi.values())
        .filter(|(z, _)| **z > 0.0)
        .map(|(_, p)| *p)
        .fold(f64::INFINITY, f64::min)
}

struct Iterate {
    zeta: ScalarField,
    psi: ScalarField,
    phi: ScalarField,
    obj: f64,
}

struct Ascent<'a> {
    class: &'a MassProfile,
    opts: &'a AscentOptions,
    kernel: KernelEvaluator,
    log: Vec<IterationRecord>,
    iterations: usize,
}

impl Ascent<'_> {
    fn evaluate(&self, zeta: ScalarField) -> Result<Iterate> {
        let psi = self.kernel.apply(&zeta)?;
        let obj = energy_with_stream(&zeta, &psi) - self.opts.q * impulse(&zeta);
        let phi = potential(&psi, self.opts);
        Ok(Iterate { zeta, psi, phi, obj })
    }

    fn record(&mut self, it: &Iterate) {
        self.log.push(IterationRecord {
            iteration: self.iterations,
            objective: it.obj,
            mu: min_over_support(&it.zeta, &it.phi),
            support: it.zeta.values().iter().filter(|v| **v > 0.0).count(),
        });
    }

    /// Linear steps until a fixed point, a plateau or a cycle.
    fn linear(&mut self, start: Iterate) -> Result<(Iterate, Termination)> {
        let mut cur = start;
        let mut best: Option<Iterate> = None;
        let mut history: VecDeque<u64> = VecDeque::with_capacity(CYCLE_WINDOW);
        history.push_back(assignment_hash(&cur.zeta));
        let mut flat_steps = 0;
        while self.iterations < self.opts.max_iters {
            let next = maximize_linear(self.class, &cur.phi)?;
            if next.values() == cur.zeta.values() {
                return Ok((cur, Termination::FixedPoint));
            }
            self.iterations += 1;
            let next = self.evaluate(next)?;
            if next.obj < cur.obj - DECREASE_SLACK * cur.obj.abs() {
                return Err(Error::ObjectiveDecreased {
                    iter: self.iterations,
                    before: cur.obj,
                    after: next.obj,
                });
            }
            let rel = (next.obj - cur.obj) / cur.obj.abs().max(f64::MIN_POSITIVE);
            flat_steps = if rel < self.opts.tolerance { flat_steps + 1 } else { 0 };
            let prev = std::mem::replace(&mut cur, next);
            self.record(&cur);
            if best.as_ref().is_none_or(|b| prev.obj > b.obj) {
                best = Some(prev);
            }
            let hash = assignment_hash(&cur.zeta);
            let stop = if history.contains(&hash) {
                Some(Termination::Cycle)
            } else if flat_steps >= PLATEAU_STEPS {
                Some(Termination::Plateau)
            } else {
                None
            };
            if let Some(t) = stop {
                let chosen = match best {
                    Some(b) if b.obj > cur.obj => b,
                    _ => cur,
                };
                return Ok((chosen, t));
            }
            if history.len() == CYCLE_WINDOW {
                history.pop_front();
            }
            history.push_back(hash);
        }
        Err(Error::NotConverged(self.opts.max_iters))
    }

    /// First improving exchange of two unequal values, scanning cell pairs in
    /// index order. `m` is the dense operator matrix (`psi = m v`).
    fn exchange(&mut self, it: &Iterate, m: &[Vec<f64>]) -> Result<Option<Iterate>> {
        let g = *it.zeta.grid();
        let v = it.zeta.values();
        let psi = it.psi.values();
        let area = g.cell_area();
        let q = self.opts.q;
        let threshold = EXCHANGE_GAIN * it.obj.abs();
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                let d = v[b] - v[a];
                if d == 0.0 {
                    continue;
                }
                // a positive value may not move onto an excluded cell
                if (v[b] > 0.0 && it.phi.values()[a] == f64::NEG_INFINITY)
                    || (v[a] > 0.0 && it.phi.values()[b] == f64::NEG_INFINITY)
                {
                    continue;
                }
                let de = area * d * (psi[a] - psi[b]) + 0.5 * area * d * d * (m[a][a] + m[b][b] - 2.0 * m[a][b]);
                let di = area * d * (g.x2(g.ij(a).1) - g.x2(g.ij(b).1));
                if de - q * di > threshold {
                    let mut w = v.to_vec();
                    w.swap(a, b);
                    self.iterations += 1;
                    let next = self.evaluate(ScalarField::from_parts(g, w, FieldKind::Vorticity))?;
                    if next.obj <= it.obj {
                        continue;
                    }
                    self.record(&next);
                    return Ok(Some(next));
                }
            }
        }
        Ok(None)
    }

    fn operator_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let g = *self.kernel.grid();
        let mut m = vec![vec![0.0; g.len()]; g.len()];
        for j in 0..g.len() {
            let mut e = vec![0.0; g.len()];
            e[j] = 1.0;
            let col = self
                .kernel
                .apply(&ScalarField::from_parts(g, e, FieldKind::Vorticity))?;
            for (i, &c) in col.values().iter().enumerate() {
                m[i][j] = c;
            }
        }
        Ok(m)
    }
}

/// Ascent from an explicit starting member of the class.
///
/// On grids with at most 64 cells and outside symmetric mode, every fixed
/// point of the linear iteration is refined by improving pairwise exchanges,
/// after which the linear iteration resumes.
pub fn ascend_from(class: &MassProfile, init: ScalarField, opts: &AscentOptions) -> Result<MaximizerResult> {
    if !(opts.q > 0.0) || !opts.q.is_finite() {
        return Err(Error::InvalidConfig(format!("q must be positive, got {}", opts.q)));
    }
    if class.positive_count() == 0 {
        return Err(Error::EmptySupport);
    }
    let grid = *init.grid();
    let mut ascent = Ascent {
        class,
        opts,
        kernel: KernelEvaluator::new(grid, opts.kernel)?,
        log: Vec::new(),
        iterations: 0,
    };

    // the initial field is pushed into the class by one linear step if needed
    let mut zeta = init.with_kind(FieldKind::Vorticity);
    if crate::rearrange::profile_of(&zeta)?.values() != class.resized(grid.len())?.values() {
        let phi = ScalarField::from_parts(grid, zeta.values().to_vec(), FieldKind::Generic);
        zeta = maximize_linear(class, &phi)?;
    }
    let start = ascent.evaluate(zeta)?;
    ascent.record(&start);
    let (mut it, mut termination) = ascent.linear(start)?;
    if grid.len() <= EXCHANGE_LIMIT && !opts.symmetric {
        let m = ascent.operator_matrix()?;
        while let Some(better) = ascent.exchange(&it, &m)? {
            if ascent.iterations >= opts.max_iters {
                return Err(Error::NotConverged(opts.max_iters));
            }
            (it, termination) = ascent.linear(better)?;
        }
    }
    let Iterate {
        zeta,
        psi,
        phi,
        obj: objective,
    } = it;

    let core = support(&zeta, 0.0);
    if let Some(margin) = opts.boundary_margin {
        if core.edge_distance().is_some_and(|d| d < margin) {
            return Err(Error::SupportTouchesBoundary);
        }
    }
    let kappa = zeta.integral();
    let asymmetry = zeta.distance(&zeta.mirror(), 1.0)? / kappa;
    let monotone_violations = monotone_violations(&zeta, &phi);
    let mut r = MaximizerResult {
        zeta,
        psi,
        phi,
        objective,
        mu: 0.0,
        mu_gap: 0.0,
        core,
        iterations: ascent.iterations,
        converged: true,
        termination,
        asymmetry,
        monotone_violations,
        q: opts.q,
        log: ascent.log,
    };
    let m = multiplier(&r, opts.q)?;
    r.mu = m.mu;
    r.mu_gap = m.gap;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Multiplier {
    pub mu: f64,
    /// `max(0, max over non-core cells of (psi - q x2) - mu)`.
    pub gap: f64,
}

/// `mu = min over core cells of (psi - q x2)`, with the largest violation of
/// `psi - q x2 <= mu` outside the core.
pub fn multiplier(r: &MaximizerResult, q: f64) -> Result<Multiplier> {
    if r.core.is_empty() {
        return Err(Error::EmptySupport);
    }
    let g = *r.grid();
    let p = r.psi.values();
    let level = |k: usize| p[k] - q * g.x2(g.ij(k).1);
    let mu = r.core.cells().iter().map(|&k| level(k)).fold(f64::INFINITY, f64::min);
    let gap = (0..g.len())
        .filter(|&k| !r.core.contains(k))
        .map(|k| level(k) - mu)
        .fold(0.0, f64::max);
    Ok(Multiplier { mu, gap })
}

/// Number of adjacent inversions of `zeta` along the cells sorted by `phi`
/// (ties ordered by `zeta`). Zero exactly when `zeta = f(phi)` for some
/// nondecreasing `f`.
pub fn monotone_violations(zeta: &ScalarField, phi: &ScalarField) -> usize {
    let z = zeta.values();
    let p = phi.values();
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(z[a].total_cmp(&z[b])));
    order.windows(2).filter(|w| z[w[1]] < z[w[0]]).count()
}

/// Monotonicity diagnostic of a solver result against its own potential.
pub fn monotone_fit(r: &MaximizerResult) -> usize {
    monotone_violations(&r.zeta, &r.phi)
}

/// `h^2 sum zeta_i (psi_i - q x2_i - mu)`.
pub fn core_energy(r: &MaximizerResult, q: f64) -> Result<f64> {
    let mu = multiplier(r, q)?.mu;
    let g = *r.grid();
    let mut acc = 0.0;
    for &k in r.core.cells() {
        let x2 = g.x2(g.ij(k).1);
        acc += r.zeta.values()[k] * (r.psi.values()[k] - q * x2 - mu);
    }
    Ok(g.cell_area() * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::objective;
    use crate::grid::centroid;
    use proptest::prelude::*;

    fn small_opts(q: f64, symmetric: bool) -> AscentOptions {
        AscentOptions {
            symmetric,
            boundary_margin: None,
            kernel: KernelMode::Direct,
            ..AscentOptions::new(q)
        }
    }

    #[test]
    fn single_cell_lands_on_best_placement() {
        let g = Grid::half_plane_cells(10, 20, 0.1).unwrap();
        let class = MassProfile::from_values(vec![3.0], g.cell_area()).unwrap();
        let init = symmetric_decreasing_about(&class, g, [0.2, 1.5]).unwrap();
        let r = ascend_from(&class, init, &small_opts(2.0, false)).unwrap();

        // exhaustive placement
        let k = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let mut best = f64::NEG_INFINITY;
        for c in 0..g.len() {
            let mut v = vec![0.0; g.len()];
            v[c] = 3.0;
            let f = ScalarField::new(g, v, FieldKind::Vorticity).unwrap();
            best = best.max(objective(&k, &f, 2.0).unwrap());
        }
        assert!((r.objective - best).abs() < 1e-12 * best.abs());
        // self-energy is largest away from the wall, so the balance is interior
        assert_eq!(r.core.len(), 1);
        assert_eq!(core_energy(&r, 2.0).unwrap(), 0.0);
        assert_eq!(
            r.mu,
            r.psi.values()[r.core.cells()[0]] - 2.0 * g.x2(g.ij(r.core.cells()[0]).1)
        );
    }

    #[test]
    fn fixed_point_is_monotone_and_consistent() {
        let g = Grid::half_plane_cells(32, 16, 1.0 / 32.0).unwrap();
        let class = Profile::Disk { radius: 1.0 }.scaled_class(0.1, g.h).unwrap();
        let init = symmetric_decreasing_about(&class, g, [0.0, 0.25]).unwrap();
        let r = ascend_from(&class, init, &AscentOptions::new(1.0)).unwrap();
        assert!(r.converged);
        assert_eq!(monotone_fit(&r), 0);
        assert!(r.mu_gap <= 1e-8 * r.mu.abs(), "{}", r.mu_gap);
        assert!(core_energy(&r, 1.0).unwrap() >= 0.0);
        assert!(r.asymmetry < 0.05);
        assert_eq!(
            crate::rearrange::profile_of(&r.zeta).unwrap().values(),
            class.resized(g.len()).unwrap().values()
        );
        for w in r.log.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-9 * w[0].objective.abs());
        }
    }

    #[test]
    fn shuffled_field_has_violations() {
        let g = Grid::half_plane_cells(4, 2, 0.5).unwrap();
        let phi = ScalarField::from_fn(g, FieldKind::Generic, |x| x[1]);
        let good = ScalarField::from_fn(g, FieldKind::Vorticity, |x| if x[1] > 0.5 { 1.0 } else { 0.0 });
        let bad = ScalarField::from_fn(g, FieldKind::Vorticity, |x| if x[1] < 0.5 { 1.0 } else { 0.0 });
        assert_eq!(monotone_violations(&good, &phi), 0);
        assert!(monotone_violations(&bad, &phi) > 0);
    }

    #[test]
    fn one_step_is_monotone_in_its_own_potential() {
        let g = Grid::half_plane_cells(8, 4, 0.25).unwrap();
        let init = ScalarField::from_fn(g, FieldKind::Vorticity, |x| {
            ((x[0] * 7.3 + x[1] * 3.1).sin() + 1.0) * 0.5
        });
        let class = MassProfile::from_field(&init).unwrap();
        let k = KernelEvaluator::new(g, KernelMode::Direct).unwrap();
        let opts = small_opts(1.0, false);
        let phi = potential(&k.apply(&init).unwrap(), &opts);
        let next = maximize_linear(&class, &phi).unwrap();
        assert_eq!(monotone_violations(&next, &phi), 0);
    }

    #[test]
    fn centroid_near_point_vortex_height() {
        let cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.05, 1.0);
        let r = ascend(&cfg).unwrap();
        let c = centroid(&r.zeta).unwrap();
        assert!((c[1] - 0.25).abs() < 0.025, "{c:?}");
        assert!(c[0].abs() < 1e-12);
    }

    #[test]
    fn tiny_window_touches_boundary() {
        let mut cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.2, 1.0);
        cfg.grid = Some(GridSpec {
            half_width: 0.25,
            height: 0.35,
            nx: 20,
        });
        assert!(matches!(ascend(&cfg), Err(Error::SupportTouchesBoundary)));
    }

    #[test]
    fn large_constraint_ball_is_inactive() {
        let mut cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.1, 1.0);
        let free = ascend(&cfg).unwrap();
        cfg.r0 = Some(0.2);
        let constrained = ascend(&cfg).unwrap();
        assert_eq!(free.zeta.values(), constrained.zeta.values());
    }

    #[test]
    fn tight_constraint_ball_confines_support() {
        let mut cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.1, 1.0);
        cfg.r0 = Some(0.11);
        let r = ascend(&cfg).unwrap();
        let c = cfg.expected_center();
        for &k in r.core.cells() {
            let x = r.grid().center(k);
            assert!((x[0] - c[0]).hypot(x[1] - c[1]) <= 0.11 + 1e-12);
        }
    }

    #[test]
    fn invalid_config() {
        let mut cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.1, 1.0);
        cfg.q = -1.0;
        assert!(ascend(&cfg).is_err());
        cfg.q = 1.0;
        cfg.grid = Some(GridSpec {
            half_width: 1.0,
            height: 1.0,
            nx: 40,
        });
        assert!(matches!(ascend(&cfg), Err(Error::GridTooCoarse { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn every_iterate_stays_in_class(seed in 0u64..1000, q in 0.3f64..3.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::half_plane_cells(12, 6, 0.1).unwrap();
            let vals: Vec<f64> = (0..g.len()).map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.5..2.0) } else { 0.0 }).collect();
            prop_assume!(vals.iter().any(|v| *v > 0.0));
            let init = ScalarField::new(g, vals, FieldKind::Vorticity).unwrap();
            let class = MassProfile::from_field(&init).unwrap();
            let r = ascend_from(&class, init, &small_opts(q, false)).unwrap();
            prop_assert_eq!(crate::rearrange::profile_of(&r.zeta).unwrap(), class);
            for w in r.log.windows(2) {
                prop_assert!(w[1].objective >= w[0].objective - 1e-9 * w[0].objective.abs());
            }
        }
    }
}
