//! eps-sweeps of the solver and trend checks on the concentration estimates:
//! diameter and centroid of the core, convergence of the rescaled profile,
//! and boundedness of the compensated objective, multiplier and core energy.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{centroid, diameter, support, FieldKind, Grid, Point, ScalarField};
use crate::kernel::{KernelEvaluator, KernelMode};
use crate::profile::Profile;
use crate::solver::{ascend, MaximizerResult, SolverConfig, Termination};

/// Relative slack for monotone trends.
pub const TREND_SLACK: f64 = 0.2;
/// Allowed spread of a bounded quantity, relative to its median magnitude.
pub const SPREAD_SLACK: f64 = 0.5;

/// Quantities recomputable from a converged field alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowMetrics {
    pub objective: f64,
    pub diameter: f64,
    pub diameter_over_eps: f64,
    pub centroid: Point,
    pub centroid_error: f64,
    pub mu: f64,
    pub mu_compensated: f64,
    pub objective_compensated: f64,
    pub core_energy: f64,
    pub profile_l2: f64,
    pub profile_lp: f64,
    pub asymmetry: f64,
    pub lambda_x2: f64,
    pub stream_height_bound: f64,
    pub stream_decay_bound: f64,
    pub support_cells: usize,
    pub mu_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub metrics: Option<RowMetrics>,
    /// Solver error for a failed row.
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub profile: String,
    pub kappa: f64,
    pub q: f64,
    /// Second L^p exponent.
    pub p: f64,
    pub center: Point,
    /// Profile radius used for the diameter limit.
    pub radius: f64,
    pub rows: Vec<SweepRow>,
    /// Converged results, aligned with `rows`.
    pub results: Vec<Option<MaximizerResult>>,
}

impl SweepReport {
    pub fn failed_rows(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.error.is_some()).map(|r| r.eps).collect()
    }

    fn metrics(&self) -> Vec<(f64, &RowMetrics)> {
        self.rows
            .iter()
            .filter_map(|r| r.metrics.as_ref().map(|m| (r.eps, m)))
            .collect()
    }
}

/// Sorts the list descending and rejects duplicates and invalid values.
pub fn normalize_eps_list(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.is_empty() {
        return Err(Error::BadEpsList);
    }
    let mut v = eps.to_vec();
    if let Some(&e) = v.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::EpsOutOfRange(e));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadEpsList);
    }
    Ok(v)
}

/// Solves for every `eps` (concurrently) with the other settings of
/// `template`. A failing solve is kept as a flagged row.
pub fn run_sweep(eps_list: &[f64], template: &SolverConfig, p: f64) -> Result<SweepReport> {
    let eps_list = normalize_eps_list(eps_list)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let solved: Vec<(SweepRow, Option<MaximizerResult>)> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut cfg = template.clone();
            cfg.eps = eps;
            let grid = cfg.resolve_grid();
            let outcome = ascend(&cfg).and_then(|r| {
                let m = row_metrics(&r.zeta, eps, cfg.q, &cfg.profile, p)?;
                Ok((r, m))
            });
            let (nx, ny, h) = grid.map_or((0, 0, f64::NAN), |g| (g.nx, g.ny, g.h));
            match outcome {
                Ok((r, m)) => (
                    SweepRow {
                        eps,
                        nx,
                        ny,
                        h,
                        iterations: r.iterations,
                        termination: Some(r.termination),
                        metrics: Some(m),
                        error: None,
                    },
                    Some(r),
                ),
                Err(e) => (
                    SweepRow {
                        eps,
                        nx,
                        ny,
                        h,
                        iterations: 0,
                        termination: None,
                        metrics: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (rows, results) = solved.into_iter().unzip();
    Ok(SweepReport {
        profile: template.profile.name(),
        kappa: template.profile.kappa(),
        q: template.q,
        p,
        center: template.expected_center(),
        radius: template.profile.support_radius(),
        rows,
        results,
    })
}

/// Every report metric of a converged field.
pub fn row_metrics(zeta: &ScalarField, eps: f64, q: f64, profile: &Profile, p: f64) -> Result<RowMetrics> {
    let g = *zeta.grid();
    let kernel = KernelEvaluator::new(g, KernelMode::Fast)?;
    let psi = kernel.apply(zeta)?;
    let kappa = profile.kappa();
    let core = support(zeta, 0.0);
    let objective = crate::functionals::energy_with_stream(zeta, &psi) - q * crate::functionals::impulse(zeta);
    let level = |k: usize| psi.values()[k] - q * g.x2(g.ij(k).1);
    let mu = core.cells().iter().map(|&k| level(k)).fold(f64::INFINITY, f64::min);
    if !mu.is_finite() {
        return Err(Error::EmptySupport);
    }
    let mu_gap = (0..g.len())
        .filter(|&k| !core.contains(k))
        .map(|k| level(k) - mu)
        .fold(0.0, f64::max);
    let core_e = g.cell_area()
        * core
            .cells()
            .iter()
            .map(|&k| zeta.values()[k] * (level(k) - mu))
            .sum::<f64>();
    let diam = diameter(&core)?;
    let c = centroid(zeta)?;
    let center = [0.0, kappa / (4.0 * PI * q)];
    let nu = rescaled_profile(zeta, eps, c, profile.support_radius(), kappa)?;
    let star = profile.symmetric_decreasing_on(*nu.grid())?;
    let asymmetry = zeta.distance(&zeta.mirror(), 1.0)? / zeta.integral();
    let (hb, db) = stream_bounds(&kernel, zeta, eps, p)?;
    let ln_eps = eps.ln();
    Ok(RowMetrics {
        objective,
        diameter: diam,
        diameter_over_eps: diam / eps,
        centroid: c,
        centroid_error: (c[0] - center[0]).hypot(c[1] - center[1]),
        mu,
        mu_compensated: mu + kappa / (2.0 * PI) * ln_eps,
        objective_compensated: objective + kappa * kappa / (4.0 * PI) * ln_eps,
        core_energy: core_e,
        profile_l2: nu.distance(&star, 2.0)?,
        profile_lp: nu.distance(&star, p)?,
        asymmetry,
        // lambda = eps q and x2 of w(x) = eps^2 zeta(eps x) is x2 / eps
        lambda_x2: (eps * q) * (c[1] / eps),
        stream_height_bound: hb,
        stream_decay_bound: db,
        support_cells: core.len(),
        mu_gap,
    })
}

/// `nu(x) = eps^2 zeta(eps x + c)` sampled by nearest cell on an
/// origin-centered grid of spacing `h / eps` that covers both the rescaled
/// core and the disk of radius `radius`, renormalized to `kappa`.
pub fn rescaled_profile(zeta: &ScalarField, eps: f64, c: Point, radius: f64, kappa: f64) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let g = *zeta.grid();
    let reach = support(zeta, 0.0)
        .cells()
        .iter()
        .map(|&k| {
            let x = g.center(k);
            (x[0] - c[0]).abs().max((x[1] - c[1]).abs())
        })
        .fold(0.0, f64::max)
        / eps;
    let hn = g.h / eps;
    let half = ((reach.max(radius) / hn).ceil() as usize + 2).max(1);
    let ng = Grid::centered(2 * half, 2 * half, hn)?;
    let nu = ScalarField::from_fn(ng, FieldKind::Vorticity, |x| {
        g.locate([eps * x[0] + c[0], eps * x[1] + c[1]])
            .map_or(0.0, |k| eps * eps * zeta.values()[k])
    });
    nu.renormalized(kappa)
}

/// Probe points: `x2 >= 1` for the height bound, `|x1| >= 1` for the decay bound.
fn probes() -> (Vec<Point>, Vec<Point>) {
    let mut high = Vec::new();
    for x2 in [1.0, 2.0, 4.0, 8.0] {
        for x1 in [-4.0, -1.0, 0.0, 1.0, 4.0] {
            high.push([x1, x2]);
        }
    }
    let mut wide = Vec::new();
    for x1 in [1.0, 2.0, 4.0, 8.0] {
        for x2 in [0.1, 0.25, 0.5, 1.0] {
            wide.push([x1, x2]);
            wide.push([-x1, x2]);
        }
    }
    (high, wide)
}

/// `sup (psi + kappa/(2 pi) ln eps) / (1 + ln x2)` over the high probes and
/// `sup psi eps^(2 - 2/p) |x1|^(1/(2p)) / x2` over the wide probes.
fn stream_bounds(kernel: &KernelEvaluator, zeta: &ScalarField, eps: f64, p: f64) -> Result<(f64, f64)> {
    let kappa = zeta.integral();
    let (high, wide) = probes();
    let mut hb = f64::NEG_INFINITY;
    for x in high {
        let psi = kernel.stream_at(zeta, x)?;
        hb = hb.max((psi + kappa / (2.0 * PI) * eps.ln()) / (1.0 + x[1].ln()));
    }
    let mut db = f64::NEG_INFINITY;
    for x in wide {
        let psi = kernel.stream_at(zeta, x)?;
        db = db.max(psi * eps.powf(2.0 - 2.0 / p) * x[0].abs().powf(0.5 / p) / x[1]);
    }
    Ok((hb, db))
}

/// Upper bounds on the stream function of a single result, as reported in a sweep row.
pub fn stream_upper_check(r: &MaximizerResult, eps: f64, p: f64) -> Result<(f64, f64)> {
    let kernel = KernelEvaluator::new(*r.grid(), KernelMode::Fast)?;
    stream_bounds(&kernel, &r.zeta, eps, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    InsufficientData,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, pass: bool, detail: String) -> Self {
        let status = if pass { Status::Pass } else { Status::Fail };
        Self {
            check: check.into(),
            status,
            detail,
        }
    }

    fn insufficient(check: &str, n: usize) -> Self {
        Self {
            check: check.into(),
            status: Status::InsufficientData,
            detail: format!("insufficient points: {n} converged rows"),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

const MIN_ROWS: usize = 3;

/// `x_{k+1} <= (1 + slack) x_k` for consecutive entries.
fn nonincreasing(xs: &[f64], slack: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(max - min, |median|)`.
fn spread(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo, median(xs).abs())
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

/// `diam / eps` stays below twice its first value, and for built-in profiles
/// the last value lies within 25% of the diameter `2a` of `supp rho*`.
pub fn check_diameter(report: &SweepReport) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("diameter", rows.len());
    }
    let d: Vec<f64> = rows.iter().map(|(_, m)| m.diameter_over_eps).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let bounded = max <= 2.0 * d[0];
    let limit = 2.0 * report.radius;
    let last = *d.last().unwrap();
    let near = (0.75 * limit..=1.25 * limit).contains(&last);
    Verdict::new(
        "diameter",
        bounded && near,
        format!(
            "diam/eps = [{}]; limit {limit}, band [{}, {}]",
            fmt_list(&d),
            0.75 * limit,
            1.25 * limit
        ),
    )
}

/// `|centroid - x_hat|` nonincreasing up to the trend slack, last row within
/// `max(0.1 x_hat2, 4h)`.
pub fn check_centroid(report: &SweepReport) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("centroid", rows.len());
    }
    let e: Vec<f64> = rows.iter().map(|(_, m)| m.centroid_error).collect();
    let last_h = report
        .rows
        .iter()
        .rev()
        .find(|r| r.metrics.is_some())
        .map_or(0.0, |r| r.h);
    let tol = (0.1 * report.center[1]).max(4.0 * last_h);
    let last = *e.last().unwrap();
    Verdict::new(
        "centroid",
        nonincreasing(&e, TREND_SLACK) && last <= tol,
        format!("|c - x_hat| = [{}]; final tolerance {tol:.6}", fmt_list(&e)),
    )
}

/// `||nu - rho*||_2` nonincreasing up to the trend slack, last row at most
/// `0.2 ||rho*||_2`.
pub fn check_profile(report: &SweepReport, profile: &Profile) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("profile", rows.len());
    }
    let d: Vec<f64> = rows.iter().map(|(_, m)| m.profile_l2).collect();
    let norm = profile_l2_norm(profile);
    let last = *d.last().unwrap();
    Verdict::new(
        "profile",
        nonincreasing(&d, TREND_SLACK) && last <= 0.2 * norm,
        format!("||nu - rho*||_2 = [{}]; final limit {:.6}", fmt_list(&d), 0.2 * norm),
    )
}

/// `||rho*||_2 = ||rho||_2`.
pub fn profile_l2_norm(profile: &Profile) -> f64 {
    match profile {
        Profile::Disk { radius } => (PI * radius * radius).sqrt(),
        // int (1 - r/a)^2 = pi a^2 / 6
        Profile::Cone { radius } => (PI * radius * radius / 6.0).sqrt(),
        Profile::Sampled { field, .. } => crate::grid::lp_norm(field, 2.0).unwrap_or(f64::NAN),
    }
}

/// Compensated objective, compensated multiplier and core energy each have a
/// spread within half their median magnitude; `mu >= 0` on every row.
pub fn check_bounds(report: &SweepReport) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("bounds", rows.len());
    }
    let cols: [(&str, Vec<f64>); 3] = [
        (
            "objective+k^2/(4pi)ln eps",
            rows.iter().map(|(_, m)| m.objective_compensated).collect(),
        ),
        ("mu+k/(2pi)ln eps", rows.iter().map(|(_, m)| m.mu_compensated).collect()),
        ("core_energy", rows.iter().map(|(_, m)| m.core_energy).collect()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, xs) in &cols {
        let (s, med) = spread(xs);
        let good = s <= SPREAD_SLACK * med;
        ok &= good;
        parts.push(format!(
            "{name}: [{}] spread {s:.6} vs {:.6}",
            fmt_list(xs),
            SPREAD_SLACK * med
        ));
    }
    let mus: Vec<f64> = rows.iter().map(|(_, m)| m.mu).collect();
    let nonneg = mus.iter().all(|&m| m >= 0.0);
    ok &= nonneg;
    parts.push(format!("mu: [{}]", fmt_list(&mus)));
    Verdict::new("bounds", ok, parts.join("; "))
}

/// `lambda x2^w` with `lambda = eps q` on the last row within 10% of `kappa / (4 pi)`.
pub fn check_corollary(report: &SweepReport) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("corollary", rows.len());
    }
    let v: Vec<f64> = rows.iter().map(|(_, m)| m.lambda_x2).collect();
    let target = report.kappa / (4.0 * PI);
    let last = *v.last().unwrap();
    Verdict::new(
        "corollary",
        (last - target).abs() <= 0.1 * target,
        format!("lambda x2 = [{}]; limit {target:.6}", fmt_list(&v)),
    )
}

/// The stream-function bounds are upper bounds, so each sup must not grow
/// past its value on the first (largest eps) row by more than half the
/// median magnitude.
pub fn check_stream(report: &SweepReport) -> Verdict {
    let rows = report.metrics();
    if rows.len() < MIN_ROWS {
        return Verdict::insufficient("stream", rows.len());
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, xs) in [
        (
            "height",
            rows.iter().map(|(_, m)| m.stream_height_bound).collect::<Vec<f64>>(),
        ),
        ("decay", rows.iter().map(|(_, m)| m.stream_decay_bound).collect()),
    ] {
        let cap = xs[0] + SPREAD_SLACK * median(&xs).abs();
        let good = xs.iter().all(|&x| x <= cap);
        ok &= good;
        parts.push(format!("{name}: [{}] cap {cap:.6}", fmt_list(&xs)));
    }
    Verdict::new("stream", ok, parts.join("; "))
}

/// All trend checks of a report, in a fixed order.
pub fn all_checks(report: &SweepReport, profile: &Profile) -> Vec<Verdict> {
    vec![
        check_diameter(report),
        check_centroid(report),
        check_profile(report, profile),
        check_bounds(report),
        check_corollary(report),
        check_stream(report),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_report() -> SweepReport {
        SweepReport {
            profile: "disk(1)".into(),
            kappa: PI,
            q: 1.0,
            p: 4.0,
            center: [0.0, 0.25],
            radius: 1.0,
            rows: Vec::new(),
            results: Vec::new(),
        }
    }

    fn row(eps: f64, m: RowMetrics) -> SweepRow {
        SweepRow {
            eps,
            nx: 8,
            ny: 4,
            h: eps / 8.0,
            iterations: 1,
            termination: Some(Termination::FixedPoint),
            metrics: Some(m),
            error: None,
        }
    }

    fn metrics(eps: f64, err: f64) -> RowMetrics {
        RowMetrics {
            objective: 1.0,
            diameter: 2.0 * eps,
            diameter_over_eps: 2.0,
            centroid: [0.0, 0.25 + err],
            centroid_error: err,
            mu: 1.0,
            mu_compensated: 1.0,
            objective_compensated: -1.0,
            core_energy: 0.1,
            profile_l2: 0.1,
            profile_lp: 0.1,
            asymmetry: 0.0,
            lambda_x2: 0.25 + err,
            stream_height_bound: -1.0,
            stream_decay_bound: 0.1,
            support_cells: 10,
            mu_gap: 0.0,
        }
    }

    #[test]
    fn eps_list_validation() {
        assert_eq!(normalize_eps_list(&[0.1, 0.4, 0.2]).unwrap(), vec![0.4, 0.2, 0.1]);
        assert_eq!(normalize_eps_list(&[0.1, 0.1]), Err(Error::BadEpsList));
        assert_eq!(normalize_eps_list(&[]), Err(Error::BadEpsList));
        assert!(normalize_eps_list(&[0.0]).is_err());
    }

    #[test]
    fn empty_report_is_insufficient() {
        let r = empty_report();
        for v in all_checks(&r, &Profile::Disk { radius: 1.0 }) {
            assert_eq!(v.status, Status::InsufficientData, "{}", v.check);
        }
    }

    #[test]
    fn synthetic_report_passes_and_negative_control_fails() {
        let mut r = empty_report();
        for (eps, err) in [(0.4, 0.04), (0.2, 0.02), (0.1, 0.01), (0.05, 0.005)] {
            r.rows.push(row(eps, metrics(eps, err)));
        }
        for v in all_checks(&r, &Profile::Disk { radius: 1.0 }) {
            assert!(v.passed(), "{v:?}");
        }
        let last = r.rows.last_mut().unwrap().metrics.as_mut().unwrap();
        last.centroid[1] *= 2.0;
        last.centroid_error = (last.centroid[1] - 0.25).abs();
        assert_eq!(check_centroid(&r).status, Status::Fail);
    }

    #[test]
    fn rescaled_copy_at_unit_eps() {
        let g = Grid::half_plane_cells(16, 8, 0.125).unwrap();
        let z = ScalarField::from_fn(g, FieldKind::Vorticity, |x| {
            if x[0].abs() < 0.3 && (x[1] - 0.5).abs() < 0.3 {
                1.0
            } else {
                0.0
            }
        });
        let kappa = z.integral();
        let nu = rescaled_profile(&z, 1.0, [0.0, 0.5], 0.1, kappa).unwrap();
        assert!((nu.integral() - kappa).abs() < 1e-12 * kappa);
        // same cells, recentred
        let mut a: Vec<f64> = z.values().iter().copied().filter(|v| *v > 0.0).collect();
        let mut b: Vec<f64> = nu.values().iter().copied().filter(|v| *v > 0.0).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn single_eps_sweep_is_valid_but_insufficient() {
        let cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.2, 1.0);
        let r = run_sweep(&[0.2], &cfg, 4.0).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].metrics.is_some());
        assert_eq!(check_centroid(&r).status, Status::InsufficientData);
        let nu_max = {
            let res = r.results[0].as_ref().unwrap();
            let m = r.rows[0].metrics.as_ref().unwrap();
            rescaled_profile(&res.zeta, 0.2, m.centroid, 1.0, PI).unwrap().max()
        };
        assert!(nu_max <= 1.1);
    }

    #[test]
    fn failed_row_is_flagged() {
        let mut cfg = SolverConfig::new(Profile::Disk { radius: 1.0 }, 0.2, 1.0);
        cfg.grid = Some(crate::solver::GridSpec {
            half_width: 0.25,
            height: 0.35,
            nx: 20,
        });
        let r = run_sweep(&[0.2], &cfg, 4.0).unwrap();
        assert_eq!(r.failed_rows(), vec![0.2]);
        assert_eq!(r.rows[0].error.as_deref(), Some("support touches boundary"));
    }
}
