//! Reference vorticity profiles `rho` and their scaled versions
//! `rho_eps(x) = eps^-2 rho(x / eps)`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FieldKind, Grid, Point, ScalarField};
use crate::rearrange::{symmetric_decreasing, MassProfile};

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// Indicator of the disk of radius `a`.
    Disk { radius: f64 },
    /// `max(0, 1 - |x| / a)`.
    Cone { radius: f64 },
    /// User-supplied samples on a centered lattice; evaluated by nearest sample.
    Sampled { field: ScalarField, name: String },
}

impl Profile {
    /// Parses `disk(a)`, `cone(a)` or a path to a CSV file with `x1,x2,value` rows.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let builtin = |prefix: &str| -> Option<Result<f64>> {
            let rest = s.strip_prefix(prefix)?.strip_suffix(')')?;
            Some(
                rest.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{spec}: {e}")))
                    .and_then(|a| {
                        if a > 0.0 && a.is_finite() {
                            Ok(a)
                        } else {
                            Err(Error::InvalidConfig(format!("profile radius must be positive: {spec}")))
                        }
                    }),
            )
        };
        if let Some(a) = builtin("disk(") {
            return Ok(Profile::Disk { radius: a? });
        }
        if let Some(a) = builtin("cone(") {
            return Ok(Profile::Cone { radius: a? });
        }
        let path = Path::new(s);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            return Self::from_csv(&text, s);
        }
        Err(Error::UnknownProfile(spec.to_string()))
    }

    /// Reads `x1,x2,value` rows sampled on a uniform lattice. An optional
    /// header line is skipped.
    pub fn from_csv(text: &str, name: &str) -> Result<Self> {
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected x1,x2,value", n + 1)));
            }
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(v) => pts.push((v[0], v[1], v[2])),
                Err(_) if pts.is_empty() && n == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", n + 1))),
            }
        }
        if let Some(&(_, _, v)) = pts.iter().find(|p| p.2 < 0.0 || !p.2.is_finite()) {
            return Err(Error::NegativeValue { cell: 0, value: v });
        }
        if !pts.iter().any(|p| p.2 > 0.0) {
            return Err(Error::ZeroMass);
        }
        let h = lattice_spacing(pts.iter().map(|p| p.0))?.min(lattice_spacing(pts.iter().map(|p| p.1))?);
        let (min1, max1) = minmax(pts.iter().map(|p| p.0));
        let (min2, max2) = minmax(pts.iter().map(|p| p.1));
        let span1 = ((max1 - min1) / h).round() as usize + 1;
        let span2 = ((max2 - min2) / h).round() as usize + 1;
        let (nx, ny) = (span1 + span1 % 2, span2 + span2 % 2);
        let grid = Grid::centered(nx, ny, h)?;
        let mut vals = vec![0.0; grid.len()];
        for &(x1, x2, v) in &pts {
            let i = ((x1 - min1) / h).round() as usize;
            let j = ((x2 - min2) / h).round() as usize;
            vals[grid.index(i, j)] = v;
        }
        let field = ScalarField::new(grid, vals, FieldKind::Vorticity)?;
        Ok(Profile::Sampled {
            field,
            name: name.to_string(),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Disk { radius } => format!("disk({radius})"),
            Profile::Cone { radius } => format!("cone({radius})"),
            Profile::Sampled { name, .. } => name.clone(),
        }
    }

    /// `kappa = int rho`.
    pub fn kappa(&self) -> f64 {
        match self {
            Profile::Disk { radius } => PI * radius * radius,
            Profile::Cone { radius } => PI * radius * radius / 3.0,
            Profile::Sampled { field, .. } => field.integral(),
        }
    }

    /// Radius `a` of the disk whose area equals `|supp rho|`.
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Disk { radius } | Profile::Cone { radius } => *radius,
            Profile::Sampled { field, .. } => {
                let n = field.values().iter().filter(|&&v| v > 0.0).count();
                (n as f64 * field.grid().cell_area() / PI).sqrt()
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Profile::Disk { .. } | Profile::Cone { .. } => 1.0,
            Profile::Sampled { field, .. } => field.max(),
        }
    }

    /// Sample spacing of user profiles; built-ins are analytic.
    pub fn reference_spacing(&self) -> Option<f64> {
        match self {
            Profile::Sampled { field, .. } => Some(field.grid().h),
            _ => None,
        }
    }

    /// Whether `rho` is already radial and decreasing about the origin.
    pub fn is_radial(&self) -> bool {
        !matches!(self, Profile::Sampled { .. })
    }

    /// `rho(x)` for a profile centered on the origin.
    pub fn density(&self, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        match self {
            Profile::Disk { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Cone { radius } => (1.0 - r / radius).max(0.0),
            Profile::Sampled { field, .. } => field.grid().locate(x).map_or(0.0, |k| field.values()[k]),
        }
    }

    /// `eps^-2 rho((x - center) / eps)` on `grid`, renormalized so the
    /// integral equals `kappa` exactly.
    pub fn sample_scaled(&self, eps: f64, grid: Grid, center: Point) -> Result<ScalarField> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::EpsOutOfRange(eps));
        }
        if let Some(h_ref) = self.reference_spacing() {
            if grid.h > eps * h_ref * (1.0 + 1e-12) {
                return Err(Error::GridTooCoarse {
                    h: grid.h,
                    needed: eps * h_ref,
                });
            }
        }
        let inv = 1.0 / eps;
        let f = ScalarField::from_fn(grid, FieldKind::Vorticity, |x| {
            inv * inv * self.density([(x[0] - center[0]) * inv, (x[1] - center[1]) * inv])
        });
        f.renormalized(self.kappa())
    }

    /// The discrete rearrangement class of `rho_eps` on cells of side `h`:
    /// `rho_eps` sampled on an origin-centered lattice that covers its support.
    pub fn scaled_class(&self, eps: f64, h: f64) -> Result<MassProfile> {
        let reach = match self {
            Profile::Sampled { field, .. } => {
                let g = field.grid();
                0.5 * (g.nx.max(g.ny) as f64) * g.h * std::f64::consts::SQRT_2
            }
            _ => self.support_radius(),
        };
        let half = ((eps * reach / h).ceil() as usize + 2).max(1);
        let grid = Grid::centered(2 * half, 2 * half, h)?;
        let f = self.sample_scaled(eps, grid, [0.0, 0.0])?;
        MassProfile::from_field(&f)
    }

    /// `rho*` sampled on `grid` (origin-centered), with integral `kappa`.
    pub fn symmetric_decreasing_on(&self, grid: Grid) -> Result<ScalarField> {
        if self.is_radial() {
            return self.sample_scaled(1.0, grid, [0.0, 0.0]);
        }
        let class = self.scaled_class(1.0, grid.h)?;
        symmetric_decreasing(&class, grid)
    }
}

fn minmax(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn lattice_spacing(coords: impl Iterator<Item = f64>) -> Result<f64> {
    let mut xs: Vec<f64> = coords.collect();
    xs.sort_by(f64::total_cmp);
    let h = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 1e-9)
        .fold(f64::INFINITY, f64::min);
    if !h.is_finite() {
        return Err(Error::Parse(
            "cannot infer lattice spacing from fewer than two distinct coordinates".into(),
        ));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_builtins() {
        assert_eq!(Profile::parse("disk(1)").unwrap(), Profile::Disk { radius: 1.0 });
        assert_eq!(Profile::parse(" cone(0.5) ").unwrap(), Profile::Cone { radius: 0.5 });
        assert!(matches!(Profile::parse("disk(-1)"), Err(Error::InvalidConfig(_))));
        assert!(matches!(Profile::parse("blob(1)"), Err(Error::UnknownProfile(_))));
    }

    #[test]
    fn disk_mass_band_and_renormalization() {
        let p = Profile::Disk { radius: 1.0 };
        let h = 1.0 / 16.0;
        let g = Grid::centered(40, 40, h).unwrap();
        let raw = ScalarField::from_fn(g, FieldKind::Vorticity, |x| p.density(x));
        let m = raw.integral();
        assert!(m >= PI * (1.0 - 2.0 * h).powi(2) && m <= PI * (1.0 + 2.0 * h).powi(2));
        let f = p.sample_scaled(1.0, g, [0.0, 0.0]).unwrap();
        assert!((f.integral() - PI).abs() < 1e-12);
    }

    #[test]
    fn cone_kappa_matches_quadrature() {
        // polar midpoint quadrature of (1 - r) over the unit disk
        let n = 20000;
        let dr = 1.0 / n as f64;
        let q: f64 = (0..n)
            .map(|k| {
                let r = (k as f64 + 0.5) * dr;
                2.0 * PI * (1.0 - r) * r * dr
            })
            .sum();
        let p = Profile::Cone { radius: 1.0 };
        assert!((p.kappa() - q).abs() < 1e-8);
        let g = Grid::centered(48, 48, 1.0 / 20.0).unwrap();
        let f = p.sample_scaled(1.0, g, [0.0, 0.0]).unwrap();
        assert!((f.integral() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_norms() {
        let p = Profile::Cone { radius: 1.0 };
        for eps in [0.5, 0.25, 0.1] {
            let class = p.scaled_class(eps, eps / 16.0).unwrap();
            assert!((class.kappa() - p.kappa()).abs() < 1e-12);
            let top = class.values()[0];
            assert!((top * eps * eps - 1.0).abs() < 0.1, "{top}");
        }
    }

    #[test]
    fn csv_profiles() {
        let text = "x1,x2,value\n0.0,0.0,1.0\n0.5,0.0,2.0\n0.0,0.5,0.5\n0.5,0.5,0.0\n";
        let p = Profile::from_csv(text, "inline").unwrap();
        assert!((p.kappa() - 3.5 * 0.25).abs() < 1e-12);
        assert_eq!(p.reference_spacing(), Some(0.5));
        assert_eq!(p.max_value(), 2.0);
        let neg = "0,0,1\n0.5,0,-1\n";
        assert!(matches!(
            Profile::from_csv(neg, "neg"),
            Err(Error::NegativeValue { .. })
        ));
        assert_eq!(Profile::from_csv("0,0,0\n1,0,0\n", "z"), Err(Error::ZeroMass));
        let g = Grid::centered(4, 4, 0.5).unwrap();
        assert!(matches!(
            p.sample_scaled(0.5, g, [0.0, 0.0]),
            Err(Error::GridTooCoarse { .. })
        ));
        let fine = Grid::centered(8, 8, 0.25).unwrap();
        let f = p.sample_scaled(0.5, fine, [0.0, 0.0]).unwrap();
        assert!((f.integral() - p.kappa()).abs() < 1e-12);
    }
}
