//! On-disk formats: field dumps (a JSON header next to a little-endian `f64`
//! payload), the sweep report and iteration log as CSV, trajectories as CSV
//! and verdicts as JSON.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives the exact values that were written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{RowMetrics, SweepReport, SweepRow};
use crate::dynamics::TrajectorySample;
use crate::error::{Error, Result};
use crate::grid::{FieldKind, Grid, ScalarField};

/// Metadata stored next to a field payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "H")]
    pub height: f64,
    pub half_plane: bool,
    pub kind: FieldKind,
    pub eps: f64,
    pub q: f64,
    pub kappa: f64,
    pub profile: String,
    pub p: f64,
}

impl FieldHeader {
    pub fn new(field: &ScalarField, eps: f64, q: f64, kappa: f64, profile: &str, p: f64) -> Self {
        let g = field.grid();
        Self {
            nx: g.nx,
            ny: g.ny,
            h: g.h,
            half_width: g.half_width(),
            height: g.height(),
            half_plane: g.half_plane,
            kind: field.kind(),
            eps,
            q,
            kappa,
            profile: profile.to_string(),
            p,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.half_plane {
            Grid::half_plane_cells(self.nx, self.ny, self.h)
        } else {
            Grid::centered(self.nx, self.ny, self.h)
        }
    }
}

/// File stem of the dump for one sweep row.
pub fn field_stem(eps: f64) -> String {
    format!("eps_{eps}")
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>.bin`; returns the header path.
pub fn write_field(dir: &Path, stem: &str, field: &ScalarField, header: &FieldHeader) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(format!("{stem}.bin")), bytes)?;
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, header)?;
    Ok(json_path)
}

/// Reads a dump given the path of its JSON header.
pub fn read_field(json_path: &Path) -> Result<(FieldHeader, ScalarField)> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    let grid = header.grid()?;
    let bytes = fs::read(json_path.with_extension("bin"))?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Parse(format!(
            "{}: {} bytes for {} cells",
            json_path.display(),
            bytes.len(),
            grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    let field = ScalarField::new(grid, values, header.kind)?;
    Ok((header, field))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One line of `report.csv`. Metric columns are empty for failed rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub eps: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub iterations: usize,
    pub termination: Option<String>,
    pub objective: Option<f64>,
    pub diameter: Option<f64>,
    pub diameter_over_eps: Option<f64>,
    pub centroid_x1: Option<f64>,
    pub centroid_x2: Option<f64>,
    pub centroid_error: Option<f64>,
    pub mu: Option<f64>,
    pub mu_compensated: Option<f64>,
    pub objective_compensated: Option<f64>,
    pub core_energy: Option<f64>,
    pub profile_l2: Option<f64>,
    pub profile_lp: Option<f64>,
    pub asymmetry: Option<f64>,
    pub lambda_x2: Option<f64>,
    pub stream_height_bound: Option<f64>,
    pub stream_decay_bound: Option<f64>,
    pub support_cells: Option<usize>,
    pub mu_gap: Option<f64>,
    pub error: Option<String>,
}

pub const REPORT_COLUMNS: [&str; 25] = [
    "eps",
    "nx",
    "ny",
    "h",
    "iterations",
    "termination",
    "objective",
    "diameter",
    "diameter_over_eps",
    "centroid_x1",
    "centroid_x2",
    "centroid_error",
    "mu",
    "mu_compensated",
    "objective_compensated",
    "core_energy",
    "profile_l2",
    "profile_lp",
    "asymmetry",
    "lambda_x2",
    "stream_height_bound",
    "stream_decay_bound",
    "support_cells",
    "mu_gap",
    "error",
];

/// Numeric metric columns of a converged row, in column order.
pub fn metric_values(m: &RowMetrics) -> Vec<(&'static str, f64)> {
    vec![
        ("objective", m.objective),
        ("diameter", m.diameter),
        ("diameter_over_eps", m.diameter_over_eps),
        ("centroid_x1", m.centroid[0]),
        ("centroid_x2", m.centroid[1]),
        ("centroid_error", m.centroid_error),
        ("mu", m.mu),
        ("mu_compensated", m.mu_compensated),
        ("objective_compensated", m.objective_compensated),
        ("core_energy", m.core_energy),
        ("profile_l2", m.profile_l2),
        ("profile_lp", m.profile_lp),
        ("asymmetry", m.asymmetry),
        ("lambda_x2", m.lambda_x2),
        ("stream_height_bound", m.stream_height_bound),
        ("stream_decay_bound", m.stream_decay_bound),
        ("support_cells", m.support_cells as f64),
        ("mu_gap", m.mu_gap),
    ]
}

impl ReportRecord {
    pub fn from_row(row: &SweepRow) -> Self {
        let m = row.metrics.as_ref();
        let f = |g: fn(&RowMetrics) -> f64| m.map(g);
        Self {
            eps: row.eps,
            nx: row.nx,
            ny: row.ny,
            h: row.h,
            iterations: row.iterations,
            termination: row.termination.map(|t| t.as_str().to_string()),
            objective: f(|m| m.objective),
            diameter: f(|m| m.diameter),
            diameter_over_eps: f(|m| m.diameter_over_eps),
            centroid_x1: f(|m| m.centroid[0]),
            centroid_x2: f(|m| m.centroid[1]),
            centroid_error: f(|m| m.centroid_error),
            mu: f(|m| m.mu),
            mu_compensated: f(|m| m.mu_compensated),
            objective_compensated: f(|m| m.objective_compensated),
            core_energy: f(|m| m.core_energy),
            profile_l2: f(|m| m.profile_l2),
            profile_lp: f(|m| m.profile_lp),
            asymmetry: f(|m| m.asymmetry),
            lambda_x2: f(|m| m.lambda_x2),
            stream_height_bound: f(|m| m.stream_height_bound),
            stream_decay_bound: f(|m| m.stream_decay_bound),
            support_cells: m.map(|m| m.support_cells),
            mu_gap: f(|m| m.mu_gap),
            error: row.error.clone(),
        }
    }

    /// The metric columns, or `None` for a failed row.
    pub fn metric_values(&self) -> Option<Vec<(&'static str, f64)>> {
        Some(vec![
            ("objective", self.objective?),
            ("diameter", self.diameter?),
            ("diameter_over_eps", self.diameter_over_eps?),
            ("centroid_x1", self.centroid_x1?),
            ("centroid_x2", self.centroid_x2?),
            ("centroid_error", self.centroid_error?),
            ("mu", self.mu?),
            ("mu_compensated", self.mu_compensated?),
            ("objective_compensated", self.objective_compensated?),
            ("core_energy", self.core_energy?),
            ("profile_l2", self.profile_l2?),
            ("profile_lp", self.profile_lp?),
            ("asymmetry", self.asymmetry?),
            ("lambda_x2", self.lambda_x2?),
            ("stream_height_bound", self.stream_height_bound?),
            ("stream_decay_bound", self.stream_decay_bound?),
            ("support_cells", self.support_cells? as f64),
            ("mu_gap", self.mu_gap?),
        ])
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    create_parent(path)?;
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `report.csv`: a header line and one line per row.
pub fn write_report_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, &REPORT_COLUMNS, rows.iter().map(ReportRecord::from_row))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    r.deserialize().map(|rec| rec.map_err(csv_err)).collect()
}

#[derive(Serialize)]
struct LogRecord {
    eps: f64,
    iteration: usize,
    objective: f64,
    mu: f64,
    support: usize,
}

/// `log.csv`: the iteration history of every converged row.
pub fn write_log_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let rows = report.rows.iter().zip(&report.results).flat_map(|(row, res)| {
        res.iter().flat_map(move |r| {
            r.log.iter().map(move |l| LogRecord {
                eps: row.eps,
                iteration: l.iteration,
                objective: l.objective,
                mu: l.mu,
                support: l.support,
            })
        })
    });
    write_rows(path, &["eps", "iteration", "objective", "mu", "support"], rows)
}

#[derive(Serialize)]
struct TrajectoryRecord {
    t: f64,
    centroid_x1: f64,
    centroid_x2: f64,
    deviation: Option<f64>,
    mass: f64,
    energy: f64,
    impulse: f64,
}

pub fn write_trajectory_csv(path: &Path, samples: &[TrajectorySample]) -> Result<()> {
    let rows = samples.iter().map(|s| TrajectoryRecord {
        t: s.t,
        centroid_x1: s.centroid[0],
        centroid_x2: s.centroid[1],
        deviation: s.deviation,
        mass: s.mass,
        energy: s.energy,
        impulse: s.impulse,
    });
    write_rows(
        path,
        &[
            "t",
            "centroid_x1",
            "centroid_x2",
            "deviation",
            "mass",
            "energy",
            "impulse",
        ],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Termination;

    fn metrics() -> RowMetrics {
        RowMetrics {
            objective: -1.25,
            diameter: 0.2,
            diameter_over_eps: 2.0,
            centroid: [0.0, 0.251],
            centroid_error: 0.001,
            mu: 0.1,
            mu_compensated: -0.6,
            objective_compensated: -1.1,
            core_energy: 0.36,
            profile_l2: 0.01,
            profile_lp: 0.02,
            asymmetry: 0.0,
            lambda_x2: 0.3,
            stream_height_bound: 1.0,
            stream_decay_bound: 2.0,
            support_cells: 201,
            mu_gap: 0.0,
        }
    }

    fn row(eps: f64, ok: bool) -> SweepRow {
        SweepRow {
            eps,
            nx: 16,
            ny: 8,
            h: eps / 8.0,
            iterations: 3,
            termination: ok.then_some(Termination::FixedPoint),
            metrics: ok.then(metrics),
            error: (!ok).then(|| "support touches boundary, at \"edge\"".to_string()),
        }
    }

    #[test]
    fn field_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::half_plane_cells(6, 4, 0.1).unwrap();
        let f = ScalarField::from_fn(g, FieldKind::Vorticity, |x| (x[0] * 7.1).sin().abs() / 3.0 + x[1]);
        let header = FieldHeader::new(&f, 0.1, 1.0, std::f64::consts::PI, "disk(1)", 4.0);
        let path = write_field(dir.path(), &field_stem(0.1), &f, &header).unwrap();
        assert!(path.ends_with("eps_0.1.json"));
        let (h2, f2) = read_field(&path).unwrap();
        assert_eq!(h2, header);
        assert_eq!(f2, f);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::half_plane_cells(2, 2, 0.5).unwrap();
        let f = ScalarField::zeros(g, FieldKind::Vorticity);
        let path = write_field(dir.path(), "f", &f, &FieldHeader::new(&f, 1.0, 1.0, 0.0, "x", 2.0)).unwrap();
        fs::write(path.with_extension("bin"), [0u8; 12]).unwrap();
        assert!(matches!(read_field(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(&path, &[]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", REPORT_COLUMNS.join(",")));
        assert!(read_report_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let rows = vec![row(0.2, true), row(0.1, false)];
        write_report_csv(&path, &rows).unwrap();
        let back = read_report_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], ReportRecord::from_row(&rows[0]));
        assert_eq!(back[1], ReportRecord::from_row(&rows[1]));
        assert_eq!(back[0].metric_values().unwrap(), metric_values(&metrics()));
        assert!(back[1].metric_values().is_none());
        let first = fs::read(&path).unwrap();
        write_report_csv(&path, &rows).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }
}
