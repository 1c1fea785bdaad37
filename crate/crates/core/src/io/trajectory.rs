//! Marker trajectory CSV: `t_s,sx,sy,ex,ey,wx,wy` in seconds and cm.

use std::fmt;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::arm::{acceleration_magnitudes, Point2, Trajectory};
use crate::error::{Error, Result};
use crate::io::csvutil::{read_rows, read_rows_from_path};

pub const TRAJECTORY_HEADER: &[&str] = &["t_s", "sx", "sy", "ex", "ey", "wx", "wy"];

/// Relative spread of sample intervals still treated as uniform.
const UNIFORM_DT_TOLERANCE: f64 = 1e-6;

/// Non-fatal note produced while importing data.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportWarning {
    pub message: String,
}

impl fmt::Display for ImportWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportedTrajectory {
    pub trajectory: Trajectory,
    pub warnings: Vec<ImportWarning>,
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = TRAJECTORY_HEADER.join(",");
    out.push('\n');
    for i in 0..traj.len() {
        let (s, e, w) = (traj.shoulder[i], traj.elbow[i], traj.end_effector[i]);
        let _ = writeln!(out, "{},{},{},{},{},{},{}", traj.t_s[i], s.x, s.y, e.x, e.y, w.x, w.y);
    }
    out
}

pub fn trajectory_from_reader<R: Read>(reader: R) -> Result<ImportedTrajectory> {
    build(read_rows(reader, TRAJECTORY_HEADER)?)
}

pub fn parse_trajectory_csv(path: &Path) -> Result<ImportedTrajectory> {
    build(read_rows_from_path(path, TRAJECTORY_HEADER)?)
}

fn build(rows: Vec<crate::io::csvutil::Row>) -> Result<ImportedTrajectory> {
    if rows.len() < 2 {
        return Err(Error::Validation(format!(
            "trajectory needs at least two samples, found {}",
            rows.len()
        )));
    }
    let mut t_s = Vec::with_capacity(rows.len());
    let mut shoulder = Vec::with_capacity(rows.len());
    let mut elbow = Vec::with_capacity(rows.len());
    let mut wrist = Vec::with_capacity(rows.len());
    for row in &rows {
        let t = row.f64("t_s")?;
        if let Some(&prev) = t_s.last() {
            if t <= prev {
                return Err(Error::Validation(format!(
                    "line {}: time {t} does not increase (previous {prev})",
                    row.line
                )));
            }
        }
        t_s.push(t);
        shoulder.push(Point2::new(row.f64("sx")?, row.f64("sy")?));
        elbow.push(Point2::new(row.f64("ex")?, row.f64("ey")?));
        wrist.push(Point2::new(row.f64("wx")?, row.f64("wy")?));
    }

    let mut warnings = Vec::new();
    let n = t_s.len();
    let dt = (t_s[n - 1] - t_s[0]) / (n - 1) as f64;
    let worst = t_s.windows(2).map(|w| ((w[1] - w[0]) - dt).abs()).fold(0.0, f64::max);
    if worst > UNIFORM_DT_TOLERANCE * dt {
        let grid: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { t_s[n - 1] } else { t_s[0] + i as f64 * dt })
            .collect();
        shoulder = resample(&t_s, &shoulder, &grid);
        elbow = resample(&t_s, &elbow, &grid);
        wrist = resample(&t_s, &wrist, &grid);
        warnings.push(ImportWarning {
            message: format!(
                "non-uniform timestamps (max interval deviation {worst} s); resampled {n} samples to dt = {dt} s"
            ),
        });
        t_s = grid;
    }

    let accel_ms2 = acceleration_magnitudes(&t_s, &wrist);
    Ok(ImportedTrajectory {
        trajectory: Trajectory {
            t_s,
            shoulder,
            elbow,
            end_effector: wrist,
            accel_ms2,
            flexion_start: None,
        },
        warnings,
    })
}

/// Linear interpolation of `points` sampled at `t_s` onto `grid`.
fn resample(t_s: &[f64], points: &[Point2], grid: &[f64]) -> Vec<Point2> {
    let last = t_s.len() - 1;
    grid.iter()
        .map(|&t| {
            let hi = t_s.partition_point(|&x| x < t).clamp(1, last);
            let lo = hi - 1;
            let w = ((t - t_s[lo]) / (t_s[hi] - t_s[lo])).clamp(0.0, 1.0);
            points[lo].lerp(points[hi], w)
        })
        .collect()
}
