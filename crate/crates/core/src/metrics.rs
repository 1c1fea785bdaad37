//! Kinematic performance metrics, applied identically to simulated and
//! ingested trajectories.

use std::fmt;
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use crate::actuator::ActuatorSpec;
use crate::arm::{Point2, Trajectory};
use crate::error::{Error, Result};
use crate::io::csvutil::read_rows;

/// Start-to-end distance below which a path has no defined straightness (cm).
pub const CHORD_TOLERANCE_CM: f64 = 1e-9;

/// How jerk samples are aggregated into a single value.
pub const JERK_AGGREGATE: &str = "mean absolute derivative of acceleration magnitude";

pub fn path_length(points: &[Point2]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::domain("path length needs at least two samples"));
    }
    Ok(points.windows(2).map(|w| w[0].distance(w[1])).sum())
}

/// Path length over start-to-end chord.
pub fn straightness_index(points: &[Point2]) -> Result<f64> {
    let length = path_length(points)?;
    let chord = points[0].distance(points[points.len() - 1]);
    if chord < CHORD_TOLERANCE_CM {
        return Err(Error::domain(format!(
            "degenerate path: start and end {chord:e} cm apart"
        )));
    }
    Ok(length / chord)
}

/// Mean of |da/dt| (m/s³), central differences inside and one-sided
/// differences at both ends.
pub fn mean_abs_jerk(accel_ms2: &[f64], rate_hz: f64) -> Result<f64> {
    let n = accel_ms2.len();
    if n < 3 {
        return Err(Error::domain("jerk needs at least three samples"));
    }
    if !(rate_hz > 0.0) {
        return Err(Error::domain("sample rate must be positive"));
    }
    let a = accel_ms2;
    let mut total = ((a[1] - a[0]) * rate_hz).abs() + ((a[n - 1] - a[n - 2]) * rate_hz).abs();
    for i in 1..n - 1 {
        total += ((a[i + 1] - a[i - 1]) * rate_hz / 2.0).abs();
    }
    Ok(total / n as f64)
}

/// Flexion at the elbow: 180° minus the interior angle between the two
/// links, so a straight arm reads 0°.
pub fn elbow_flexion_angle(shoulder: Point2, elbow: Point2, end_effector: Point2) -> Result<f64> {
    let upper = shoulder - elbow;
    let fore = end_effector - elbow;
    if upper.norm() == 0.0 || fore.norm() == 0.0 {
        return Err(Error::domain("elbow coincides with a neighbouring marker"));
    }
    let interior = upper.cross(fore).abs().atan2(upper.dot(fore));
    Ok(180.0 - interior.to_degrees())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialMetrics {
    pub variant: ActuatorSpec,
    pub trial: u32,
    pub path_length_cm: f64,
    pub straightness_index: f64,
    pub mean_abs_jerk_ms3: f64,
    pub flexion_range_deg: f64,
}

/// Metrics over the flexion segment of a trajectory. `accel` defaults to
/// the trajectory's own acceleration channel.
pub fn trial_metrics(
    traj: &Trajectory,
    variant: ActuatorSpec,
    trial: u32,
    accel: Option<(&[f64], f64)>,
) -> Result<TrialMetrics> {
    let range = traj.flexion_range();
    let ee = &traj.end_effector[range.clone()];
    let angles = range
        .clone()
        .map(|i| elbow_flexion_angle(traj.shoulder[i], traj.elbow[i], traj.end_effector[i]))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = angles.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
        (lo.min(a), hi.max(a))
    });
    let jerk = match accel {
        Some((series, rate)) => mean_abs_jerk(series, rate)?,
        None => mean_abs_jerk(&traj.accel_ms2[range], traj.sample_rate_hz())?,
    };
    Ok(TrialMetrics {
        variant,
        trial,
        path_length_cm: path_length(ee)?,
        straightness_index: straightness_index(ee)?,
        mean_abs_jerk_ms3: jerk,
        flexion_range_deg: if angles.is_empty() { 0.0 } else { hi - lo },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    PathLength,
    StraightnessIndex,
    Jerk,
    FlexionAngle,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::PathLength,
        Metric::StraightnessIndex,
        Metric::Jerk,
        Metric::FlexionAngle,
    ];

    pub fn value(self, m: &TrialMetrics) -> f64 {
        match self {
            Metric::PathLength => m.path_length_cm,
            Metric::StraightnessIndex => m.straightness_index,
            Metric::Jerk => m.mean_abs_jerk_ms3,
            Metric::FlexionAngle => m.flexion_range_deg,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::PathLength => "path",
            Metric::StraightnessIndex => "si",
            Metric::Jerk => "jerk",
            Metric::FlexionAngle => "angle",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::PathLength => "Path length (cm)",
            Metric::StraightnessIndex => "Straightness index",
            Metric::Jerk => "Jerk (m/s³)",
            Metric::FlexionAngle => "Elbow flexion range (deg)",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" | "path_cm" => Ok(Metric::PathLength),
            "si" => Ok(Metric::StraightnessIndex),
            "jerk" | "jerk_ms3" => Ok(Metric::Jerk),
            "angle" | "angle_deg" => Ok(Metric::FlexionAngle),
            _ => Err(Error::domain(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Sample mean and (n − 1) standard deviation; SD is 0 for one value.
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len();
        if n == 0 {
            return MeanSd {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(2);
        write!(f, "{:.prec$}±{:.prec$}", self.mean, self.sd)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub variant: ActuatorSpec,
    pub trials: usize,
    pub path_length_cm: MeanSd,
    pub straightness_index: MeanSd,
    pub mean_abs_jerk_ms3: MeanSd,
    pub flexion_range_deg: MeanSd,
    /// Set when only one trial was available, so SD carries no information.
    pub degenerate: bool,
}

impl VariantSummary {
    pub fn get(&self, metric: Metric) -> MeanSd {
        match metric {
            Metric::PathLength => self.path_length_cm,
            Metric::StraightnessIndex => self.straightness_index,
            Metric::Jerk => self.mean_abs_jerk_ms3,
            Metric::FlexionAngle => self.flexion_range_deg,
        }
    }
}

/// Per-variant mean ± SD, ordered by (p, n, shape).
pub fn summarize(trials: &[TrialMetrics]) -> Vec<VariantSummary> {
    let mut variants: Vec<ActuatorSpec> = trials.iter().map(|t| t.variant).collect();
    variants.sort_by(|a, b| a.report_cmp(b));
    variants.dedup();
    variants
        .into_iter()
        .map(|variant| {
            let rows: Vec<&TrialMetrics> = trials.iter().filter(|t| t.variant == variant).collect();
            let stat = |m: Metric| MeanSd::of(&rows.iter().map(|r| m.value(r)).collect::<Vec<_>>());
            VariantSummary {
                variant,
                trials: rows.len(),
                path_length_cm: stat(Metric::PathLength),
                straightness_index: stat(Metric::StraightnessIndex),
                mean_abs_jerk_ms3: stat(Metric::Jerk),
                flexion_range_deg: stat(Metric::FlexionAngle),
                degenerate: rows.len() < 2,
            }
        })
        .collect()
}

const METRICS_HEADER: &[&str] = &["shape", "p_cm", "n", "trial", "path_cm", "si", "jerk_ms3", "angle_deg"];

pub fn metrics_to_csv(rows: &[TrialMetrics]) -> String {
    let mut out = METRICS_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.variant.shape.name(),
            r.variant.cell_length_cm,
            r.variant.n_cells,
            r.trial,
            r.path_length_cm,
            r.straightness_index,
            r.mean_abs_jerk_ms3,
            r.flexion_range_deg
        );
    }
    out
}

pub fn metrics_from_csv<R: Read>(reader: R) -> Result<Vec<TrialMetrics>> {
    read_rows(reader, METRICS_HEADER)?
        .into_iter()
        .map(|row| {
            Ok(TrialMetrics {
                variant: ActuatorSpec::new(row.shape("shape")?, row.f64("p_cm")?, row.u32("n")?),
                trial: row.u32("trial")?,
                path_length_cm: row.f64("path_cm")?,
                straightness_index: row.f64("si")?,
                mean_abs_jerk_ms3: row.f64("jerk_ms3")?,
                flexion_range_deg: row.f64("angle_deg")?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::CellShape;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn semicircle() -> Vec<Point2> {
        (0..=180)
            .map(|d| {
                let a = (d as f64).to_radians();
                Point2::new(a.cos(), a.sin())
            })
            .collect()
    }

    #[test]
    fn path_examples() {
        let seg = [Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)];
        assert_eq!(path_length(&seg).unwrap(), 5.0);
        let sampled: Vec<Point2> = (0..=7)
            .map(|i| Point2::new(0.0, 0.0).lerp(Point2::new(3.0, 4.0), i as f64 / 7.0))
            .collect();
        assert_abs_diff_eq!(path_length(&sampled).unwrap(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(path_length(&semicircle()).unwrap(), PI, epsilon = 1e-4);
        let square = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.0, 0.0),
        ];
        assert_eq!(path_length(&square).unwrap(), 4.0);
        assert!(path_length(&square[..1]).is_err());
    }

    #[test]
    fn straightness_examples() {
        let seg: Vec<Point2> = (0..=10).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert_abs_diff_eq!(straightness_index(&seg).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(straightness_index(&semicircle()).unwrap(), PI / 2.0, epsilon = 1e-4);
        let loop_ = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 0.0)];
        assert!(matches!(straightness_index(&loop_), Err(Error::Domain(_))));
    }

    #[test]
    fn jerk_examples() {
        assert_eq!(mean_abs_jerk(&[9.81; 50], 60.0).unwrap(), 0.0);
        // 1 Hz sinusoid over three whole periods at 60 Hz: mean |2π cos| = 4
        let a: Vec<f64> = (0..180).map(|i| (2.0 * PI * i as f64 / 60.0).sin()).collect();
        let j = mean_abs_jerk(&a, 60.0).unwrap();
        assert!((j - 4.0).abs() / 4.0 < 0.01, "{j}");
        let c = 2.5;
        let ramp: Vec<f64> = (0..100).map(|i| c * i as f64 / 60.0).collect();
        assert_abs_diff_eq!(mean_abs_jerk(&ramp, 60.0).unwrap(), c, epsilon = 1e-9);
        assert!(mean_abs_jerk(&[1.0, 2.0], 60.0).is_err());
        assert!(mean_abs_jerk(&[1.0, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn flexion_examples() {
        let o = Point2::new(0.0, 0.0);
        assert_eq!(
            elbow_flexion_angle(o, Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)).unwrap(),
            0.0
        );
        assert_eq!(
            elbow_flexion_angle(o, Point2::new(1.5, 0.0), Point2::new(4.0, 0.0)).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            elbow_flexion_angle(o, Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        // equilateral triangle: interior 60°, flexion 120°
        let apex = Point2::new(0.5, 3f64.sqrt() / 2.0);
        assert_abs_diff_eq!(
            elbow_flexion_angle(o, Point2::new(1.0, 0.0), apex).unwrap(),
            120.0,
            epsilon = 1e-9
        );
        assert!(elbow_flexion_angle(o, o, Point2::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn summary_statistics() {
        let v = ActuatorSpec::new(CellShape::Square, 3.0, 8);
        let row = |trial, x| TrialMetrics {
            variant: v,
            trial,
            path_length_cm: x,
            straightness_index: 1.0 + x,
            mean_abs_jerk_ms3: x,
            flexion_range_deg: x,
        };
        let s = summarize(&[row(1, 1.0), row(2, 2.0), row(3, 3.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].path_length_cm, MeanSd { mean: 2.0, sd: 1.0 });
        assert!(!s[0].degenerate);
        let single = summarize(&[row(1, 5.0)]);
        assert_eq!(single[0].path_length_cm.sd, 0.0);
        assert!(single[0].degenerate);
        assert_eq!(format!("{}", MeanSd { mean: 13.65, sd: 0.76 }), "13.65±0.76");
    }

    #[test]
    fn summary_order_is_p_n_shape() {
        let mk = |s, p, n| TrialMetrics {
            variant: ActuatorSpec::new(s, p, n),
            trial: 1,
            path_length_cm: 1.0,
            straightness_index: 1.0,
            mean_abs_jerk_ms3: 1.0,
            flexion_range_deg: 1.0,
        };
        let rows = [
            mk(CellShape::Circle, 4.0, 8),
            mk(CellShape::Square, 3.0, 10),
            mk(CellShape::Circle, 3.0, 8),
            mk(CellShape::Square, 3.0, 8),
        ];
        let labels: Vec<String> = summarize(&rows).iter().map(|s| s.variant.label()).collect();
        assert_eq!(labels, ["Square-3-8", "Circle-3-8", "Square-3-10", "Circle-4-8"]);
    }

    #[test]
    fn metrics_csv_roundtrip() {
        let rows = vec![TrialMetrics {
            variant: ActuatorSpec::new(CellShape::Rectangle, 4.0, 12),
            trial: 3,
            path_length_cm: 0.1 + 0.2,
            straightness_index: 1.0000000000000002,
            mean_abs_jerk_ms3: 1e-300,
            flexion_range_deg: 77.123_456_789_012_34,
        }];
        let back = metrics_from_csv(metrics_to_csv(&rows).as_bytes()).unwrap();
        assert_eq!(back, rows);
    }

    fn transform(points: &[Point2], angle: f64, shift: Point2, scale: f64) -> Vec<Point2> {
        points.iter().map(|p| p.rotate(angle) * scale + shift).collect()
    }

    proptest! {
        #[test]
        fn si_invariant_under_similarity(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..20),
            angle in 0.0f64..6.3, dx in -100.0f64..100.0, dy in -100.0f64..100.0, scale in 0.1f64..10.0,
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            prop_assume!(pts[0].distance(*pts.last().unwrap()) > 1e-3);
            let a = straightness_index(&pts).unwrap();
            let b = straightness_index(&transform(&pts, angle, Point2::new(dx, dy), scale)).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            prop_assert!(a >= 1.0 - 1e-12);
        }

        #[test]
        fn path_additive(pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30), cut in 1usize..28) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            let cut = cut.min(pts.len() - 2);
            let whole = path_length(&pts).unwrap();
            let parts = path_length(&pts[..=cut]).unwrap() + path_length(&pts[cut..]).unwrap();
            prop_assert!((whole - parts).abs() < 1e-9);
        }

        #[test]
        fn jerk_time_reversal(a in proptest::collection::vec(-50.0f64..50.0, 3..100), rate in 1.0f64..200.0) {
            let mut rev = a.clone();
            rev.reverse();
            let f = mean_abs_jerk(&a, rate).unwrap();
            let r = mean_abs_jerk(&rev, rate).unwrap();
            prop_assert!((f - r).abs() <= 1e-9 * f.max(1.0));
        }

        #[test]
        fn flexion_invariant_under_rigid_motion(
            theta in 1.0f64..179.0, angle in 0.0f64..6.3, dx in -50.0f64..50.0, dy in -50.0f64..50.0,
        ) {
            let s = Point2::new(-15.0, 0.0);
            let e = Point2::new(0.0, 0.0);
            let w = Point2::new(11.0, 0.0).rotate(theta.to_radians());
            let moved = transform(&[s, e, w], angle, Point2::new(dx, dy), 1.0);
            let a = elbow_flexion_angle(s, e, w).unwrap();
            let b = elbow_flexion_angle(moved[0], moved[1], moved[2]).unwrap();
            prop_assert!((a - theta).abs() < 1e-9);
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
