//! IMU acceleration CSV: `t_s,ax,ay,az` in seconds and m/s².

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::arm::IMU_RATE_HZ;
use crate::error::{Error, Result};
use crate::io::csvutil::{read_rows, read_rows_from_path, Row};

pub const IMU_HEADER: &[&str] = &["t_s", "ax", "ay", "az"];

/// Allowed relative gap between the inferred and expected sample rate.
pub const RATE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub t_s: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl ImuSample {
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

/// Acceleration magnitude series at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ImuSeries {
    pub samples: Vec<ImuSample>,
    pub magnitude_ms2: Vec<f64>,
    pub rate_hz: f64,
}

pub fn imu_to_csv(samples: &[ImuSample]) -> String {
    let mut out = IMU_HEADER.join(",");
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.t_s, s.ax, s.ay, s.az);
    }
    out
}

/// `rate_override` replaces the inferred rate and skips the 60 Hz check.
pub fn imu_from_reader<R: Read>(reader: R, rate_override: Option<f64>) -> Result<ImuSeries> {
    build(read_rows(reader, IMU_HEADER)?, rate_override)
}

pub fn parse_imu_csv(path: &Path, rate_override: Option<f64>) -> Result<ImuSeries> {
    build(read_rows_from_path(path, IMU_HEADER)?, rate_override)
}

fn build(rows: Vec<Row>, rate_override: Option<f64>) -> Result<ImuSeries> {
    if rows.len() < 2 {
        return Err(Error::Parse {
            line: rows.first().map_or(2, |r| r.line),
            column: String::new(),
            message: "at least two samples are needed to infer the rate".into(),
        });
    }
    let samples = rows
        .iter()
        .map(|row| {
            Ok(ImuSample {
                t_s: row.f64("t_s")?,
                ax: row.f64("ax")?,
                ay: row.f64("ay")?,
                az: row.f64("az")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (w, row) in samples.windows(2).zip(&rows[1..]) {
        if w[1].t_s <= w[0].t_s {
            return Err(Error::Validation(format!(
                "line {}: time {} does not increase",
                row.line, w[1].t_s
            )));
        }
    }
    let rate_hz = match rate_override {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::Validation(format!("sample rate override {r} must be positive"))),
        None => {
            let mut dts: Vec<f64> = samples.windows(2).map(|w| w[1].t_s - w[0].t_s).collect();
            dts.sort_by(f64::total_cmp);
            let mid = dts.len() / 2;
            let median = if dts.len().is_multiple_of(2) {
                0.5 * (dts[mid - 1] + dts[mid])
            } else {
                dts[mid]
            };
            let rate = 1.0 / median;
            if ((rate - IMU_RATE_HZ) / IMU_RATE_HZ).abs() > RATE_TOLERANCE {
                return Err(Error::Validation(format!(
                    "inferred IMU rate {rate:.3} Hz is not within 1% of {IMU_RATE_HZ} Hz; pass an explicit rate to accept it"
                )));
            }
            rate
        }
    };
    Ok(ImuSeries {
        magnitude_ms2: samples.iter().map(ImuSample::magnitude).collect(),
        samples,
        rate_hz,
    })
}
