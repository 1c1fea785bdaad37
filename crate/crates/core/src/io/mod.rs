//! CSV interchange, reports, plots and fabrication patterns.

pub mod config;
pub(crate) mod csvutil;
pub mod imu;
pub mod pattern;
pub mod report;
pub mod svg;
pub mod trajectory;
