//! Design, simulation and analysis toolkit for fabric bellow actuators
//! driving a two-link infant elbow model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod arm;
pub mod design;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod pneumatics;
pub mod stats;

pub use actuator::{
    ActuatorSpec, CellDisplacementTable, CellShape, ElongationData, ElongationSource, MeasuredElongationTable,
};
pub use arm::{ArmModel, JointStop, Point2, Trajectory};
pub use error::{Error, Result};
pub use experiment::Experiment;
pub use io::config::ExperimentConfig;
pub use metrics::{MeanSd, Metric, TrialMetrics, VariantSummary};
pub use pneumatics::{Completion, PneumaticConfig, PressureSeries};
pub use stats::{Factor, Pooling, StatResult};
