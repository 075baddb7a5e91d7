//! Run-rules control charts for the squared coefficient of variation, with a
//! linear-covariate measurement-error model.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cvdist;
pub mod design;
pub mod error;
pub mod exec;
mod linalg;
pub mod mcsim;
pub mod merror;
pub mod monitor;
pub mod quadrature;
pub mod roots;
pub mod runrules;
pub mod specfun;
pub mod sweep;

pub use cvdist::{Cv2Law, Cv2Moments, ProcessModel};
pub use design::{ChartDesign, ShiftRange};
pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
pub use merror::{MeasurementErrorModel, ShiftSpec};
pub use runrules::{Direction, RunLengthMetrics, RunRule};
