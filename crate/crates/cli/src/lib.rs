//! Experiment runner for `tn-gsee`: JSON run configurations, the staged
//! pipeline, artifact files and run comparison.

pub mod compare;
pub mod config;
pub mod io;
pub mod pipeline;

pub use compare::{compare_runs, CompareReport};
pub use config::{GseeSettings, LpSettings, ModelSpec, RunConfig};
pub use pipeline::{run_pipeline, run_until, RunSummary, Until};

use tn_gsee::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
/// I/O failures that are not the input's fault.
pub const EXIT_IO: i32 = 1;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::Numerical(_) | Error::OutsideWindow(_) => EXIT_NUMERICAL,
        Error::Io { .. } => EXIT_IO,
        Error::Structural(_)
        | Error::Parameter(_)
        | Error::Domain(_)
        | Error::Precondition(_)
        | Error::Format { .. }
        | Error::Json(_) => EXIT_VALIDATION,
    }
}
