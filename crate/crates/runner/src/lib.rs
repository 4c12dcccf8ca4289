//! Configuration, execution, persistence and acceptance suites for the
//! critfpp studies.

pub mod cli;
pub mod config;
pub mod criteria;
pub mod records;
pub mod studies;

pub use config::{RunConfig, StudyKind};
pub use criteria::{run_suite, Outcome, Suite, Verdict, VerifyOptions};
pub use records::{Header, Measure, SampleRecord};
pub use studies::{RunSummary, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
