//! Configuration, event-log persistence and evaluation-report arithmetic used
//! by the `gulp` command line.

pub mod config;
pub mod eventlog;
pub mod report;

pub use config::{Config, ConfigError};
pub use eventlog::{EventLog, EventLogError, EventLogRecord};
pub use report::{interpret, overall_mean, Characteristic, CharacteristicScore, ReportError, Verbal};
