//! Runtime verification over simulation traces: per-channel bound checks
//! and bounded temporal queries.

pub mod checks;
pub mod query;

pub use checks::{
    check_age, check_consecutive_loss, check_detection, check_no_overtaking, check_processing_latency, monitor, Check,
    CheckResult, MonitorReport, Violation,
};
