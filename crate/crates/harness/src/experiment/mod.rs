//! Batch runs, the run store, aggregation into summary tables, and reports.

mod aggregate;
mod plan;
mod record;
mod report;
mod runner;
mod store;

pub use aggregate::{aggregate, Comparison, ErrorBreakdown, GroupSummary, SummaryTables};
pub use plan::{run_seed, ExperimentPlan, PlanError};
pub use record::{regrade_logs, RegradeError, RunOutcome, RunRecord, RECORD_SCHEMA_VERSION};
pub use report::{render_report, ReportError, ReportFormat};
pub use runner::{run_batch, run_simulation, Backend, BatchError};
pub use store::{RunStore, StoreError};
