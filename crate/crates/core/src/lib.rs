//! Adaptive rolling-window estimation and model selection under temporal
//! distribution shift.
//!
//! Data arrive in periods. To estimate a current-period mean, the adaptive
//! rule in [`window_stats`] chooses how many recent periods to pool by
//! trading a data-driven bias proxy against an empirical-Bernstein deviation
//! proxy. [`selection`] applies the rule to loss differences to compare two
//! models and runs a single-elimination tournament over many. [`synthetic`]
//! holds the simulation harness and [`io`] the file formats.

pub mod error;
pub mod io;
pub mod selection;
pub mod synthetic;
pub mod window_stats;

pub use error::{Error, Result};
pub use io::{read_losses, read_report, read_samples, write_report, Report, ReportFormat};
pub use selection::{
    assess_model, compare_pair, diff_summaries, fixed_window_select, tournament, BracketRecord, ComparisonResult,
    LossTable,
};
pub use synthetic::{MeanSequence, ScenarioConfig, SimulationSummary, TrialReport};
pub use window_stats::{
    phi_hat, pooled_stats, psi_hat, select_window, summarize_batch, ArwConfig, PeriodSummary, SummarySeries, TieBreak,
    WindowDiagnostics,
};
