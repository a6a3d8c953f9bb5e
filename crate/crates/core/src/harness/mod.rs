//! Closed-loop scenarios: plant, `Kω_g²` controller and estimator on a shared
//! time grid, the stepwise-wind case studies, and file output.

mod cases;
mod classify;
mod output;
pub mod plot;
mod scenario;
mod sim;

use thiserror::Error;

use crate::cp_model::CurveError;
use crate::estimators::EstimatorError;
use crate::stability::StabilityError;
use crate::turbine::TurbineError;

pub use cases::{
    paper_cases, run_case, run_paper_cases, run_paper_cases_full, CaseReport, CaseRun, CaseSpec,
    PaperReport, PAPER_DELAY_MARGIN,
};
pub use classify::{
    classify, Classification, SegmentLabel, SimLabel, CONVERGED_TOL, GROWTH_RATIO, TAIL_FRACTION,
    WINDOW_FRACTION,
};
pub use output::{
    emit_paper_report, emit_stability, emit_trace, read_trace_csv, write_trace_csv,
};
pub use scenario::{
    CurveSource, InitialConditions, InitialSpec, Scenario, ScenarioFile, TurbinePreset,
    TurbineSource, WindSegment, PAPER_DWELL, PAPER_WIND_LEVELS,
};
pub use sim::{run_scenario, SimTrace, StopReason, TraceRecord, DIVERGENCE_GUARD};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("plant failed at t = {t} s: {source}")]
    Plant { t: f64, source: TurbineError },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace file: {0}")]
    TraceFormat(String),
    #[error(transparent)]
    Turbine(#[from] TurbineError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
