//! Rotor effective wind speed estimation for variable-speed wind turbines.
//!
//! A one-mass drive-train model driven by a `C_p(λ)` table, three rotor
//! speed based estimators (immersion and invariance, its equivalent
//! proportional observer, and a PI-corrected variant), a circle-criterion
//! convergence check for the PI variant under measurement delay, and a
//! harness that runs stepwise-wind scenarios and writes traces.

pub mod cp_model;
pub mod estimators;
pub mod harness;
pub mod stability;
pub mod turbine;

pub use cp_model::{CpCurve, CurveError};
pub use estimators::{EstimatorConfig, EstimatorFamily, EstimatorState};
pub use stability::{CircleSpec, SectorBounds, Verdict};
pub use turbine::{PlantState, TurbineParams};
