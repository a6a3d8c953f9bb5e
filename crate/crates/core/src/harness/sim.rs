use serde::{Deserialize, Serialize};

use super::{HarnessError, Scenario};
use crate::estimators::{init_estimator, step};
use crate::turbine::{step_plant, torque_controller};

/// Runs stop once `|Û|` exceeds this, m/s.
pub const DIVERGENCE_GUARD: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub u_true: f64,
    pub omega_r: f64,
    /// Observer rotor speed; absent for the I&I form.
    pub omega_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub u_hat: f64,
    pub t_g: f64,
    /// Cumulative number of out-of-envelope feedback evaluations.
    pub clamp_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    DivergenceGuard,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt: f64,
    pub records: Vec<TraceRecord>,
    /// Time of the last record when the run ended early.
    pub stop_time: Option<f64>,
    pub stop_reason: Option<StopReason>,
}

impl SimTrace {
    pub fn stopped_early(&self) -> bool {
        self.stop_time.is_some()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn u_hat(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.u_hat).collect()
    }
}

/// Co-simulate plant (RK4), torque law and estimator (forward Euler) on the
/// scenario grid. Record `k` holds the state at `t_k = k·dt`; the generator
/// torque and wind are held over each step. Estimator blow-up ends the run
/// early and is recorded in the trace; a failing plant is an error.
pub fn run_scenario(scn: &Scenario) -> Result<SimTrace, HarnessError> {
    scn.validate()?;
    let n = scn.steps();
    let p = &scn.turbine;
    let cfg = &scn.estimator;
    let mut plant = scn.initial.plant;
    plant.t = 0.0;
    let mut est = init_estimator(cfg, p, plant.omega_r, scn.initial.u_guess)?;
    let mut records = Vec::with_capacity(n + 1);
    let mut stop = None;

    for k in 0..=n {
        let t = k as f64 * scn.dt;
        let u = scn.wind_at(t);
        let w = plant.omega_r;
        let t_g = torque_controller(scn.controller_gain, w * p.gear_ratio)?;
        let mut rec = TraceRecord {
            t,
            u_true: u,
            omega_r: w,
            omega_hat: est.omega_hat(),
            epsilon: est.epsilon(w),
            u_hat: f64::NAN,
            t_g,
            clamp_count: est.clamp_count(),
        };
        if k == n {
            rec.u_hat = est.u_hat(cfg, w);
            records.push(rec);
            break;
        }
        let (next, u_hat) = step(p, &scn.curve, est, w, t_g, cfg)?;
        rec.u_hat = u_hat;
        records.push(rec);
        if !u_hat.is_finite() {
            stop = Some((t, StopReason::NonFinite));
            break;
        }
        if u_hat.abs() > DIVERGENCE_GUARD {
            stop = Some((t, StopReason::DivergenceGuard));
            break;
        }
        est = next;
        plant = step_plant(p, &scn.curve, plant, t_g, u, scn.dt)
            .map_err(|source| HarnessError::Plant { t, source })?;
        plant.t = (k + 1) as f64 * scn.dt;
    }

    Ok(SimTrace {
        dt: scn.dt,
        records,
        stop_time: stop.map(|s| s.0),
        stop_reason: stop.map(|s| s.1),
    })
}
