//! Rotor effective wind speed estimators.
//!
//! Three discrete-time realisations share one plant model:
//!
//! * **I&I**: internal state `Û^I`, `Û̇^I = γ[T_g/(NJ) − Φ(ω_r, Û)/N]`,
//!   output `Û = Û^I + γω_r`.
//! * **Equivalent P**: torque-balance observer `ω̂̇_r = Φ(ω_r, Û)/N − T_g/(NJ)`
//!   with `Û = γ(ω_r − ω̂_r)`. Identical to I&I under `Û^I = −γω̂_r`.
//! * **PI**: same observer, `Û = γε + β∫ε`, `ε = ω_r − ω̂_r`.
//!
//! States advance with forward Euler at the configured sample time. A pure
//! delay of `T` seconds sits on the `Û` path feeding `Φ`; the output map
//! always uses the current measurement.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp_model::CpCurve;
use crate::turbine::{TurbineError, TurbineParams};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("state belongs to {state:?} but step was called for {requested:?}")]
    WrongFamily { state: EstimatorFamily, requested: EstimatorFamily },
    #[error("measurement `{name}` is not usable: {value}")]
    BadMeasurement { name: &'static str, value: f64 },
    #[error(transparent)]
    Turbine(#[from] TurbineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorFamily {
    #[serde(rename = "iandi")]
    IandI,
    #[serde(rename = "equivalent_p")]
    EquivalentP,
    #[serde(rename = "pi")]
    Pi,
}

impl std::fmt::Display for EstimatorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::IandI => "I&I",
            Self::EquivalentP => "equivalent-P",
            Self::Pi => "PI",
        })
    }
}

/// Gains, loop delay and sample time. `delay_t` must be a whole number of
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct EstimatorConfig {
    pub family: EstimatorFamily,
    pub gamma: f64,
    pub beta: f64,
    pub delay_t: f64,
    pub dt: f64,
}

#[derive(Deserialize)]
struct RawConfig {
    family: EstimatorFamily,
    gamma: f64,
    #[serde(default)]
    beta: f64,
    #[serde(default)]
    delay_t: f64,
    #[serde(default = "default_dt")]
    dt: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl TryFrom<RawConfig> for EstimatorConfig {
    type Error = EstimatorError;
    fn try_from(r: RawConfig) -> Result<Self, Self::Error> {
        Self::new(r.family, r.gamma, r.beta, r.delay_t, r.dt)
    }
}

pub const DEFAULT_DT: f64 = 0.01;
/// Initial wind speed guess when none is given, m/s.
pub const DEFAULT_U_GUESS: f64 = 8.0;

impl EstimatorConfig {
    pub fn new(
        family: EstimatorFamily,
        gamma: f64,
        beta: f64,
        delay_t: f64,
        dt: f64,
    ) -> Result<Self, EstimatorError> {
        let cfg = Self { family, gamma, beta, delay_t, dt };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn iandi(gamma: f64, delay_t: f64) -> Result<Self, EstimatorError> {
        Self::new(EstimatorFamily::IandI, gamma, 0.0, delay_t, DEFAULT_DT)
    }

    pub fn equivalent_p(gamma: f64, delay_t: f64) -> Result<Self, EstimatorError> {
        Self::new(EstimatorFamily::EquivalentP, gamma, 0.0, delay_t, DEFAULT_DT)
    }

    pub fn pi(gamma: f64, beta: f64, delay_t: f64) -> Result<Self, EstimatorError> {
        Self::new(EstimatorFamily::Pi, gamma, beta, delay_t, DEFAULT_DT)
    }

    pub fn with_family(self, family: EstimatorFamily) -> Self {
        Self { family, ..self }
    }

    fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::InvalidConfig(m));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.delay_t.is_finite() && self.delay_t >= 0.0) {
            return bad(format!("delay must be >= 0, got {}", self.delay_t));
        }
        let ratio = self.delay_t / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad(format!(
                "delay {} s is not a whole number of {} s samples",
                self.delay_t, self.dt
            ));
        }
        Ok(())
    }

    /// Number of samples held by the delay line.
    pub fn delay_steps(&self) -> usize {
        (self.delay_t / self.dt).round() as usize
    }
}

/// Fixed-length FIFO implementing `e^{−sT}` at the sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buf: VecDeque<f64>,
}

impl DelayLine {
    pub fn new(len: usize, fill: f64) -> Self {
        Self { buf: std::iter::repeat_n(fill, len).collect() }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Push the newest sample, return the one from `len` steps ago.
    pub fn delayed_feedback(&mut self, sample: f64) -> f64 {
        if self.buf.is_empty() {
            return sample;
        }
        self.buf.push_back(sample);
        self.buf.pop_front().expect("non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Core {
    IandI { u_hat_i: f64 },
    EquivalentP { omega_hat: f64 },
    Pi { omega_hat: f64, integral: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    core: Core,
    delay: DelayLine,
    clamp_count: u64,
}

impl EstimatorState {
    pub fn family(&self) -> EstimatorFamily {
        match self.core {
            Core::IandI { .. } => EstimatorFamily::IandI,
            Core::EquivalentP { .. } => EstimatorFamily::EquivalentP,
            Core::Pi { .. } => EstimatorFamily::Pi,
        }
    }

    /// `Û^I`, I&I only.
    pub fn u_hat_i(&self) -> Option<f64> {
        match self.core {
            Core::IandI { u_hat_i } => Some(u_hat_i),
            _ => None,
        }
    }

    pub fn omega_hat(&self) -> Option<f64> {
        match self.core {
            Core::EquivalentP { omega_hat } | Core::Pi { omega_hat, .. } => Some(omega_hat),
            Core::IandI { .. } => None,
        }
    }

    /// `∫ε dτ`, PI only.
    pub fn integral(&self) -> Option<f64> {
        match self.core {
            Core::Pi { integral, .. } => Some(integral),
            _ => None,
        }
    }

    /// `ε = ω_r − ω̂_r` where `ω̂_r` exists.
    pub fn epsilon(&self, omega_r: f64) -> Option<f64> {
        self.omega_hat().map(|w| omega_r - w)
    }

    /// Number of `Φ` evaluations whose tip-speed ratio was clamped.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    pub fn delay_len(&self) -> usize {
        self.delay.len()
    }

    /// Current estimate `Û` for measured rotor speed `omega_r`.
    pub fn u_hat(&self, config: &EstimatorConfig, omega_r: f64) -> f64 {
        match self.core {
            Core::IandI { u_hat_i } => u_hat_i + config.gamma * omega_r,
            Core::EquivalentP { omega_hat } => config.gamma * (omega_r - omega_hat),
            Core::Pi { omega_hat, integral } => {
                let eps = omega_r - omega_hat;
                let mut u = config.gamma * eps;
                if config.beta != 0.0 {
                    u += config.beta * integral;
                }
                u
            }
        }
    }

    pub fn delayed_feedback(&mut self, sample: f64) -> f64 {
        self.delay.delayed_feedback(sample)
    }
}

/// Initialise so that the first emitted `Û` equals `u_guess`. The delay line
/// is pre-filled with that value.
pub fn init_estimator(
    config: &EstimatorConfig,
    params: &TurbineParams,
    omega_r0: f64,
    u_guess: f64,
) -> Result<EstimatorState, EstimatorError> {
    config.validate()?;
    if !(omega_r0.is_finite() && omega_r0 >= params.omega_r_min) {
        return Err(EstimatorError::BadMeasurement { name: "omega_r0", value: omega_r0 });
    }
    if !(u_guess.is_finite() && u_guess > 0.0) {
        return Err(EstimatorError::BadMeasurement { name: "u_guess", value: u_guess });
    }
    let g = config.gamma;
    let core = match config.family {
        EstimatorFamily::IandI => Core::IandI { u_hat_i: u_guess - g * omega_r0 },
        EstimatorFamily::EquivalentP => Core::EquivalentP { omega_hat: omega_r0 - u_guess / g },
        EstimatorFamily::Pi if config.beta > 0.0 => Core::Pi {
            omega_hat: omega_r0,
            integral: u_guess / config.beta,
        },
        EstimatorFamily::Pi => Core::Pi { omega_hat: omega_r0 - u_guess / g, integral: 0.0 },
    };
    Ok(EstimatorState {
        core,
        delay: DelayLine::new(config.delay_steps(), u_guess),
        clamp_count: 0,
    })
}

fn check_inputs(omega_r: f64, t_g: f64) -> Result<(), EstimatorError> {
    if !(omega_r.is_finite() && omega_r > 0.0) {
        return Err(EstimatorError::BadMeasurement { name: "omega_r", value: omega_r });
    }
    if !t_g.is_finite() {
        return Err(EstimatorError::BadMeasurement { name: "t_g", value: t_g });
    }
    Ok(())
}

/// Shared part of every update: emit `Û`, push it through the delay line and
/// evaluate the torque imbalance `Φ(ω_r, Û_delayed)/N − T_g/(NJ)`.
fn feedback(
    params: &TurbineParams,
    curve: &CpCurve,
    state: &mut EstimatorState,
    config: &EstimatorConfig,
    omega_r: f64,
    t_g: f64,
) -> (f64, f64) {
    let u_hat = state.u_hat(config, omega_r);
    let delayed = state.delay.delayed_feedback(u_hat);
    let (phi, clamped) = params.phi_clamped(curve, omega_r, delayed);
    if clamped {
        state.clamp_count += 1;
    }
    let n = params.gear_ratio;
    let imbalance = phi / n - t_g / (n * params.inertia_equivalent);
    (u_hat, imbalance)
}

fn expect_family(state: &EstimatorState, f: EstimatorFamily) -> Result<(), EstimatorError> {
    if state.family() == f {
        Ok(())
    } else {
        Err(EstimatorError::WrongFamily { state: state.family(), requested: f })
    }
}

/// One Euler step of the I&I estimator. Returns the advanced state and the
/// estimate `Û` at the start of the step.
pub fn step_iandi(
    params: &TurbineParams,
    curve: &CpCurve,
    mut state: EstimatorState,
    omega_r: f64,
    t_g: f64,
    config: &EstimatorConfig,
) -> Result<(EstimatorState, f64), EstimatorError> {
    expect_family(&state, EstimatorFamily::IandI)?;
    check_inputs(omega_r, t_g)?;
    let (u_hat, imbalance) = feedback(params, curve, &mut state, config, omega_r, t_g);
    if let Core::IandI { u_hat_i } = &mut state.core {
        // γ[T_g/(NJ) − Φ/N] = −γ·imbalance
        *u_hat_i -= config.dt * config.gamma * imbalance;
    }
    Ok((state, u_hat))
}

pub fn step_equivalent_p(
    params: &TurbineParams,
    curve: &CpCurve,
    mut state: EstimatorState,
    omega_r: f64,
    t_g: f64,
    config: &EstimatorConfig,
) -> Result<(EstimatorState, f64), EstimatorError> {
    expect_family(&state, EstimatorFamily::EquivalentP)?;
    check_inputs(omega_r, t_g)?;
    let (u_hat, imbalance) = feedback(params, curve, &mut state, config, omega_r, t_g);
    if let Core::EquivalentP { omega_hat } = &mut state.core {
        *omega_hat += config.dt * imbalance;
    }
    Ok((state, u_hat))
}

/// PI step; the integral uses the rectangle rule in lock-step with the
/// observer update. No anti-windup.
pub fn step_pi(
    params: &TurbineParams,
    curve: &CpCurve,
    mut state: EstimatorState,
    omega_r: f64,
    t_g: f64,
    config: &EstimatorConfig,
) -> Result<(EstimatorState, f64), EstimatorError> {
    expect_family(&state, EstimatorFamily::Pi)?;
    check_inputs(omega_r, t_g)?;
    let (u_hat, imbalance) = feedback(params, curve, &mut state, config, omega_r, t_g);
    if let Core::Pi { omega_hat, integral } = &mut state.core {
        let eps = omega_r - *omega_hat;
        *omega_hat += config.dt * imbalance;
        *integral += config.dt * eps;
    }
    Ok((state, u_hat))
}

/// Dispatch on the state's family.
pub fn step(
    params: &TurbineParams,
    curve: &CpCurve,
    state: EstimatorState,
    omega_r: f64,
    t_g: f64,
    config: &EstimatorConfig,
) -> Result<(EstimatorState, f64), EstimatorError> {
    match state.family() {
        EstimatorFamily::IandI => step_iandi(params, curve, state, omega_r, t_g, config),
        EstimatorFamily::EquivalentP => step_equivalent_p(params, curve, state, omega_r, t_g, config),
        EstimatorFamily::Pi => step_pi(params, curve, state, omega_r, t_g, config),
    }
}
