//! Absolute-stability checks for the PI-corrected estimator loop.
//!
//! The loop is a Lur'e interconnection of the linear block
//! `G(s) = (γs + β)/s² · e^{−sT}` and the aerodynamic nonlinearity. If the
//! nonlinearity lies in the sector `[k₁, k₂]`, the loop converges globally
//! when the Nyquist locus of `G` stays out of the disk whose diameter spans
//! `[−1/k₁, −1/k₂]` on the real axis, i.e. when `min_ω |G(jω) − C| > R`.
//! The test is sufficient only.
//!
//! `G` has a double pole at the origin and no right-half-plane poles. With
//! the disk strictly in the left half-plane the distance test is used on its
//! own; encirclements are not counted.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp_model::CpCurve;
use crate::turbine::TurbineParams;

/// Sector slopes quoted for the stepwise-wind case study.
pub const CASE_STUDY_K1: f64 = 0.016;
pub const CASE_STUDY_K2: f64 = 0.095;

/// Wind-speed range of the default operating envelope, m/s.
pub const DEFAULT_U_ENVELOPE: (f64, f64) = (4.0, 11.0);
pub const DEFAULT_SECTOR_GRID: usize = 200;
pub const DEFAULT_OMEGA_MIN: f64 = 1e-3;
pub const DEFAULT_OMEGA_MAX: f64 = 1e3;
pub const DEFAULT_GRID_POINTS: usize = 4000;
const MIN_GRID_POINTS: usize = 2000;
const MAX_WIDENINGS: usize = 3;
pub const BISECTION_TOL: f64 = 1e-3;
const BISECTION_MAX_ITER: usize = 60;
const MONOTONICITY_PROBES: usize = 41;
const SECTOR_MARGIN_LO: f64 = 0.99;
const SECTOR_MARGIN_HI: f64 = 1.01;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("sector bounds must satisfy 0 < k1 < k2, got k1={k1}, k2={k2}")]
    InvalidSector { k1: f64, k2: f64 },
    #[error("operating envelope contains no samples inside the tip-speed range")]
    EmptyEnvelope,
    #[error("degenerate sector: every sample has slope {0}")]
    DegenerateSector(f64),
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("frequency grid: {0}")]
    InvalidGrid(String),
    #[error("minimum distance attained at the {} grid endpoint (omega = {omega}); widen the grid", if *.upper { "upper" } else { "lower" })]
    EndpointMinimum { omega: f64, upper: bool },
    #[error("invalid transfer-function parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{param} = 0 is already not certified")]
    NotCertifiedAtZero { param: &'static str },
    #[error("{param} = {hi} (upper bracket) is still certified")]
    NoThresholdInBracket { param: &'static str, hi: f64 },
    #[error("certificate is not monotone in {param}: certified again at {at} after failing at {failed_at}")]
    NonMonotone { param: &'static str, failed_at: f64, at: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Rectangle of `(ω_r, U)` over which slopes were sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub omega_r: (f64, f64),
    pub u: (f64, f64),
    pub grid_n: usize,
    /// Grid samples that fell inside the curve's tip-speed range.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorBounds {
    pub k1: f64,
    pub k2: f64,
    pub envelope: Option<Envelope>,
}

impl SectorBounds {
    pub fn new(k1: f64, k2: f64) -> Result<Self, StabilityError> {
        if !(k1.is_finite() && k2.is_finite() && k1 > 0.0 && k1 < k2) {
            return Err(StabilityError::InvalidSector { k1, k2 });
        }
        Ok(Self { k1, k2, envelope: None })
    }

    /// `k₁ = 0.016`, `k₂ = 0.095`.
    pub fn case_study() -> Self {
        Self::new(CASE_STUDY_K1, CASE_STUDY_K2).expect("valid constants")
    }

    /// Slopes divided by the gear ratio: the sector of `Φ/N`, which is the
    /// nonlinearity the linear block actually sees.
    pub fn per_gear_ratio(&self, gear_ratio: f64) -> Self {
        Self { k1: self.k1 / gear_ratio, k2: self.k2 / gear_ratio, envelope: self.envelope }
    }
}

/// Default envelope: `U ∈ [4, 11]` m/s, `ω_r` spanning the torque law's
/// steady-state map `ω_r = λ* U / R` over that range.
pub fn default_envelope(params: &TurbineParams, curve: &CpCurve) -> ((f64, f64), (f64, f64)) {
    let u = DEFAULT_U_ENVELOPE;
    let w = |u: f64| curve.lambda_star() * u / params.rotor_radius;
    ((w(u.0), w(u.1)), u)
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Sector slopes of `Φ(ω_r, U)/U = ρA/(2NJ) · U²/ω_r · C_p(λ)` over a
/// `grid_n × grid_n` grid, widened by 1 % on each side. Grid points whose
/// tip-speed ratio falls outside the curve are skipped.
pub fn compute_sector_bounds(
    params: &TurbineParams,
    curve: &CpCurve,
    omega_r_range: (f64, f64),
    u_range: (f64, f64),
    grid_n: usize,
) -> Result<SectorBounds, StabilityError> {
    let (w_lo, w_hi) = omega_r_range;
    let (u_lo, u_hi) = u_range;
    if grid_n == 0 {
        return Err(StabilityError::InvalidEnvelope("grid_n must be >= 1".into()));
    }
    for (name, lo, hi) in [("omega_r", w_lo, w_hi), ("u", u_lo, u_hi)] {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(StabilityError::InvalidEnvelope(format!("{name} range [{lo}, {hi}]")));
        }
    }
    if w_lo < params.omega_r_min {
        return Err(StabilityError::InvalidEnvelope(format!(
            "omega_r lower bound {w_lo} below omega_r_min {}",
            params.omega_r_min
        )));
    }
    let n_w = if w_lo == w_hi { 1 } else { grid_n };
    let n_u = if u_lo == u_hi { 1 } else { grid_n };

    let scale = params.phi_scale();
    let (mut lo, mut hi, mut samples) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for w in linspace(w_lo, w_hi, n_w) {
        for u in linspace(u_lo, u_hi, n_u) {
            let lambda = params.tip_speed_ratio(w, u);
            if !curve.contains(lambda) {
                continue;
            }
            let s = scale * u * u / w * curve.eval(lambda);
            lo = lo.min(s);
            hi = hi.max(s);
            samples += 1;
        }
    }
    if samples == 0 {
        return Err(StabilityError::EmptyEnvelope);
    }
    if hi - lo <= 1e-12 * hi {
        return Err(StabilityError::DegenerateSector(lo));
    }
    Ok(SectorBounds {
        k1: SECTOR_MARGIN_LO * lo,
        k2: SECTOR_MARGIN_HI * hi,
        envelope: Some(Envelope { omega_r: omega_r_range, u: u_range, grid_n, samples }),
    })
}

/// [`compute_sector_bounds`] over [`default_envelope`] on the default grid.
pub fn default_sector_bounds(
    params: &TurbineParams,
    curve: &CpCurve,
) -> Result<SectorBounds, StabilityError> {
    let (w, u) = default_envelope(params, curve);
    compute_sector_bounds(params, curve, w, u, DEFAULT_SECTOR_GRID)
}

/// Forbidden disk of the circle criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub k1: f64,
    pub k2: f64,
    pub center: f64,
    pub radius: f64,
    /// Scaling that moves the centre to −1.
    pub alpha: f64,
}

impl CircleSpec {
    pub fn from_sector(bounds: &SectorBounds) -> Self {
        Self::build(bounds.k1, bounds.k2)
    }

    /// Like [`CircleSpec::from_sector`] but admits `k₁ = k₂` (a point circle).
    pub fn from_slopes(k1: f64, k2: f64) -> Result<Self, StabilityError> {
        if !(k1.is_finite() && k2.is_finite() && k1 > 0.0 && k1 <= k2) {
            return Err(StabilityError::InvalidSector { k1, k2 });
        }
        Ok(Self::build(k1, k2))
    }

    fn build(k1: f64, k2: f64) -> Self {
        let denom = 2.0 * k1 * k2;
        let alpha = (k2 + k1) / denom;
        Self { k1, k2, center: -alpha, radius: (k2 - k1) / denom, alpha }
    }

    pub fn case_study() -> Self {
        Self::from_sector(&SectorBounds::case_study())
    }

    /// Same disk after dividing the plane by `α`: centre −1, radius `R/α`.
    pub fn normalized(&self) -> (f64, f64) {
        (-1.0, self.radius / self.alpha)
    }
}

/// `G(jω) = (γ·jω + β)/(jω)² · e^{−jωT}`.
pub fn transfer(gamma: f64, beta: f64, delay_t: f64, omega: f64) -> Complex64 {
    let s = Complex64::new(0.0, omega);
    (s * gamma + beta) / (s * s) * (-s * delay_t).exp()
}

/// Upper bound on `|G(jω)|`, decreasing in `ω`.
fn magnitude(gamma: f64, beta: f64, omega: f64) -> f64 {
    (gamma * gamma * omega * omega + beta * beta).sqrt() / (omega * omega)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub gamma: f64,
    pub beta: f64,
    pub delay_t: f64,
    pub omega: Vec<f64>,
    pub g: Vec<Complex64>,
}

fn check_loop_params(gamma: f64, beta: f64, delay_t: f64) -> Result<(), StabilityError> {
    for (name, v) in [("gamma", gamma), ("beta", beta), ("delay", delay_t)] {
        if !v.is_finite() || v < 0.0 {
            return Err(StabilityError::InvalidParameter { name, value: v });
        }
    }
    if gamma == 0.0 && beta == 0.0 {
        return Err(StabilityError::InvalidParameter { name: "gamma", value: gamma });
    }
    Ok(())
}

pub fn frequency_response(
    gamma: f64,
    beta: f64,
    delay_t: f64,
    omega_grid: &[f64],
) -> Result<FrequencyResponse, StabilityError> {
    check_loop_params(gamma, beta, delay_t)?;
    if omega_grid.is_empty() {
        return Err(StabilityError::InvalidGrid("empty".into()));
    }
    if let Some(&w) = omega_grid.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(StabilityError::InvalidGrid(format!("frequency {w} is not > 0")));
    }
    if omega_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(StabilityError::InvalidGrid("not strictly increasing".into()));
    }
    let g = omega_grid.iter().map(|&w| transfer(gamma, beta, delay_t, w)).collect();
    Ok(FrequencyResponse { gamma, beta, delay_t, omega: omega_grid.to_vec(), g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConvergenceCertified,
    NotCertified,
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        self == Verdict::ConvergenceCertified
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConvergenceCertified => "ConvergenceCertified",
            Verdict::NotCertified => "NotCertified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub verdict: Verdict,
    pub min_distance: f64,
    pub argmin_omega: f64,
    pub radius: f64,
    /// True when the minimum sat on the upper or lower grid edge after all
    /// widenings and `min_distance` is the analytic tail bound instead.
    pub tail_bounded: bool,
}

/// Golden-section refinement of `|G(jω)·scale − c|` on `[a, b]` in log ω.
fn refine_min(fr: &FrequencyResponse, center: f64, scale: f64, a: f64, b: f64) -> (f64, f64) {
    let dist = |lw: f64| {
        let w = 10f64.powf(lw);
        (transfer(fr.gamma, fr.beta, fr.delay_t, w) * scale - center).norm()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.log10(), b.log10());
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (dist(c), dist(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = dist(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = dist(d);
        }
    }
    let lw = 0.5 * (lo + hi);
    (dist(lw), 10f64.powf(lw))
}

fn min_distance_scaled(
    fr: &FrequencyResponse,
    center: f64,
    scale: f64,
) -> Result<(f64, f64), StabilityError> {
    let (i, d) = fr
        .g
        .iter()
        .map(|g| (g * scale - center).norm())
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
    let last = fr.omega.len() - 1;
    if i == 0 || i == last {
        return Err(StabilityError::EndpointMinimum { omega: fr.omega[i], upper: i == last });
    }
    let (rd, rw) = refine_min(fr, center, scale, fr.omega[i - 1], fr.omega[i + 1]);
    Ok(if rd < d { (rd, rw) } else { (d, fr.omega[i]) })
}

fn check_coverage(fr: &FrequencyResponse) -> Result<(), StabilityError> {
    let n = fr.omega.len();
    if n < MIN_GRID_POINTS {
        return Err(StabilityError::InvalidGrid(format!("{n} points, need >= {MIN_GRID_POINTS}")));
    }
    if fr.omega[0] > DEFAULT_OMEGA_MIN * (1.0 + 1e-12) || fr.omega[n - 1] < DEFAULT_OMEGA_MAX * (1.0 - 1e-12) {
        return Err(StabilityError::InvalidGrid(format!(
            "grid [{}, {}] does not span [{DEFAULT_OMEGA_MIN}, {DEFAULT_OMEGA_MAX}]",
            fr.omega[0],
            fr.omega[n - 1]
        )));
    }
    Ok(())
}

/// `min_ω |G(jω) − C|` against `R`. A minimum on either grid endpoint is an
/// error; [`certify`] handles widening.
pub fn distance_criterion(
    fr: &FrequencyResponse,
    circle: &CircleSpec,
) -> Result<DistanceReport, StabilityError> {
    check_coverage(fr)?;
    let (d, w) = min_distance_scaled(fr, circle.center, 1.0)?;
    Ok(DistanceReport {
        verdict: if d > circle.radius { Verdict::ConvergenceCertified } else { Verdict::NotCertified },
        min_distance: d,
        argmin_omega: w,
        radius: circle.radius,
        tail_bounded: false,
    })
}

/// The same test on `G/α` against the unit-centred disk.
pub fn distance_criterion_normalized(
    fr: &FrequencyResponse,
    circle: &CircleSpec,
) -> Result<DistanceReport, StabilityError> {
    check_coverage(fr)?;
    let (c, r) = circle.normalized();
    let (d, w) = min_distance_scaled(fr, c, 1.0 / circle.alpha)?;
    Ok(DistanceReport {
        verdict: if d > r { Verdict::ConvergenceCertified } else { Verdict::NotCertified },
        min_distance: d,
        argmin_omega: w,
        radius: r,
        tail_bounded: false,
    })
}

/// Distance criterion on the default 4000-point grid over `[1e−3, 1e3]`
/// rad/s. An endpoint minimum widens that end by one decade (keeping the
/// point density), at most three times. If the minimum still sits on an
/// edge, the tail beyond it is bounded analytically from `|G| ≤ √(γ²ω²+β²)/ω²`.
pub fn certify(
    gamma: f64,
    beta: f64,
    delay_t: f64,
    circle: &CircleSpec,
) -> Result<(DistanceReport, FrequencyResponse), StabilityError> {
    let per_decade = (DEFAULT_GRID_POINTS - 1) as f64
        / (DEFAULT_OMEGA_MAX.log10() - DEFAULT_OMEGA_MIN.log10());
    let (mut lo, mut hi) = (DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX);
    let mut widenings = 0;
    loop {
        let n = ((hi.log10() - lo.log10()) * per_decade).round() as usize + 1;
        let fr = frequency_response(gamma, beta, delay_t, &log_grid(lo, hi, n))?;
        match distance_criterion(&fr, circle) {
            Ok(r) => return Ok((r, fr)),
            Err(StabilityError::EndpointMinimum { omega, upper }) => {
                if widenings < MAX_WIDENINGS {
                    widenings += 1;
                    if upper {
                        hi *= 10.0;
                    } else {
                        lo /= 10.0;
                    }
                    continue;
                }
                let edge = (transfer(gamma, beta, delay_t, omega) - circle.center).norm();
                let tail = if upper {
                    circle.center.abs() - magnitude(gamma, beta, omega)
                } else {
                    magnitude(gamma, beta, omega) - circle.center.abs()
                };
                let d = edge.min(tail);
                let report = DistanceReport {
                    verdict: if d > circle.radius { Verdict::ConvergenceCertified } else { Verdict::NotCertified },
                    min_distance: d,
                    argmin_omega: omega,
                    radius: circle.radius,
                    tail_bounded: true,
                };
                return Ok((report, fr));
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn is_certified(gamma: f64, beta: f64, delay_t: f64, circle: &CircleSpec) -> Result<bool, StabilityError> {
    Ok(certify(gamma, beta, delay_t, circle)?.0.verdict.is_certified())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    /// Largest certified value found.
    pub value: f64,
    /// Smallest value known not to be certified; `upper − value ≤ 1e−3`.
    pub upper: f64,
    pub iterations: usize,
}

fn search_margin(
    param: &'static str,
    hi: f64,
    certified: impl Fn(f64) -> Result<bool, StabilityError>,
) -> Result<Margin, StabilityError> {
    if !(hi.is_finite() && hi > 0.0) {
        return Err(StabilityError::InvalidParameter { name: param, value: hi });
    }
    if !certified(0.0)? {
        return Err(StabilityError::NotCertifiedAtZero { param });
    }
    if certified(hi)? {
        return Err(StabilityError::NoThresholdInBracket { param, hi });
    }
    let mut failed_at = None;
    for i in 1..MONOTONICITY_PROBES {
        let x = hi * i as f64 / (MONOTONICITY_PROBES - 1) as f64;
        let ok = certified(x)?;
        match (ok, failed_at) {
            (false, None) => failed_at = Some(x),
            (true, Some(f)) => return Err(StabilityError::NonMonotone { param, failed_at: f, at: x }),
            _ => {}
        }
    }
    let (mut lo, mut up) = (0.0, hi);
    let mut iterations = 0;
    while up - lo > BISECTION_TOL && iterations < BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + up);
        if certified(mid)? {
            lo = mid;
        } else {
            up = mid;
        }
        iterations += 1;
    }
    Ok(Margin { value: lo, upper: up, iterations })
}

/// Largest `β` in `[0, beta_hi]` that the distance criterion certifies.
pub fn max_stable_beta(
    gamma: f64,
    delay_t: f64,
    circle: &CircleSpec,
    beta_hi: f64,
) -> Result<Margin, StabilityError> {
    search_margin("beta", beta_hi, |b| is_certified(gamma, b, delay_t, circle))
}

/// Largest delay `T` in `[0, t_hi]` that the distance criterion certifies.
pub fn max_stable_delay(
    gamma: f64,
    beta: f64,
    circle: &CircleSpec,
    t_hi: f64,
) -> Result<Margin, StabilityError> {
    search_margin("delay", t_hi, |t| is_certified(gamma, beta, t, circle))
}

/// JSON verdict record written next to the Nyquist data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: Verdict,
    pub min_distance: f64,
    pub argmin_omega: f64,
    pub k1: f64,
    pub k2: f64,
    #[serde(rename = "C")]
    pub center: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub alpha: f64,
}

impl VerdictRecord {
    pub fn new(report: &DistanceReport, circle: &CircleSpec) -> Self {
        Self {
            verdict: report.verdict,
            min_distance: report.min_distance,
            argmin_omega: report.argmin_omega,
            k1: circle.k1,
            k2: circle.k2,
            center: circle.center,
            radius: circle.radius,
            alpha: circle.alpha,
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), StabilityError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// `omega,re,im,distance` rows, distance measured to the disk centre.
pub fn write_nyquist_csv<W: Write>(
    fr: &FrequencyResponse,
    circle: &CircleSpec,
    mut out: W,
) -> Result<(), StabilityError> {
    writeln!(out, "omega,re,im,distance")?;
    for (w, g) in fr.omega.iter().zip(&fr.g) {
        writeln!(out, "{w},{},{},{}", g.re, g.im, (g - circle.center).norm())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_fr(g: f64, b: f64, t: f64) -> FrequencyResponse {
        frequency_response(g, b, t, &log_grid(1e-3, 1e3, 4000)).unwrap()
    }

    #[test]
    fn sector_requires_ordered_positive_slopes() {
        assert!(SectorBounds::new(0.0, 1.0).is_err());
        assert!(SectorBounds::new(0.2, 0.1).is_err());
        assert!(SectorBounds::new(0.1, 0.1).is_err());
        assert!(SectorBounds::new(0.016, 0.095).is_ok());
    }

    #[test]
    fn case_study_circle_numbers() {
        // C = −0.111/0.00304, R = 0.079/0.00304
        let c = CircleSpec::case_study();
        assert!((c.center + 36.513).abs() < 1e-3, "{}", c.center);
        assert!((c.radius - 25.987).abs() < 1e-3, "{}", c.radius);
        assert!((c.alpha - 36.513).abs() < 1e-3);
        assert_eq!(c.center, -c.alpha);
        assert!(c.radius < c.center.abs());
    }

    #[test]
    fn diameter_endpoints() {
        for &(k1, k2) in &[(0.016, 0.095), (0.5, 2.0), (1e-3, 7.0)] {
            let c = CircleSpec::from_slopes(k1, k2).unwrap();
            assert!((c.center + c.radius + 1.0 / k2).abs() <= 1e-12 * (1.0 / k2));
            assert!((c.center - c.radius + 1.0 / k1).abs() <= 1e-12 * (1.0 / k1));
        }
    }

    #[test]
    fn point_circle() {
        let c = CircleSpec::from_slopes(0.05, 0.05).unwrap();
        assert_eq!(c.radius, 0.0);
        assert!((c.center + 20.0).abs() < 1e-12);
    }

    #[test]
    fn pure_integrator_response() {
        let fr = default_fr(40.0, 0.0, 0.0);
        for (w, g) in fr.omega.iter().zip(&fr.g).step_by(97) {
            assert!((g.norm() - 40.0 / w).abs() <= 1e-12 * g.norm());
            assert!((g.arg() + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn undelayed_modulus() {
        let fr = default_fr(40.0, 10.0, 0.0);
        for (w, g) in fr.omega.iter().zip(&fr.g).step_by(53) {
            let m = (1600.0 * w * w + 100.0).sqrt() / (w * w);
            assert!((g.norm() - m).abs() <= 1e-12 * m);
        }
    }

    #[test]
    fn delay_rotates_phase_only() {
        let a = default_fr(40.0, 10.0, 0.0);
        let b = default_fr(40.0, 10.0, 0.3);
        for i in (0..a.omega.len()).step_by(41) {
            let w = a.omega[i];
            assert!((a.g[i].norm() - b.g[i].norm()).abs() <= 1e-12 * a.g[i].norm());
            let rot = b.g[i] / a.g[i];
            let expect = Complex64::from_polar(1.0, -w * 0.3);
            assert!((rot - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(frequency_response(40.0, 10.0, 0.3, &[0.0, 1.0]).is_err());
        assert!(frequency_response(40.0, 10.0, 0.3, &[1.0, 0.5]).is_err());
        assert!(frequency_response(40.0, 10.0, 0.3, &[]).is_err());
        let short = frequency_response(40.0, 10.0, 0.3, &log_grid(1e-3, 1e3, 500)).unwrap();
        assert!(matches!(
            distance_criterion(&short, &CircleSpec::case_study()),
            Err(StabilityError::InvalidGrid(_))
        ));
        let narrow = frequency_response(40.0, 10.0, 0.3, &log_grid(1e-2, 1e3, 4000)).unwrap();
        assert!(distance_criterion(&narrow, &CircleSpec::case_study()).is_err());
    }

    #[test]
    fn endpoint_minimum_reported() {
        // Pure integrator: |G − C|² = C² + γ²/ω², infimum only as ω → ∞.
        let fr = default_fr(40.0, 0.0, 0.0);
        assert!(matches!(
            distance_criterion(&fr, &CircleSpec::case_study()),
            Err(StabilityError::EndpointMinimum { upper: true, .. })
        ));
        let (r, _) = certify(40.0, 0.0, 0.0, &CircleSpec::case_study()).unwrap();
        assert!(r.tail_bounded);
        assert!(r.verdict.is_certified());
        assert!((r.min_distance - 36.513).abs() < 1e-2);
    }

    #[test]
    fn sector_bounds_single_point_degenerate() {
        let p = TurbineParams::case_study();
        let c = CpCurve::synthetic();
        let err = compute_sector_bounds(&p, &c, (0.8, 0.8), (7.0, 7.0), 200).unwrap_err();
        assert!(matches!(err, StabilityError::DegenerateSector(_)));
        assert!(matches!(
            compute_sector_bounds(&p, &c, (0.8, 0.9), (50.0, 60.0), 10),
            Err(StabilityError::EmptyEnvelope)
        ));
        assert!(compute_sector_bounds(&p, &c, (0.01, 0.9), (5.0, 9.0), 10).is_err());
    }

    #[test]
    fn margin_errors() {
        let c = CircleSpec::case_study();
        // γ = 400 is refused even with β = 0.
        assert!(matches!(
            max_stable_beta(400.0, 0.3, &c, 50.0),
            Err(StabilityError::NotCertifiedAtZero { .. })
        ));
        assert!(matches!(
            max_stable_beta(40.0, 0.3, &c, 5.0),
            Err(StabilityError::NoThresholdInBracket { .. })
        ));
    }

    #[test]
    fn verdict_json_fields() {
        let c = CircleSpec::case_study();
        let (r, _) = certify(40.0, 10.0, 0.3, &c).unwrap();
        let mut buf = Vec::new();
        VerdictRecord::new(&r, &c).write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["verdict", "min_distance", "argmin_omega", "k1", "k2", "C", "R", "alpha"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "ConvergenceCertified");
    }
}
