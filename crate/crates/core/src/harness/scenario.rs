use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cp_model::CpCurve;
use crate::estimators::{EstimatorConfig, DEFAULT_U_GUESS};
use crate::stability::{SectorBounds, DEFAULT_U_ENVELOPE};
use crate::turbine::{PlantState, TurbineParams};

/// Wind levels of the stepwise case studies, m/s.
pub const PAPER_WIND_LEVELS: [f64; 3] = [5.0, 7.0, 9.0];
/// Time spent at each level, s.
pub const PAPER_DWELL: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSegment {
    pub t_start: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub plant: PlantState,
    pub u_guess: f64,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub wind_profile: Vec<WindSegment>,
    pub duration: f64,
    pub dt: f64,
    pub turbine: TurbineParams,
    pub curve: CpCurve,
    pub controller_gain: f64,
    pub estimator: EstimatorConfig,
    pub initial: InitialConditions,
    /// Sector used for the convergence verdict; `None` means derive it.
    pub sector: Option<SectorBounds>,
}

impl Scenario {
    /// Stepwise 5 → 7 → 9 m/s wind on the case-study turbine and the bundled
    /// curve. The rotor starts at its steady state for 5 m/s and the estimator
    /// at [`DEFAULT_U_GUESS`].
    pub fn paper_stepwise(estimator: EstimatorConfig) -> Self {
        let turbine = TurbineParams::case_study();
        let curve = CpCurve::synthetic();
        let controller_gain = turbine.optimal_gain(&curve);
        let wind_profile: Vec<WindSegment> = PAPER_WIND_LEVELS
            .iter()
            .enumerate()
            .map(|(i, &u)| WindSegment { t_start: i as f64 * PAPER_DWELL, u })
            .collect();
        let omega_r = steady_state_speed(&turbine, &curve, wind_profile[0].u);
        Self {
            duration: PAPER_DWELL * PAPER_WIND_LEVELS.len() as f64,
            dt: estimator.dt,
            wind_profile,
            turbine,
            curve,
            controller_gain,
            estimator,
            initial: InitialConditions {
                plant: PlantState { omega_r, t: 0.0 },
                u_guess: DEFAULT_U_GUESS,
            },
            sector: None,
        }
    }

    /// Constant wind for `duration` seconds, rotor at steady state, estimator
    /// started at `u_guess`.
    pub fn constant_wind(estimator: EstimatorConfig, u: f64, duration: f64, u_guess: f64) -> Self {
        let mut s = Self::paper_stepwise(estimator);
        s.wind_profile = vec![WindSegment { t_start: 0.0, u }];
        s.duration = duration;
        s.initial.plant.omega_r = steady_state_speed(&s.turbine, &s.curve, u);
        s.initial.u_guess = u_guess;
        s
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidScenario(m));
        if self.wind_profile.is_empty() {
            return bad("wind profile is empty".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        let ratio = self.duration / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad(format!("duration {} is not a multiple of dt {}", self.duration, self.dt));
        }
        if self.estimator.dt != self.dt {
            return bad(format!(
                "estimator dt {} differs from scenario dt {}",
                self.estimator.dt, self.dt
            ));
        }
        if self.wind_profile[0].t_start != 0.0 {
            return bad("first wind segment must start at t = 0".into());
        }
        let (lo, hi) = DEFAULT_U_ENVELOPE;
        for (i, seg) in self.wind_profile.iter().enumerate() {
            if !(seg.u.is_finite() && seg.u > 0.0) {
                return bad(format!("segment {i}: wind speed must be > 0, got {}", seg.u));
            }
            if seg.u < lo || seg.u > hi {
                return bad(format!("segment {i}: wind speed {} outside [{lo}, {hi}] m/s", seg.u));
            }
            if !(seg.t_start.is_finite() && seg.t_start < self.duration) {
                return bad(format!("segment {i}: start {} not before the end", seg.t_start));
            }
            if i > 0 && seg.t_start <= self.wind_profile[i - 1].t_start {
                return bad(format!("segment {i}: start times must increase"));
            }
        }
        if !(self.controller_gain.is_finite() && self.controller_gain > 0.0) {
            return bad(format!("controller gain must be > 0, got {}", self.controller_gain));
        }
        let w0 = self.initial.plant.omega_r;
        if !(w0.is_finite() && w0 >= self.turbine.omega_r_min) {
            return bad(format!("initial rotor speed {w0} below {}", self.turbine.omega_r_min));
        }
        if !(self.initial.u_guess.is_finite() && self.initial.u_guess > 0.0) {
            return bad(format!("initial wind guess must be > 0, got {}", self.initial.u_guess));
        }
        Ok(())
    }

    /// Wind speed in force at `t`.
    pub fn wind_at(&self, t: f64) -> f64 {
        let eps = 1e-9 * self.dt;
        self.wind_profile
            .iter()
            .rev()
            .find(|s| s.t_start <= t + eps)
            .unwrap_or(&self.wind_profile[0])
            .u
    }

    /// `(t_start, t_end, U)` for every segment.
    pub fn segments(&self) -> Vec<(f64, f64, f64)> {
        self.wind_profile
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let end = self.wind_profile.get(i + 1).map_or(self.duration, |n| n.t_start);
                (s.t_start, end, s.u)
            })
            .collect()
    }
}

/// Rotor speed at which the torque law holds `λ = λ*` for wind `u`.
pub fn steady_state_speed(params: &TurbineParams, curve: &CpCurve, u: f64) -> f64 {
    curve.lambda_star() * u / params.rotor_radius
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurbinePreset {
    #[serde(rename = "case_study")]
    CaseStudy,
    #[serde(rename = "nrel_5mw")]
    Nrel5mw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TurbineSource {
    Preset(TurbinePreset),
    File { file: PathBuf },
    Inline(TurbineParams),
}

impl Default for TurbineSource {
    fn default() -> Self {
        Self::Preset(TurbinePreset::CaseStudy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSource {
    /// Only `"synthetic"` is accepted.
    Preset(String),
    File { file: PathBuf },
}

impl Default for CurveSource {
    fn default() -> Self {
        Self::Preset("synthetic".into())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub omega_r: Option<f64>,
    #[serde(default)]
    pub u_guess: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub k1: f64,
    pub k2: f64,
}

/// On-disk scenario description. Relative file references are resolved
/// against the scenario file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub wind_profile: Vec<WindSegment>,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub turbine: TurbineSource,
    #[serde(default)]
    pub curve: CurveSource,
    #[serde(default)]
    pub controller_gain: Option<f64>,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub sector: Option<SectorSpec>,
}

fn default_dt() -> f64 {
    crate::estimators::DEFAULT_DT
}

impl ScenarioFile {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario, HarnessError> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let turbine = match &self.turbine {
            TurbineSource::Preset(TurbinePreset::CaseStudy) => TurbineParams::case_study(),
            TurbineSource::Preset(TurbinePreset::Nrel5mw) => TurbineParams::nrel_5mw(),
            TurbineSource::File { file } => TurbineParams::load(at(file))?,
            TurbineSource::Inline(p) => p.clone(),
        };
        let curve = match &self.curve {
            CurveSource::Preset(name) if name == "synthetic" => CpCurve::synthetic(),
            CurveSource::Preset(name) => {
                return Err(HarnessError::InvalidScenario(format!("unknown curve preset `{name}`")))
            }
            CurveSource::File { file } => CpCurve::from_csv_path(at(file))?,
        };
        let controller_gain = self.controller_gain.unwrap_or_else(|| turbine.optimal_gain(&curve));
        let u0 = self.wind_profile.first().map_or(f64::NAN, |s| s.u);
        let omega_r = self
            .initial
            .omega_r
            .unwrap_or_else(|| steady_state_speed(&turbine, &curve, u0));
        let sector = match self.sector {
            Some(s) => Some(SectorBounds::new(s.k1, s.k2)?),
            None => None,
        };
        let scn = Scenario {
            wind_profile: self.wind_profile.clone(),
            duration: self.duration,
            dt: self.dt,
            turbine,
            curve,
            controller_gain,
            estimator: self.estimator,
            initial: InitialConditions {
                plant: PlantState { omega_r, t: 0.0 },
                u_guess: self.initial.u_guess.unwrap_or(DEFAULT_U_GUESS),
            },
            sector,
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json_str(&text)?.resolve(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi() -> EstimatorConfig {
        EstimatorConfig::pi(40.0, 10.0, 0.3).unwrap()
    }

    #[test]
    fn stepwise_schedule() {
        let s = Scenario::paper_stepwise(pi());
        s.validate().unwrap();
        assert_eq!(s.steps(), 45_000);
        assert_eq!(s.wind_at(0.0), 5.0);
        assert_eq!(s.wind_at(149.99), 5.0);
        assert_eq!(s.wind_at(150.0), 7.0);
        assert_eq!(s.wind_at(15_000.0 * 0.01), 7.0);
        assert_eq!(s.wind_at(449.0), 9.0);
        assert_eq!(s.segments()[2], (300.0, 450.0, 9.0));
    }

    #[test]
    fn invalid_schedules() {
        let mut s = Scenario::paper_stepwise(pi());
        s.wind_profile.clear();
        assert!(s.validate().is_err());
        let mut s = Scenario::paper_stepwise(pi());
        s.wind_profile[1].t_start = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::paper_stepwise(pi());
        s.wind_profile[0].t_start = 1.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::paper_stepwise(pi());
        s.wind_profile[2].u = 14.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::paper_stepwise(pi());
        s.wind_profile[2].u = -1.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::paper_stepwise(pi());
        s.duration = 450.005;
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_minimal_and_presets() {
        let text = r#"{
            "wind_profile": [{"t_start": 0, "u": 6}],
            "duration": 10,
            "estimator": {"family": "iandi", "gamma": 40, "delay_t": 0.3}
        }"#;
        let s = ScenarioFile::from_json_str(text).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(s.turbine, TurbineParams::case_study());
        assert_eq!(s.initial.u_guess, DEFAULT_U_GUESS);
        assert!((s.initial.plant.omega_r - 7.5 * 6.0 / 63.0).abs() < 1e-6);

        let text = r#"{
            "wind_profile": [{"t_start": 0, "u": 6}],
            "duration": 10,
            "turbine": "nrel_5mw",
            "curve": "synthetic",
            "controller_gain": 2.0,
            "estimator": {"family": "pi", "gamma": 40, "beta": 10, "delay_t": 0.3},
            "initial": {"omega_r": 0.7, "u_guess": 6},
            "sector": {"k1": 0.016, "k2": 0.095}
        }"#;
        let s = ScenarioFile::from_json_str(text).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(s.turbine, TurbineParams::nrel_5mw());
        assert_eq!(s.controller_gain, 2.0);
        assert_eq!(s.initial.plant.omega_r, 0.7);
        assert_eq!(s.sector.unwrap().k1, 0.016);
    }

    #[test]
    fn json_rejects_unknown_keys_and_bad_presets() {
        let text = r#"{"wind_profile": [{"t_start": 0, "u": 6}], "duration": 10,
            "estimator": {"family": "pi", "gamma": 40}, "bogus": 1}"#;
        assert!(ScenarioFile::from_json_str(text).is_err());
        let text = r#"{"wind_profile": [{"t_start": 0, "u": 6}], "duration": 10,
            "curve": "measured", "estimator": {"family": "pi", "gamma": 40}}"#;
        let f = ScenarioFile::from_json_str(text).unwrap();
        assert!(f.resolve(Path::new(".")).is_err());
    }

    #[test]
    fn inline_turbine() {
        let p = TurbineParams::nrel_5mw();
        let text = format!(
            r#"{{"wind_profile": [{{"t_start": 0, "u": 6}}], "duration": 1,
                "turbine": {},
                "estimator": {{"family": "equivalent_p", "gamma": 40}}}}"#,
            serde_json::to_string(&p).unwrap()
        );
        let s = ScenarioFile::from_json_str(&text).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(s.turbine, p);
    }
}
