//! Cases 1–6 and the PI versus I&I comparison on stepwise wind.

use serde::{Deserialize, Serialize};

use super::{classify, run_scenario, Scenario, SegmentLabel, SimLabel, SimTrace};
use crate::estimators::{EstimatorConfig, EstimatorFamily};
use crate::stability::{
    certify, max_stable_beta, max_stable_delay, CircleSpec, DistanceReport, FrequencyResponse, Margin,
    Verdict,
};

/// Published delay bound for Case 6, s. Kept for comparison only.
pub const PAPER_DELAY_MARGIN: f64 = 31.4;
const MARGIN_GAMMA: f64 = 40.0;
const MARGIN_DELAY: f64 = 0.3;
const MARGIN_BETA: f64 = 10.0;
const BETA_BRACKET: f64 = 100.0;
const DELAY_BRACKET: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseSpec {
    pub name: &'static str,
    pub estimator: EstimatorConfig,
}

pub fn paper_cases() -> Vec<CaseSpec> {
    let pi = |g, b, t| EstimatorConfig::pi(g, b, t).expect("valid case");
    vec![
        CaseSpec { name: "case1", estimator: pi(40.0, 10.0, 0.3) },
        CaseSpec { name: "case2", estimator: pi(100.0, 10.0, 0.3) },
        CaseSpec { name: "case3", estimator: pi(100.0, 200.0, 0.3) },
        CaseSpec { name: "case4", estimator: pi(40.0, 10.0, 0.3) },
        CaseSpec { name: "case5", estimator: pi(40.0, 10.0, 0.6) },
        CaseSpec { name: "case6", estimator: pi(40.0, 10.0, 2.0) },
        CaseSpec { name: "compare_pi", estimator: pi(80.0, 4.0, 0.3) },
        CaseSpec {
            name: "compare_iandi",
            estimator: EstimatorConfig::iandi(80.0, 0.3).expect("valid case"),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub family: EstimatorFamily,
    pub gamma: f64,
    pub beta: f64,
    pub delay_t: f64,
    pub sim_label: Option<SimLabel>,
    pub segments: Vec<SegmentLabel>,
    pub sim_error: Option<String>,
    pub stop_time: Option<f64>,
    pub clamp_count: u64,
    /// `|Û − U|` and `|ε|` at the last record of every segment reached.
    pub segment_end_u_error: Vec<f64>,
    pub segment_end_epsilon: Vec<Option<f64>>,
    pub verdict: Option<Verdict>,
    pub min_distance: Option<f64>,
    pub argmin_omega: Option<f64>,
    pub stability_error: Option<String>,
    /// False only when the criterion certifies and the run did not converge.
    pub concordant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRun {
    pub report: CaseReport,
    pub scenario: Scenario,
    pub trace: Option<SimTrace>,
    pub response: Option<FrequencyResponse>,
    pub distance: Option<DistanceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperReport {
    pub header: Vec<String>,
    pub circle: CircleSpec,
    pub cases: Vec<CaseReport>,
    pub beta_margin: Option<Margin>,
    pub beta_margin_error: Option<String>,
    pub delay_margin: Option<Margin>,
    pub delay_margin_error: Option<String>,
    pub paper_delay_margin: f64,
    /// Set when the computed delay margin differs from the quoted one by
    /// more than 1 %.
    pub delay_discrepancy: bool,
}

impl PaperReport {
    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }
}

fn segment_ends(scn: &Scenario, trace: &SimTrace) -> (Vec<f64>, Vec<Option<f64>>) {
    let mut du = Vec::new();
    let mut de = Vec::new();
    for (_, t_end, u) in scn.segments() {
        let last = ((t_end / scn.dt).round() as usize).min(scn.steps());
        let idx = if last == scn.steps() { last } else { last - 1 };
        match trace.records.get(idx) {
            Some(r) => {
                du.push((r.u_hat - u).abs());
                de.push(r.epsilon.map(f64::abs));
            }
            None => break,
        }
    }
    (du, de)
}

/// Simulate one case on the stepwise schedule and check it against `circle`.
pub fn run_case(spec: &CaseSpec, circle: &CircleSpec) -> CaseRun {
    let cfg = spec.estimator;
    let scenario = Scenario::paper_stepwise(cfg);
    let mut report = CaseReport {
        name: spec.name.to_string(),
        family: cfg.family,
        gamma: cfg.gamma,
        beta: cfg.beta,
        delay_t: cfg.delay_t,
        sim_label: None,
        segments: Vec::new(),
        sim_error: None,
        stop_time: None,
        clamp_count: 0,
        segment_end_u_error: Vec::new(),
        segment_end_epsilon: Vec::new(),
        verdict: None,
        min_distance: None,
        argmin_omega: None,
        stability_error: None,
        concordant: true,
    };
    let trace = match run_scenario(&scenario) {
        Ok(tr) => {
            let c = classify(&tr, &scenario);
            report.sim_label = Some(c.label);
            report.segments = c.segments;
            report.stop_time = tr.stop_time;
            report.clamp_count = tr.last().map_or(0, |r| r.clamp_count);
            let (du, de) = segment_ends(&scenario, &tr);
            report.segment_end_u_error = du;
            report.segment_end_epsilon = de;
            Some(tr)
        }
        Err(e) => {
            report.sim_error = Some(e.to_string());
            None
        }
    };
    // I&I and equivalent-P are the β = 0 member of the family.
    let beta = if cfg.family == EstimatorFamily::Pi { cfg.beta } else { 0.0 };
    let (response, distance) = match certify(cfg.gamma, beta, cfg.delay_t, circle) {
        Ok((r, fr)) => {
            report.verdict = Some(r.verdict);
            report.min_distance = Some(r.min_distance);
            report.argmin_omega = Some(r.argmin_omega);
            (Some(fr), Some(r))
        }
        Err(e) => {
            report.stability_error = Some(e.to_string());
            (None, None)
        }
    };
    report.concordant = !(report.verdict == Some(Verdict::ConvergenceCertified)
        && report.sim_label != Some(SimLabel::Converged));
    CaseRun { report, scenario, trace, response, distance }
}

fn header() -> Vec<String> {
    use super::{CONVERGED_TOL, GROWTH_RATIO, TAIL_FRACTION, WINDOW_FRACTION};
    vec![
        format!(
            "wind: {:?} m/s, {} s per level, dt = {} s, case-study turbine, bundled synthetic C_p curve",
            super::PAPER_WIND_LEVELS,
            super::PAPER_DWELL,
            crate::estimators::DEFAULT_DT
        ),
        format!(
            "converged: max|U_hat - U| < {CONVERGED_TOL} m/s over the final {:.0}% of each segment",
            TAIL_FRACTION * 100.0
        ),
        format!(
            "diverged: run stopped (|U_hat| > {} m/s or non-finite), or peak-to-peak amplitude over three trailing {:.0}% windows grows by more than {:.0}% per window",
            super::DIVERGENCE_GUARD,
            WINDOW_FRACTION * 100.0,
            (GROWTH_RATIO - 1.0) * 100.0
        ),
        "otherwise oscillatory; a case takes its worst segment label".into(),
        "the circle test is sufficient only: concordance is violated only by a certified case that fails to converge".into(),
    ]
}

/// Runs every case (in parallel) plus the β and delay margins.
pub fn run_paper_cases_full(circle: &CircleSpec) -> (PaperReport, Vec<CaseRun>) {
    let specs = paper_cases();
    let runs: Vec<CaseRun> = std::thread::scope(|s| {
        let handles: Vec<_> = specs.iter().map(|spec| s.spawn(move || run_case(spec, circle))).collect();
        handles.into_iter().map(|h| h.join().expect("case thread panicked")).collect()
    });
    let (beta_margin, beta_margin_error) =
        match max_stable_beta(MARGIN_GAMMA, MARGIN_DELAY, circle, BETA_BRACKET) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let (delay_margin, delay_margin_error) =
        match max_stable_delay(MARGIN_GAMMA, MARGIN_BETA, circle, DELAY_BRACKET) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let delay_discrepancy = delay_margin
        .is_none_or(|m| (m.value - PAPER_DELAY_MARGIN).abs() > 0.01 * PAPER_DELAY_MARGIN);
    let report = PaperReport {
        header: header(),
        circle: *circle,
        cases: runs.iter().map(|r| r.report.clone()).collect(),
        beta_margin,
        beta_margin_error,
        delay_margin,
        delay_margin_error,
        paper_delay_margin: PAPER_DELAY_MARGIN,
        delay_discrepancy,
    };
    (report, runs)
}

/// Report over all cases with the case-study circle.
pub fn run_paper_cases() -> PaperReport {
    run_paper_cases_full(&CircleSpec::case_study()).0
}
