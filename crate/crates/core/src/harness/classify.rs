//! Per-segment convergence labels.
//!
//! Converged: `max|Û − U|` over the final 20 % of the segment is below
//! 0.05 m/s. Diverged: the run stopped inside the segment, or the
//! peak-to-peak amplitude of `Û` over the last three windows (10 % of the
//! segment each) grows by more than 1 % from one window to the next.
//! Anything else is oscillatory. A run's label is its worst segment label.

use serde::{Deserialize, Serialize};

use super::{Scenario, SimTrace};

pub const CONVERGED_TOL: f64 = 0.05;
pub const TAIL_FRACTION: f64 = 0.2;
pub const WINDOW_FRACTION: f64 = 0.1;
/// Minimum window-to-window amplitude ratio counted as growth.
pub const GROWTH_RATIO: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SimLabel {
    Converged,
    Oscillatory,
    Diverged,
}

impl std::fmt::Display for SimLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::Oscillatory => "oscillatory",
            Self::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub t_start: f64,
    pub t_end: f64,
    pub u: f64,
    pub label: SimLabel,
    /// `max|Û − U|` over the tail; `None` when the segment is cut short.
    pub tail_error: Option<f64>,
    /// Peak-to-peak amplitudes of the three trailing windows, oldest first.
    pub amplitudes: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: SimLabel,
    /// Segments the run reached.
    pub segments: Vec<SegmentLabel>,
}

impl Classification {
    pub fn segment_at(&self, u: f64) -> Option<&SegmentLabel> {
        self.segments.iter().find(|s| s.u == u)
    }
}

fn peak_to_peak(xs: &[f64]) -> f64 {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

pub fn classify(trace: &SimTrace, scn: &Scenario) -> Classification {
    let mut segments = Vec::new();
    let n_full = scn.steps();
    for (t_start, t_end, u) in scn.segments() {
        let i0 = (t_start / scn.dt).round() as usize;
        let i1 = ((t_end / scn.dt).round() as usize).min(n_full);
        // the final record belongs to the last segment
        let i1 = if i1 == n_full { n_full + 1 } else { i1 };
        if i0 >= trace.records.len() {
            break;
        }
        let cut = trace.records.len() < i1;
        if cut || trace.stopped_early() && trace.records.len() == i1 {
            segments.push(SegmentLabel {
                t_start,
                t_end,
                u,
                label: SimLabel::Diverged,
                tail_error: None,
                amplitudes: None,
            });
            break;
        }
        let seg: Vec<f64> = trace.records[i0..i1].iter().map(|r| r.u_hat).collect();
        let n = seg.len();
        let tail = &seg[n - ((TAIL_FRACTION * n as f64).round() as usize).max(1)..];
        let tail_error = tail.iter().map(|x| (x - u).abs()).fold(0.0, f64::max);
        let w = ((WINDOW_FRACTION * n as f64).round() as usize).max(1);
        let amp = |k: usize| peak_to_peak(&seg[n - k * w..n - (k - 1) * w]);
        let amplitudes = [amp(3), amp(2), amp(1)];
        let label = if tail_error < CONVERGED_TOL {
            SimLabel::Converged
        } else if amplitudes[1] > GROWTH_RATIO * amplitudes[0]
            && amplitudes[2] > GROWTH_RATIO * amplitudes[1]
        {
            SimLabel::Diverged
        } else {
            SimLabel::Oscillatory
        };
        segments.push(SegmentLabel {
            t_start,
            t_end,
            u,
            label,
            tail_error: Some(tail_error),
            amplitudes: Some(amplitudes),
        });
    }
    let label = segments.iter().map(|s| s.label).max().unwrap_or(SimLabel::Diverged);
    Classification { label, segments }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorConfig;
    use crate::harness::{TraceRecord, WindSegment};

    fn synthetic_trace(scn: &Scenario, f: impl Fn(f64) -> f64) -> SimTrace {
        let records = (0..=scn.steps())
            .map(|k| {
                let t = k as f64 * scn.dt;
                TraceRecord {
                    t,
                    u_true: scn.wind_at(t),
                    omega_r: 1.0,
                    omega_hat: None,
                    epsilon: None,
                    u_hat: f(t),
                    t_g: 0.0,
                    clamp_count: 0,
                }
            })
            .collect();
        SimTrace { dt: scn.dt, records, stop_time: None, stop_reason: None }
    }

    fn two_level() -> Scenario {
        let mut s = Scenario::constant_wind(EstimatorConfig::iandi(40.0, 0.0).unwrap(), 5.0, 200.0, 5.0);
        s.wind_profile.push(WindSegment { t_start: 100.0, u: 7.0 });
        s
    }

    #[test]
    fn labels_from_shapes() {
        let s = two_level();
        let c = classify(&synthetic_trace(&s, |t| s.wind_at(t) + 3.0 * (-t).exp()), &s);
        assert_eq!(c.label, SimLabel::Converged);
        assert_eq!(c.segments.len(), 2);

        let c = classify(&synthetic_trace(&s, |t| s.wind_at(t) + (t).sin()), &s);
        assert_eq!(c.label, SimLabel::Oscillatory);

        let c = classify(
            &synthetic_trace(&s, |t| s.wind_at(t) + if t < 100.0 { 0.0 } else { (0.05 * t).exp() * t.sin() * 1e-3 }),
            &s,
        );
        assert_eq!(c.segments[0].label, SimLabel::Converged);
        assert_eq!(c.segments[1].label, SimLabel::Diverged);
        assert_eq!(c.label, SimLabel::Diverged);
    }

    #[test]
    fn decaying_oscillation_is_not_growth() {
        let s = two_level();
        let c = classify(&synthetic_trace(&s, |t| s.wind_at(t) + 5.0 * (-0.01 * t).exp() * t.sin()), &s);
        assert_eq!(c.label, SimLabel::Oscillatory);
    }

    #[test]
    fn early_stop_marks_segment_diverged() {
        let s = two_level();
        let mut tr = synthetic_trace(&s, |t| s.wind_at(t));
        tr.records.truncate(12_000);
        tr.stop_time = Some(tr.records.last().unwrap().t);
        let c = classify(&tr, &s);
        assert_eq!(c.segments.len(), 2);
        assert_eq!(c.segments[0].label, SimLabel::Converged);
        assert_eq!(c.segments[1].label, SimLabel::Diverged);
    }
}
