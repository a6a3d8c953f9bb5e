//! Trace CSV, stability artefacts, plots and the case-study report on disk.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::cases::CaseRun;
use super::plot::{render_svg, Chart, Circle, Series};
use super::{HarnessError, PaperReport, SimTrace, TraceRecord};
use crate::stability::{write_nyquist_csv, CircleSpec, DistanceReport, FrequencyResponse, VerdictRecord};

const TRACE_HEADER: [&str; 8] =
    ["t", "u_true", "omega_r", "omega_hat", "epsilon", "u_hat", "t_g", "clamp_count"];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// One row per record; absent observer columns are left empty. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.u_true.to_string(),
            r.omega_r.to_string(),
            opt(r.omega_hat),
            opt(r.epsilon),
            r.u_hat.to_string(),
            r.t_g.to_string(),
            r.clamp_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(HarnessError::TraceFormat(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let f = |k: usize| -> Result<f64, HarnessError> {
            row[k].parse().map_err(|_| HarnessError::TraceFormat(format!("row {}: column {k}", i + 1)))
        };
        let o = |k: usize| -> Result<Option<f64>, HarnessError> {
            if row[k].is_empty() { Ok(None) } else { f(k).map(Some) }
        };
        out.push(TraceRecord {
            t: f(0)?,
            u_true: f(1)?,
            omega_r: f(2)?,
            omega_hat: o(3)?,
            epsilon: o(4)?,
            u_hat: f(5)?,
            t_g: f(6)?,
            clamp_count: row[7]
                .parse()
                .map_err(|_| HarnessError::TraceFormat(format!("row {}: clamp_count", i + 1)))?,
        });
    }
    Ok(out)
}

fn trace_chart(trace: &SimTrace, title: &str) -> Vec<Chart> {
    let pts = |f: &dyn Fn(&TraceRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        trace.records.iter().filter_map(|r| f(r).map(|y| (r.t, y))).collect()
    };
    let mut wind = Chart {
        title: format!("{title}: wind speed"),
        x_label: "t [s]".into(),
        y_label: "U [m/s]".into(),
        series: vec![
            Series { name: "U".into(), color: "black", points: pts(&|r| Some(r.u_true)) },
            Series { name: "U_hat".into(), color: "#d62728", points: pts(&|r| Some(r.u_hat)) },
        ],
        ..Default::default()
    };
    // keep the wind panel readable when the estimate blows up
    let (lo, hi) = trace
        .records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.u_true), b.max(r.u_true)));
    let est_hi = trace.records.iter().map(|r| r.u_hat).filter(|x| x.is_finite()).fold(hi, f64::max);
    let est_lo = trace.records.iter().map(|r| r.u_hat).filter(|x| x.is_finite()).fold(lo, f64::min);
    if est_hi - est_lo > 10.0 * (hi - lo).max(1.0) {
        wind.y_range = Some((lo - 3.0 * (hi - lo).max(1.0), hi + 3.0 * (hi - lo).max(1.0)));
    }
    let mut speed = Chart {
        title: format!("{title}: rotor speed"),
        x_label: "t [s]".into(),
        y_label: "omega_r [rad/s]".into(),
        series: vec![Series { name: "omega_r".into(), color: "black", points: pts(&|r| Some(r.omega_r)) }],
        ..Default::default()
    };
    if trace.records.iter().any(|r| r.omega_hat.is_some()) {
        speed.series.push(Series {
            name: "omega_hat".into(),
            color: "#1f77b4",
            points: pts(&|r| r.omega_hat),
        });
        let (lo, hi) = trace
            .records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.omega_r), b.max(r.omega_r)));
        let pad = (hi - lo).max(0.05);
        speed.y_range = Some((lo - pad, hi + pad));
    }
    vec![wind, speed]
}

fn nyquist_chart(fr: &FrequencyResponse, circle: &CircleSpec, title: &str) -> Chart {
    let r = circle.radius.max(1e-3 * circle.alpha);
    let (x_lo, x_hi) = (circle.center - 1.6 * r, 0.6 * r);
    let half = 0.5 * (x_hi - x_lo) * 0.55;
    Chart {
        title: title.into(),
        x_label: "Re G(jw)".into(),
        y_label: "Im G(jw)".into(),
        series: vec![Series {
            name: format!("G(jw), gamma={}, beta={}, T={}", fr.gamma, fr.beta, fr.delay_t),
            color: "#1f77b4",
            points: fr.g.iter().map(|g| (g.re, g.im)).collect(),
        }],
        circles: vec![Circle { cx: circle.center, cy: 0.0, r: circle.radius, color: "#d62728" }],
        x_range: Some((x_lo, x_hi)),
        y_range: Some((-half, half)),
    }
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// `trace.csv` and `trace.svg`. An empty trace is an error.
pub fn emit_trace(trace: &SimTrace, out_dir: &Path, title: &str) -> Result<Vec<PathBuf>, HarnessError> {
    if trace.records.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    create_dir(out_dir)?;
    let csv_path = out_dir.join("trace.csv");
    write_trace_csv(&trace.records, fs::File::create(&csv_path)?)?;
    let svg_path = out_dir.join("trace.svg");
    fs::write(&svg_path, render_svg(&trace_chart(trace, title)))?;
    Ok(vec![csv_path, svg_path])
}

/// `nyquist.csv`, `verdict.json` and `nyquist.svg`.
pub fn emit_stability(
    report: &DistanceReport,
    fr: &FrequencyResponse,
    circle: &CircleSpec,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(out_dir)?;
    let nyq = out_dir.join("nyquist.csv");
    write_nyquist_csv(fr, circle, fs::File::create(&nyq)?)?;
    let verdict = out_dir.join("verdict.json");
    VerdictRecord::new(report, circle).write_json(fs::File::create(&verdict)?)?;
    let svg = out_dir.join("nyquist.svg");
    let title = format!("Nyquist locus vs forbidden circle ({})", report.verdict);
    fs::write(&svg, render_svg(&[nyquist_chart(fr, circle, &title)]))?;
    Ok(vec![nyq, verdict, svg])
}

fn report_text(report: &PaperReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for h in &report.header {
        let _ = writeln!(s, "# {h}");
    }
    let c = &report.circle;
    let _ = writeln!(s, "# circle: k1={} k2={} C={:.5} R={:.5} alpha={:.5}", c.k1, c.k2, c.center, c.radius, c.alpha);
    let _ = writeln!(
        s,
        "{:<14} {:>6} {:>6} {:>5} {:>12} {:>22} {:>10} {:>20} {:>10}",
        "case", "gamma", "beta", "T", "family", "segments", "sim", "verdict", "min_dist"
    );
    for r in &report.cases {
        let segs: Vec<String> = r.segments.iter().map(|s| s.label.to_string()).collect();
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>6} {:>5} {:>12} {:>22} {:>10} {:>20} {:>10}{}",
            r.name,
            r.gamma,
            r.beta,
            r.delay_t,
            r.family.to_string(),
            segs.iter().map(|l| &l[..4]).collect::<Vec<_>>().join("/"),
            r.sim_label.map_or("error".into(), |l| l.to_string()),
            r.verdict.map_or("error".into(), |v| v.to_string()),
            r.min_distance.map_or("-".into(), |d| format!("{d:.4}")),
            if r.concordant { "" } else { "  DISCORDANT" }
        );
    }
    match (&report.beta_margin, &report.beta_margin_error) {
        (Some(m), _) => {
            let _ = writeln!(s, "beta margin (gamma=40, T=0.3): {:.4}", m.value);
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "beta margin: error: {e}");
        }
        _ => {}
    }
    match (&report.delay_margin, &report.delay_margin_error) {
        (Some(m), _) => {
            let _ = writeln!(
                s,
                "delay margin (gamma=40, beta=10): {:.4} s (quoted: {} s{})",
                m.value,
                report.paper_delay_margin,
                if report.delay_discrepancy { ", DISCREPANCY" } else { "" }
            );
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "delay margin: error: {e}");
        }
        _ => {}
    }
    s
}

/// `report.json`, `report.txt` and one sub-directory per case with its
/// trace and stability artefacts.
pub fn emit_paper_report(
    report: &PaperReport,
    runs: &[CaseRun],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(out_dir)?;
    let mut files = Vec::new();
    let json = out_dir.join("report.json");
    serde_json::to_writer_pretty(fs::File::create(&json)?, report)?;
    files.push(json);
    let txt = out_dir.join("report.txt");
    fs::write(&txt, report_text(report))?;
    files.push(txt);
    for run in runs {
        let dir = out_dir.join(&run.report.name);
        if let Some(tr) = &run.trace {
            files.extend(emit_trace(tr, &dir, &run.report.name)?);
        }
        if let (Some(fr), Some(dr)) = (&run.response, &run.distance) {
            files.extend(emit_stability(dr, fr, &report.circle, &dir)?);
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_rejected() {
        let tr = SimTrace { dt: 0.01, records: vec![], stop_time: None, stop_reason: None };
        let dir = std::env::temp_dir().join("rews-empty-trace-test");
        assert!(matches!(emit_trace(&tr, &dir, "x"), Err(HarnessError::EmptyTrace)));
    }

    #[test]
    fn csv_round_trip_in_memory() {
        let recs = vec![
            TraceRecord {
                t: 0.1,
                u_true: 5.0,
                omega_r: 0.595_238_095_238_095_2,
                omega_hat: None,
                epsilon: None,
                u_hat: -1.0 / 3.0,
                t_g: 1.234_567_890_123e5,
                clamp_count: 3,
            },
            TraceRecord {
                t: 0.2,
                u_true: 5.0,
                omega_r: 1e-300,
                omega_hat: Some(std::f64::consts::PI),
                epsilon: Some(-0.0),
                u_hat: 7.000_000_000_000_001,
                t_g: 0.0,
                clamp_count: u64::MAX,
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&recs, &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.omega_r.to_bits(), b.omega_r.to_bits());
            assert_eq!(a.u_hat.to_bits(), b.u_hat.to_bits());
            assert_eq!(a.omega_hat.map(f64::to_bits), b.omega_hat.map(f64::to_bits));
            assert_eq!(a.epsilon.map(f64::to_bits), b.epsilon.map(f64::to_bits));
            assert_eq!(a.clamp_count, b.clamp_count);
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
