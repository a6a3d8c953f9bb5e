use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rews::harness::{
    classify, emit_paper_report, emit_stability, emit_trace, run_paper_cases_full, run_scenario,
    ScenarioFile,
};
use rews::stability::{
    certify, default_sector_bounds, max_stable_beta, max_stable_delay, CircleSpec, VerdictRecord,
};
use rews::{CpCurve, EstimatorFamily, TurbineParams};

#[derive(Parser)]
#[command(name = "rews", version, about = "Rotor effective wind speed estimators and their convergence check")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write its trace, plots and verdict.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run Cases 1-6 and the PI / I&I comparison.
    PaperCases {
        #[arg(long)]
        out: PathBuf,
    },
    /// Circle-criterion verdict for one gain/delay set.
    Stability {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        delay: f64,
        #[arg(long, requires = "k2")]
        k1: Option<f64>,
        #[arg(long, requires = "k1")]
        k2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 2 unless the configuration is certified.
        #[arg(long)]
        require_certified: bool,
    },
    /// Largest certified beta (given --delay) or delay (given --beta).
    Margins {
        #[arg(long)]
        gamma: f64,
        #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
        delay: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, requires = "k2")]
        k1: Option<f64>,
        #[arg(long, requires = "k1")]
        k2: Option<f64>,
        /// Upper end of the search bracket.
        #[arg(long, default_value_t = 100.0)]
        hi: f64,
    },
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Explicit slopes, or the bundled fixture's sector scaled by `1/N`.
fn circle(k1: Option<f64>, k2: Option<f64>) -> AnyResult<CircleSpec> {
    match (k1, k2) {
        (Some(a), Some(b)) => Ok(CircleSpec::from_slopes(a, b)?),
        _ => {
            let p = TurbineParams::case_study();
            let s = default_sector_bounds(&p, &CpCurve::synthetic())?;
            Ok(CircleSpec::from_sector(&s.per_gear_ratio(p.gear_ratio)))
        }
    }
}

fn run(cli: Cli) -> AnyResult<ExitCode> {
    match cli.cmd {
        Cmd::Simulate { scenario, out } => {
            let scn = ScenarioFile::load(&scenario)?;
            let trace = run_scenario(&scn)?;
            let class = classify(&trace, &scn);
            let mut files = emit_trace(&trace, &out, "scenario")?;
            let c = match scn.sector {
                Some(s) => CircleSpec::from_sector(&s),
                None => circle(None, None)?,
            };
            let cfg = scn.estimator;
            let beta = if cfg.family == EstimatorFamily::Pi { cfg.beta } else { 0.0 };
            let (report, fr) = certify(cfg.gamma, beta, cfg.delay_t, &c)?;
            files.extend(emit_stability(&report, &fr, &c, &out)?);
            let summary = serde_json::json!({
                "classification": class,
                "stop_time": trace.stop_time,
                "stop_reason": trace.stop_reason,
                "verdict": VerdictRecord::new(&report, &c),
            });
            let path = out.join("summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
            files.push(path);
            println!("simulation: {}  verdict: {}", class.label, report.verdict);
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Cmd::PaperCases { out } => {
            let (report, runs) = run_paper_cases_full(&CircleSpec::case_study());
            let files = emit_paper_report(&report, &runs, &out)?;
            print!("{}", std::fs::read_to_string(out.join("report.txt"))?);
            println!("wrote {} files under {}", files.len(), out.display());
        }
        Cmd::Stability { gamma, beta, delay, k1, k2, out, require_certified } => {
            let c = circle(k1, k2)?;
            let (report, fr) = certify(gamma, beta, delay, &c)?;
            emit_stability(&report, &fr, &c, &out)?;
            println!("{}", serde_json::to_string_pretty(&VerdictRecord::new(&report, &c))?);
            if require_certified && !report.verdict.is_certified() {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Margins { gamma, delay, beta, k1, k2, hi } => {
            let c = circle(k1, k2)?;
            let (param, m) = match (delay, beta) {
                (Some(t), _) => ("beta", max_stable_beta(gamma, t, &c, hi)?),
                (None, Some(b)) => ("delay", max_stable_delay(gamma, b, &c, hi)?),
                (None, None) => unreachable!("clap requires one of --delay/--beta"),
            };
            let v = serde_json::json!({ "parameter": param, "gamma": gamma, "k1": c.k1, "k2": c.k2, "margin": m });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
