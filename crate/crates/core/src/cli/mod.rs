//! The `lplc` command-line tool.
//!
//! Exit codes: 0 when a report was produced (any verdict), 2 when lambda is
//! not admissible, 3 when `s` violates the standing hypotheses (or, for
//! `solve`, the error budget diverges), 4 on I/O, parse or configuration
//! errors, 1 on any other numerical failure.

pub mod report;
pub mod spec;

use crate::asymptotics::{build_s, error_budget, validate_assumptions, wkb_eval, AsymptoticsError, PhaseTable};
use crate::classify::{admissible_pair_for, classify, ClassifyError};
use crate::geometry::{admissible_pair, default_r_max, sample_q};
use crate::numerics::{geometric_grid, Schedule};
use crate::oracle::{empirical_class, IvpConfig, Trajectory};
use clap::{Parser, Subcommand};
use report::{ClassifyOutput, GeometryOutput, OracleOutput};
use serde::Serialize;
use spec::{ConfigSpec, ProblemSpec, SpecError};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_ADMISSIBLE: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lplc", version, about = "Limit-point / limit-circle classification on a ray")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the problem and print a JSON report.
    Classify {
        spec: PathBuf,
        /// JSON config object replacing the spec's "config".
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip the ODE oracle in the limit-circle test.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Print the leading-order WKB pair as CSV.
    Solve {
        spec: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        xmax: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the ODE directly and report the empirical class as JSON.
    Oracle {
        spec: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        xmax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the basis and recessive trajectories as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Report the admissible pair as JSON.
    Geometry {
        spec: PathBuf,
        /// Right end of the sampled x range; defaults to the classify horizon.
        #[arg(long)]
        xmax: Option<f64>,
        /// Write the hull vertices as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::new(EXIT_INPUT, e.to_string())
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        let code = match &e {
            ClassifyError::NotAdmissible(_) => EXIT_NOT_ADMISSIBLE,
            ClassifyError::AssumptionViolated { .. } => EXIT_ASSUMPTION,
            ClassifyError::Config(_) | ClassifyError::NegativePsiSample { .. } => EXIT_INPUT,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<AsymptoticsError> for Failure {
    fn from(e: AsymptoticsError) -> Self {
        let code = match &e {
            AsymptoticsError::AssumptionViolated { .. } | AsymptoticsError::BudgetDiverges { .. } => EXIT_ASSUMPTION,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn cmd_classify(spec: &Path, config: Option<&Path>, no_oracle: bool) -> Result<String, Failure> {
    let spec = ProblemSpec::load(spec)?;
    let problem = spec.problem()?;
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
            let c: ConfigSpec = serde_json::from_str(&text)
                .map_err(|e| Failure::new(EXIT_INPUT, format!("malformed config {}: {e}", path.display())))?;
            c.apply(Default::default())?
        }
        None => spec.criterion_config()?,
    };
    if no_oracle {
        cfg.use_oracle = false;
    }
    let report = classify(&problem, &cfg)?;
    Ok(json(&ClassifyOutput::new(&spec.potential, &report)))
}

fn cmd_solve(spec: &Path, xmax: f64, points: usize) -> Result<String, Failure> {
    let spec = ProblemSpec::load(spec)?;
    let problem = spec.problem()?;
    let a = problem.a();
    if !(xmax > a) || points < 2 {
        return Err(Failure::new(EXIT_INPUT, "need xmax > a and at least 2 points"));
    }
    let field = build_s(&problem);
    let checks = validate_assumptions(&field, a, xmax)?;
    if let Some(v) = checks.violations.first() {
        return Err(AsymptoticsError::AssumptionViolated { x: v.x, reason: v.reason }.into());
    }
    let budget = error_budget(&field, a, &Schedule::default_for(a))?;
    let table = PhaseTable::new(&field, xmax, 256)?;
    let mut out = String::from(
        "x,re_y_lead,im_y_lead,re_yhat_lead,im_yhat_lead,re_phase,im_phase,envelope,log_abs_y,log_abs_yhat\n",
    );
    for x in geometric_grid(a, xmax, points) {
        let w = wkb_eval(&field, &table, &budget, x)?;
        let row = [
            w.x,
            w.y_lead.re,
            w.y_lead.im,
            w.yhat_lead.re,
            w.yhat_lead.im,
            w.phase.re,
            w.phase.im,
            w.envelope,
            w.log_abs_y,
            w.log_abs_yhat,
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Trajectory rows `solution,x,re_v,im_v,re_dv,im_dv,log_offset`, left to right.
pub fn trajectories_csv(named: &[(&str, &Trajectory)]) -> String {
    let mut out = String::from("solution,x,re_v,im_v,re_dv,im_dv,log_offset\n");
    for (name, t) in named {
        let order: Vec<usize> = if t.forward() { (0..t.len()).collect() } else { (0..t.len()).rev().collect() };
        for k in order {
            let _ = writeln!(
                out,
                "{name},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t.grid[k], t.v[k].re, t.v[k].im, t.dv[k].re, t.dv[k].im, t.log_offset[k]
            );
        }
    }
    out
}

fn cmd_oracle(spec: &Path, xmax: f64, tol: f64, dump: Option<&Path>) -> Result<String, Failure> {
    let spec = ProblemSpec::load(spec)?;
    let problem = spec.problem()?;
    if !(xmax > problem.a() + 1.0) || !(1e-12..=1e-4).contains(&tol) {
        return Err(Failure::new(EXIT_INPUT, "need xmax > a + 1 and tol in [1e-12, 1e-4]"));
    }
    let hull_points = spec.criterion_config()?.hull_points;
    let pair = admissible_pair_for(&problem, xmax, hull_points)?;
    let report = empirical_class(&problem, &pair, xmax, &IvpConfig::with_tol(tol))
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    if let Some(path) = dump {
        let csv = trajectories_csv(&[
            ("basis1", &report.basis[0]),
            ("basis2", &report.basis[1]),
            ("recessive", &report.recessive),
        ]);
        write_file(path, &csv)?;
    }
    Ok(json(&OracleOutput::new(&spec.potential, &report, &pair)))
}

fn cmd_geometry(spec: &Path, xmax: Option<f64>, dump: Option<&Path>) -> Result<String, Failure> {
    let spec = ProblemSpec::load(spec)?;
    let problem = spec.problem()?;
    let cfg = spec.criterion_config()?;
    let x_max = xmax.or(cfg.horizon).unwrap_or_else(|| Schedule::default_for(problem.a()).last());
    let hull = sample_q(&problem, x_max, cfg.hull_points, default_r_max(problem.lambda()), 64)
        .map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    if let Some(path) = dump {
        write_file(path, &hull.to_csv())?;
    }
    let pair = admissible_pair(&hull, problem.lambda()).map_err(ClassifyError::NotAdmissible)?;
    Ok(json(&GeometryOutput::new(&spec.potential, &pair, &hull)))
}

/// Run one command; stdout gets the report, stderr the diagnostics.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Classify { spec, config, no_oracle } => cmd_classify(spec, config.as_deref(), *no_oracle),
        Command::Solve { spec, xmax, points, out: file } => cmd_solve(spec, *xmax, *points).and_then(|csv| match file {
            Some(path) => write_file(path, &csv).map(|_| String::new()),
            None => Ok(csv),
        }),
        Command::Oracle { spec, xmax, tol, dump } => cmd_oracle(spec, *xmax, *tol, dump.as_deref()),
        Command::Geometry { spec, xmax, dump } => cmd_geometry(spec, *xmax, dump.as_deref()),
    };
    match result {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_INPUT;
            }
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(err, "lplc: {}", f.message);
            f.code
        }
    }
}
