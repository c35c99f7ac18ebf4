//! Benchmark suites: named cases run over a list of methods, with
//! machine-readable (CSV) and human-readable (markdown) reports, plus
//! basin-of-convergence scans.
//!
//! Suite files are TOML:
//!
//! ```toml
//! repetitions = 100          # timing repeats (median reported), optional
//!
//! [[case]]
//! name = "arctan near"       # optional, defaults to "<expr> x0=<x0>"
//! expr = "atan(x)"
//! root = 0.0                 # required by proposed methods
//! derivs = [1.0, 0.0, -2.0]  # optional explicit derivative list
//! x0 = -0.9
//! methods = ["order2", "order3", "newton"]
//! atol = 1e-13               # tolerance overrides, all optional
//! rtol = 1e-13
//! ftol = 1e-12
//! max_steps = 2000000
//! ```

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, DerivativeSource, ExprError, ProblemSpec};
use crate::solver::{iterate, IterationConfig, MethodKind, Status};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("suite file error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("unknown method name `{0}`")]
    UnknownMethod(String),
    #[error("suite has no cases")]
    EmptySuite,
    #[error("repetitions must be >= 1")]
    BadRepetitions,
}

/// One benchmark case: a problem, a start point, and the methods to race.
pub struct SuiteCase {
    pub name: String,
    pub problem: ProblemSpec,
    pub x0: f64,
    pub methods: Vec<MethodKind>,
    pub config: IterationConfig,
}

/// A full suite with the timing repetition count.
pub struct SuiteSpec {
    pub cases: Vec<SuiteCase>,
    pub repetitions: usize,
}

/// One result row per (case, method).
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub case: String,
    pub method: String,
    pub status: String,
    pub converged: bool,
    pub steps: u64,
    pub residual: f64,
    /// Median wall time over the repetitions, microseconds. Informational.
    pub time_us: f64,
    pub coc: Option<f64>,
    pub x_final: f64,
}

// --------------------------------------------------------------------------
// Suite file parsing

#[derive(Deserialize)]
struct RawSuite {
    repetitions: Option<usize>,
    #[serde(rename = "case", default)]
    cases: Vec<RawCase>,
}

#[derive(Deserialize)]
struct RawCase {
    name: Option<String>,
    expr: String,
    root: Option<f64>,
    derivs: Option<Vec<f64>>,
    x0: f64,
    methods: Vec<String>,
    atol: Option<f64>,
    rtol: Option<f64>,
    ftol: Option<f64>,
    max_steps: Option<u64>,
}

impl SuiteSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let raw: RawSuite = toml::from_str(text)?;
        if raw.cases.is_empty() {
            return Err(BenchError::EmptySuite);
        }
        let repetitions = raw.repetitions.unwrap_or(100);
        if repetitions == 0 {
            return Err(BenchError::BadRepetitions);
        }
        let mut cases = Vec::new();
        for rc in raw.cases {
            let node = parse(&rc.expr)?;
            let source = match rc.derivs {
                Some(list) => DerivativeSource::Explicit(list),
                None => DerivativeSource::AutoJet,
            };
            let problem = ProblemSpec::new(node, rc.root, source);
            let mut config = IterationConfig::default();
            if let Some(v) = rc.atol {
                config.atol = v;
            }
            if let Some(v) = rc.rtol {
                config.rtol = v;
            }
            if let Some(v) = rc.ftol {
                config.ftol = v;
            }
            if let Some(v) = rc.max_steps {
                config.max_steps = v;
            }
            let methods = rc
                .methods
                .iter()
                .map(|m| MethodKind::parse_name(m).ok_or_else(|| BenchError::UnknownMethod(m.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            let name = rc
                .name
                .unwrap_or_else(|| format!("{} x0={}", rc.expr, rc.x0));
            cases.push(SuiteCase { name, problem, x0: rc.x0, methods, config });
        }
        Ok(Self { cases, repetitions })
    }
}

/// The built-in comparison suite: the three reference tables (arctan from
/// -0.9 and from -10^6, and sqrt(|x|)-4 from -10^-6) with the full method
/// roster.
pub fn paper_tables(repetitions: usize) -> SuiteSpec {
    let all = [
        "order2", "order3", "order4", "newton", "two_step_newton", "halley", "chebyshev",
        "df4", "df8",
    ];
    let case = |name: &str, expr: &str, root: f64, x0: f64| SuiteCase {
        name: name.to_string(),
        problem: ProblemSpec::from_text(expr, Some(root)).expect("builtin expression"),
        x0,
        methods: all
            .iter()
            .map(|m| MethodKind::parse_name(m).expect("builtin method"))
            .collect(),
        config: IterationConfig::default(),
    };
    SuiteSpec {
        cases: vec![
            case("arctan x0=-0.9", "atan(x)", 0.0, -0.9),
            case("arctan x0=-1e6", "atan(x)", 0.0, -1e6),
            case("sqrt(|x|)-4 x0=-1e-6", "sqrt(abs(x))-4", 16.0, -1e-6),
        ],
        repetitions,
    }
}

/// Run every (case, method) pair. Per-row failures (setup errors included)
/// are recorded in the row status and never abort the suite.
pub fn run_suite(suite: &SuiteSpec) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for case in &suite.cases {
        for method in &case.methods {
            rows.push(run_row(case, method, suite.repetitions));
        }
    }
    rows
}

fn run_row(case: &SuiteCase, method: &MethodKind, repetitions: usize) -> SuiteRow {
    // One traced run provides steps/status/COC; untraced repeats provide the
    // timing median.
    let traced_cfg = case.config.clone().with_trace();
    let report = match iterate(&case.problem, method, case.x0, &traced_cfg) {
        Ok(r) => r,
        Err(e) => {
            return SuiteRow {
                case: case.name.clone(),
                method: method.name(),
                status: format!("setup_error: {e}"),
                converged: false,
                steps: 0,
                residual: f64::NAN,
                time_us: f64::NAN,
                coc: None,
                x_final: f64::NAN,
            }
        }
    };

    let mut times: Vec<f64> = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t0 = Instant::now();
        let _ = iterate(&case.problem, method, case.x0, &case.config);
        times.push(t0.elapsed().as_secs_f64() * 1e6);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let time_us = times[times.len() / 2];

    SuiteRow {
        case: case.name.clone(),
        method: method.name(),
        status: report.status.to_string(),
        converged: report.status == Status::Converged,
        steps: report.steps,
        residual: report.residual,
        time_us,
        coc: report.coc,
        x_final: report.x_final,
    }
}

/// One starting point of a basin scan.
#[derive(Debug, Clone, Serialize)]
pub struct BasinPoint {
    pub x0: f64,
    pub status: String,
    pub converged: bool,
    pub steps: u64,
}

/// Basin scan summary over evenly spaced starting points.
#[derive(Debug, Clone, Serialize)]
pub struct BasinScan {
    pub points: Vec<BasinPoint>,
    pub converged_fraction: f64,
    /// Largest |x0| among converged samples, if any converged.
    pub max_converged_abs_x0: Option<f64>,
}

pub fn basin_scan(
    problem: &ProblemSpec,
    method: &MethodKind,
    range: (f64, f64),
    samples: usize,
    config: &IterationConfig,
) -> BasinScan {
    assert!(samples >= 1);
    let (lo, hi) = range;
    let points: Vec<BasinPoint> = (0..samples)
        .map(|i| {
            let x0 = if samples == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            };
            match iterate(problem, method, x0, config) {
                Ok(r) => BasinPoint {
                    x0,
                    status: r.status.to_string(),
                    converged: r.status == Status::Converged,
                    steps: r.steps,
                },
                Err(e) => BasinPoint {
                    x0,
                    status: format!("setup_error: {e}"),
                    converged: false,
                    steps: 0,
                },
            }
        })
        .collect();
    let converged = points.iter().filter(|p| p.converged).count();
    let max_converged_abs_x0 = points
        .iter()
        .filter(|p| p.converged)
        .map(|p| p.x0.abs())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    BasinScan {
        points,
        converged_fraction: converged as f64 / samples as f64,
        max_converged_abs_x0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Render suite rows. CSV carries full precision; markdown mirrors the
/// Method / Time / Steps / converge table layout.
pub fn emit_report(rows: &[SuiteRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("method,case,steps,status,residual,time_us,coc\n");
            for r in rows {
                let coc = r
                    .coc
                    .map(|c| format!("{c:.17e}"))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{:.17e},{:.3},{}\n",
                    r.method,
                    csv_field(&r.case),
                    r.steps,
                    r.status,
                    r.residual,
                    r.time_us,
                    coc
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let mut current_case = "";
            for r in rows {
                if r.case != current_case {
                    current_case = &r.case;
                    out.push_str(&format!(
                        "\n### {current_case}\n\n| Method | Time (us) | Steps | converge |\n|---|---|---|---|\n"
                    ));
                }
                out.push_str(&format!(
                    "| {} | {:.1} | {} | {} |\n",
                    r.method,
                    r.time_us,
                    r.steps,
                    if r.converged { "yes" } else { &r.status }
                ));
            }
            out
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
