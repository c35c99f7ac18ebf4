//! `revroot` command line front end.
//!
//! Exit codes: 0 on success/convergence, 2 when a solve ran but did not
//! converge, 1 for usage or input errors.

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use revroot::bench::{basin_scan, emit_report, paper_tables, run_suite, ReportFormat, SuiteSpec};
use revroot::series::{fspace_correction, revert_series, DerivativeBundle};
use revroot::solver::{iterate, IterationConfig, MethodKind, Status};
use revroot::ProblemSpec;

#[derive(Parser)]
#[command(
    name = "revroot",
    version,
    about = "Root finding with one function evaluation per step",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one method on one problem from one starting point
    Solve(SolveArgs),
    /// Print the update coefficients for a derivative bundle
    Coeffs(CoeffsArgs),
    /// Run a benchmark suite and print a report
    Bench(BenchArgs),
    /// Scan starting points and report which ones converge
    Basin(BasinArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    /// Expression g(x) whose root is sought, e.g. "atan(x)"
    #[arg(long)]
    expr: String,
    /// Known root l (required for the proposed family, which expands g there)
    #[arg(long)]
    root: Option<f64>,
    /// Order n of the proposed method (2..=8)
    #[arg(long, conflicts_with = "method")]
    order: Option<u32>,
    /// Baseline method name: newton, two_step_newton, halley, chebyshev,
    /// df4, df8 (or orderN for the proposed family)
    #[arg(long)]
    method: Option<String>,
    /// Starting point
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    ftol: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct CoeffsArgs {
    /// Expression g(x); derivatives at --root come from automatic
    /// differentiation
    #[arg(long, conflicts_with = "derivs")]
    expr: Option<String>,
    /// Root l at which to expand
    #[arg(long, allow_hyphen_values = true)]
    root: Option<f64>,
    /// Comma-separated g'(l), g''(l), ... instead of --expr
    #[arg(long, allow_hyphen_values = true)]
    derivs: Option<String>,
    /// Method order n (2..=8); prints c_1..c_{n-1}
    #[arg(long, default_value_t = 4)]
    order: u32,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML suite file
    #[arg(long, conflicts_with = "paper_tables")]
    suite: Option<String>,
    /// Run the built-in paper-tables suite
    #[arg(long)]
    paper_tables: bool,
    /// Timed repetitions per row
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BasinArgs {
    #[arg(long)]
    expr: String,
    #[arg(long)]
    root: Option<f64>,
    /// Method name (orderN or a baseline)
    #[arg(long)]
    method: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 21)]
    samples: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Coeffs(args) => cmd_coeffs(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Basin(args) => cmd_basin(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn pick_method(order: Option<u32>, method: &Option<String>) -> Result<MethodKind, String> {
    match (order, method) {
        (Some(n), None) => Ok(MethodKind::ProposedOrder(n)),
        (None, Some(name)) => {
            MethodKind::parse_name(name).ok_or_else(|| format!("unknown method '{name}'"))
        }
        (None, None) => Ok(MethodKind::ProposedOrder(2)),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn needs_root(method: &MethodKind) -> bool {
    matches!(
        method,
        MethodKind::ProposedOrder(_) | MethodKind::Proposed(_)
    )
}

fn cmd_solve(args: SolveArgs) -> Result<u8, String> {
    let method = pick_method(args.order, &args.method)?;
    if needs_root(&method) && args.root.is_none() {
        return Err("--root is required for the proposed family (it expands g at the root)".into());
    }
    let problem =
        ProblemSpec::from_text(&args.expr, args.root).map_err(|e| e.to_string())?;
    let mut config = IterationConfig::default().with_trace();
    if let Some(v) = args.atol {
        config.atol = v;
    }
    if let Some(v) = args.rtol {
        config.rtol = v;
    }
    if let Some(v) = args.ftol {
        config.ftol = v;
    }
    if let Some(v) = args.max_steps {
        config.max_steps = v;
    }
    let report = iterate(&problem, &method, args.x0, &config).map_err(|e| e.to_string())?;
    let coc = report
        .coc
        .map(|c| format!("{c:.17e}"))
        .unwrap_or_default();
    match args.format {
        Format::Table => {
            println!("method:           {}", method.name());
            println!("status:           {}", report.status);
            println!("steps:            {}", report.steps);
            println!("x_final:          {:.17e}", report.x_final);
            println!("residual:         {:.17e}", report.residual);
            println!("g_evals:          {}", report.g_evals);
            println!("derivative_evals: {}", report.derivative_evals);
            if !coc.is_empty() {
                println!("coc:              {coc}");
            }
        }
        Format::Csv => {
            println!("method,status,steps,x_final,residual,g_evals,derivative_evals,coc");
            println!(
                "{},{},{},{:.17e},{:.17e},{},{},{}",
                method.name(),
                report.status,
                report.steps,
                report.x_final,
                report.residual,
                report.g_evals,
                report.derivative_evals,
                coc
            );
        }
    }
    Ok(if report.status == Status::Converged {
        0
    } else {
        2
    })
}

fn cmd_coeffs(args: CoeffsArgs) -> Result<u8, String> {
    let bundle = match (&args.expr, &args.derivs) {
        (Some(expr), None) => {
            let root = args
                .root
                .ok_or_else(|| "--root is required with --expr".to_string())?;
            let problem = ProblemSpec::from_text(expr, Some(root)).map_err(|e| e.to_string())?;
            problem
                .bundle_at_root(args.order.saturating_sub(1) as usize)
                .map_err(|e| e.to_string())?
        }
        (None, Some(list)) => {
            let derivs: Vec<f64> = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad derivative '{s}': {e}")))
                .collect::<Result<_, _>>()?;
            DerivativeBundle::new(args.root.unwrap_or(0.0), derivs).map_err(|e| e.to_string())?
        }
        _ => return Err("give exactly one of --expr or --derivs".into()),
    };
    let coeffs = revert_series(&bundle, args.order).map_err(|e| e.to_string())?;
    match args.format {
        Format::Table => {
            for (k, c) in coeffs.c().iter().enumerate() {
                println!("c{}: {:.17e}", k + 1, c);
            }
            if args.order <= 4 {
                let f = fspace_correction(&bundle).map_err(|e| e.to_string())?;
                println!("alpha: {:.17e}", f.alpha);
                if let Some(b) = f.beta {
                    println!("beta:  {b:.17e}");
                }
                if let Some(g) = f.gamma {
                    println!("gamma: {g:.17e}");
                }
            }
        }
        Format::Csv => {
            println!("name,value");
            for (k, c) in coeffs.c().iter().enumerate() {
                println!("c{},{:.17e}", k + 1, c);
            }
            if args.order <= 4 {
                let f = fspace_correction(&bundle).map_err(|e| e.to_string())?;
                println!("alpha,{:.17e}", f.alpha);
                if let Some(b) = f.beta {
                    println!("beta,{b:.17e}");
                }
                if let Some(g) = f.gamma {
                    println!("gamma,{g:.17e}");
                }
            }
        }
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<u8, String> {
    let suite = if args.paper_tables {
        paper_tables(args.repetitions)
    } else if let Some(path) = &args.suite {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read suite '{path}': {e}"))?;
        let mut suite = SuiteSpec::from_toml(&text).map_err(|e| e.to_string())?;
        if args.repetitions > 1 {
            suite.repetitions = args.repetitions;
        }
        suite
    } else {
        return Err("give --suite <file> or --paper-tables".into());
    };
    let rows = run_suite(&suite);
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Table => ReportFormat::Markdown,
    };
    print!("{}", emit_report(&rows, format));
    Ok(0)
}

fn cmd_basin(args: BasinArgs) -> Result<u8, String> {
    let method = MethodKind::parse_name(&args.method)
        .ok_or_else(|| format!("unknown method '{}'", args.method))?;
    if needs_root(&method) && args.root.is_none() {
        return Err("--root is required for the proposed family (it expands g at the root)".into());
    }
    if args.samples == 0 {
        return Err("--samples must be at least 1".into());
    }
    let problem = ProblemSpec::from_text(&args.expr, args.root).map_err(|e| e.to_string())?;
    let config = IterationConfig::default();
    let scan = basin_scan(
        &problem,
        &method,
        (args.from, args.to),
        args.samples,
        &config,
    );
    match args.format {
        Format::Table => {
            for p in &scan.points {
                println!("x0={:<24.15e} {:<12} steps={}", p.x0, p.status, p.steps);
            }
            println!(
                "converged {:.1}% of {} samples",
                scan.converged_fraction * 100.0,
                scan.points.len()
            );
            if let Some(m) = scan.max_converged_abs_x0 {
                println!("largest converged |x0|: {m:.15e}");
            }
        }
        Format::Csv => {
            println!("x0,status,converged,steps");
            for p in &scan.points {
                println!("{:.17e},{},{},{}", p.x0, p.status, p.converged, p.steps);
            }
        }
    }
    Ok(0)
}
