//! Browser bindings for the demo page in `www/`. Every export takes plain
//! strings/numbers and returns a JSON string, so the page needs no generated
//! glue beyond wasm-bindgen's own.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use revroot::bench::basin_scan;
use revroot::series::{fspace_correction, revert_series};
use revroot::solver::{iterate, IterationConfig, MethodKind};
use revroot::ProblemSpec;

#[derive(Serialize)]
struct SolveOut {
    status: String,
    steps: u64,
    x_final: f64,
    residual: f64,
    g_evals: u64,
    derivative_evals: u64,
    coc: Option<f64>,
    /// Iterates, starting at x0; capped so a divergent run stays small.
    trace: Vec<f64>,
}

#[derive(Serialize)]
struct CoeffsOut {
    order: u32,
    c: Vec<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Serialize)]
struct BasinPointOut {
    x0: f64,
    converged: bool,
    steps: u64,
}

#[derive(Serialize)]
struct BasinOut {
    points: Vec<BasinPointOut>,
    converged_fraction: f64,
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

fn parse_method(name: &str) -> Result<MethodKind, String> {
    MethodKind::parse_name(name).ok_or_else(|| format!("unknown method '{name}'"))
}

fn solve_impl(expr: &str, root: f64, method: &str, x0: f64) -> Result<SolveOut, String> {
    let method = parse_method(method)?;
    let problem = ProblemSpec::from_text(expr, Some(root)).map_err(|e| e.to_string())?;
    let config = IterationConfig {
        // keep browser runs bounded; the far-field atan cases still fit
        max_steps: 2_000_000,
        ..IterationConfig::default()
    }
    .with_trace();
    let report = iterate(&problem, &method, x0, &config).map_err(|e| e.to_string())?;
    let mut trace = report.trace.unwrap_or_default();
    if trace.len() > 2000 {
        // keep the head and tail; the plot downsamples anyway
        let tail = trace.split_off(trace.len() - 1000);
        trace.truncate(1000);
        trace.extend(tail);
    }
    Ok(SolveOut {
        status: report.status.to_string(),
        steps: report.steps,
        x_final: report.x_final,
        residual: report.residual,
        g_evals: report.g_evals,
        derivative_evals: report.derivative_evals,
        coc: report.coc,
        trace,
    })
}

fn coefficients_impl(expr: &str, root: f64, order: u32) -> Result<CoeffsOut, String> {
    let problem = ProblemSpec::from_text(expr, Some(root)).map_err(|e| e.to_string())?;
    let bundle = problem
        .bundle_at_root(order.saturating_sub(1) as usize)
        .map_err(|e| e.to_string())?;
    let coeffs = revert_series(&bundle, order).map_err(|e| e.to_string())?;
    let f = (order <= 4)
        .then(|| fspace_correction(&bundle))
        .transpose()
        .map_err(|e| e.to_string())?;
    Ok(CoeffsOut {
        order,
        c: coeffs.c().to_vec(),
        alpha: f.as_ref().map(|f| f.alpha),
        beta: f.as_ref().and_then(|f| f.beta),
        gamma: f.as_ref().and_then(|f| f.gamma),
    })
}

fn basin_impl(
    expr: &str,
    root: f64,
    method: &str,
    from: f64,
    to: f64,
    samples: usize,
) -> Result<BasinOut, String> {
    if samples == 0 || samples > 2001 {
        return Err("samples must be in 1..=2001".into());
    }
    let method = parse_method(method)?;
    let problem = ProblemSpec::from_text(expr, Some(root)).map_err(|e| e.to_string())?;
    let scan = basin_scan(
        &problem,
        &method,
        (from, to),
        samples,
        &IterationConfig::default(),
    );
    Ok(BasinOut {
        points: scan
            .points
            .iter()
            .map(|p| BasinPointOut {
                x0: p.x0,
                converged: p.converged,
                steps: p.steps,
            })
            .collect(),
        converged_fraction: scan.converged_fraction,
    })
}

/// Solve `expr = 0` from `x0` and return the full iterate trace as JSON.
#[wasm_bindgen]
pub fn solve_json(expr: &str, root: f64, method: &str, x0: f64) -> String {
    match solve_impl(expr, root, method, x0) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(err_json),
        Err(e) => err_json(e),
    }
}

/// Reversion coefficients c_1..c_{order-1} (plus the fixed-point constants
/// when order <= 4) as JSON.
#[wasm_bindgen]
pub fn coefficients_json(expr: &str, root: f64, order: u32) -> String {
    match coefficients_impl(expr, root, order) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(err_json),
        Err(e) => err_json(e),
    }
}

/// Convergence of `method` from evenly spaced starting points as JSON.
#[wasm_bindgen]
pub fn basin_json(expr: &str, root: f64, method: &str, from: f64, to: f64, samples: usize) -> String {
    match basin_impl(expr, root, method, from, to, samples) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(err_json),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_json_round_trips() {
        let out = solve_json("atan(x)", 0.0, "order2", -0.9);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["status"], "converged");
        assert_eq!(v["steps"], 5);
        assert_eq!(v["trace"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn solve_json_reports_errors() {
        let out = solve_json("atan(x", 0.0, "order2", -0.9);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["error"].as_str().unwrap().contains("expected"));
    }

    #[test]
    fn coefficients_json_tan_series() {
        let out = coefficients_json("atan(x)", 0.0, 4);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let c: Vec<f64> = v["c"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert_eq!(c.len(), 3);
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14);
        assert!((c[2] - 1.0 / 3.0).abs() < 1e-14);
        assert!((v["alpha"].as_f64().unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn basin_json_brackets_newton_threshold() {
        let out = basin_json("atan(x)", 0.0, "newton", 1.0, 2.0, 11);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[3]["converged"], true); // x0 = 1.3
        assert_eq!(pts[4]["converged"], false); // x0 = 1.4
    }

    #[test]
    fn long_traces_are_capped() {
        let out = solve_json("atan(x)", 0.0, "order2", -100000.0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["status"], "converged");
        assert!(v["steps"].as_u64().unwrap() > 60_000);
        assert_eq!(v["trace"].as_array().unwrap().len(), 2000);
    }
}
