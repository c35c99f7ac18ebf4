//! Iteration methods, the solve driver, and convergence-order estimation.
//!
//! The proposed family evaluates `g` exactly once per step and corrects with
//! coefficients built once from the derivatives of `g` at the root. The
//! classic baselines (Newton, Halley, Chebyshev, two-step Newton, and the
//! Kung-Traub derivative-free schemes) differentiate or re-evaluate at the
//! current iterate, which is what the per-step evaluation counters make
//! visible.

use std::cell::Cell;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, ProblemSpec};
use crate::jet::TaylorJet;
use crate::series::{revert_series, MethodCoefficients, SeriesError};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("trace too short for order estimation: need at least 4 iterates")]
    InsufficientTrace,
    #[error("no usable error triple in trace (errors underflowed or repeated)")]
    ErrorsUnderflow,
}

/// A root-finding problem the driver can iterate on: scalar evaluation plus
/// derivative access, with an optional known root for bundle construction
/// and error traces.
pub trait Problem {
    fn g(&self, x: f64) -> f64;
    fn jet(&self, x: f64, degree: usize) -> Result<TaylorJet, ExprError>;
    fn root_hint(&self) -> Option<f64> {
        None
    }
}

impl Problem for ProblemSpec {
    fn g(&self, x: f64) -> f64 {
        ProblemSpec::g(self, x)
    }

    fn jet(&self, x: f64, degree: usize) -> Result<TaylorJet, ExprError> {
        ProblemSpec::jet(self, x, degree)
    }

    fn root_hint(&self) -> Option<f64> {
        self.root()
    }
}

/// A problem defined by closures: the function itself plus optional exact
/// derivative closures (element `k` is the (k+1)-th derivative).
pub struct FnProblem {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivs: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub root: Option<f64>,
}

impl Problem for FnProblem {
    fn g(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn jet(&self, x: f64, degree: usize) -> Result<TaylorJet, ExprError> {
        assert!(
            degree <= self.derivs.len(),
            "FnProblem carries only {} derivatives",
            self.derivs.len()
        );
        let mut coeffs = vec![(self.f)(x)];
        let mut fact = 1.0;
        for k in 1..=degree {
            fact *= k as f64;
            coeffs.push((self.derivs[k - 1])(x) / fact);
        }
        Ok(TaylorJet::new(x, coeffs).expect("finite derivative closures"))
    }

    fn root_hint(&self) -> Option<f64> {
        self.root
    }
}

/// Which iteration to run.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    /// The proposed family with coefficients built from the problem's
    /// derivative bundle at solve time.
    ProposedOrder(u32),
    /// The proposed family with pre-built coefficients.
    Proposed(MethodCoefficients),
    Newton,
    TwoStepNewton,
    Halley,
    Chebyshev,
    /// Kung-Traub derivative-free fourth-order scheme (inverse polynomial
    /// interpolation, three evaluations per step).
    KungTraubDf4,
    /// Kung-Traub derivative-free eighth-order scheme (four evaluations).
    KungTraubDf8,
}

impl MethodKind {
    pub fn name(&self) -> String {
        match self {
            MethodKind::ProposedOrder(n) => format!("order{n}"),
            MethodKind::Proposed(c) => format!("order{}", c.order()),
            MethodKind::Newton => "newton".into(),
            MethodKind::TwoStepNewton => "two_step_newton".into(),
            MethodKind::Halley => "halley".into(),
            MethodKind::Chebyshev => "chebyshev".into(),
            MethodKind::KungTraubDf4 => "df4".into(),
            MethodKind::KungTraubDf8 => "df8".into(),
        }
    }

    /// Parse a method name as used in suite files and on the command line:
    /// `orderN`, `newton`, `two_step_newton`, `halley`, `chebyshev`, `df4`,
    /// `df8`.
    pub fn parse_name(name: &str) -> Option<MethodKind> {
        if let Some(n) = name.strip_prefix("order") {
            return n.parse().ok().map(MethodKind::ProposedOrder);
        }
        Some(match name {
            "newton" => MethodKind::Newton,
            "two_step_newton" | "two_step" => MethodKind::TwoStepNewton,
            "halley" => MethodKind::Halley,
            "chebyshev" => MethodKind::Chebyshev,
            "df4" => MethodKind::KungTraubDf4,
            "df8" => MethodKind::KungTraubDf8,
            _ => return None,
        })
    }
}

/// Stopping and divergence thresholds.
///
/// Convergence is declared when `|dx| <= atol + rtol * |x|` or
/// `|g(x)| <= ftol`; divergence when `|x| > x_max` or the iterate leaves the
/// reals.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub atol: f64,
    pub rtol: f64,
    pub ftol: f64,
    pub max_steps: u64,
    pub x_max: f64,
    pub keep_trace: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            atol: 1e-13,
            rtol: 1e-13,
            ftol: 1e-12,
            max_steps: 2_000_000,
            x_max: 1e12,
            keep_trace: false,
        }
    }
}

impl IterationConfig {
    pub fn with_trace(mut self) -> Self {
        self.keep_trace = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Diverged,
    MaxSteps,
    /// Non-finite arithmetic at the given (1-based) step.
    NumericalFailure { step: u64 },
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Converged => write!(f, "converged"),
            Status::Diverged => write!(f, "diverged"),
            Status::MaxSteps => write!(f, "max_steps"),
            Status::NumericalFailure { step } => write!(f, "numerical_failure@{step}"),
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub status: Status,
    /// Accepted updates.
    pub steps: u64,
    pub x_final: f64,
    /// |g| at the last point where g was measured during iteration.
    pub residual: f64,
    /// g evaluations made while iterating (excludes the one-time root
    /// bundle, which is accounted in `derivative_evals`).
    pub g_evals: u64,
    /// Derivative evaluations: per-step for the baselines, once per solve
    /// for the proposed family's root bundle.
    pub derivative_evals: u64,
    pub trace: Option<Vec<f64>>,
    pub coc: Option<f64>,
    /// Informational only; never asserted.
    pub wall_time: Duration,
}

/// One proposed-family update: `x - sum_k c_k g(x)^k`. The caller supplies
/// `g(x)`, so the step itself costs no evaluation.
pub fn proposed_step(x: f64, g_of_x: f64, coeffs: &MethodCoefficients) -> f64 {
    x - coeffs.correction(g_of_x)
}

// Counting wrapper around a problem. A degree-d jet call counts one g
// evaluation and d derivative evaluations.
struct CountingEval<'a, P: Problem + ?Sized> {
    p: &'a P,
    g_evals: Cell<u64>,
    derivative_evals: Cell<u64>,
}

impl<'a, P: Problem + ?Sized> CountingEval<'a, P> {
    fn new(p: &'a P) -> Self {
        Self { p, g_evals: Cell::new(0), derivative_evals: Cell::new(0) }
    }

    fn value(&self, x: f64) -> f64 {
        self.g_evals.set(self.g_evals.get() + 1);
        self.p.g(x)
    }

    fn jet(&self, x: f64, degree: usize) -> Result<TaylorJet, ExprError> {
        self.g_evals.set(self.g_evals.get() + 1);
        self.derivative_evals
            .set(self.derivative_evals.get() + degree as u64);
        self.p.jet(x, degree)
    }
}

struct StepOutcome {
    next: f64,
    /// g at the step's starting point, used for the residual stopping test.
    g_at_x: f64,
}

// NaN next iterates are reported as numerical failure by the driver, so the
// step functions just let non-finite arithmetic propagate.
fn baseline_step<P: Problem + ?Sized>(
    kind: &MethodKind,
    x: f64,
    eval: &CountingEval<'_, P>,
) -> Result<StepOutcome, ExprError> {
    match kind {
        MethodKind::Newton => {
            let j = eval.jet(x, 1)?;
            let (g, gp) = (j.value(), j.derivative(1));
            Ok(StepOutcome { next: x - g / gp, g_at_x: g })
        }
        MethodKind::TwoStepNewton => {
            let j = eval.jet(x, 1)?;
            let (g, gp) = (j.value(), j.derivative(1));
            let y = x - g / gp;
            let gy = eval.value(y);
            Ok(StepOutcome { next: y - gy / gp, g_at_x: g })
        }
        MethodKind::Halley => {
            let j = eval.jet(x, 2)?;
            let (g, gp, gpp) = (j.value(), j.derivative(1), j.derivative(2));
            let next = x - 2.0 * g * gp / (2.0 * gp * gp - g * gpp);
            Ok(StepOutcome { next, g_at_x: g })
        }
        MethodKind::Chebyshev => {
            let j = eval.jet(x, 2)?;
            let (g, gp, gpp) = (j.value(), j.derivative(1), j.derivative(2));
            let next = x - g / gp - g * g * gpp / (2.0 * gp.powi(3));
            Ok(StepOutcome { next, g_at_x: g })
        }
        MethodKind::KungTraubDf4 => kung_traub(x, eval, 3),
        MethodKind::KungTraubDf8 => kung_traub(x, eval, 4),
        _ => unreachable!("proposed methods do not use baseline_step"),
    }
}

// Kung-Traub derivative-free family: inverse polynomial interpolation
// through (g(z_i), z_i), each new node being the current interpolant at 0.
// With k evaluations the step has order 2^(k-1): k = 3 gives the optimal
// fourth-order scheme, k = 4 the eighth-order one.
fn kung_traub<P: Problem + ?Sized>(
    x: f64,
    eval: &CountingEval<'_, P>,
    evals: usize,
) -> Result<StepOutcome, ExprError> {
    let mut zs = vec![x];
    let mut fs = vec![eval.value(x)];
    if fs[0] == 0.0 {
        // already on the root; interpolation would degenerate
        return Ok(StepOutcome { next: x, g_at_x: 0.0 });
    }
    // first auxiliary node: w = x + g(x)
    zs.push(x + fs[0]);
    fs.push(eval.value(zs[1]));
    let mut next = interpolate_at_zero(&fs, &zs);
    for _ in 2..evals {
        if *fs.last().unwrap() == 0.0 {
            return Ok(StepOutcome { next: *zs.last().unwrap(), g_at_x: fs[0] });
        }
        zs.push(next);
        fs.push(eval.value(next));
        next = interpolate_at_zero(&fs, &zs);
    }
    Ok(StepOutcome { next, g_at_x: fs[0] })
}

// Newton divided-difference interpolation of z as a function of y = g(z),
// evaluated at y = 0. Degenerate tables produce non-finite output, which the
// driver reports as numerical failure.
fn interpolate_at_zero(ys: &[f64], zs: &[f64]) -> f64 {
    let n = ys.len();
    let mut table = zs.to_vec();
    let mut coeffs = vec![table[0]];
    for level in 1..n {
        for i in 0..n - level {
            table[i] = (table[i + 1] - table[i]) / (ys[i + level] - ys[i]);
        }
        coeffs.push(table[0]);
    }
    // Horner at y = 0: product terms (0 - ys[i])
    let mut acc = coeffs[n - 1];
    for i in (0..n - 1).rev() {
        acc = coeffs[i] + (0.0 - ys[i]) * acc;
    }
    acc
}

/// Run `method` on `p` from `x0` until a stopping condition.
///
/// Setup failures (unparseable bundle, `g'(l) = 0`, too few derivatives)
/// return an error; runtime failures are reported through the status.
pub fn iterate<P: Problem + ?Sized>(
    p: &P,
    method: &MethodKind,
    x0: f64,
    cfg: &IterationConfig,
) -> Result<IterationReport, SolveError> {
    let start = Instant::now();
    let eval = CountingEval::new(p);

    // Resolve proposed methods to coefficients; the root bundle is the
    // one-time derivative cost of the family.
    let coeffs: Option<MethodCoefficients> = match method {
        MethodKind::ProposedOrder(n) => {
            let spec_root = match p.root_hint() {
                Some(r) => r,
                None => return Err(ExprError::MissingRoot.into()),
            };
            let m = (*n - 1) as usize;
            let jet = p.jet(spec_root, m)?;
            eval.derivative_evals.set(m as u64);
            let derivs: Vec<f64> = (1..=m).map(|k| jet.derivative(k)).collect();
            let bundle = crate::series::DerivativeBundle::new(spec_root, derivs)?;
            Some(revert_series(&bundle, *n)?)
        }
        MethodKind::Proposed(c) => Some(c.clone()),
        _ => None,
    };

    let mut x = x0;
    let mut steps: u64 = 0;
    let mut trace = cfg.keep_trace.then(|| vec![x0]);
    let mut residual = f64::NAN;
    let mut status = Status::MaxSteps;

    while steps < cfg.max_steps {
        let outcome = match &coeffs {
            Some(c) => {
                let gx = eval.value(x);
                StepOutcome { next: proposed_step(x, gx, c), g_at_x: gx }
            }
            None => match baseline_step(method, x, &eval) {
                Ok(o) => o,
                Err(_) => {
                    status = Status::NumericalFailure { step: steps + 1 };
                    break;
                }
            },
        };
        steps += 1;
        residual = outcome.g_at_x.abs();
        let dx = outcome.next - x;
        x = outcome.next;
        if let Some(t) = trace.as_mut() {
            t.push(x);
        }
        if x.is_nan() || residual.is_nan() {
            status = Status::NumericalFailure { step: steps };
            break;
        }
        if x.abs() > cfg.x_max {
            status = Status::Diverged;
            break;
        }
        if residual <= cfg.ftol || dx.abs() <= cfg.atol + cfg.rtol * x.abs() {
            status = Status::Converged;
            break;
        }
    }

    let coc = match (&trace, p.root_hint()) {
        (Some(t), Some(root)) => estimate_coc(t, root).ok(),
        _ => None,
    };

    Ok(IterationReport {
        status,
        steps,
        x_final: x,
        residual,
        g_evals: eval.g_evals.get(),
        derivative_evals: eval.derivative_evals.get(),
        trace,
        coc,
        wall_time: start.elapsed(),
    })
}

/// Computational order of convergence from an iterate trace and the true
/// root: `ln(e_{k+1}/e_k) / ln(e_k/e_{k-1})` over the last triple of
/// distinct nonzero errors.
pub fn estimate_coc(trace: &[f64], root: f64) -> Result<f64, SolveError> {
    if trace.len() < 4 {
        return Err(SolveError::InsufficientTrace);
    }
    let errors: Vec<f64> = trace.iter().map(|x| (x - root).abs()).collect();
    for k in (1..errors.len() - 1).rev() {
        let (e0, e1, e2) = (errors[k - 1], errors[k], errors[k + 1]);
        if e0 > 0.0 && e1 > 0.0 && e2 > 0.0 && e0 != e1 && e1 != e2 {
            let coc = (e2 / e1).ln() / (e1 / e0).ln();
            if coc.is_finite() {
                return Ok(coc);
            }
        }
    }
    Err(SolveError::ErrorsUnderflow)
}

/// Kung-Traub efficiency index `n^(1/q)` for order `n` at `q` evaluations
/// per step.
pub fn efficiency_index(order: u32, evals_per_step: u32) -> f64 {
    assert!(order >= 1 && evals_per_step >= 1);
    (order as f64).powf(1.0 / evals_per_step as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::series::DerivativeBundle;
    use approx::assert_relative_eq;

    fn atan_problem() -> ProblemSpec {
        ProblemSpec::from_text("atan(x)", Some(0.0)).unwrap()
    }

    #[test]
    fn proposed_step_examples() {
        // atan, order 2: x - g(x)
        let b = DerivativeBundle::new(0.0, vec![1.0]).unwrap();
        let c = revert_series(&b, 2).unwrap();
        let next = proposed_step(-0.9, (-0.9f64).atan(), &c);
        assert_relative_eq!(next, -0.9 + 0.9f64.atan(), epsilon = 1e-15);
        assert_relative_eq!(next, -0.16718, epsilon = 1e-5);

        // linear function is solved exactly in one application
        let b = DerivativeBundle::new(2.0, vec![3.0]).unwrap();
        let c = revert_series(&b, 2).unwrap();
        for x in [-5.0, 0.0, 100.0] {
            assert_relative_eq!(proposed_step(x, 3.0 * x - 6.0, &c), 2.0, epsilon = 1e-12);
        }

        // atan, order 4, far from the root: step size pi/2 + (pi/2)^3/3
        let b = DerivativeBundle::new(0.0, vec![1.0, 0.0, -2.0]).unwrap();
        let c = revert_series(&b, 4).unwrap();
        let x = -1e6;
        let g = (-1e6f64).atan();
        let next = proposed_step(x, g, &c);
        assert_relative_eq!(next, x - (g + g.powi(3) / 3.0), epsilon = 1e-9);
        assert_relative_eq!(next, -999997.1373, epsilon = 1e-3);
    }

    #[test]
    fn newton_step_example() {
        let p = ProblemSpec::from_text("x^2-4", Some(2.0)).unwrap();
        let eval = CountingEval::new(&p);
        let out = baseline_step(&MethodKind::Newton, 3.0, &eval).unwrap();
        assert_relative_eq!(out.next, 13.0 / 6.0, epsilon = 1e-15);
        assert_eq!(eval.g_evals.get(), 1);
        assert_eq!(eval.derivative_evals.get(), 1);
    }

    #[test]
    fn newton_overshoots_outside_atan_basin() {
        let p = atan_problem();
        let eval = CountingEval::new(&p);
        let out = baseline_step(&MethodKind::Newton, 1.5, &eval).unwrap();
        assert_relative_eq!(out.next, 1.5 - 1.5f64.atan() * (1.0 + 2.25), epsilon = 1e-12);
        assert!(out.next.abs() > 1.5, "iterate should grow: {}", out.next);
    }

    #[test]
    fn baselines_exact_on_linear() {
        // The root is hit in one update; the driver needs the following
        // step's g measurement to observe it, so at most 2 counted steps.
        let p = ProblemSpec::from_text("x-7", None).unwrap();
        for m in [
            MethodKind::Newton,
            MethodKind::TwoStepNewton,
            MethodKind::Halley,
            MethodKind::Chebyshev,
            MethodKind::KungTraubDf4,
            MethodKind::KungTraubDf8,
        ] {
            let r = iterate(&p, &m, 0.0, &IterationConfig::default()).unwrap();
            assert_eq!(r.status, Status::Converged, "{}", m.name());
            assert!(r.steps <= 2, "{}: {} steps", m.name(), r.steps);
            assert_relative_eq!(r.x_final, 7.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn paper_step_counts_from_minus_0_9() {
        let p = atan_problem();
        let cfg = IterationConfig::default();
        let r = iterate(&p, &MethodKind::ProposedOrder(2), -0.9, &cfg).unwrap();
        assert_eq!((r.status, r.steps), (Status::Converged, 5));
        let r = iterate(&p, &MethodKind::Newton, -1e6, &cfg).unwrap();
        assert_eq!(r.status, Status::Diverged);
    }

    #[test]
    fn coc_constructed_decays() {
        // errors (1e-1, 1e-2, 1e-4, 1e-8) around root 5
        let trace: Vec<f64> = [1e-1, 1e-2, 1e-4, 1e-8].iter().map(|e| 5.0 + e).collect();
        assert_relative_eq!(estimate_coc(&trace, 5.0).unwrap(), 2.0, epsilon = 1e-6);

        // halving errors: linear decay
        let trace: Vec<f64> = (0..6).map(|k| 1.0 / f64::powi(2.0, k)).collect();
        assert_relative_eq!(estimate_coc(&trace, 0.0).unwrap(), 1.0, epsilon = 1e-9);

        assert!(matches!(
            estimate_coc(&[1.0, 0.5, 0.25], 0.0),
            Err(SolveError::InsufficientTrace)
        ));
    }

    #[test]
    fn coc_of_order3_on_exp() {
        // order 3 on g = e^x - 1 from 0.5; expm1 keeps the trace accurate
        let p = FnProblem {
            f: Box::new(|x: f64| x.exp_m1()),
            derivs: vec![Box::new(|x: f64| x.exp()), Box::new(|x: f64| x.exp())],
            root: Some(0.0),
        };
        let r = iterate(
            &p,
            &MethodKind::ProposedOrder(3),
            0.5,
            &IterationConfig::default().with_trace(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        let coc = r.coc.expect("trace should yield a COC");
        assert!((coc - 3.0).abs() < 0.3, "coc = {coc}");
    }

    #[test]
    fn efficiency_index_values() {
        assert_relative_eq!(efficiency_index(2, 1), 2.0);
        assert_relative_eq!(efficiency_index(4, 3), 4.0f64.powf(1.0 / 3.0));
        assert_relative_eq!(efficiency_index(1, 7), 1.0);
    }

    #[test]
    fn one_g_eval_per_step_for_proposed() {
        let p = atan_problem();
        for n in [2u32, 3, 4] {
            let r = iterate(
                &p,
                &MethodKind::ProposedOrder(n),
                -0.9,
                &IterationConfig::default(),
            )
            .unwrap();
            assert_eq!(r.g_evals, r.steps, "order {n}");
            assert_eq!(r.derivative_evals, (n - 1) as u64, "order {n}");
        }
    }

    #[test]
    fn identity_converges_immediately() {
        let p = ProblemSpec::from_text("x", Some(0.0)).unwrap();
        for m in [
            MethodKind::ProposedOrder(2),
            MethodKind::Newton,
            MethodKind::Halley,
            MethodKind::Chebyshev,
            MethodKind::TwoStepNewton,
            MethodKind::KungTraubDf4,
            MethodKind::KungTraubDf8,
        ] {
            for x0 in [-3.7e5, -1.0, 0.5, 2e9] {
                let r = iterate(&p, &m, x0, &IterationConfig::default()).unwrap();
                assert_eq!(r.status, Status::Converged, "{} from {x0}", m.name());
                assert!(r.steps <= 2, "{} from {x0}: {} steps", m.name(), r.steps);
                assert_relative_eq!(r.x_final, 0.0);
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let s = 2.5;
        let base = ProblemSpec::from_text("exp(x)-1", Some(0.0)).unwrap();
        let shifted =
            ProblemSpec::new(parse("exp(x-2.5)-1").unwrap(), Some(s), crate::expr::DerivativeSource::AutoJet);
        for n in [2u32, 3, 4] {
            let r0 = iterate(&base, &MethodKind::ProposedOrder(n), 0.8, &IterationConfig::default())
                .unwrap();
            let r1 = iterate(
                &shifted,
                &MethodKind::ProposedOrder(n),
                0.8 + s,
                &IterationConfig::default(),
            )
            .unwrap();
            assert_eq!(r0.status, Status::Converged);
            assert_eq!(r1.status, Status::Converged);
            assert_relative_eq!(r1.x_final - s, r0.x_final, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn numerical_failure_reports_step_index() {
        // Newton on sqrt(x) maps x to -x, leaving the domain after one step.
        let p = ProblemSpec::from_text("sqrt(x)", None).unwrap();
        let r = iterate(&p, &MethodKind::Newton, 1.0, &IterationConfig::default()).unwrap();
        assert!(
            matches!(r.status, Status::NumericalFailure { step } if step >= 1),
            "status: {:?}",
            r.status
        );
    }
}
