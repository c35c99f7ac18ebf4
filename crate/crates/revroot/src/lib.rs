//! Root finding with one function evaluation per step.
//!
//! Classic high-order iterations buy their convergence rate with extra
//! evaluations of `g` and its derivatives at every iterate. When the
//! derivatives of `g` at the solution point `l` are available up front —
//! from physical reasoning, from a derivative-from-value identity, or from
//! automatic differentiation at a known root — the order-`n` update
//!
//! ```text
//! U+ = U - c_1 g(U) - c_2 g(U)^2 - ... - c_{n-1} g(U)^{n-1}
//! ```
//!
//! needs exactly one evaluation of `g` per step, with the constants `c_k`
//! computed once by reverting the truncated Taylor series of `g` at `l`.
//! That gives the method an efficiency index of `n` (order `n` per single
//! evaluation).
//!
//! The crate provides:
//!
//! - [`jet`]: truncated Taylor-series arithmetic ([`jet::TaylorJet`]);
//! - [`series`]: coefficient construction by series reversion, with the
//!   orders 2-4 closed forms and the fixed-point-form constants as
//!   cross-checks;
//! - [`expr`]: a small one-variable expression language whose evaluator
//!   produces both values and derivative bundles;
//! - [`solver`]: the proposed family plus Newton, two-step Newton, Halley,
//!   Chebyshev, and Kung-Traub derivative-free baselines, an iteration
//!   driver with evaluation counters, and convergence-order estimation;
//! - [`bench`]: benchmark suites, basin scans, and CSV/markdown reports.

pub mod bench;
pub mod expr;
pub mod jet;
pub mod series;
pub mod solver;

pub use expr::{parse, DerivativeSource, ExprError, ExprNode, ProblemSpec};
pub use jet::{JetError, TaylorJet};
pub use series::{
    closed_form_coefficients, fspace_correction, revert_series, DerivativeBundle,
    FspaceCorrection, MethodCoefficients, SeriesError, MAX_ORDER,
};
pub use solver::{
    efficiency_index, estimate_coc, iterate, proposed_step, FnProblem, IterationConfig,
    IterationReport, MethodKind, Problem, SolveError, Status,
};
