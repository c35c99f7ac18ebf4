//! Method-coefficient construction by truncated power-series reversion.
//!
//! Given the derivatives of `g` at a simple root `l`, the order-`n` update
//!
//! ```text
//! U+ = U - sum_{k=1}^{n-1} c_k g(U)^k
//! ```
//!
//! cancels every error term below order `n` when `c_1 .. c_{n-1}` are the
//! Taylor coefficients of the inverse function `g^{-1}` about 0. This module
//! computes those coefficients three ways: general-order series reversion
//! ([`revert_series`]), direct closed forms for orders 2-4
//! ([`closed_form_coefficients`]), and the fixed-point-form constants
//! ([`fspace_correction`]) kept as a cross-check.
//!
//! The identification of the general-order constants with the coefficients
//! of `g^{-1}` is validated in the tests against the known inverse series of
//! `e^x - 1` (namely `ln(1+y)`) and of `atan` (namely `tan`).

use serde::Serialize;
use thiserror::Error;

/// Highest supported method order. Coefficients involve `g'(l)^-(2n-1)` and
/// become numerically fragile beyond this.
pub const MAX_ORDER: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("g'(l) = 0: multiple root, method coefficients are undefined")]
    MultipleRoot,
    #[error("order {0} out of supported range 2..={MAX_ORDER}")]
    OrderOutOfRange(u32),
    #[error("order {order} needs {needed} derivatives at the root, only {available} available")]
    InsufficientDerivatives { order: u32, needed: usize, available: usize },
    #[error("non-finite derivative value")]
    NonFinite,
}

/// Plain derivatives `g'(l), g''(l), ..., g^(m)(l)` at a known simple root.
///
/// Values are stored exactly as derivatives, not divided by factorials;
/// factorial division happens inside the coefficient constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    root: f64,
    derivs: Vec<f64>,
}

impl DerivativeBundle {
    pub fn new(root: f64, derivs: Vec<f64>) -> Result<Self, SeriesError> {
        if !root.is_finite() || derivs.iter().any(|d| !d.is_finite()) {
            return Err(SeriesError::NonFinite);
        }
        if derivs.first().copied().unwrap_or(0.0) == 0.0 {
            return Err(SeriesError::MultipleRoot);
        }
        Ok(Self { root, derivs })
    }

    pub fn root(&self) -> f64 {
        self.root
    }

    /// Highest derivative order carried by the bundle.
    pub fn m(&self) -> usize {
        self.derivs.len()
    }

    /// Plain k-th derivative `g^(k)(l)`, 1-based.
    pub fn deriv(&self, k: usize) -> f64 {
        self.derivs[k - 1]
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }
}

/// Correction coefficients `c_1 .. c_{n-1}` of an order-`n` step in g-space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodCoefficients {
    order: u32,
    c: Vec<f64>,
}

impl MethodCoefficients {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// The g-space correction `sum_k c_k y^k`, evaluated by Horner.
    pub fn correction(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for &ck in self.c.iter().rev() {
            acc = (acc + ck) * y;
        }
        acc
    }
}

fn check_order(bundle: &DerivativeBundle, order: u32) -> Result<(), SeriesError> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(SeriesError::OrderOutOfRange(order));
    }
    let needed = (order - 1) as usize;
    if bundle.m() < needed {
        return Err(SeriesError::InsufficientDerivatives {
            order,
            needed,
            available: bundle.m(),
        });
    }
    Ok(())
}

/// Coefficients of the order-`n` method by truncated reversion of the
/// Taylor series of `g` at the root.
///
/// Writing `A(e) = sum_{k>=1} g^(k)(l)/k! e^k`, the returned `c_k` solve
/// `sum_j c_j A(e)^j = e (mod e^n)`, i.e. they are the Taylor coefficients
/// of `g^{-1}` about 0 truncated at degree `n-1`.
pub fn revert_series(
    bundle: &DerivativeBundle,
    order: u32,
) -> Result<MethodCoefficients, SeriesError> {
    check_order(bundle, order)?;
    let deg = (order - 1) as usize;

    // a[k] = g^(k)(l)/k! for k = 1..deg, as a polynomial in e with a[0] = 0.
    let mut a = vec![0.0; deg + 1];
    let mut fact = 1.0;
    for k in 1..=deg {
        fact *= k as f64;
        a[k] = bundle.deriv(k) / fact;
    }

    // Triangular extraction: coefficient of e^k in sum_j c_j A^j must be
    // delta_{k,1}, and [A^k]_k = a_1^k.
    let mut c = vec![0.0; deg + 1];
    c[1] = 1.0 / a[1];
    let mut powers = vec![a.clone()]; // powers[j-1] = A^j truncated at degree deg
    for k in 2..=deg {
        let next = poly_mul_trunc(powers.last().unwrap(), &a, deg);
        powers.push(next);
        let acc: f64 = (1..k).map(|j| c[j] * powers[j - 1][k]).sum();
        c[k] = -acc / a[1].powi(k as i32);
    }
    Ok(MethodCoefficients { order, c: c[1..].to_vec() })
}

fn poly_mul_trunc(p: &[f64], q: &[f64], deg: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    for i in 0..=deg {
        if p[i] == 0.0 {
            continue;
        }
        for j in 0..=deg - i {
            out[i + j] += p[i] * q[j];
        }
    }
    out
}

/// Orders 2-4 coefficients by direct transcription of the closed forms
/// `c_1 = 1/g'`, `c_2 = -g''/(2 g'^3)`, `c_3 = (3 g''^2 - g' g''')/(6 g'^5)`.
///
/// Kept as the independent cross-check for [`revert_series`].
pub fn closed_form_coefficients(
    bundle: &DerivativeBundle,
    order: u32,
) -> Result<MethodCoefficients, SeriesError> {
    if !(2..=4).contains(&order) {
        return Err(SeriesError::OrderOutOfRange(order));
    }
    check_order(bundle, order)?;
    let gp = bundle.deriv(1);
    let mut c = vec![1.0 / gp];
    if order >= 3 {
        let gpp = bundle.deriv(2);
        c.push(-gpp / (2.0 * gp.powi(3)));
    }
    if order >= 4 {
        let gpp = bundle.deriv(2);
        let gppp = bundle.deriv(3);
        c.push((3.0 * gpp * gpp - gp * gppp) / (6.0 * gp.powi(5)));
    }
    Ok(MethodCoefficients { order, c })
}

/// Fixed-point-form correction constants for the update
/// `U+ = f(U) + alpha d + beta d^2 + gamma d^3` with `f = g + x` and
/// `d = f(U) - U = g(U)`.
///
/// `beta` and `gamma` are present only when the bundle carries the second
/// and third derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FspaceCorrection {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

impl FspaceCorrection {
    /// Apply the fixed-point update at `x` given `g(x)`, using every
    /// available constant. Must agree with the g-space update to machine
    /// precision.
    pub fn update(&self, x: f64, g_of_x: f64) -> f64 {
        let d = g_of_x;
        let fx = g_of_x + x;
        let mut u = fx + self.alpha * d;
        if let Some(b) = self.beta {
            u += b * d * d;
        }
        if let Some(g) = self.gamma {
            u += g * d * d * d;
        }
        u
    }
}

/// The alpha/beta/gamma constants with `f'(l) = g'(l) + 1`,
/// `f''(l) = g''(l)`, `f'''(l) = g'''(l)`.
pub fn fspace_correction(bundle: &DerivativeBundle) -> Result<FspaceCorrection, SeriesError> {
    let fp = bundle.deriv(1) + 1.0;
    let denom = 1.0 - fp; // = -g'(l), nonzero by bundle invariant
    if denom == 0.0 {
        return Err(SeriesError::MultipleRoot);
    }
    let alpha = fp / denom;
    let beta = (bundle.m() >= 2).then(|| -bundle.deriv(2) / (2.0 * denom.powi(3)));
    let gamma = (bundle.m() >= 3).then(|| {
        let fpp = bundle.deriv(2);
        let fppp = bundle.deriv(3);
        (fppp * denom + 3.0 * fpp * fpp) / (6.0 * denom.powi(5))
    });
    Ok(FspaceCorrection { alpha, beta, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bundle(derivs: &[f64]) -> DerivativeBundle {
        DerivativeBundle::new(0.0, derivs.to_vec()).unwrap()
    }

    #[test]
    fn order2_unit_slope() {
        let c = revert_series(&bundle(&[1.0]), 2).unwrap();
        assert_eq!(c.c(), &[1.0]);
    }

    #[test]
    fn exp_minus_one_order4() {
        // g = e^x - 1: inverse is ln(1+y) = y - y^2/2 + y^3/3.
        let c = revert_series(&bundle(&[1.0, 1.0, 1.0]), 4).unwrap();
        assert_relative_eq!(c.c()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.c()[1], -0.5, epsilon = 1e-14);
        assert_relative_eq!(c.c()[2], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn factorial_derivatives_order4() {
        let c = revert_series(&bundle(&[2.0, 6.0, 24.0]), 4).unwrap();
        assert_relative_eq!(c.c()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.c()[1], -0.375, epsilon = 1e-14);
        assert_relative_eq!(c.c()[2], 0.3125, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_coefficients(&bundle(&[4.0]), 2).unwrap();
        assert_eq!(c.c(), &[0.25]);

        let c = closed_form_coefficients(&bundle(&[1.0, 2.0]), 3).unwrap();
        assert_eq!(c.c(), &[1.0, -1.0]);

        // atan at 0: inverse is tan(y) = y + y^3/3 + ...
        let c = closed_form_coefficients(&bundle(&[1.0, 0.0, -2.0]), 4).unwrap();
        assert_relative_eq!(c.c()[0], 1.0);
        assert_relative_eq!(c.c()[1], 0.0);
        assert_relative_eq!(c.c()[2], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_rejects_order_5() {
        assert_eq!(
            closed_form_coefficients(&bundle(&[1.0, 1.0, 1.0, 1.0]), 5),
            Err(SeriesError::OrderOutOfRange(5))
        );
    }

    #[test]
    fn fspace_examples() {
        // f'(l) = 0.5 means g'(l) = -0.5.
        let f = fspace_correction(&bundle(&[-0.5])).unwrap();
        assert_relative_eq!(f.alpha, 1.0);

        // f'(l) = 0 means g'(l) = -1.
        let f = fspace_correction(&bundle(&[-1.0])).unwrap();
        assert_relative_eq!(f.alpha, 0.0);

        // g' = 1, g'' = 0, g''' = -2 (f' = 2).
        let f = fspace_correction(&bundle(&[1.0, 0.0, -2.0])).unwrap();
        assert_relative_eq!(f.alpha, -2.0);
        assert_relative_eq!(f.beta.unwrap(), 0.0);
        assert_relative_eq!(f.gamma.unwrap(), -1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn multiple_root_rejected() {
        assert_eq!(
            DerivativeBundle::new(0.0, vec![0.0, 1.0]),
            Err(SeriesError::MultipleRoot)
        );
    }

    #[test]
    fn insufficient_derivatives_rejected() {
        assert!(matches!(
            revert_series(&bundle(&[1.0, 1.0]), 4),
            Err(SeriesError::InsufficientDerivatives { .. })
        ));
    }

    #[test]
    fn alternating_harmonic_to_order_8() {
        // g = e^x - 1 at 0: c_k = (-1)^(k+1)/k for all k.
        let b = bundle(&[1.0; 7]);
        let c = revert_series(&b, 8).unwrap();
        for (i, ck) in c.c().iter().enumerate() {
            let k = (i + 1) as f64;
            let expect = if i % 2 == 0 { 1.0 / k } else { -1.0 / k };
            assert_relative_eq!(*ck, expect, epsilon = 1e-14);
        }
    }
}
