//! Truncated Taylor series ("jets") with arithmetic and elementary functions.
//!
//! A [`TaylorJet`] stores the coefficients `c_0 .. c_N` of a function's
//! Taylor expansion at an anchor point, with `c_k = f^(k)(a) / k!`.
//! Arithmetic on jets propagates derivatives exactly up to the shared
//! truncation degree, which is how the expression evaluator produces
//! derivative bundles without symbolic differentiation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("anchor mismatch: {0} vs {1}")]
    AnchorMismatch(f64, f64),
    #[error("division by a series with zero constant term")]
    DivisionByZero,
    #[error("{func} is singular at {point}")]
    Singular { func: &'static str, point: f64 },
    #[error("{func} domain error: constant term {value} out of domain")]
    Domain { func: &'static str, value: f64 },
    #[error("non-finite coefficient in jet")]
    NonFinite,
    #[error("composition requires inner constant term {inner} to equal outer anchor {anchor}")]
    ComposeAnchor { inner: f64, anchor: f64 },
}

/// Truncated Taylor expansion of a scalar function at an anchor point.
///
/// Coefficients are stored divided by factorials: `coeff(k) == f^(k)(anchor) / k!`.
/// Use [`TaylorJet::derivative`] to recover the plain derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet {
    anchor: f64,
    coeffs: Vec<f64>,
}

impl TaylorJet {
    pub fn new(anchor: f64, coeffs: Vec<f64>) -> Result<Self, JetError> {
        if !anchor.is_finite() || coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(JetError::NonFinite);
        }
        Ok(Self { anchor, coeffs })
    }

    /// The jet of a constant, truncated at `degree`.
    pub fn constant(anchor: f64, value: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = value;
        Self { anchor, coeffs }
    }

    /// The jet of the identity `x` at `anchor`, truncated at `degree`.
    pub fn variable(anchor: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = anchor;
        if degree >= 1 {
            coeffs[1] = 1.0;
        }
        Self { anchor, coeffs }
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Value of the function at the anchor (`c_0`).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Plain k-th derivative at the anchor: `k! * c_k`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        fact * self.coeff(k)
    }

    fn check_anchor(&self, other: &Self) -> Result<(), JetError> {
        if self.anchor == other.anchor {
            Ok(())
        } else {
            Err(JetError::AnchorMismatch(self.anchor, other.anchor))
        }
    }

    /// Shared truncation degree of a binary operation.
    fn shared_len(&self, other: &Self) -> usize {
        self.coeffs.len().min(other.coeffs.len())
    }

    pub fn add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_anchor(other)?;
        let n = self.shared_len(other);
        let coeffs = (0..n).map(|k| self.coeffs[k] + other.coeffs[k]).collect();
        Ok(Self { anchor: self.anchor, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check_anchor(other)?;
        let n = self.shared_len(other);
        let coeffs = (0..n).map(|k| self.coeffs[k] - other.coeffs[k]).collect();
        Ok(Self { anchor: self.anchor, coeffs })
    }

    pub fn neg(&self) -> Self {
        Self {
            anchor: self.anchor,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            anchor: self.anchor,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_anchor(other)?;
        let n = self.shared_len(other);
        let mut coeffs = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                coeffs[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Ok(Self { anchor: self.anchor, coeffs })
    }

    /// Truncated quotient; requires a nonzero constant term in the divisor.
    pub fn div(&self, other: &Self) -> Result<Self, JetError> {
        self.check_anchor(other)?;
        if other.coeffs[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let n = self.shared_len(other);
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut acc = self.coeff(k);
            for j in 0..k {
                acc -= q[j] * other.coeff(k - j);
            }
            q[k] = acc / other.coeffs[0];
        }
        Ok(Self { anchor: self.anchor, coeffs: q })
    }

    /// Integer power by repeated squaring. Negative exponents require a
    /// nonzero constant term.
    pub fn powi(&self, exp: i64) -> Result<Self, JetError> {
        if exp < 0 {
            let one = Self::constant(self.anchor, 1.0, self.degree());
            return one.div(&self.powi(-exp)?);
        }
        let mut result = Self::constant(self.anchor, 1.0, self.degree());
        let mut base = self.clone();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Real power `u^p` via `exp(p ln u)`; requires a positive constant term.
    pub fn powf(&self, p: f64) -> Result<Self, JetError> {
        if self.coeffs[0] <= 0.0 {
            return Err(JetError::Domain { func: "pow", value: self.coeffs[0] });
        }
        self.ln_named("pow")?.scale(p).exp()
    }

    /// Coefficients of the formal derivative series, one degree shorter.
    fn series_derivative(&self) -> Vec<f64> {
        (1..self.coeffs.len())
            .map(|k| k as f64 * self.coeffs[k])
            .collect()
    }

    /// `v' = u' * v` recurrence for the exponential.
    pub fn exp(&self) -> Result<Self, JetError> {
        let n = self.coeffs.len();
        let mut v = vec![0.0; n];
        v[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeffs[j] * v[k - j];
            }
            v[k] = acc / k as f64;
        }
        Self::new(self.anchor, v)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        self.ln_named("ln")
    }

    fn ln_named(&self, func: &'static str) -> Result<Self, JetError> {
        let u0 = self.coeffs[0];
        if u0 <= 0.0 {
            return Err(JetError::Domain { func, value: u0 });
        }
        // From v' u = u': k v_k u_0 = k u_k - sum_{j=1}^{k-1} j v_j u_{k-j}.
        let n = self.coeffs.len();
        let mut v = vec![0.0; n];
        v[0] = u0.ln();
        for k in 1..n {
            let mut acc = k as f64 * self.coeffs[k];
            for j in 1..k {
                acc -= j as f64 * v[j] * self.coeffs[k - j];
            }
            v[k] = acc / (k as f64 * u0);
        }
        Self::new(self.anchor, v)
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let u0 = self.coeffs[0];
        if u0 <= 0.0 {
            return Err(JetError::Domain { func: "sqrt", value: u0 });
        }
        let n = self.coeffs.len();
        let mut v = vec![0.0; n];
        v[0] = u0.sqrt();
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= v[j] * v[k - j];
            }
            v[k] = acc / (2.0 * v[0]);
        }
        Self::new(self.anchor, v)
    }

    /// Coupled `s' = u' c`, `c' = -u' s` recurrences.
    fn sin_cos(&self) -> Result<(Self, Self), JetError> {
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..n {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=k {
                let ju = j as f64 * self.coeffs[j];
                sa += ju * c[k - j];
                ca += ju * s[k - j];
            }
            s[k] = sa / k as f64;
            c[k] = -ca / k as f64;
        }
        Ok((Self::new(self.anchor, s)?, Self::new(self.anchor, c)?))
    }

    pub fn sin(&self) -> Result<Self, JetError> {
        Ok(self.sin_cos()?.0)
    }

    pub fn cos(&self) -> Result<Self, JetError> {
        Ok(self.sin_cos()?.1)
    }

    pub fn tan(&self) -> Result<Self, JetError> {
        let (s, c) = self.sin_cos()?;
        if c.coeffs[0] == 0.0 {
            return Err(JetError::Singular { func: "tan", point: self.coeffs[0] });
        }
        s.div(&c)
    }

    /// `v' = u' / (1 + u^2)`, integrated term by term.
    pub fn atan(&self) -> Result<Self, JetError> {
        let n = self.coeffs.len();
        let one = Self::constant(self.anchor, 1.0, self.degree());
        let w = one.div(&self.mul(self)?.add(&one)?)?;
        let du = self.series_derivative();
        let mut v = vec![0.0; n];
        v[0] = self.coeffs[0].atan();
        for k in 1..n {
            // [u' * w]_{k-1}
            let mut acc = 0.0;
            for j in 0..k {
                if j < du.len() {
                    acc += du[j] * w.coeff(k - 1 - j);
                }
            }
            v[k] = acc / k as f64;
        }
        Self::new(self.anchor, v)
    }

    /// Piecewise-smooth absolute value: `sign(u_0) * u`, undefined when the
    /// constant term sits on the kink.
    pub fn abs(&self) -> Result<Self, JetError> {
        let u0 = self.coeffs[0];
        if u0 > 0.0 {
            Ok(self.clone())
        } else if u0 < 0.0 {
            Ok(self.neg())
        } else {
            Err(JetError::Singular { func: "abs", point: self.anchor })
        }
    }

    /// Composition `outer(inner)`; the inner constant term must equal the
    /// outer anchor.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, JetError> {
        if inner.coeffs[0] != outer.anchor {
            return Err(JetError::ComposeAnchor {
                inner: inner.coeffs[0],
                anchor: outer.anchor,
            });
        }
        let mut shifted = inner.clone();
        shifted.coeffs[0] = 0.0;
        // Horner evaluation of outer's polynomial in the shifted inner jet.
        let mut result = Self::constant(inner.anchor, 0.0, inner.degree());
        for k in (0..outer.coeffs.len()).rev() {
            result = result.mul(&shifted)?.add_scalar(outer.coeffs[k]);
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn product_truncation() {
        let a = TaylorJet::new(0.0, vec![1.0, 2.0]).unwrap();
        let b = TaylorJet::new(0.0, vec![3.0, 4.0]).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeffs(), &[3.0, 10.0]);
    }

    #[test]
    fn add_zero_is_identity() {
        let a = TaylorJet::new(1.0, vec![2.0, -1.0, 0.5]).unwrap();
        let z = TaylorJet::constant(1.0, 0.0, 2);
        assert_eq!(a.add(&z).unwrap(), a);
    }

    #[test]
    fn exp_coefficients_at_zero() {
        let x = TaylorJet::variable(0.0, 5);
        let e = x.exp().unwrap();
        for k in 0..=5 {
            let mut fact = 1.0;
            for i in 2..=k {
                fact *= i as f64;
            }
            assert_relative_eq!(e.coeff(k), 1.0 / fact, epsilon = 1e-14);
        }
    }

    #[test]
    fn ln_of_exp_is_identity() {
        // ln at 1 composed with exp at 0 gives the identity jet [0, 1, 0].
        let exp_jet = TaylorJet::new(0.0, vec![1.0, 1.0, 0.5]).unwrap();
        let ln_jet = TaylorJet::new(1.0, vec![0.0, 1.0, -0.5]).unwrap();
        let ident = TaylorJet::compose(&ln_jet, &exp_jet).unwrap();
        assert_relative_eq!(ident.coeff(0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ident.coeff(1), 1.0, epsilon = 1e-14);
        assert_relative_eq!(ident.coeff(2), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn atan_maclaurin() {
        let x = TaylorJet::variable(0.0, 5);
        let a = x.atan().unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 0.2];
        for (k, e) in expect.iter().enumerate() {
            assert_relative_eq!(a.coeff(k), *e, epsilon = 1e-14);
        }
    }

    #[test]
    fn sqrt_at_sixteen() {
        let x = TaylorJet::variable(16.0, 2);
        let s = x.sqrt().unwrap();
        assert_relative_eq!(s.coeff(0), 4.0);
        assert_relative_eq!(s.coeff(1), 0.125);
        assert_relative_eq!(s.coeff(2), -1.0 / 512.0);
    }

    #[test]
    fn abs_singular_at_kink() {
        let x = TaylorJet::variable(0.0, 2);
        assert!(matches!(x.abs(), Err(JetError::Singular { func: "abs", .. })));
        let y = TaylorJet::variable(-2.0, 2);
        assert_eq!(y.abs().unwrap().coeff(0), 2.0);
        assert_eq!(y.abs().unwrap().coeff(1), -1.0);
    }

    #[test]
    fn division_by_zero_constant_term() {
        let a = TaylorJet::variable(0.0, 3);
        let b = TaylorJet::new(0.0, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.div(&b), Err(JetError::DivisionByZero));
    }

    #[test]
    fn anchor_mismatch_rejected() {
        let a = TaylorJet::variable(0.0, 1);
        let b = TaylorJet::variable(1.0, 1);
        assert!(matches!(a.add(&b), Err(JetError::AnchorMismatch(_, _))));
    }

    #[test]
    fn powi_negative_exponent() {
        // (1+x)^-1 at 0: alternating geometric series.
        let u = TaylorJet::variable(0.0, 4).add_scalar(1.0);
        let v = u.powi(-1).unwrap();
        for k in 0..=4 {
            assert_relative_eq!(v.coeff(k), (-1.0f64).powi(k as i32), epsilon = 1e-14);
        }
    }

    #[test]
    fn tan_matches_sin_over_cos_derivatives() {
        let x = TaylorJet::variable(0.0, 5);
        let t = x.tan().unwrap();
        // tan series: x + x^3/3 + 2x^5/15
        assert_relative_eq!(t.coeff(1), 1.0, epsilon = 1e-14);
        assert_relative_eq!(t.coeff(3), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(t.coeff(5), 2.0 / 15.0, epsilon = 1e-14);
    }
}
