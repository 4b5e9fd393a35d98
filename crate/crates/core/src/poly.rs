use std::fmt;
use std::ops::{Add, Mul};

use crate::scalar::Scalar;

/// Polynomial in elapsed time `t`: `value(t) = sum_r coeffs[r] * t^r`.
///
/// Trailing zero coefficients are trimmed, so the zero polynomial has an
/// empty coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct TimePolynomial<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> TimePolynomial<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: S) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(c: S, degree: usize) -> Self {
        let mut coeffs = vec![S::zero(); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `t^r`, zero beyond the degree.
    pub fn coeff(&self, r: usize) -> S {
        self.coeffs.get(r).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, t: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * t.clone() + c.clone())
    }

    pub fn scale(&self, k: &S) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * k.clone()).collect())
    }

    /// Antiderivative vanishing at zero.
    pub fn integral(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(S::zero());
        for (r, c) in self.coeffs.iter().enumerate() {
            out.push(c.clone() / S::from_i64(r as i64 + 1));
        }
        Self::new(out)
    }

    /// Polynomial `q(u) = p(u + shift)`.
    pub fn shifted(&self, shift: &S) -> Self {
        // Horner in polynomial arithmetic: p(u + s) = (...(c_d (u+s) + c_{d-1})(u+s) ...)
        let lin = Self::new(vec![shift.clone(), S::one()]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &lin) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TimePolynomial<T> {
        TimePolynomial::new(self.coeffs.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> TimePolynomial<f64> {
        self.map(|c| c.to_f64())
    }
}

impl<S: Scalar> Add for &TimePolynomial<S> {
    type Output = TimePolynomial<S>;

    fn add(self, rhs: Self) -> TimePolynomial<S> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        TimePolynomial::new((0..n).map(|r| self.coeff(r) + rhs.coeff(r)).collect())
    }
}

impl<S: Scalar> Mul for &TimePolynomial<S> {
    type Output = TimePolynomial<S>;

    fn mul(self, rhs: Self) -> TimePolynomial<S> {
        if self.is_zero() || rhs.is_zero() {
            return TimePolynomial::zero();
        }
        let mut out = vec![S::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        TimePolynomial::new(out)
    }
}

impl<S: Scalar> fmt::Display for TimePolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (r, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match r {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})t")?,
                _ => write!(f, "({c})t^{r}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn rp(c: &[i64]) -> TimePolynomial<Rational> {
        TimePolynomial::new(c.iter().map(|&v| Rational::from_i64(v)).collect())
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = rp(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert!(rp(&[0, 0]).is_zero());
    }

    #[test]
    fn integral_and_eval() {
        // d/dt (t + t^2) = 1 + 2t
        let p = rp(&[1, 2]);
        let q = p.integral();
        assert_eq!(q, rp(&[0, 1, 1]));
        assert_eq!(q.eval(&Rational::from_i64(3)), Rational::from_i64(12));
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = rp(&[2, -1, 3]);
        let s = Rational::from_ratio(1, 3);
        let q = p.shifted(&s);
        for x in [-2, 0, 5] {
            let x = Rational::from_i64(x);
            assert_eq!(q.eval(&x), p.eval(&(x.clone() + s.clone())));
        }
    }

    #[test]
    fn product() {
        assert_eq!(&rp(&[1, 1]) * &rp(&[-1, 1]), rp(&[-1, 0, 1]));
    }
}
