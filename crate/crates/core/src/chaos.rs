//! Coefficient engine for the chaos expansion of `(X_{t+t0} - X_{t0})^n`.
//!
//! In the compensated basis,
//!
//! ```text
//! (X_{t+t0} - X_{t0})^n = sum_{theta in I_n} Pi_theta(t) S_theta(t, t0) + C^(n)(t)
//! ```
//!
//! where `S_theta` is the iterated integral against `Y^(theta_1)` innermost
//! through `Y^(theta_j)` outermost, `Pi_theta = (theta_1, .., theta_j, r)! C^(r)`
//! with `r = n - |theta|`, and `C^(k)` is a polynomial in elapsed time whose
//! coefficients only involve the (sigma-adjusted) moments. Neither `Pi` nor
//! `C` depend on `t0` or on the integration variables.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::combinatorics::{
    exact_sum_compositions, factorial, index_set, multinomial, order_cap, partitions, IndexTuple,
};
use crate::error::{Error, Result};
use crate::models::{moments, sigma_adjust, LevyModel, MomentVector};
use crate::poly::TimePolynomial;
use crate::scalar::Scalar;

/// Integrator family an [`Expansion`] is written against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Compensated power jump processes `Y^(i) = X^(i) - m_i t`.
    #[serde(rename = "Y")]
    Y,
    /// Orthogonalized martingales `H^(i) = sum_j a_{i,j} Y^(j)`.
    #[serde(rename = "H")]
    H,
    /// Raw power brackets `[X]^(i)`.
    #[serde(rename = "NONCOMPENSATED")]
    NonCompensated,
    /// Compensated Poisson random measure; coefficients only.
    #[serde(rename = "PRM")]
    Prm,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::Y => "Y",
            Basis::H => "H",
            Basis::NonCompensated => "NONCOMPENSATED",
            Basis::Prm => "PRM",
        };
        f.write_str(s)
    }
}

/// Finite chaos expansion: iterated-integral coefficients plus a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<S> {
    pub order: usize,
    pub basis: Basis,
    /// Moments the coefficients were built from, after any sigma adjustment.
    pub moments: MomentVector<S>,
    pub terms: BTreeMap<IndexTuple, TimePolynomial<S>>,
    pub constant: TimePolynomial<S>,
}

impl<S: Scalar> Expansion<S> {
    pub fn term(&self, parts: &[usize]) -> Option<&TimePolynomial<S>> {
        IndexTuple::new(parts.to_vec())
            .ok()
            .and_then(|t| self.terms.get(&t))
    }

    /// Terms with a nonzero coefficient polynomial.
    pub fn nonzero_terms(&self) -> BTreeMap<IndexTuple, TimePolynomial<S>> {
        self.terms
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn max_part(&self) -> usize {
        self.terms.keys().map(IndexTuple::max_part).max().unwrap_or(0)
    }

    pub fn sigma_adjusted(&self) -> bool {
        self.moments.is_adjusted()
    }

    pub fn to_f64(&self) -> Expansion<f64> {
        Expansion {
            order: self.order,
            basis: self.basis,
            moments: self.moments.to_f64(),
            terms: self
                .terms
                .iter()
                .map(|(k, p)| (k.clone(), p.to_f64()))
                .collect(),
            constant: self.constant.to_f64(),
        }
    }

    /// JSON with a fixed key order and tuples in canonical order.
    pub fn to_json(&self) -> Value {
        let poly = |p: &TimePolynomial<S>| -> Value {
            Value::Array(p.coeffs().iter().map(Scalar::to_json).collect())
        };
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(t, p)| json!({ "tuple": t.parts(), "poly": poly(p) }))
            .collect();
        let mut obj = serde_json::Map::new();
        obj.insert("order".into(), json!(self.order));
        obj.insert("basis".into(), json!(self.basis.to_string()));
        obj.insert("sigma_adjusted".into(), json!(self.sigma_adjusted()));
        obj.insert(
            "moments".into(),
            Value::Array(self.moments.values().iter().map(Scalar::to_json).collect()),
        );
        obj.insert("constant".into(), poly(&self.constant));
        obj.insert("terms".into(), Value::Array(terms));
        Value::Object(obj)
    }

    /// One row per term: `kind,tuple,poly`, tuple parts space-separated and
    /// polynomial coefficients `q0;q1;...`.
    pub fn to_csv(&self) -> String {
        let poly = |p: &TimePolynomial<S>| -> String {
            p.coeffs()
                .iter()
                .map(Scalar::to_text)
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut out = String::from("kind,tuple,poly\n");
        out.push_str(&format!("constant,,{}\n", poly(&self.constant)));
        for (t, p) in &self.terms {
            let tuple = t
                .parts()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!("term,{tuple},{}\n", poly(p)));
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `C^(0..=k)` by the coefficient recursion
/// `q_1^(k) = m_k`, `q_r^(k) = (1/r) sum_{j=1}^{k+1-r} binom(k,j) m_j q_{r-1}^(k-j)`.
pub fn c_poly_table<S: Scalar>(k: usize, mv: &MomentVector<S>) -> Result<Vec<TimePolynomial<S>>> {
    mv.require(k)?;
    // q[kk][r]
    let mut q: Vec<Vec<S>> = Vec::with_capacity(k + 1);
    q.push(vec![S::one()]);
    for kk in 1..=k {
        let mut row = vec![S::zero(); kk + 1];
        row[1] = mv.m(kk).clone();
        for r in 2..=kk {
            let mut acc = S::zero();
            for j in 1..=kk + 1 - r {
                let prev = &q[kk - j];
                if r - 1 < prev.len() {
                    acc = acc
                        + S::from_biguint(&binomial(kk, j)) * mv.m(j).clone() * prev[r - 1].clone();
                }
            }
            row[r] = acc / S::from_i64(r as i64);
        }
        q.push(row);
    }
    Ok(q.into_iter().map(TimePolynomial::new).collect())
}

/// `C^(k)` via the recursion on polynomial coefficients.
pub fn c_poly_recursive<S: Scalar>(k: usize, mv: &MomentVector<S>) -> Result<TimePolynomial<S>> {
    Ok(c_poly_table(k, mv)?.pop().expect("table has k + 1 rows"))
}

/// `C^(k)` as a sum over integer partitions `phi` of `k` with `l` parts:
/// `(1/l!) (phi)! (p_1, .., p_k)! prod m_q t^l`.
pub fn c_poly_closed<S: Scalar>(k: usize, mv: &MomentVector<S>) -> Result<TimePolynomial<S>> {
    if k == 0 {
        return Ok(TimePolynomial::constant(S::one()));
    }
    mv.require(k)?;
    let mut coeffs = vec![S::zero(); k + 1];
    for phi in partitions(k)? {
        let l = phi.len();
        let weight = S::from_biguint(&multinomial(phi.parts()))
            * S::from_biguint(&multinomial(phi.multiplicities()))
            / S::from_biguint(&factorial(l));
        let prod = phi
            .parts()
            .iter()
            .fold(S::one(), |acc, &q| acc * mv.m(q).clone());
        coeffs[l] = coeffs[l].clone() + weight * prod;
    }
    Ok(TimePolynomial::new(coeffs))
}

/// `Pi_theta^(k) = (theta_1, .., theta_j, r)! C^(r)`, `r = k - sum(theta)`.
pub fn pi_coeff<S: Scalar>(
    theta: &IndexTuple,
    k: usize,
    mv: &MomentVector<S>,
) -> Result<TimePolynomial<S>> {
    let table = c_poly_table(k.saturating_sub(theta.sum()), mv)?;
    pi_from_table(theta, k, &table)
}

fn pi_from_table<S: Scalar>(
    theta: &IndexTuple,
    k: usize,
    table: &[TimePolynomial<S>],
) -> Result<TimePolynomial<S>> {
    let used = theta.sum();
    if used > k {
        return Err(Error::TupleExceedsOrder {
            tuple: theta.to_string(),
            order: k,
        });
    }
    let rest = k - used;
    let mut parts = theta.parts().to_vec();
    parts.push(rest);
    Ok(table[rest].scale(&S::from_biguint(&multinomial(&parts))))
}

/// Expansion in the `Y` basis from a moment vector. Unadjusted vectors are
/// sigma-adjusted here; adjusted ones are used as-is.
pub fn expand_with_moments<S: Scalar>(n: usize, mv: &MomentVector<S>) -> Result<Expansion<S>> {
    let cap = order_cap();
    if n > cap {
        return Err(Error::OrderTooLarge { order: n, cap });
    }
    let adjusted = if mv.is_adjusted() {
        mv.clone()
    } else {
        sigma_adjust(mv)?
    };
    if n == 0 {
        return Ok(Expansion {
            order: 0,
            basis: Basis::Y,
            moments: adjusted,
            terms: BTreeMap::new(),
            constant: TimePolynomial::constant(S::one()),
        });
    }
    let table = c_poly_table(n, &adjusted)?;
    let mut terms = BTreeMap::new();
    for theta in index_set(n)? {
        let p = pi_from_table(&theta, n, &table)?;
        terms.insert(theta, p);
    }
    Ok(Expansion {
        order: n,
        basis: Basis::Y,
        moments: adjusted,
        terms,
        constant: table[n].clone(),
    })
}

/// Expansion of `(X_{t+t0} - X_{t0})^n` for `model` in the `Y` basis.
pub fn expand<S: Scalar>(n: usize, model: &LevyModel) -> Result<Expansion<S>> {
    let mv = moments::<S>(model, n.max(2))?;
    expand_with_moments(n, &mv)
}

/// `E[(X_{t+t0} - X_{t0})^n]` as a polynomial in `t`.
pub fn expectation<S: Scalar>(n: usize, model: &LevyModel) -> Result<TimePolynomial<S>> {
    let mv = sigma_adjust(&moments::<S>(model, n.max(2))?)?;
    c_poly_recursive(n, &mv)
}

/// Non-compensated form: tuples with exact sum `n`, coefficients
/// `n! / (i_1! .. i_p!)`, zero constant. Moment-free.
pub fn jamshidian_expand<S: Scalar>(n: usize) -> Result<Expansion<S>> {
    let cap = order_cap();
    if n == 0 || n > cap {
        return Err(Error::OrderTooLarge { order: n, cap });
    }
    let mut terms = BTreeMap::new();
    for p in 1..=n {
        for theta in exact_sum_compositions(n, p) {
            let c = S::from_biguint(&multinomial(theta.parts()));
            terms.insert(theta, TimePolynomial::constant(c));
        }
    }
    Ok(Expansion {
        order: n,
        basis: Basis::NonCompensated,
        moments: MomentVector::zeros(n),
        terms,
        constant: TimePolynomial::zero(),
    })
}

/// Which jump-size variable the first exponent of a descriptor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableOrder {
    /// `exponents[0]` applies to the earliest (innermost) jump.
    FirstIsInnermost,
    /// `exponents[0]` applies to the latest (outermost) jump.
    FirstIsOutermost,
}

/// Integrand of one iterated compensated-Poisson-measure integral:
/// `x_1^{e_1} .. x_j^{e_j} * coefficient(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrmIntegrandDescriptor<S> {
    pub tuple: IndexTuple,
    pub exponents: Vec<usize>,
    pub coefficient: TimePolynomial<S>,
    pub order: VariableOrder,
}

impl<S: Scalar> PrmIntegrandDescriptor<S> {
    /// Same integrand with exponents listed in the other variable order.
    pub fn reoriented(&self, order: VariableOrder) -> Self {
        let mut out = self.clone();
        if order != self.order {
            out.exponents.reverse();
            out.order = order;
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tuple": self.tuple.parts(),
            "exponents": self.exponents,
            "coefficient": self.coefficient.coeffs().iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "variable_order": self.order,
        })
    }
}

/// One descriptor per tuple of `I_n`; coefficients equal the `Y`-basis
/// `Pi` polynomials, since `Y^(i)(t) = int_0^t int x^i N~(ds, dx)`.
///
/// Symmetrized kernels are the average of these over permutations of
/// `(t_k, x_k)` and are left to the consumer.
pub fn prm_integrands<S: Scalar>(
    n: usize,
    model: &LevyModel,
) -> Result<Vec<PrmIntegrandDescriptor<S>>> {
    let exp = expand::<S>(n, model)?;
    Ok(exp
        .terms
        .into_iter()
        .map(|(tuple, coefficient)| PrmIntegrandDescriptor {
            exponents: tuple.parts().to_vec(),
            tuple,
            coefficient,
            order: VariableOrder::FirstIsInnermost,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(p: i64) -> Rational {
        Rational::from_i64(p)
    }

    fn mv(m: &[i64]) -> MomentVector<Rational> {
        MomentVector::compensators(m.iter().map(|&v| r(v)).collect())
    }

    fn tup(p: &[usize]) -> IndexTuple {
        IndexTuple::new(p.to_vec()).unwrap()
    }

    #[test]
    fn small_constants_match_hand_expansion() {
        // m = (m1, m2, m3, m4) = (2, 3, 5, 7)
        let m = mv(&[2, 3, 5, 7]);
        let c2 = c_poly_recursive(2, &m).unwrap();
        assert_eq!(c2.coeffs(), &[r(0), r(3), r(4)]);
        let c3 = c_poly_recursive(3, &m).unwrap();
        assert_eq!(c3.coeffs(), &[r(0), r(5), r(3 * 2 * 3), r(8)]);
        let c4 = c_poly_recursive(4, &m).unwrap();
        assert_eq!(
            c4.coeffs(),
            &[r(0), r(7), r(4 * 2 * 5 + 3 * 9), r(6 * 4 * 3), r(16)]
        );
    }

    #[test]
    fn closed_form_agrees_on_small_orders() {
        let m = mv(&[2, -3, 5, 7, -11, 13]);
        for k in 0..=6 {
            assert_eq!(c_poly_closed(k, &m).unwrap(), c_poly_recursive(k, &m).unwrap());
        }
        assert_eq!(c_poly_closed(0, &m).unwrap().coeffs(), &[r(1)]);
    }

    #[test]
    fn pi_examples() {
        let m = mv(&[2, 3, 5, 7]);
        let p = pi_coeff(&tup(&[1, 1]), 4, &m).unwrap();
        assert_eq!(p, c_poly_recursive(2, &m).unwrap().scale(&r(12)));
        assert_eq!(pi_coeff(&tup(&[4]), 4, &m).unwrap().coeffs(), &[r(1)]);
        assert_eq!(pi_coeff(&tup(&[1]), 2, &m).unwrap().coeffs(), &[r(0), r(4)]);
        let e = pi_coeff(&tup(&[2, 2]), 3, &m).unwrap_err();
        assert_eq!(e.code(), "chaos.tuple_exceeds_order");
    }

    #[test]
    fn expand_order_two() {
        let m = mv(&[2, 3]);
        let e = expand_with_moments(2, &m).unwrap();
        assert_eq!(e.terms.len(), 3);
        assert_eq!(e.term(&[1, 1]).unwrap().coeffs(), &[r(2)]);
        assert_eq!(e.term(&[1]).unwrap().coeffs(), &[r(0), r(4)]);
        assert_eq!(e.term(&[2]).unwrap().coeffs(), &[r(1)]);
        assert_eq!(e.constant.coeffs(), &[r(0), r(3), r(4)]);
    }

    #[test]
    fn expand_brownian_only() {
        let e = expand::<Rational>(2, &LevyModel::brownian(1.0)).unwrap();
        assert!(e.sigma_adjusted());
        assert_eq!(e.term(&[1, 1]).unwrap().coeffs(), &[r(2)]);
        assert!(e.term(&[1]).unwrap().is_zero());
        assert_eq!(e.term(&[2]).unwrap().coeffs(), &[r(1)]);
        assert_eq!(e.constant.coeffs(), &[r(0), r(1)]);
    }

    #[test]
    fn expand_order_one_and_zero() {
        let model = LevyModel::gamma(10.0, 20.0);
        let e = expand::<Rational>(1, &model).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.term(&[1]).unwrap().coeffs(), &[r(1)]);
        assert_eq!(e.constant.coeffs(), &[r(0), Rational::from_ratio(1, 2)]);
        let e0 = expand::<Rational>(0, &model).unwrap();
        assert!(e0.terms.is_empty());
        assert_eq!(e0.constant.coeffs(), &[r(1)]);
    }

    #[test]
    fn expectation_examples() {
        let e = expectation::<Rational>(2, &LevyModel::brownian(1.0)).unwrap();
        assert_eq!(e.coeffs(), &[r(0), r(1)]);
        let model = LevyModel::synthetic(0.0, 0.0, vec![2.0, 5.0]);
        let e = expectation::<Rational>(3, &model).unwrap();
        assert_eq!(e.coeffs(), &[r(0), r(5)]);
        let e = expectation::<Rational>(4, &LevyModel::gamma(10.0, 20.0)).unwrap();
        assert_eq!(e.coeff(1), Rational::from_ratio(60, 160_000));
    }

    #[test]
    fn jamshidian_small() {
        let j2 = jamshidian_expand::<Rational>(2).unwrap();
        assert_eq!(j2.terms.len(), 2);
        assert_eq!(j2.term(&[1, 1]).unwrap().coeffs(), &[r(2)]);
        assert_eq!(j2.term(&[2]).unwrap().coeffs(), &[r(1)]);
        let j3 = jamshidian_expand::<Rational>(3).unwrap();
        let got: Vec<(Vec<usize>, Rational)> = j3
            .terms
            .iter()
            .map(|(k, v)| (k.parts().to_vec(), v.coeff(0)))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![3], r(1)),
                (vec![1, 2], r(3)),
                (vec![2, 1], r(3)),
                (vec![1, 1, 1], r(6)),
            ]
        );
        assert!(j3.constant.is_zero());
    }

    #[test]
    fn prm_descriptors_share_pi() {
        let model = LevyModel::gamma(10.0, 20.0);
        let d = prm_integrands::<Rational>(2, &model).unwrap();
        let e = expand::<Rational>(2, &model).unwrap();
        let d11 = d.iter().find(|x| x.tuple == tup(&[1, 1])).unwrap();
        assert_eq!(d11.exponents, vec![1, 1]);
        assert_eq!(&d11.coefficient, e.term(&[1, 1]).unwrap());
        let d1 = prm_integrands::<Rational>(1, &model).unwrap();
        assert_eq!(d1.len(), 1);
        assert_eq!(d1[0].coefficient.coeffs(), &[r(1)]);
        let d3 = prm_integrands::<Rational>(3, &model).unwrap();
        let d21 = d3.iter().find(|x| x.tuple == tup(&[2, 1])).unwrap();
        let mv3 = sigma_adjust(&moments::<Rational>(&model, 3).unwrap()).unwrap();
        assert_eq!(d21.coefficient, pi_coeff(&tup(&[2, 1]), 3, &mv3).unwrap());
        assert_eq!(d21.exponents, vec![2, 1]);
        let flipped = d21.reoriented(VariableOrder::FirstIsOutermost);
        assert_eq!(flipped.exponents, vec![1, 2]);
    }

    #[test]
    fn json_layout() {
        let e = expand_with_moments(2, &mv(&[2, 3])).unwrap();
        let s = serde_json::to_string(&e.to_json()).unwrap();
        assert!(s.starts_with(
            r#"{"order":2,"basis":"Y","sigma_adjusted":true,"moments":["2","3"],"constant":["0","3","4"],"terms":[{"tuple":[1],"poly":["0","4"]}"#
        ), "{s}");
        let csv = e.to_csv();
        assert!(csv.contains("term,1 1,2\n"));
    }
}
