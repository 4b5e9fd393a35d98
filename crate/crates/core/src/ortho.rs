//! Orthogonalized martingales `H^(i) = sum_{j<=i} a_{i,j} Y^(j)`.
//!
//! The `a` rows are the coefficients of the monic polynomials
//! `p_i(x) = sum_j a_{i,j} x^{j-1}` orthogonal under
//! `d eta(x) = sigma^2 d delta_0(x) + x^2 nu(dx)`, built by Gram-Schmidt on
//! the Hankel moment matrix `(mu_{u+v})`. `b = A^{-1}` rewrites `Y` in terms
//! of `H`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::chaos::{Basis, Expansion};
use crate::combinatorics::{float_ortho_cap, IndexTuple};
use crate::error::{Error, Result};
use crate::models::MomentVector;
use crate::poly::TimePolynomial;
use crate::scalar::Scalar;

/// Condition-number threshold on the diagonally scaled Hankel matrix above
/// which a float orthogonalization is refused.
pub const HANKEL_CONDITION_LIMIT: f64 = 1e12;

/// Moments `mu_0..mu_{2N-2}` of `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaMoments<S> {
    pub mu: Vec<S>,
}

impl<S: Scalar> EtaMoments<S> {
    /// Largest `N` these moments support.
    pub fn max_order(&self) -> usize {
        self.mu.len().div_ceil(2)
    }

    fn hankel(&self, u: usize, v: usize) -> &S {
        &self.mu[u + v]
    }

    /// `<p, q>_eta` for coefficient vectors in the monomial basis.
    pub fn inner(&self, p: &[S], q: &[S]) -> S {
        let mut acc = S::zero();
        for (u, pu) in p.iter().enumerate() {
            if pu.is_zero() {
                continue;
            }
            for (v, qv) in q.iter().enumerate() {
                acc = acc + pu.clone() * qv.clone() * self.hankel(u, v).clone();
            }
        }
        acc
    }
}

/// `mu_r = sigma^2 [r = 0] + m_{r+2}` for `r = 0..=2N-2`.
///
/// For an adjusted vector `m_2` already carries `sigma^2`, so it is not
/// added again.
pub fn eta_moments<S: Scalar>(mv: &MomentVector<S>, n: usize) -> Result<EtaMoments<S>> {
    if n == 0 {
        return Err(Error::OrderMismatch("orthogonalization order must be >= 1".into()));
    }
    mv.require(2 * n)?;
    let mut mu: Vec<S> = (0..=2 * n - 2).map(|r| mv.m(r + 2).clone()).collect();
    if !mv.is_adjusted() {
        mu[0] = mu[0].clone() + mv.sigma2().clone();
    }
    Ok(EtaMoments { mu })
}

/// Unit-lower-triangular `a` and `b`, stored as rows: `a[i-1][j-1] = a_{i,j}`
/// for `j <= i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoTriangular<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<Vec<S>>,
    pub eta: EtaMoments<S>,
}

fn tri_get<S: Scalar>(rows: &[Vec<S>], i: usize, j: usize) -> S {
    if j > i || j == 0 {
        return S::zero();
    }
    rows[i - 1][j - 1].clone()
}

impl<S: Scalar> OrthoTriangular<S> {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// `a_{i,j}`, 1-based; zero above the diagonal.
    pub fn a(&self, i: usize, j: usize) -> S {
        tri_get(&self.a, i, j)
    }

    /// `b_{n,k}`, 1-based; zero above the diagonal.
    pub fn b(&self, n: usize, k: usize) -> S {
        tri_get(&self.b, n, k)
    }

    /// Largest elementwise deviation of `A B` from the identity.
    pub fn identity_residual(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for i in 1..=n {
            for j in 1..=i {
                let mut acc = S::zero();
                for l in j..=i {
                    acc = acc + self.a(i, l) * self.b(l, j);
                }
                let target = if i == j { S::one() } else { S::zero() };
                worst = worst.max((acc - target).abs().to_f64());
            }
        }
        worst
    }

    /// `max_{n != m} |<p_n, p_m>| / (||p_n|| ||p_m||)`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.order();
        let norms: Vec<f64> = self
            .a
            .iter()
            .map(|p| self.eta.inner(p, p).to_f64().abs().sqrt())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                let ip = self.eta.inner(&self.a[i], &self.a[j]).to_f64().abs();
                worst = worst.max(ip / (norms[i] * norms[j]));
            }
        }
        worst
    }

    pub fn to_f64(&self) -> OrthoTriangular<f64> {
        let conv = |rows: &Vec<Vec<S>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect()
        };
        OrthoTriangular {
            a: conv(&self.a),
            b: conv(&self.b),
            eta: EtaMoments {
                mu: self.eta.mu.iter().map(Scalar::to_f64).collect(),
            },
        }
    }

    /// Lower-triangular rows, row-major, with the `eta` moments echoed.
    pub fn to_json(&self) -> Value {
        let rows = |m: &Vec<Vec<S>>| -> Value {
            Value::Array(
                m.iter()
                    .map(|r| Value::Array(r.iter().map(Scalar::to_json).collect()))
                    .collect(),
            )
        };
        let mut obj = serde_json::Map::new();
        obj.insert("order".into(), json!(self.order()));
        obj.insert(
            "eta_moments".into(),
            Value::Array(self.eta.mu.iter().map(Scalar::to_json).collect()),
        );
        obj.insert("a".into(), rows(&self.a));
        obj.insert("b".into(), rows(&self.b));
        Value::Object(obj)
    }
}

/// Condition number of the Hankel matrix of order `n` after symmetric
/// diagonal scaling. Infinite when the matrix is not positive definite.
pub fn scaled_hankel_condition(mu: &[f64], n: usize) -> f64 {
    let diag: Vec<f64> = (0..n).map(|i| mu[2 * i]).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return f64::INFINITY;
    }
    let h = DMatrix::from_fn(n, n, |i, j| mu[i + j] / (diag[i] * diag[j]).sqrt());
    let eig = h.symmetric_eigen().eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return f64::INFINITY;
    }
    hi / lo
}

/// Monic orthogonal polynomials `p_1..p_N` as `a` rows.
///
/// Exact backends use one elimination pass and fail only on a vanishing
/// norm; the float backend reorthogonalizes once and refuses Hankel
/// matrices whose scaled condition number exceeds
/// [`HANKEL_CONDITION_LIMIT`].
pub fn gram_schmidt<S: Scalar>(eta: &EtaMoments<S>, n: usize) -> Result<Vec<Vec<S>>> {
    if n == 0 {
        return Err(Error::OrderMismatch("orthogonalization order must be >= 1".into()));
    }
    if !S::EXACT {
        let cap = float_ortho_cap();
        if n > cap {
            return Err(Error::OrderTooLarge { order: n, cap });
        }
    }
    if eta.max_order() < n {
        return Err(Error::InsufficientMoments {
            needed: 2 * n,
            available: eta.mu.len() + 1,
        });
    }
    if !S::EXACT {
        let mu: Vec<f64> = eta.mu.iter().map(Scalar::to_f64).collect();
        if scaled_hankel_condition(&mu, n) > HANKEL_CONDITION_LIMIT {
            let supported = (1..n)
                .rev()
                .find(|&k| scaled_hankel_condition(&mu, k) <= HANKEL_CONDITION_LIMIT)
                .unwrap_or(0);
            return Err(Error::DegenerateMeasure {
                requested: n,
                supported,
            });
        }
    }

    let passes = if S::EXACT { 1 } else { 2 };
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut norms: Vec<S> = Vec::with_capacity(n);
    for i in 1..=n {
        let mut p = vec![S::zero(); i];
        p[i - 1] = S::one();
        for _ in 0..passes {
            for (q, nq) in rows.iter().zip(&norms) {
                let c = eta.inner(&p, q) / nq.clone();
                for (pk, qk) in p.iter_mut().zip(q) {
                    *pk = pk.clone() - c.clone() * qk.clone();
                }
            }
        }
        // keep the leading coefficient exactly one
        p[i - 1] = S::one();
        let norm = eta.inner(&p, &p);
        if !(norm > S::zero()) {
            return Err(Error::DegenerateMeasure {
                requested: n,
                supported: i - 1,
            });
        }
        rows.push(p);
        norms.push(norm);
    }
    Ok(rows)
}

/// `b = A^{-1}` by `b_{n,k} = -sum_{l=k}^{n-1} a_{n,l} b_{l,k}`.
pub fn invert_to_b<S: Scalar>(a: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = a.len();
    let mut b: Vec<Vec<S>> = Vec::with_capacity(n);
    for i in 1..=n {
        let mut row = vec![S::zero(); i];
        row[i - 1] = S::one();
        for k in 1..i {
            let mut acc = S::zero();
            for l in k..i {
                acc = acc + tri_get(a, i, l) * b[l - 1][k - 1].clone();
            }
            row[k - 1] = -acc;
        }
        b.push(row);
    }
    b
}

/// `b` as signed sums over strictly decreasing chains
/// `n = c_0 > c_1 > ... > c_r = k` of `(-1)^r prod a_{c_{s-1}, c_s}`.
///
/// Exponential in `N`; kept as a reference for small orders.
pub fn b_by_chains<S: Scalar>(a: &[Vec<S>]) -> Vec<Vec<S>> {
    fn walk<S: Scalar>(a: &[Vec<S>], from: usize, to: usize, sign: bool, acc: S, out: &mut S) {
        if from == to {
            *out = out.clone() + if sign { -acc } else { acc };
            return;
        }
        for next in to..from {
            let w = tri_get(a, from, next);
            if !w.is_zero() {
                walk(a, next, to, !sign, acc.clone() * w, out);
            }
        }
    }
    let n = a.len();
    (1..=n)
        .map(|i| {
            (1..=i)
                .map(|k| {
                    let mut v = S::zero();
                    walk(a, i, k, false, S::one(), &mut v);
                    v
                })
                .collect()
        })
        .collect()
}

/// Full orthogonalization of order `n` from a moment vector with at least
/// `2n` moments.
pub fn orthogonalize<S: Scalar>(mv: &MomentVector<S>, n: usize) -> Result<OrthoTriangular<S>> {
    let eta = eta_moments(mv, n)?;
    let a = gram_schmidt(&eta, n)?;
    let b = invert_to_b(&a);
    Ok(OrthoTriangular { a, b, eta })
}

/// Same-length tuples `kappa` with `kappa_p` in `range(theta_p)`, each with
/// the product weight `prod_p weight(theta_p, kappa_p)`.
fn substitute<S: Scalar>(
    theta: &IndexTuple,
    weight: impl Fn(usize, usize) -> S,
    range: impl Fn(usize) -> (usize, usize),
) -> Vec<(IndexTuple, S)> {
    let mut out: Vec<(Vec<usize>, S)> = vec![(Vec::new(), S::one())];
    for &p in theta.parts() {
        let (lo, hi) = range(p);
        let mut next = Vec::new();
        for (prefix, w) in &out {
            for q in lo..=hi {
                let f = weight(p, q);
                if f.is_zero() {
                    continue;
                }
                let mut t = prefix.clone();
                t.push(q);
                next.push((t, w.clone() * f));
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|(t, w)| (IndexTuple::new(t).expect("parts are positive"), w))
        .collect()
}

fn check_order<S: Scalar>(exp: &Expansion<S>, ortho: &OrthoTriangular<S>) -> Result<()> {
    if exp.max_part() > ortho.order() {
        return Err(Error::OrderMismatch(format!(
            "expansion uses index {} but the orthogonalization has order {}",
            exp.max_part(),
            ortho.order()
        )));
    }
    Ok(())
}

fn accumulate<S: Scalar>(
    exp: &Expansion<S>,
    basis: Basis,
    rewrite: impl Fn(&IndexTuple) -> Vec<(IndexTuple, S)>,
) -> Expansion<S> {
    let mut terms: BTreeMap<IndexTuple, TimePolynomial<S>> = BTreeMap::new();
    for (theta, poly) in &exp.terms {
        for (kappa, w) in rewrite(theta) {
            let add = poly.scale(&w);
            let slot = terms.entry(kappa).or_insert_with(TimePolynomial::zero);
            *slot = &*slot + &add;
        }
    }
    Expansion {
        order: exp.order,
        basis,
        moments: exp.moments.clone(),
        terms,
        constant: exp.constant.clone(),
    }
}

/// Rewrites a `Y`-basis expansion against `H` using
/// `Y^(i) = sum_{k<=i} b_{i,k} H^(k)` in every integrator slot.
pub fn to_h_basis<S: Scalar>(exp: &Expansion<S>, ortho: &OrthoTriangular<S>) -> Result<Expansion<S>> {
    if exp.basis != Basis::Y {
        return Err(Error::BasisMismatch(format!(
            "to_h_basis expects a Y expansion, got {}",
            exp.basis
        )));
    }
    check_order(exp, ortho)?;
    Ok(accumulate(exp, Basis::H, |theta| {
        substitute(theta, |p, q| ortho.b(p, q), |p| (1, p))
    }))
}

/// Inverse of [`to_h_basis`] via `H^(i) = sum_{j<=i} a_{i,j} Y^(j)`.
pub fn to_y_basis<S: Scalar>(exp: &Expansion<S>, ortho: &OrthoTriangular<S>) -> Result<Expansion<S>> {
    if exp.basis != Basis::H {
        return Err(Error::BasisMismatch(format!(
            "to_y_basis expects an H expansion, got {}",
            exp.basis
        )));
    }
    check_order(exp, ortho)?;
    Ok(accumulate(exp, Basis::Y, |kappa| {
        substitute(kappa, |p, q| ortho.a(p, q), |p| (1, p))
    }))
}
