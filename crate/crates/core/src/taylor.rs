//! Smooth functionals of increments, `F = g(X_{t_1}, X_{t_2} - X_{t_1}, ...)`,
//! expanded by multivariate Taylor series into powers of the increments.
//!
//! Each power `(X_{t_k} - X_{t_{k-1}})^e` is replaced by its chaos
//! reconstruction on its own interval and the factors are multiplied
//! pathwise; cross-interval products are never assembled into one
//! expansion.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::chaos::expand_with_moments;
use crate::combinatorics::{factorial, order_cap};
use crate::error::{Error, Result};
use crate::evaluate::{reconstruct_exact, reconstruct_grid};
use crate::models::MomentVector;
use crate::paths::{GridPath, JumpPath};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionalKind {
    /// `scale * exp(sum_k w_k x_k)`.
    Exp { scale: Rational, weights: Vec<Rational> },
    /// `sum c * prod_k x_k^{e_k}`.
    Poly { terms: Vec<(Vec<usize>, Rational)> },
    /// Forward contract value `S_0 e^{x} e^{r (T - t)}` on one increment.
    Forward {
        s0: f64,
        rate: f64,
        maturity: f64,
        time: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    /// Truncation order `D`: monomials of total degree at most `D`.
    pub order: usize,
    /// Interval ends `t_1 < ... < t_n`; interval `k` is `(t_{k-1}, t_k]`, `t_0 = 0`.
    pub grid: Vec<Rational>,
    /// Caller's assertion that the Taylor coefficients obey a growth bound
    /// making the series converge; recorded, not checked.
    pub growth_bound_asserted: bool,
}

/// One monomial `coeff * prod_k x_k^{exponents[k]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorTerm<S> {
    pub exponents: Vec<usize>,
    pub coeff: S,
}

fn bad(m: impl Into<String>) -> Error {
    Error::InvalidFunctional(m.into())
}

fn rational(v: &Value, what: &str) -> Result<Rational> {
    Rational::from_json(v).ok_or_else(|| bad(format!("{what} is not a number")))
}

fn real(v: Option<&Value>, what: &str) -> Result<f64> {
    v.and_then(f64::from_json)
        .ok_or_else(|| bad(format!("missing or invalid {what}")))
}

impl FunctionalSpec {
    pub fn arity(&self) -> usize {
        self.grid.len()
    }

    /// `{kind, params, order, grid}` with `kind` one of `exp`, `poly`,
    /// `forward`. Numbers may be JSON numbers or `"p/q"` strings.
    pub fn from_json(v: &Value) -> Result<Self> {
        let order = v
            .get("order")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing order"))? as usize;
        let grid = v
            .get("grid")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing grid"))?
            .iter()
            .map(|t| rational(t, "grid time"))
            .collect::<Result<Vec<_>>>()?;
        let empty = Value::Object(Default::default());
        let params = v.get("params").unwrap_or(&empty);
        let kind = match v.get("kind").and_then(Value::as_str) {
            Some("exp") => {
                let scale = match params.get("scale") {
                    Some(s) => rational(s, "scale")?,
                    None => Rational::from_i64(1),
                };
                let weights = match params.get("weights").and_then(Value::as_array) {
                    Some(ws) => ws
                        .iter()
                        .map(|w| rational(w, "weight"))
                        .collect::<Result<Vec<_>>>()?,
                    None => vec![Rational::from_i64(1); grid.len()],
                };
                FunctionalKind::Exp { scale, weights }
            }
            Some("poly") => {
                let terms = params
                    .get("terms")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("poly needs params.terms"))?
                    .iter()
                    .map(|t| {
                        let e = t
                            .get("exponents")
                            .and_then(Value::as_array)
                            .ok_or_else(|| bad("term needs exponents"))?
                            .iter()
                            .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("bad exponent")))
                            .collect::<Result<Vec<_>>>()?;
                        let c = rational(t.get("coeff").ok_or_else(|| bad("term needs coeff"))?, "coeff")?;
                        Ok((e, c))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FunctionalKind::Poly { terms }
            }
            Some("forward") => FunctionalKind::Forward {
                s0: real(params.get("s0"), "s0")?,
                rate: real(params.get("rate"), "rate")?,
                maturity: real(params.get("maturity"), "maturity")?,
                time: real(params.get("time"), "time")?,
            },
            other => return Err(bad(format!("unknown functional kind {other:?}"))),
        };
        let spec = Self {
            kind,
            order,
            grid,
            growth_bound_asserted: v
                .get("growth_bound_asserted")
                .and_then(Value::as_bool)
                .unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let cap = order_cap();
        if self.order > cap {
            return Err(Error::OrderTooLarge {
                order: self.order,
                cap,
            });
        }
        if self.grid.is_empty() {
            return Err(bad("grid must list at least one time"));
        }
        let zero = Rational::from_i64(0);
        let mut prev = &zero;
        for t in &self.grid {
            if t <= prev {
                return Err(bad(format!(
                    "intervals overlap or are empty: grid must increase strictly from 0, got {t} after {prev}"
                )));
            }
            prev = t;
        }
        let n = self.arity();
        match &self.kind {
            FunctionalKind::Exp { weights, .. } if weights.len() != n => {
                Err(bad(format!("{} weights for {n} increments", weights.len())))
            }
            FunctionalKind::Poly { terms } if terms.iter().any(|(e, _)| e.len() != n) => {
                Err(bad(format!("poly exponents must have length {n}")))
            }
            FunctionalKind::Forward { .. } if n != 1 => {
                Err(bad("the forward contract takes a single increment"))
            }
            _ => Ok(()),
        }
    }

    /// Mixed partial `d^e g / dx^e` at the origin.
    pub fn partial<S: Scalar>(&self, e: &[usize]) -> S {
        match &self.kind {
            FunctionalKind::Exp { scale, weights } => weights
                .iter()
                .zip(e)
                .fold(S::from_rational(scale), |acc, (w, &k)| {
                    acc * S::from_rational(w).powi(k)
                }),
            FunctionalKind::Poly { terms } => terms
                .iter()
                .filter(|(ex, _)| ex.as_slice() == e)
                .fold(S::zero(), |acc, (_, c)| acc + S::from_rational(c))
                * factorial_product::<S>(e),
            FunctionalKind::Forward {
                s0,
                rate,
                maturity,
                time,
            } => S::from_f64(s0 * (rate * (maturity - time)).exp()).unwrap_or_else(S::zero),
        }
    }

    /// `g` at the increments `x`.
    pub fn direct<S: Scalar>(&self, x: &[S]) -> S {
        match &self.kind {
            FunctionalKind::Poly { terms } => terms.iter().fold(S::zero(), |acc, (e, c)| {
                acc + e
                    .iter()
                    .zip(x)
                    .fold(S::from_rational(c), |m, (&k, xi)| m * xi.powi(k))
            }),
            FunctionalKind::Exp { scale, weights } => {
                let arg: f64 = weights.iter().zip(x).map(|(w, xi)| w.to_f64() * xi.to_f64()).sum();
                S::from_f64(scale.to_f64() * arg.exp()).unwrap_or_else(S::zero)
            }
            FunctionalKind::Forward {
                s0,
                rate,
                maturity,
                time,
            } => S::from_f64(s0 * (rate * (maturity - time)).exp() * x[0].to_f64().exp())
                .unwrap_or_else(S::zero),
        }
    }
}

fn factorial_product<S: Scalar>(e: &[usize]) -> S {
    e.iter()
        .fold(S::one(), |acc, &k| acc * S::from_biguint(&factorial(k)))
}

/// Exponent vectors of length `n` with total degree at most `d`, by degree
/// then lexicographically.
pub fn multi_indices(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(slot: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(slot + 1, n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=d {
        let mut level = Vec::new();
        rec(0, n, total, &mut Vec::with_capacity(n), &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

/// Nonzero Taylor terms of total degree at most `spec.order`. The
/// coefficient of `prod x_k^{e_k}` is `d^e g(0) / prod e_k!`, which
/// collects the `l! / prod e_k!` ordered index tuples of the symmetric
/// `l`-th derivative.
pub fn taylor_terms<S: Scalar>(spec: &FunctionalSpec) -> Result<Vec<TaylorTerm<S>>> {
    spec.validate()?;
    Ok(multi_indices(spec.arity(), spec.order)
        .into_iter()
        .filter_map(|e| {
            let c = spec.partial::<S>(&e) / factorial_product::<S>(&e);
            (!c.is_zero()).then_some(TaylorTerm { exponents: e, coeff: c })
        })
        .collect())
}

/// Truncated functional against the direct value on one path.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalValue<S> {
    pub increments: Vec<S>,
    pub approx: S,
    pub direct: S,
}

impl<S: Scalar> FunctionalValue<S> {
    pub fn error(&self) -> S {
        self.approx.clone() - self.direct.clone()
    }
}

fn combine<S: Scalar>(
    terms: &[TaylorTerm<S>],
    powers: &[Vec<S>],
    increments: Vec<S>,
    spec: &FunctionalSpec,
) -> FunctionalValue<S> {
    let approx = terms.iter().fold(S::zero(), |acc, t| {
        acc + t
            .exponents
            .iter()
            .enumerate()
            .fold(t.coeff.clone(), |m, (k, &e)| m * powers[k][e].clone())
    });
    let direct = spec.direct(&increments);
    FunctionalValue {
        increments,
        approx,
        direct,
    }
}

/// Evaluates on a jump path; every power of every increment comes from its
/// chaos reconstruction with the path's compensators.
pub fn eval_functional_exact<S: Scalar>(
    spec: &FunctionalSpec,
    path: &JumpPath<S>,
) -> Result<FunctionalValue<S>> {
    let terms = taylor_terms::<S>(spec)?;
    let ends: Vec<S> = spec.grid.iter().map(S::from_rational).collect();
    let mut powers = Vec::with_capacity(ends.len());
    let mut increments = Vec::with_capacity(ends.len());
    let mut prev = S::zero();
    for t in &ends {
        let mut row = vec![S::one()];
        for m in 1..=spec.order {
            let exp = expand_with_moments(m, &path.moments)?;
            row.push(reconstruct_exact(&exp, path, &prev, t, None)?.value);
        }
        powers.push(row);
        increments.push(path.increment(&prev, t));
        prev = t.clone();
    }
    Ok(combine(&terms, &powers, increments, spec))
}

/// Evaluates on a grid path with adjusted compensators `mv`; every grid
/// time must be on the path's grid.
pub fn eval_functional_grid(
    spec: &FunctionalSpec,
    path: &GridPath,
    mv: &MomentVector<f64>,
) -> Result<FunctionalValue<f64>> {
    let terms = taylor_terms::<f64>(spec)?;
    let x = path.cumulative();
    let mut powers = Vec::with_capacity(spec.arity());
    let mut increments = Vec::with_capacity(spec.arity());
    let mut prev = 0.0;
    for t in spec.grid.iter().map(|t| t.to_f64()) {
        let (k0, k1) = (path.step_of(prev)?, path.step_of(t)?);
        let mut row = vec![1.0];
        for m in 1..=spec.order {
            let exp = expand_with_moments(m, mv)?;
            row.push(reconstruct_grid(&exp, path, prev, None)?.series[k1 - k0]);
        }
        powers.push(row);
        increments.push(x[k1] - x[k0]);
        prev = t;
    }
    Ok(combine(&terms, &powers, increments, spec))
}

/// Truncation error statistics over a path batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchReport {
    pub order: usize,
    pub paths: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub std_error: f64,
}

fn summarize(order: usize, errors: &[f64]) -> BatchReport {
    let n = errors.len() as f64;
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let mean = abs.iter().sum::<f64>() / n;
    let var = if errors.len() > 1 {
        abs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    BatchReport {
        order,
        paths: errors.len(),
        mean_abs_error: mean,
        max_abs_error: abs.iter().copied().fold(0.0, f64::max),
        std_error: (var / n).sqrt(),
    }
}

/// Exact-substrate batch; paths run in parallel, errors are reduced in
/// path order.
pub fn eval_batch_exact(spec: &FunctionalSpec, paths: &[JumpPath<f64>]) -> Result<BatchReport> {
    let errors = paths
        .par_iter()
        .map(|p| eval_functional_exact(spec, p).map(|v| v.error()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(spec.order, &errors))
}

/// Grid batch with adjusted compensators `mv`.
pub fn eval_batch_grid(
    spec: &FunctionalSpec,
    paths: &[GridPath],
    mv: &MomentVector<f64>,
) -> Result<BatchReport> {
    let errors = paths
        .par_iter()
        .map(|p| eval_functional_grid(spec, p, mv).map(|v| v.error()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(spec.order, &errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{moments, sigma_adjust, LevyModel};
    use crate::paths::make_jump_path;
    use serde_json::json;

    fn r(p: i64, q: i64) -> Rational {
        Rational::from_ratio(p, q)
    }

    fn spec(v: Value) -> FunctionalSpec {
        FunctionalSpec::from_json(&v).unwrap()
    }

    #[test]
    fn exp_coefficients() {
        let s = spec(json!({"kind": "exp", "order": 5, "grid": [1]}));
        let t = taylor_terms::<Rational>(&s).unwrap();
        assert_eq!(t.len(), 6);
        for term in t {
            let e = term.exponents[0];
            assert_eq!(term.coeff, r(1, 1) / Rational::from_biguint(&factorial(e)));
        }
    }

    #[test]
    fn cross_product_single_term() {
        let s = spec(json!({
            "kind": "poly",
            "params": {"terms": [{"exponents": [1, 1], "coeff": 1}]},
            "order": 4,
            "grid": [0.5, 1]
        }));
        let t = taylor_terms::<Rational>(&s).unwrap();
        assert_eq!(t, vec![TaylorTerm { exponents: vec![1, 1], coeff: r(1, 1) }]);
    }

    #[test]
    fn forward_coefficients() {
        let s = spec(json!({
            "kind": "forward",
            "params": {"s0": 100, "rate": 0.05, "maturity": 2, "time": 1},
            "order": 4,
            "grid": [1]
        }));
        let t = taylor_terms::<f64>(&s).unwrap();
        let base = 100.0 * 0.05f64.exp();
        assert!((t[3].coeff - base / 6.0).abs() < 1e-12);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        // C(d + n, n)
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn rejects_bad_grids() {
        for grid in [json!([]), json!([0]), json!([0.5, 0.5]), json!([1, 0.5])] {
            let v = json!({"kind": "exp", "order": 2, "grid": grid, "params": {"weights": []}});
            assert!(FunctionalSpec::from_json(&v).is_err());
        }
        let v = json!({"kind": "exp", "order": 2, "grid": [1, 2]});
        assert!(FunctionalSpec::from_json(&v).is_ok());
        let v = json!({"kind": "exp", "order": 2, "grid": [1, 2], "params": {"weights": [1]}});
        assert_eq!(
            FunctionalSpec::from_json(&v).unwrap_err().code(),
            "taylor.invalid_functional"
        );
    }

    fn fixture() -> JumpPath<Rational> {
        let mv = MomentVector::compensators(vec![
            r(1, 2), r(1, 3), r(-1, 5), r(2, 7), r(1, 11), r(1, 13), r(-1, 17), r(1, 19),
        ]);
        let jumps = vec![(r(1, 5), r(1, 2)), (r(2, 5), r(-1, 4)), (r(7, 10), r(3, 10))];
        make_jump_path(r(1, 1), r(1, 3), jumps, mv).unwrap()
    }

    #[test]
    fn polynomial_recovered_exactly() {
        let s = spec(json!({
            "kind": "poly",
            "params": {"terms": [
                {"exponents": [2, 0], "coeff": "3/2"},
                {"exponents": [1, 1], "coeff": -1},
                {"exponents": [0, 3], "coeff": 2}
            ]},
            "order": 3,
            "grid": ["1/2", 1]
        }));
        let v = eval_functional_exact(&s, &fixture()).unwrap();
        assert_eq!(v.approx, v.direct);
    }

    #[test]
    fn cross_product_is_product_of_reconstructions() {
        let s = spec(json!({
            "kind": "poly",
            "params": {"terms": [{"exponents": [1, 1], "coeff": 1}]},
            "order": 2,
            "grid": ["1/2", 1]
        }));
        let p = fixture();
        let v = eval_functional_exact(&s, &p).unwrap();
        assert_eq!(v.approx, p.increment(&r(0, 1), &r(1, 2)) * p.increment(&r(1, 2), &r(1, 1)));
    }

    #[test]
    fn exp_error_shrinks_with_order() {
        let p = fixture().to_f64();
        let mut last = f64::INFINITY;
        for d in [2, 4, 6] {
            let s = spec(json!({"kind": "exp", "order": d, "grid": [1]}));
            let e = eval_functional_exact(&s, &p).unwrap().error().abs();
            assert!(e < last, "D={d}: {e} !< {last}");
            last = e;
        }
    }

    #[test]
    fn grid_square_matches_reconstruction() {
        let model = LevyModel::gamma(10.0, 20.0);
        let mv = sigma_adjust(&moments::<f64>(&model, 2).unwrap()).unwrap();
        let path = crate::paths::simulate_grid(&model, 1.0, 1e-3, 0.0, 4).unwrap();
        let s = spec(json!({
            "kind": "poly",
            "params": {"terms": [{"exponents": [2], "coeff": 1}]},
            "order": 2,
            "grid": [1]
        }));
        let v = eval_functional_grid(&s, &path, &mv).unwrap();
        let exp = expand_with_moments(2, &mv).unwrap();
        let rec = reconstruct_grid(&exp, &path, 0.0, None).unwrap();
        assert_eq!(v.approx, *rec.series.last().unwrap());
        assert!((v.approx - v.direct).abs() < 1e-2);
    }
}
