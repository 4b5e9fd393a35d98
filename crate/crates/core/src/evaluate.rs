//! Pathwise evaluation of iterated integrals and of whole expansions.
//!
//! Exact mode works on a [`JumpPath`]: every level of an iterated integral
//! is a piecewise polynomial in time, drift parts are integrated by
//! antiderivative and jump parts use the inner level's left limit, so the
//! expansion identity becomes an algebraic equality. Grid mode works on a
//! [`GridPath`] with the left-endpoint sum
//! `I^(r)(t_k) = sum_{l<=k} I^(r-1)(t_{l-1}) Delta Z_l`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::chaos::{Basis, Expansion};
use crate::combinatorics::IndexTuple;
use crate::error::{Error, Result};
use crate::models::MomentVector;
use crate::ortho::OrthoTriangular;
use crate::paths::{power_increments, GridPath, JumpPath};
use crate::poly::TimePolynomial;
use crate::scalar::{fmt_f64, Scalar};

/// Integrator `Z = sum_j w_j Y^(j)`, or `sum_j w_j X^(j)` when not
/// compensated.
#[derive(Clone, Debug, PartialEq)]
pub struct Integrator<S> {
    pub weights: Vec<(usize, S)>,
    pub compensated: bool,
}

impl<S: Scalar> Integrator<S> {
    pub fn y(i: usize) -> Self {
        Self {
            weights: vec![(i, S::one())],
            compensated: true,
        }
    }

    pub fn raw(i: usize) -> Self {
        Self {
            weights: vec![(i, S::one())],
            compensated: false,
        }
    }

    /// `H^(i) = sum_{j<=i} a_{i,j} Y^(j)`.
    pub fn h(i: usize, ortho: &OrthoTriangular<S>) -> Self {
        Self {
            weights: (1..=i)
                .map(|j| (j, ortho.a(i, j)))
                .filter(|(_, w)| !w.is_zero())
                .collect(),
            compensated: true,
        }
    }

    fn max_index(&self) -> usize {
        self.weights.iter().map(|(j, _)| *j).max().unwrap_or(0)
    }

    /// `dZ/dt` between jumps on a path with drift `drift`.
    fn drift(&self, drift: &S, mv: &MomentVector<S>) -> S {
        self.weights.iter().fold(S::zero(), |acc, (j, w)| {
            let mut rate = if *j == 1 { drift.clone() } else { S::zero() };
            if self.compensated {
                rate = rate - mv.m(*j).clone();
            }
            acc + w.clone() * rate
        })
    }

    fn jump(&self, x: &S) -> S {
        self.weights
            .iter()
            .fold(S::zero(), |acc, (j, w)| acc + w.clone() * x.powi(*j))
    }
}

/// Integrator family used to read the tuples of an expansion.
#[derive(Clone, Copy, Debug)]
pub enum Integrators<'a, S> {
    Y,
    H(&'a OrthoTriangular<S>),
    Raw,
}

impl<'a, S: Scalar> Integrators<'a, S> {
    /// Family matching `exp.basis`; `H` needs the orthogonalization.
    pub fn for_expansion(exp: &Expansion<S>, ortho: Option<&'a OrthoTriangular<S>>) -> Result<Self> {
        match (exp.basis, ortho) {
            (Basis::Y, _) => Ok(Integrators::Y),
            (Basis::NonCompensated, _) => Ok(Integrators::Raw),
            (Basis::H, Some(o)) => {
                if exp.max_part() > o.order() {
                    return Err(Error::OrderMismatch(format!(
                        "expansion uses H^({}) but the orthogonalization has order {}",
                        exp.max_part(),
                        o.order()
                    )));
                }
                Ok(Integrators::H(o))
            }
            (Basis::H, None) => Err(Error::BasisMismatch(
                "H-basis evaluation needs the orthogonalization coefficients".into(),
            )),
            (Basis::Prm, _) => Err(Error::BasisMismatch(
                "PRM expansions carry coefficients only and are not evaluated".into(),
            )),
        }
    }

    pub fn get(&self, i: usize) -> Integrator<S> {
        match self {
            Integrators::Y => Integrator::y(i),
            Integrators::H(o) => Integrator::h(i, o),
            Integrators::Raw => Integrator::raw(i),
        }
    }

    fn compensated(&self) -> bool {
        !matches!(self, Integrators::Raw)
    }
}

/// Process on `[b_0, inf)` given by `polys[k](u - b_k)` on `[b_k, b_{k+1})`.
/// Values at breakpoints are right-continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolyProcess<S> {
    pub breaks: Vec<S>,
    pub polys: Vec<TimePolynomial<S>>,
}

impl<S: Scalar> PiecewisePolyProcess<S> {
    pub fn constant(breaks: Vec<S>, c: S) -> Self {
        let polys = vec![TimePolynomial::constant(c); breaks.len()];
        Self { breaks, polys }
    }

    fn segment(&self, t: &S) -> usize {
        self.breaks.iter().rposition(|b| b <= t).unwrap_or(0)
    }

    pub fn value_at(&self, t: &S) -> S {
        let k = self.segment(t);
        self.polys[k].eval(&(t.clone() - self.breaks[k].clone()))
    }

    /// Left limit at breakpoint `k >= 1`.
    pub fn left_limit(&self, k: usize) -> S {
        let len = self.breaks[k].clone() - self.breaks[k - 1].clone();
        self.polys[k - 1].eval(&len)
    }

    /// `G(u) = int_{b_0}^u F(v-) dZ_v` where `dZ = rate dt` between
    /// breakpoints and `Z` jumps by `jumps[k]` at `b_k` (`jumps[0]` unused).
    pub fn integrate(&self, rate: &S, jumps: &[S]) -> Self {
        let mut polys = Vec::with_capacity(self.polys.len());
        let mut level = S::zero();
        for k in 0..self.breaks.len() {
            if k > 0 {
                let len = self.breaks[k].clone() - self.breaks[k - 1].clone();
                let prev: &TimePolynomial<S> = &polys[k - 1];
                level = prev.eval(&len) + self.left_limit(k) * jumps[k].clone();
            }
            let drift = self.polys[k].integral().scale(rate);
            polys.push(&drift + &TimePolynomial::constant(level.clone()));
        }
        Self {
            breaks: self.breaks.clone(),
            polys,
        }
    }
}

/// Evaluation window on a jump path.
struct ExactWindow<'p, S> {
    path: &'p JumpPath<S>,
    breaks: Vec<S>,
    sizes: Vec<S>,
}

impl<'p, S: Scalar> ExactWindow<'p, S> {
    fn new(path: &'p JumpPath<S>, t0: &S, t: &S) -> Result<Self> {
        if !(t0 < t) {
            return Err(Error::InvalidWindow(format!("need t0 < t, got t0 = {t0}, t = {t}")));
        }
        if *t > path.horizon || *t0 < S::zero() {
            return Err(Error::InvalidWindow(format!(
                "window ({t0}, {t}] leaves the path horizon [0, {}]",
                path.horizon
            )));
        }
        let mut breaks = vec![t0.clone()];
        let mut sizes = vec![S::zero()];
        for (s, x) in path.jumps_in(t0, t) {
            breaks.push(s.clone());
            sizes.push(x.clone());
        }
        Ok(Self {
            path,
            breaks,
            sizes,
        })
    }

    fn integrate(&self, inner: &PiecewisePolyProcess<S>, z: &Integrator<S>) -> PiecewisePolyProcess<S> {
        let rate = z.drift(&self.path.drift, &self.path.moments);
        let jumps: Vec<S> = self.sizes.iter().map(|x| z.jump(x)).collect();
        inner.integrate(&rate, &jumps)
    }

    fn one(&self) -> PiecewisePolyProcess<S> {
        PiecewisePolyProcess::constant(self.breaks.clone(), S::one())
    }
}

fn check_compensators<S: Scalar>(mv: &MomentVector<S>, order: usize, compensated: bool) -> Result<()> {
    if compensated {
        mv.require(order)?;
    }
    Ok(())
}

/// Iterated integral `S_theta` against `Y` on `(t0, t]`, using the path's
/// compensators. `theta[0]` drives the innermost integral.
pub fn eval_exact<S: Scalar>(path: &JumpPath<S>, theta: &IndexTuple, t0: &S, t: &S) -> Result<S> {
    eval_exact_with(path, theta, t0, t, Integrators::Y)
}

/// [`eval_exact`] against an arbitrary integrator family.
pub fn eval_exact_with<S: Scalar>(
    path: &JumpPath<S>,
    theta: &IndexTuple,
    t0: &S,
    t: &S,
    family: Integrators<'_, S>,
) -> Result<S> {
    let window = ExactWindow::new(path, t0, t)?;
    let mut level = window.one();
    for &i in theta.parts() {
        let z = family.get(i);
        check_compensators(&path.moments, z.max_index(), family.compensated())?;
        level = window.integrate(&level, &z);
    }
    Ok(level.value_at(t))
}

/// Reconstructed value with each term's contribution `Pi_theta S_theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactReconstruction<S> {
    pub value: S,
    pub constant: S,
    pub contributions: BTreeMap<IndexTuple, S>,
}

fn same_compensators<S: Scalar>(exp: &Expansion<S>, path_mv: &MomentVector<S>) -> Result<()> {
    let needed = exp.max_part();
    let ev = exp.moments.values();
    let pv = path_mv.values();
    let agree = (0..needed).all(|i| match (ev.get(i), pv.get(i)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    });
    if !agree {
        return Err(Error::BasisMismatch(
            "expansion moments differ from the path's compensators".into(),
        ));
    }
    Ok(())
}

/// `sum_theta Pi_theta(t - t0) S_theta(t0, t) + C(t - t0)` on a jump path.
pub fn reconstruct_exact<S: Scalar>(
    exp: &Expansion<S>,
    path: &JumpPath<S>,
    t0: &S,
    t: &S,
    ortho: Option<&OrthoTriangular<S>>,
) -> Result<ExactReconstruction<S>> {
    let family = Integrators::for_expansion(exp, ortho)?;
    if family.compensated() && !exp.terms.is_empty() {
        same_compensators(exp, &path.moments)?;
    }
    let window = ExactWindow::new(path, t0, t)?;
    let elapsed = t.clone() - t0.clone();
    let integrators: HashMap<usize, Integrator<S>> = (1..=exp.max_part())
        .map(|i| (i, family.get(i)))
        .collect();

    let mut cache: HashMap<IndexTuple, PiecewisePolyProcess<S>> = HashMap::new();
    let root = window.one();
    let mut contributions = BTreeMap::new();
    let mut value = S::zero();
    for (theta, poly) in &exp.terms {
        let s = level_for(theta, &window, &integrators, &root, &mut cache).value_at(t);
        let c = poly.eval(&elapsed) * s;
        value = value + c.clone();
        contributions.insert(theta.clone(), c);
    }
    let constant = exp.constant.eval(&elapsed);
    Ok(ExactReconstruction {
        value: value + constant.clone(),
        constant,
        contributions,
    })
}

fn level_for<'c, S: Scalar>(
    theta: &IndexTuple,
    window: &ExactWindow<'_, S>,
    integrators: &HashMap<usize, Integrator<S>>,
    root: &PiecewisePolyProcess<S>,
    cache: &'c mut HashMap<IndexTuple, PiecewisePolyProcess<S>>,
) -> &'c PiecewisePolyProcess<S> {
    if !cache.contains_key(theta) {
        let last = *theta.parts().last().expect("tuples are nonempty");
        let level = match theta.parent() {
            Some(parent) => {
                let inner = level_for(&parent, window, integrators, root, cache).clone();
                window.integrate(&inner, &integrators[&last])
            }
            None => window.integrate(root, &integrators[&last]),
        };
        cache.insert(theta.clone(), level);
    }
    &cache[theta]
}

/// `Delta Z_l` for steps after `k0`, from cached power increments.
fn grid_increments(
    z: &Integrator<f64>,
    powers: &HashMap<usize, Vec<f64>>,
    k0: usize,
) -> Vec<f64> {
    let len = powers.values().next().map_or(0, |v| v.len());
    let mut out = vec![0.0; len - k0];
    for (j, w) in &z.weights {
        for (o, p) in out.iter_mut().zip(&powers[j][k0..]) {
            *o += w * p;
        }
    }
    out
}

fn grid_powers(
    path: &GridPath,
    order: usize,
    mv: &MomentVector<f64>,
    compensated: bool,
) -> Result<HashMap<usize, Vec<f64>>> {
    let zero;
    let mv = if compensated {
        mv
    } else {
        zero = MomentVector::zeros(order);
        &zero
    };
    (1..=order)
        .map(|i| Ok((i, power_increments(path, i, mv)?)))
        .collect()
}

/// Left-endpoint series of `S_theta` against `Y` on grid points
/// `t0, t0 + dt, ..`; the first entry is zero.
pub fn eval_grid(
    path: &GridPath,
    theta: &IndexTuple,
    mv: &MomentVector<f64>,
    t0: f64,
) -> Result<Vec<f64>> {
    let k0 = path.step_of(t0)?;
    let powers = grid_powers(path, theta.max_part(), mv, true)?;
    let mut level = vec![1.0; path.steps() - k0 + 1];
    for &i in theta.parts() {
        let dz = grid_increments(&Integrator::y(i), &powers, k0);
        level = integrate_series(&level, &dz);
    }
    Ok(level)
}

fn integrate_series(inner: &[f64], dz: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(inner.len());
    let mut acc = 0.0;
    out.push(acc);
    for (prev, d) in inner.iter().zip(dz) {
        acc += prev * d;
        out.push(acc);
    }
    out
}

/// Reconstructed series on the grid together with per-term sup norms.
#[derive(Clone, Debug, PartialEq)]
pub struct GridReconstruction {
    /// Grid index of `t0`.
    pub k0: usize,
    pub series: Vec<f64>,
    pub term_norms: BTreeMap<IndexTuple, f64>,
}

struct GridContext<'a> {
    exp: &'a Expansion<f64>,
    needed: BTreeSet<IndexTuple>,
    increments: HashMap<usize, Vec<f64>>,
    elapsed: Vec<f64>,
}

impl GridContext<'_> {
    /// Depth-first over the prefix tree below `node`; `series` is `S_node`.
    fn visit(
        &self,
        node: &IndexTuple,
        series: &[f64],
        acc: &mut [f64],
        norms: &mut BTreeMap<IndexTuple, f64>,
    ) {
        if let Some(poly) = self.exp.terms.get(node) {
            let mut sup = 0.0f64;
            for ((a, s), tau) in acc.iter_mut().zip(series).zip(&self.elapsed) {
                let c = poly.eval(tau) * s;
                *a += c;
                sup = sup.max(c.abs());
            }
            norms.insert(node.clone(), sup);
        }
        for i in 1..=self.exp.order.max(1) {
            let mut parts = node.parts().to_vec();
            parts.push(i);
            let child = IndexTuple::new(parts).expect("positive parts");
            if self.needed.contains(&child) {
                let s = integrate_series(series, &self.increments[&i]);
                self.visit(&child, &s, acc, norms);
            }
        }
    }
}

/// `sum_theta Pi_theta(t_k - t0) S_theta(t_k) + C(t_k - t0)` at every grid
/// point from `t0` on. Compensators are the expansion's moments.
///
/// Subtrees of the tuple prefix tree run in parallel; their contributions
/// are added in a fixed order, so the result does not depend on scheduling.
pub fn reconstruct_grid(
    exp: &Expansion<f64>,
    path: &GridPath,
    t0: f64,
    ortho: Option<&OrthoTriangular<f64>>,
) -> Result<GridReconstruction> {
    let family = Integrators::for_expansion(exp, ortho)?;
    let k0 = path.step_of(t0)?;
    let len = path.steps() - k0 + 1;
    let elapsed: Vec<f64> = (0..len).map(|k| k as f64 * path.dt).collect();
    let mut series: Vec<f64> = elapsed.iter().map(|tau| exp.constant.eval(tau)).collect();
    if exp.terms.is_empty() {
        return Ok(GridReconstruction {
            k0,
            series,
            term_norms: BTreeMap::new(),
        });
    }

    let order = exp.max_part();
    let powers = grid_powers(path, order, &exp.moments, family.compensated())?;
    let increments: HashMap<usize, Vec<f64>> = (1..=order)
        .map(|i| (i, grid_increments(&family.get(i), &powers, k0)))
        .collect();
    let mut needed = BTreeSet::new();
    for theta in exp.terms.keys() {
        let mut t = Some(theta.clone());
        while let Some(cur) = t {
            t = cur.parent();
            needed.insert(cur);
        }
    }
    let ctx = GridContext {
        exp,
        needed,
        increments,
        elapsed,
    };
    let ones = vec![1.0; len];
    let roots: Vec<usize> = (1..=order)
        .filter(|i| ctx.needed.contains(&IndexTuple::new(vec![*i]).expect("positive")))
        .collect();
    let parts: Vec<(Vec<f64>, BTreeMap<IndexTuple, f64>)> = roots
        .par_iter()
        .map(|&i| {
            let mut acc = vec![0.0; len];
            let mut norms = BTreeMap::new();
            let root = IndexTuple::new(vec![i]).expect("positive");
            let s = integrate_series(&ones, &ctx.increments[&i]);
            ctx.visit(&root, &s, &mut acc, &mut norms);
            (acc, norms)
        })
        .collect();
    let mut term_norms = BTreeMap::new();
    for (acc, norms) in parts {
        for (s, a) in series.iter_mut().zip(&acc) {
            *s += a;
        }
        term_norms.extend(norms);
    }
    Ok(GridReconstruction {
        k0,
        series,
        term_norms,
    })
}

/// `(X_{t_k} - X_{t0})^n` at every grid point from `t0` on.
pub fn direct_power_grid(path: &GridPath, n: usize, t0: f64) -> Result<Vec<f64>> {
    let k0 = path.step_of(t0)?;
    let x = path.cumulative();
    Ok(x[k0..].iter().map(|v| (v - x[k0]).powi(n as i32)).collect())
}

/// Rows `step,t,direct,reconstructed,diff`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffSeries {
    pub k0: usize,
    pub times: Vec<f64>,
    pub direct: Vec<f64>,
    pub reconstructed: Vec<f64>,
}

impl DiffSeries {
    pub fn diff(&self) -> impl Iterator<Item = f64> + '_ {
        self.reconstructed.iter().zip(&self.direct).map(|(r, d)| r - d)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,direct,reconstructed,diff\n");
        for (k, ((t, d), r)) in self
            .times
            .iter()
            .zip(&self.direct)
            .zip(&self.reconstructed)
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.k0 + k,
                fmt_f64(*t),
                fmt_f64(*d),
                fmt_f64(*r),
                fmt_f64(r - d)
            );
        }
        out
    }
}

/// Steps at which each series moves by more than `threshold` times the
/// direct series' sup norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpAlignment {
    pub threshold: f64,
    pub direct_jumps: usize,
    pub reconstructed_jumps: usize,
    /// Steps where one series jumps and the other moves by less than half
    /// the threshold.
    pub mismatched_steps: Vec<usize>,
    pub aligned: bool,
}

/// Default relative jump threshold for [`jump_alignment`].
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.01;

pub fn jump_alignment(series: &DiffSeries, threshold: f64) -> JumpAlignment {
    let scale = series.direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let level = threshold * scale;
    let moves = |s: &[f64]| -> Vec<f64> { s.windows(2).map(|w| (w[1] - w[0]).abs()).collect() };
    let d = moves(&series.direct);
    let r = moves(&series.reconstructed);
    let mut mismatched = Vec::new();
    for (k, (a, b)) in d.iter().zip(&r).enumerate() {
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if *big > level && *small <= level / 2.0 {
            mismatched.push(series.k0 + k + 1);
        }
    }
    JumpAlignment {
        threshold,
        direct_jumps: d.iter().filter(|v| **v > level).count(),
        reconstructed_jumps: r.iter().filter(|v| **v > level).count(),
        aligned: mismatched.is_empty(),
        mismatched_steps: mismatched,
    }
}

/// Outcome of comparing a reconstruction with the direct power.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub substrate: &'static str,
    pub basis: String,
    pub exact_arithmetic: bool,
    pub t0: f64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub max_abs_diff: f64,
    pub terminal_diff: f64,
    /// `terminal_diff` in the scalar backend's own notation.
    pub terminal_diff_exact: String,
    /// `|terminal_diff|` over the sum of the absolute term contributions.
    pub relative_terminal_diff: f64,
    pub direct_terminal: f64,
    pub reconstructed_terminal: f64,
    pub term_norms: Vec<TermNorm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpAlignment>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermNorm {
    pub tuple: IndexTuple,
    pub norm: f64,
}

impl VerificationReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if scale > 0.0 {
        diff.abs() / scale
    } else {
        f64::INFINITY
    }
}

/// Exact-substrate check of `exp` against `(X_t - X_{t0})^n`.
pub fn verify_exact<S: Scalar>(
    exp: &Expansion<S>,
    path: &JumpPath<S>,
    t0: &S,
    t: &S,
    ortho: Option<&OrthoTriangular<S>>,
) -> Result<VerificationReport> {
    let rec = reconstruct_exact(exp, path, t0, t, ortho)?;
    let direct = path.increment(t0, t).powi(exp.order);
    let diff = rec.value.clone() - direct.clone();
    let scale = rec
        .contributions
        .values()
        .fold(rec.constant.abs().to_f64(), |acc, c| acc + c.abs().to_f64())
        + direct.abs().to_f64();
    let terminal = diff.to_f64();
    Ok(VerificationReport {
        n: exp.order,
        substrate: "exact",
        basis: exp.basis.to_string(),
        exact_arithmetic: S::EXACT,
        t0: t0.to_f64(),
        t: t.to_f64(),
        dt: None,
        seed: None,
        model: None,
        max_abs_diff: terminal.abs(),
        terminal_diff: terminal,
        terminal_diff_exact: diff.to_text(),
        relative_terminal_diff: relative(terminal, scale),
        direct_terminal: direct.to_f64(),
        reconstructed_terminal: rec.value.to_f64(),
        term_norms: rec
            .contributions
            .iter()
            .map(|(k, v)| TermNorm {
                tuple: k.clone(),
                norm: v.abs().to_f64(),
            })
            .collect(),
        jumps: None,
    })
}

/// Grid check of `exp` against `(X_{t_k} - X_{t0})^n` over the whole path.
pub fn verify_grid(
    exp: &Expansion<f64>,
    path: &GridPath,
    t0: f64,
    ortho: Option<&OrthoTriangular<f64>>,
    jump_threshold: f64,
) -> Result<(VerificationReport, DiffSeries)> {
    let rec = reconstruct_grid(exp, path, t0, ortho)?;
    let direct = direct_power_grid(path, exp.order, t0)?;
    let series = DiffSeries {
        k0: rec.k0,
        times: (rec.k0..=path.steps()).map(|k| path.time(k)).collect(),
        direct,
        reconstructed: rec.series,
    };
    let max_abs_diff = series.diff().fold(0.0f64, |m, d| m.max(d.abs()));
    let terminal = series.diff().last().unwrap_or(0.0);
    let scale: f64 = rec.term_norms.values().sum::<f64>()
        + series.direct.last().map_or(0.0, |d| d.abs());
    let report = VerificationReport {
        n: exp.order,
        substrate: "grid",
        basis: exp.basis.to_string(),
        exact_arithmetic: false,
        t0,
        t: path.horizon() - t0,
        dt: Some(path.dt),
        seed: path.seed,
        model: path.model.clone(),
        max_abs_diff,
        terminal_diff: terminal,
        terminal_diff_exact: fmt_f64(terminal),
        relative_terminal_diff: relative(terminal, scale),
        direct_terminal: *series.direct.last().unwrap_or(&0.0),
        reconstructed_terminal: *series.reconstructed.last().unwrap_or(&0.0),
        term_norms: rec
            .term_norms
            .iter()
            .map(|(k, v)| TermNorm {
                tuple: k.clone(),
                norm: *v,
            })
            .collect(),
        jumps: Some(jump_alignment(&series, jump_threshold)),
    };
    Ok((report, series))
}

/// `reconstruct(m) * reconstruct(n)` against `reconstruct(m + n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductReport {
    pub m: usize,
    pub n: usize,
    pub substrate: &'static str,
    pub max_abs_diff: f64,
    pub diff_exact: String,
}

/// Exact-substrate product check; the expansions are built from the path's
/// compensators.
pub fn product_check_exact<S: Scalar>(
    path: &JumpPath<S>,
    m: usize,
    n: usize,
    t0: &S,
    t: &S,
) -> Result<ProductReport> {
    let value = |k: usize| -> Result<S> {
        let exp = crate::chaos::expand_with_moments(k, &path.moments)?;
        Ok(reconstruct_exact(&exp, path, t0, t, None)?.value)
    };
    let diff = value(m)? * value(n)? - value(m + n)?;
    Ok(ProductReport {
        m,
        n,
        substrate: "exact",
        max_abs_diff: diff.abs().to_f64(),
        diff_exact: diff.to_text(),
    })
}

/// Grid product check with compensators `mv` (adjusted).
pub fn product_check_grid(
    path: &GridPath,
    mv: &MomentVector<f64>,
    m: usize,
    n: usize,
    t0: f64,
) -> Result<ProductReport> {
    let series = |k: usize| -> Result<Vec<f64>> {
        let exp = crate::chaos::expand_with_moments(k, mv)?;
        Ok(reconstruct_grid(&exp, path, t0, None)?.series)
    };
    let (a, b, c) = (series(m)?, series(n)?, series(m + n)?);
    let max_abs_diff = a
        .iter()
        .zip(&b)
        .zip(&c)
        .fold(0.0f64, |acc, ((x, y), z)| acc.max((x * y - z).abs()));
    Ok(ProductReport {
        m,
        n,
        substrate: "grid",
        max_abs_diff,
        diff_exact: fmt_f64(max_abs_diff),
    })
}
