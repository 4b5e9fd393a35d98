//! Path substrates: simulated grid paths and exact finite-jump paths.
//!
//! Grid randomness comes from a ChaCha8 stream keyed by `(seed, path_index)`,
//! so a batch is reproducible regardless of scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::models::{JumpLaw, JumpPart, LevyModel, MomentVector};
use crate::scalar::{fmt_f64, Scalar};

/// Relative tolerance when snapping a time onto a grid.
const GRID_SNAP: f64 = 1e-7;

/// Increments of `X` on the grid `start + l * dt`, `l = 0..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    /// Time of the first grid point.
    pub start: f64,
    /// Origin of the increment being expanded.
    pub t0: f64,
    pub dt: f64,
    /// `dx[l]` is the increment over `(t_l, t_{l+1}]`.
    pub dx: Vec<f64>,
    pub seed: Option<u64>,
    pub path_index: u64,
    /// Model spec string, for provenance.
    pub model: Option<String>,
}

impl GridPath {
    /// Deterministic path from given increments, starting at time zero.
    pub fn from_increments(dt: f64, t0: f64, dx: Vec<f64>) -> Result<Self> {
        let path = Self {
            start: 0.0,
            t0,
            dt,
            dx,
            seed: None,
            path_index: 0,
            model: None,
        };
        path.validate()?;
        Ok(path)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite increment".into()));
        }
        self.step_of(self.t0)?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.dx.len()
    }

    pub fn time(&self, step: usize) -> f64 {
        self.start + step as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    /// Grid index of `t`, or an error when `t` is off the grid.
    pub fn step_of(&self, t: f64) -> Result<usize> {
        let off = || Error::OffGrid {
            t0: t,
            start: self.start,
            dt: self.dt,
        };
        let x = (t - self.start) / self.dt;
        let k = x.round();
        if k < 0.0 || (x - k).abs() > GRID_SNAP * x.abs().max(1.0) || k as usize > self.steps() {
            return Err(off());
        }
        Ok(k as usize)
    }

    /// `X_{t_k} - X_{start}` for every `k`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dx.len() + 1);
        x.push(0.0);
        let mut acc = 0.0;
        for d in &self.dx {
            acc += d;
            x.push(acc);
        }
        x
    }

    /// Same path on the grid `t0 + l * factor * dt`: increments before `t0`
    /// are dropped and the rest summed in blocks of `factor`. A trailing
    /// partial block is discarded.
    pub fn coarsen(&self, factor: usize) -> Result<GridPath> {
        if factor == 0 {
            return Err(Error::InvalidGrid("coarsening factor must be >= 1".into()));
        }
        let k0 = self.step_of(self.t0)?;
        let dx = self.dx[k0..]
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(GridPath {
            start: self.t0,
            t0: self.t0,
            dt: self.dt * factor as f64,
            dx,
            seed: self.seed,
            path_index: self.path_index,
            model: self.model.clone(),
        })
    }

    /// `step,t,dX,X` with one row per grid point; row 0 has `dX = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,dX,X\n");
        let x = self.cumulative();
        let _ = writeln!(out, "0,{},0,0", fmt_f64(self.time(0)));
        for (l, d) in self.dx.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                l + 1,
                fmt_f64(self.time(l + 1)),
                fmt_f64(*d),
                fmt_f64(x[l + 1])
            );
        }
        out
    }
}

fn rng_for(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

fn sample_law(law: &JumpLaw, rng: &mut ChaCha8Rng) -> f64 {
    match *law {
        JumpLaw::TwoPoint {
            low, p_low, high, ..
        } => {
            if rng.random::<f64>() < p_low {
                low
            } else {
                high
            }
        }
        JumpLaw::ExponentialSigned { rate, p_pos } => {
            let e: f64 = Exp::new(rate).expect("validated rate").sample(rng);
            if rng.random::<f64>() < p_pos {
                e
            } else {
                -e
            }
        }
        JumpLaw::Deterministic { value } => value,
    }
}

/// Path `path_index` of the batch keyed by `seed`, covering `[0, t0 + horizon]`.
pub fn simulate_grid_indexed(
    model: &LevyModel,
    horizon: f64,
    dt: f64,
    t0: f64,
    seed: u64,
    path_index: u64,
) -> Result<GridPath> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("dt must be > 0, got {dt}")));
    }
    if !(horizon >= dt) {
        return Err(Error::InvalidGrid(format!(
            "horizon {horizon} is shorter than one step {dt}"
        )));
    }
    if !(t0 >= 0.0) {
        return Err(Error::InvalidGrid(format!("t0 must be >= 0, got {t0}")));
    }
    if !model.is_simulable() {
        return Err(Error::NotSimulable(model.to_string()));
    }
    let k0 = t0 / dt;
    if (k0 - k0.round()).abs() > GRID_SNAP * k0.max(1.0) {
        return Err(Error::OffGrid { t0, start: 0.0, dt });
    }
    let total = ((t0 + horizon) / dt).round() as usize;

    let mut rng = rng_for(seed, path_index);
    let drift = model.drift() * dt;
    let normal = (model.sigma > 0.0)
        .then(|| Normal::new(0.0, model.sigma * dt.sqrt()).expect("validated sigma"));
    let mut dx = Vec::with_capacity(total);
    match &model.jump_part {
        JumpPart::None => {
            for _ in 0..total {
                let w = normal.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                dx.push(drift + w);
            }
        }
        JumpPart::Gamma { shape, rate } => {
            let g = Gamma::new(shape * dt, 1.0 / rate).expect("validated gamma");
            for _ in 0..total {
                let w = normal.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                dx.push(drift + w + g.sample(&mut rng));
            }
        }
        JumpPart::CompoundPoisson { intensity, law } => {
            let pois = Poisson::new(intensity * dt).expect("validated intensity");
            for _ in 0..total {
                let w = normal.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                let count = pois.sample(&mut rng) as u64;
                let jumps: f64 = (0..count).map(|_| sample_law(law, &mut rng)).sum();
                dx.push(drift + w + jumps);
            }
        }
        JumpPart::SyntheticMoments { .. } => unreachable!("checked by is_simulable"),
    }
    Ok(GridPath {
        start: 0.0,
        t0,
        dt,
        dx,
        seed: Some(seed),
        path_index,
        model: Some(model.to_string()),
    })
}

/// First path of the batch keyed by `seed`.
pub fn simulate_grid(model: &LevyModel, horizon: f64, dt: f64, t0: f64, seed: u64) -> Result<GridPath> {
    simulate_grid_indexed(model, horizon, dt, t0, seed, 0)
}

/// `count` independent paths, simulated in parallel, returned in index order.
pub fn simulate_batch(
    model: &LevyModel,
    horizon: f64,
    dt: f64,
    t0: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<GridPath>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_grid_indexed(model, horizon, dt, t0, seed, i))
        .collect()
}

/// `Delta Y^(i)_l = (dX_l)^i - m_i dt`. The Brownian quadratic variation
/// sits in `(dX)^2`, so the compensators must be the adjusted moments.
pub fn power_increments(path: &GridPath, i: usize, mv: &MomentVector<f64>) -> Result<Vec<f64>> {
    if !mv.is_adjusted() {
        return Err(Error::NotAdjusted);
    }
    mv.require(i)?;
    let comp = mv.m(i) * path.dt;
    Ok(path.dx.iter().map(|d| f64::powi(*d, i as i32) - comp).collect())
}

/// Finite-jump path with linear drift on `[0, horizon]`, carrying the
/// compensators its `Y` integrators use.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpPath<S> {
    pub horizon: S,
    /// `dX = drift dt` between jumps.
    pub drift: S,
    /// `(time, size)`, times strictly increasing in `(0, horizon]`.
    pub jumps: Vec<(S, S)>,
    pub moments: MomentVector<S>,
}

/// Builds a validated [`JumpPath`]; jumps may be given in any order.
pub fn make_jump_path<S: Scalar>(
    horizon: S,
    drift: S,
    mut jumps: Vec<(S, S)>,
    moments: MomentVector<S>,
) -> Result<JumpPath<S>> {
    let bad = |m: String| Err(Error::InvalidJumpPath(m));
    if !(horizon > S::zero()) {
        return bad(format!("horizon must be > 0, got {horizon}"));
    }
    jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable times"));
    for w in jumps.windows(2) {
        if w[0].0 == w[1].0 {
            return bad(format!("duplicate jump time {}", w[0].0));
        }
    }
    for (s, x) in &jumps {
        if !(*s > S::zero() && *s <= horizon) {
            return bad(format!("jump time {s} outside (0, {horizon}]"));
        }
        if x.is_zero() {
            return bad(format!("zero jump size at time {s}"));
        }
    }
    Ok(JumpPath {
        horizon,
        drift,
        jumps,
        moments,
    })
}

/// Jump sizes for [`random_jump_path`]: multiples of `1/denom` in
/// `[low, high]`, zero excluded, so rational paths stay small.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeLaw {
    pub low: f64,
    pub high: f64,
    pub denom: i64,
}

impl Default for SizeLaw {
    fn default() -> Self {
        Self {
            low: -1.0,
            high: 1.0,
            denom: 1000,
        }
    }
}

/// Time resolution of [`random_jump_path`].
const TIME_DENOM: i64 = 1 << 20;

/// `count` jumps at distinct uniform times in `(0, horizon]` with sizes from
/// `law`. Deterministic in `seed`.
pub fn random_jump_path<S: Scalar>(
    count: usize,
    horizon: S,
    law: SizeLaw,
    drift: S,
    moments: MomentVector<S>,
    seed: u64,
) -> Result<JumpPath<S>> {
    let lo = (law.low * law.denom as f64).ceil() as i64;
    let hi = (law.high * law.denom as f64).floor() as i64;
    if law.denom <= 0 || lo > hi || (lo == 0 && hi == 0) {
        return Err(Error::InvalidJumpPath(format!("empty size law {law:?}")));
    }
    if count as i64 > TIME_DENOM {
        return Err(Error::InvalidJumpPath(format!("too many jumps: {count}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ticks: Vec<i64> = Vec::with_capacity(count);
    while ticks.len() < count {
        let k = rng.random_range(1..=TIME_DENOM);
        if !ticks.contains(&k) {
            ticks.push(k);
        }
    }
    let mut jumps = Vec::with_capacity(count);
    for k in ticks {
        let mut v = 0;
        while v == 0 {
            v = rng.random_range(lo..=hi);
        }
        jumps.push((
            S::from_ratio(k, TIME_DENOM) * horizon.clone(),
            S::from_ratio(v, law.denom),
        ));
    }
    make_jump_path(horizon, drift, jumps, moments)
}

/// Random fixture: `count` jumps as in [`random_jump_path`], a drift in
/// `[-1, 1]` and `order` compensators in `[-2, 2]`, all multiples of `1/1000`.
/// Deterministic in `seed`.
pub fn random_fixture<S: Scalar>(count: usize, horizon: S, order: usize, seed: u64) -> Result<JumpPath<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let drift = S::from_ratio(rng.random_range(-1000..=1000), 1000);
    let moments = (0..order)
        .map(|_| S::from_ratio(rng.random_range(-2000..=2000), 1000))
        .collect();
    random_jump_path(
        count,
        horizon,
        SizeLaw::default(),
        drift,
        MomentVector::compensators(moments),
        seed,
    )
}

impl<S: Scalar> JumpPath<S> {
    /// `X_t - X_0`.
    pub fn value_at(&self, t: &S) -> S {
        self.jumps
            .iter()
            .take_while(|(s, _)| s <= t)
            .fold(self.drift.clone() * t.clone(), |acc, (_, x)| acc + x.clone())
    }

    /// `X_t - X_{t0}`.
    pub fn increment(&self, t0: &S, t: &S) -> S {
        self.value_at(t) - self.value_at(t0)
    }

    /// Jumps in `(t0, t]`.
    pub fn jumps_in<'a>(&'a self, t0: &'a S, t: &'a S) -> impl Iterator<Item = &'a (S, S)> + 'a {
        self.jumps.iter().filter(move |(s, _)| s > t0 && s <= t)
    }

    pub fn to_f64(&self) -> JumpPath<f64> {
        JumpPath {
            horizon: self.horizon.to_f64(),
            drift: self.drift.to_f64(),
            jumps: self
                .jumps
                .iter()
                .map(|(s, x)| (s.to_f64(), x.to_f64()))
                .collect(),
            moments: self.moments.to_f64(),
        }
    }

    pub fn to_json(&self) -> Value {
        let jumps: Vec<Value> = self
            .jumps
            .iter()
            .map(|(s, x)| json!({ "t": s.to_json(), "x": x.to_json() }))
            .collect();
        let mut obj = serde_json::Map::new();
        obj.insert("horizon".into(), self.horizon.to_json());
        obj.insert("drift".into(), self.drift.to_json());
        obj.insert("jumps".into(), Value::Array(jumps));
        obj.insert(
            "moments".into(),
            Value::Array(self.moments.values().iter().map(Scalar::to_json).collect()),
        );
        Value::Object(obj)
    }

    /// Parses the layout of [`Self::to_json`]. The moments are taken as
    /// compensators, used as-is.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidJumpPath(m.to_string());
        let num = |v: Option<&Value>, what: &str| -> Result<S> {
            v.and_then(S::from_json)
                .ok_or_else(|| bad(&format!("missing or invalid {what}")))
        };
        let horizon = num(v.get("horizon"), "horizon")?;
        let drift = match v.get("drift") {
            None => S::zero(),
            d => num(d, "drift")?,
        };
        let jumps = v
            .get("jumps")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing jumps array"))?
            .iter()
            .map(|j| Ok((num(j.get("t"), "jump time")?, num(j.get("x"), "jump size")?)))
            .collect::<Result<Vec<_>>>()?;
        let moments = v
            .get("moments")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing moments array"))?
            .iter()
            .map(|m| S::from_json(m).ok_or_else(|| bad("invalid moment")))
            .collect::<Result<Vec<_>>>()?;
        make_jump_path(horizon, drift, jumps, MomentVector::compensators(moments))
    }
}

impl JumpPath<f64> {
    /// Grid increments as jumps at the right end of each step, no drift.
    /// Zero increments are skipped.
    pub fn from_grid(path: &GridPath, moments: MomentVector<f64>) -> Result<Self> {
        if path.start < 0.0 {
            return Err(Error::InvalidJumpPath("grid starts before time zero".into()));
        }
        let jumps = path
            .dx
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != 0.0)
            .map(|(l, d)| (path.time(l + 1), *d))
            .collect();
        make_jump_path(path.horizon(), 0.0, jumps, moments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::moments;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::from_ratio(p, q)
    }

    #[test]
    fn drift_only_grid() {
        let model = LevyModel::with_jumps(0.0, 0.7, JumpPart::None);
        let p = simulate_grid(&model, 1.0, 0.1, 0.0, 3).unwrap();
        assert_eq!(p.steps(), 10);
        assert!(p.dx.iter().all(|d| (d - 0.07).abs() < 1e-15));
    }

    #[test]
    fn determinism_and_streams() {
        let model = LevyModel::gamma(10.0, 20.0);
        let a = simulate_grid(&model, 1.0, 1e-2, 0.0, 11).unwrap();
        let b = simulate_grid(&model, 1.0, 1e-2, 0.0, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_grid_indexed(&model, 1.0, 1e-2, 0.0, 11, 1).unwrap();
        assert_ne!(a.dx, c.dx);
        let batch = simulate_batch(&model, 1.0, 1e-2, 0.0, 11, 3).unwrap();
        assert_eq!(batch[0], a);
        assert_eq!(batch[1], c);
    }

    #[test]
    fn gamma_mean_rate() {
        let model = LevyModel::gamma(10.0, 20.0);
        let p = simulate_grid(&model, 100.0, 1e-4, 0.0, 5).unwrap();
        let n = p.steps() as f64;
        let rates: Vec<f64> = p.dx.iter().map(|d| d / p.dt).collect();
        let mean = rates.iter().sum::<f64>() / n;
        let var = rates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn brownian_quadratic_variation() {
        let model = LevyModel::brownian(1.0);
        let mv = crate::models::sigma_adjust(&moments::<f64>(&model, 2).unwrap()).unwrap();
        let p = simulate_grid(&model, 1.0, 1e-4, 0.0, 9).unwrap();
        let qv: f64 = p.dx.iter().map(|d| d * d).sum();
        // sd of the sum is sqrt(2 dt) ~ 0.014
        assert!((qv - 1.0).abs() < 0.06, "{qv}");
        let y2 = power_increments(&p, 2, &mv).unwrap();
        assert!((y2.iter().sum::<f64>() - (qv - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn power_increment_rules() {
        let p = GridPath::from_increments(0.5, 0.0, vec![0.0, 0.0]).unwrap();
        let mv = MomentVector::compensators(vec![1.0, 2.0, 3.0]);
        assert_eq!(power_increments(&p, 3, &mv).unwrap(), vec![-1.5, -1.5]);
        let p = GridPath::from_increments(0.5, 0.0, vec![2.0]).unwrap();
        assert_eq!(power_increments(&p, 1, &mv).unwrap(), vec![1.5]);
        let raw = MomentVector::new(vec![1.0, 2.0], 0.0);
        assert_eq!(power_increments(&p, 1, &raw).unwrap_err(), Error::NotAdjusted);
    }

    #[test]
    fn grid_alignment() {
        let model = LevyModel::gamma(10.0, 20.0);
        let p = simulate_grid(&model, 1.0, 1e-4, 0.0099, 1).unwrap();
        assert_eq!(p.step_of(0.0099).unwrap(), 99);
        assert_eq!(p.steps(), 10099);
        let e = simulate_grid(&model, 1.0, 1e-2, 0.0099, 1).unwrap_err();
        assert_eq!(e.code(), "paths.off_grid");
        assert!(simulate_grid(&model, 1.0, 0.0, 0.0, 1).is_err());
        let synth = LevyModel::synthetic(0.0, 0.0, vec![1.0]);
        assert_eq!(
            simulate_grid(&synth, 1.0, 0.1, 0.0, 1).unwrap_err().code(),
            "paths.not_simulable"
        );
    }

    #[test]
    fn coarsening_sums_blocks_from_t0() {
        let p = GridPath::from_increments(0.25, 0.25, vec![9.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let c = p.coarsen(2).unwrap();
        assert_eq!(c.dx, vec![3.0, 7.0]);
        assert_eq!(c.start, 0.25);
        assert_eq!(c.dt, 0.5);
        assert_eq!(c.step_of(0.25).unwrap(), 0);
    }

    #[test]
    fn csv_layout() {
        let p = GridPath::from_increments(0.5, 0.0, vec![1.0, -0.25]).unwrap();
        assert_eq!(p.to_csv(), "step,t,dX,X\n0,0,0,0\n1,0.5,1,1\n2,1,-0.25,0.75\n");
    }

    #[test]
    fn jump_path_rules() {
        let zero = MomentVector::<Rational>::zeros(3);
        let p = make_jump_path(r(1, 1), r(0, 1), vec![], zero.clone()).unwrap();
        assert_eq!(p.value_at(&r(1, 1)), r(0, 1));
        let p = make_jump_path(r(1, 1), r(0, 1), vec![(r(3, 10), r(2, 1))], zero.clone()).unwrap();
        assert_eq!(p.value_at(&r(1, 1)), r(2, 1));
        assert_eq!(p.value_at(&r(3, 10)), r(2, 1));
        assert_eq!(p.value_at(&r(1, 10)), r(0, 1));
        let dup = vec![(r(1, 2), r(1, 1)), (r(1, 2), r(-1, 1))];
        assert!(make_jump_path(r(1, 1), r(0, 1), dup, zero.clone()).is_err());
        assert!(make_jump_path(r(1, 1), r(0, 1), vec![(r(0, 1), r(1, 1))], zero.clone()).is_err());
        assert!(make_jump_path(r(1, 1), r(0, 1), vec![(r(1, 2), r(0, 1))], zero).is_err());
    }

    #[test]
    fn random_paths_are_deterministic() {
        let mv = MomentVector::<Rational>::zeros(2);
        let a = random_jump_path(5, r(1, 1), SizeLaw::default(), r(0, 1), mv.clone(), 7).unwrap();
        let b = random_jump_path(5, r(1, 1), SizeLaw::default(), r(0, 1), mv, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.jumps.len(), 5);
        assert!(a.jumps.iter().all(|(_, x)| *x != r(0, 1)));
    }

    #[test]
    fn json_round_trip() {
        let mv = MomentVector::compensators(vec![r(1, 3), r(-2, 5)]);
        let p = random_jump_path(3, r(2, 1), SizeLaw::default(), r(1, 7), mv, 1).unwrap();
        let back = JumpPath::<Rational>::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn grid_as_jump_path() {
        let g = GridPath::from_increments(0.5, 0.0, vec![1.0, 0.0, -2.0]).unwrap();
        let j = JumpPath::from_grid(&g, MomentVector::zeros(1)).unwrap();
        assert_eq!(j.jumps, vec![(0.5, 1.0), (1.5, -2.0)]);
        assert_eq!(j.horizon, 1.5);
    }
}
