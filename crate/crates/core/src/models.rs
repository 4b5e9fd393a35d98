//! Levy process catalog and the moment sequences every coefficient formula
//! consumes.
//!
//! Gamma jumps use shape `a` and rate `b`, i.e. the Levy measure
//! `nu(dx) = a x^{-1} e^{-b x} dx` on `x > 0`. The Levy-Khintchine drift is
//! never stored: `mean_rate` (`E[X_t] = m_1 t`) is the primitive.
//!
//! Models are assumed to have exponential moments near zero. The catalog
//! satisfies this by construction; [`JumpPart::SyntheticMoments`] is taken
//! as given and not checked.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    TwoPoint {
        low: f64,
        p_low: f64,
        high: f64,
        p_high: f64,
    },
    /// Jump `+E` with probability `p_pos`, `-E` otherwise, `E ~ Exp(rate)`.
    ExponentialSigned { rate: f64, p_pos: f64 },
    Deterministic { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpPart {
    None,
    Gamma { shape: f64, rate: f64 },
    CompoundPoisson { intensity: f64, law: JumpLaw },
    /// Explicit `m_2, ..., m_N`.
    SyntheticMoments { moments: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    /// Brownian volatility; the variance rate is `sigma^2`.
    pub sigma: f64,
    /// `m_1`, with `E[X_t] = m_1 t`.
    pub mean_rate: f64,
    pub jump_part: JumpPart,
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        match *self {
            JumpLaw::TwoPoint {
                low,
                p_low,
                high,
                p_high,
            } => {
                if !(0.0..=1.0).contains(&p_low) || !(0.0..=1.0).contains(&p_high) {
                    return bad("two-point probabilities must lie in [0, 1]".into());
                }
                if (p_low + p_high - 1.0).abs() > 1e-12 {
                    return bad(format!("probabilities sum to {}", p_low + p_high));
                }
                if (p_low > 0.0 && low == 0.0) || (p_high > 0.0 && high == 0.0) {
                    return bad("jump sizes must be nonzero".into());
                }
                if !low.is_finite() || !high.is_finite() {
                    return bad("jump sizes must be finite".into());
                }
            }
            JumpLaw::ExponentialSigned { rate, p_pos } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
                if !(0.0..=1.0).contains(&p_pos) {
                    return bad("sign probability must lie in [0, 1]".into());
                }
            }
            JumpLaw::Deterministic { value } => {
                if value == 0.0 || !value.is_finite() {
                    return bad("deterministic jump must be finite and nonzero".into());
                }
            }
        }
        Ok(())
    }

    /// `E[J^i]`.
    pub fn raw_moment<S: Scalar>(&self, i: usize) -> Result<S> {
        let conv = |v: f64| S::from_f64(v).ok_or_else(|| Error::MomentUndefined(format!("{v}")));
        match *self {
            JumpLaw::TwoPoint {
                low,
                p_low,
                high,
                p_high,
            } => Ok(conv(p_low)? * conv(low)?.powi(i) + conv(p_high)? * conv(high)?.powi(i)),
            JumpLaw::ExponentialSigned { rate, p_pos } => {
                // E[E^i] = i! / rate^i
                let base = S::from_biguint(&factorial(i)) / conv(rate)?.powi(i);
                let p = conv(p_pos)?;
                let sign = if i % 2 == 0 {
                    S::one()
                } else {
                    p.clone() - (S::one() - p.clone())
                };
                Ok(base * sign)
            }
            JumpLaw::Deterministic { value } => Ok(conv(value)?.powi(i)),
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment::<f64>(1).unwrap_or(f64::NAN)
    }
}

impl JumpPart {
    /// Mean of the jump component per unit time, when defined by the part.
    fn natural_mean(&self) -> f64 {
        match self {
            JumpPart::None | JumpPart::SyntheticMoments { .. } => 0.0,
            JumpPart::Gamma { shape, rate } => shape / rate,
            JumpPart::CompoundPoisson { intensity, law } => intensity * law.mean(),
        }
    }
}

impl LevyModel {
    pub fn brownian(sigma: f64) -> Self {
        Self {
            sigma,
            mean_rate: 0.0,
            jump_part: JumpPart::None,
        }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        Self::with_jumps(0.0, 0.0, JumpPart::Gamma { shape, rate })
    }

    pub fn compound_poisson(intensity: f64, law: JumpLaw) -> Self {
        Self::with_jumps(0.0, 0.0, JumpPart::CompoundPoisson { intensity, law })
    }

    /// `drift` is added on top of the mean contributed by the jump part.
    pub fn with_jumps(sigma: f64, drift: f64, jump_part: JumpPart) -> Self {
        let mean_rate = drift + jump_part.natural_mean();
        Self {
            sigma,
            mean_rate,
            jump_part,
        }
    }

    pub fn synthetic(sigma: f64, mean_rate: f64, moments: Vec<f64>) -> Self {
        Self {
            sigma,
            mean_rate,
            jump_part: JumpPart::SyntheticMoments { moments },
        }
    }

    /// Deterministic drift between jumps: `mean_rate` minus the jumps' mean.
    pub fn drift(&self) -> f64 {
        self.mean_rate - self.jump_part.natural_mean()
    }

    pub fn sigma2<S: Scalar>(&self) -> S {
        let s = S::from_f64(self.sigma).unwrap_or_else(S::zero);
        s.clone() * s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.into()));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and >= 0");
        }
        if !self.mean_rate.is_finite() {
            return bad("mean rate must be finite");
        }
        match &self.jump_part {
            JumpPart::None => {
                if self.sigma == 0.0 && self.mean_rate == 0.0 {
                    return bad("degenerate model: no jumps, no Brownian part, zero mean");
                }
            }
            JumpPart::Gamma { shape, rate } => {
                if !(*shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return bad("gamma jumps require shape > 0 and rate > 0");
                }
            }
            JumpPart::CompoundPoisson { intensity, law } => {
                if !(*intensity > 0.0 && intensity.is_finite()) {
                    return bad("compound Poisson intensity must be > 0");
                }
                law.validate()?;
            }
            JumpPart::SyntheticMoments { moments } => {
                if moments.iter().any(|m| !m.is_finite()) {
                    return bad("synthetic moments must be finite");
                }
                for (k, m) in moments.iter().enumerate() {
                    let order = k + 2;
                    if order % 2 == 0 && *m < 0.0 {
                        return bad("even synthetic moments must be >= 0");
                    }
                }
            }
        }
        Ok(())
    }

    /// `true` when the jump part has a sampler.
    pub fn is_simulable(&self) -> bool {
        !matches!(self.jump_part, JumpPart::SyntheticMoments { .. })
    }
}

impl fmt::Display for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.sigma > 0.0 {
            parts.push(format!("brownian:sigma={}", self.sigma));
        }
        let drift = self.drift();
        match &self.jump_part {
            JumpPart::None => {}
            JumpPart::Gamma { shape, rate } => parts.push(format!("gamma:a={shape},b={rate}")),
            JumpPart::CompoundPoisson { intensity, law } => {
                let jump = match law {
                    JumpLaw::TwoPoint {
                        low, p_low, high, ..
                    } => format!("point:{low}:{p_low}:{high}"),
                    JumpLaw::ExponentialSigned { rate, p_pos } => format!("exp:{rate}:{p_pos}"),
                    JumpLaw::Deterministic { value } => format!("const:{value}"),
                };
                parts.push(format!("cpoisson:lambda={intensity},jump={jump}"));
            }
            JumpPart::SyntheticMoments { moments } => {
                let mut s = format!("synthetic:mean={}", self.mean_rate);
                for (k, m) in moments.iter().enumerate() {
                    s.push_str(&format!(",m{}={m}", k + 2));
                }
                parts.push(s);
            }
        }
        let synthetic = matches!(self.jump_part, JumpPart::SyntheticMoments { .. });
        if !synthetic && drift != 0.0 {
            parts.push(format!("drift:mu={drift}"));
        }
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for LevyModel {
    type Err = Error;

    /// Grammar: `+`-joined components among `brownian:sigma=<f>`,
    /// `gamma:a=<f>,b=<f>`, `cpoisson:lambda=<f>,jump=<law>` with `<law>` one
    /// of `point:<x->:<p->:<x+>`, `const:<x>`, `exp:<rate>:<p+>`,
    /// `drift:mu=<f>`, and `synthetic:mean=<f>,m2=<f>,m3=<f>,...`.
    fn from_str(spec: &str) -> Result<Self> {
        let err = |reason: String| Error::ModelSyntax {
            spec: spec.to_string(),
            reason,
        };
        let mut sigma: Option<f64> = None;
        let mut drift = 0.0;
        let mut jumps: Option<JumpPart> = None;
        let mut synthetic_mean: Option<f64> = None;

        for component in split_components(spec) {
            let (kind, args) = component
                .split_once(':')
                .ok_or_else(|| err(format!("component {component:?} lacks ':'")))?;
            let kv = parse_args(args).map_err(&err)?;
            let get = |key: &str| -> Result<&str> {
                kv.iter()
                    .find(|(k, _)| k == key)
                    .map(|(_, v)| v.as_str())
                    .ok_or_else(|| err(format!("{kind} requires {key}=")))
            };
            let num = |key: &str| -> Result<f64> {
                let v = get(key)?;
                v.parse::<f64>()
                    .map_err(|_| err(format!("{key}={v} is not a number")))
            };
            let set_jumps = |slot: &mut Option<JumpPart>, part: JumpPart| -> Result<()> {
                if slot.is_some() {
                    return Err(err("at most one jump component is supported".into()));
                }
                *slot = Some(part);
                Ok(())
            };
            match kind.trim() {
                "brownian" => {
                    if sigma.is_some() {
                        return Err(err("duplicate brownian component".into()));
                    }
                    sigma = Some(num("sigma")?);
                }
                "gamma" => set_jumps(
                    &mut jumps,
                    JumpPart::Gamma {
                        shape: num("a")?,
                        rate: num("b")?,
                    },
                )?,
                "cpoisson" => {
                    let law = parse_law(get("jump")?).map_err(&err)?;
                    set_jumps(
                        &mut jumps,
                        JumpPart::CompoundPoisson {
                            intensity: num("lambda")?,
                            law,
                        },
                    )?
                }
                "drift" => drift += num("mu")?,
                "synthetic" => {
                    synthetic_mean = Some(num("mean")?);
                    let mut moments = Vec::new();
                    let mut order = 2;
                    while let Some((_, v)) = kv.iter().find(|(k, _)| *k == format!("m{order}")) {
                        moments.push(
                            v.parse::<f64>()
                                .map_err(|_| err(format!("m{order}={v} is not a number")))?,
                        );
                        order += 1;
                    }
                    if kv.len() != moments.len() + 1 {
                        return Err(err("synthetic moments must be m2, m3, ... without gaps".into()));
                    }
                    set_jumps(&mut jumps, JumpPart::SyntheticMoments { moments })?
                }
                other => return Err(err(format!("unknown component {other:?}"))),
            }
        }

        let sigma = sigma.unwrap_or(0.0);
        let model = match (jumps, synthetic_mean) {
            (Some(JumpPart::SyntheticMoments { moments }), Some(mean)) => {
                LevyModel::synthetic(sigma, mean + drift, moments)
            }
            (Some(part), _) => LevyModel::with_jumps(sigma, drift, part),
            (None, _) => LevyModel::with_jumps(sigma, drift, JumpPart::None),
        };
        model.validate()?;
        Ok(model)
    }
}

fn split_components(spec: &str) -> Vec<&str> {
    // '+' separates components only when a component name follows it, so
    // exponents such as 1e+3 survive.
    let bytes = spec.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'+' && bytes.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic()) {
            out.push(spec[start..i].trim());
            start = i + 1;
        }
    }
    out.push(spec[start..].trim());
    out.into_iter().filter(|s| !s.is_empty()).collect()
}

fn parse_args(args: &str) -> std::result::Result<Vec<(String, String)>, String> {
    args.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("argument {kv:?} is not key=value"))
        })
        .collect()
}

fn parse_law(s: &str) -> std::result::Result<JumpLaw, String> {
    let fields: Vec<&str> = s.split(':').collect();
    let f = |i: usize| -> std::result::Result<f64, String> {
        fields
            .get(i)
            .ok_or_else(|| format!("jump law {s:?} is missing field {i}"))?
            .parse::<f64>()
            .map_err(|_| format!("jump law {s:?}: field {i} is not a number"))
    };
    match fields[0] {
        "point" if fields.len() == 4 => {
            let p_low = f(2)?;
            Ok(JumpLaw::TwoPoint {
                low: f(1)?,
                p_low,
                high: f(3)?,
                p_high: 1.0 - p_low,
            })
        }
        "const" if fields.len() == 2 => Ok(JumpLaw::Deterministic { value: f(1)? }),
        "exp" if fields.len() == 3 => Ok(JumpLaw::ExponentialSigned {
            rate: f(1)?,
            p_pos: f(2)?,
        }),
        _ => Err(format!("unrecognized jump law {s:?}")),
    }
}

/// `m_1..m_N` together with the Brownian variance rate.
///
/// `adjusted` marks vectors whose `m_2` already includes `sigma^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector<S> {
    m: Vec<S>,
    sigma2: S,
    adjusted: bool,
}

impl<S: Scalar> MomentVector<S> {
    pub fn new(m: Vec<S>, sigma2: S) -> Self {
        Self {
            m,
            sigma2,
            adjusted: false,
        }
    }

    /// Compensator values used as-is, for paths without a Brownian part.
    pub fn compensators(m: Vec<S>) -> Self {
        Self {
            m,
            sigma2: S::zero(),
            adjusted: true,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::compensators(vec![S::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `m_i`, 1-based. Panics beyond the stored order; see [`Self::require`].
    pub fn m(&self, i: usize) -> &S {
        &self.m[i - 1]
    }

    pub fn values(&self) -> &[S] {
        &self.m
    }

    pub fn sigma2(&self) -> &S {
        &self.sigma2
    }

    pub fn is_adjusted(&self) -> bool {
        self.adjusted
    }

    pub fn require(&self, order: usize) -> Result<()> {
        if order > self.m.len() {
            return Err(Error::InsufficientMoments {
                needed: order,
                available: self.m.len(),
            });
        }
        Ok(())
    }

    pub fn truncated(&self, order: usize) -> Result<Self> {
        self.require(order)?;
        Ok(Self {
            m: self.m[..order].to_vec(),
            sigma2: self.sigma2.clone(),
            adjusted: self.adjusted,
        })
    }

    pub fn to_f64(&self) -> MomentVector<f64> {
        MomentVector {
            m: self.m.iter().map(|v| v.to_f64()).collect(),
            sigma2: self.sigma2.to_f64(),
            adjusted: self.adjusted,
        }
    }
}

/// `m_1 = mean_rate` and `m_i = int x^i nu(dx)` for `2 <= i <= order`.
pub fn moments<S: Scalar>(model: &LevyModel, order: usize) -> Result<MomentVector<S>> {
    if order == 0 {
        return Err(Error::InsufficientMoments {
            needed: 1,
            available: 0,
        });
    }
    model.validate()?;
    let conv = |v: f64| S::from_f64(v).ok_or_else(|| Error::MomentUndefined(format!("{v}")));
    let mut m = Vec::with_capacity(order);
    m.push(conv(model.mean_rate)?);
    for i in 2..=order {
        let mi = match &model.jump_part {
            JumpPart::None => S::zero(),
            JumpPart::Gamma { shape, rate } => {
                conv(*shape)? * S::from_biguint(&factorial(i - 1)) / conv(*rate)?.powi(i)
            }
            JumpPart::CompoundPoisson { intensity, law } => conv(*intensity)? * law.raw_moment(i)?,
            JumpPart::SyntheticMoments { moments } => {
                let v = moments.get(i - 2).ok_or(Error::InsufficientMoments {
                    needed: order,
                    available: moments.len() + 1,
                })?;
                conv(*v)?
            }
        };
        if !S::EXACT && !mi.to_f64().is_finite() {
            return Err(Error::MomentUndefined(format!("m_{i} overflows")));
        }
        m.push(mi);
    }
    Ok(MomentVector::new(m, model.sigma2()))
}

/// Replaces `m_2` by `m_2 + sigma^2`. Refuses to adjust twice.
pub fn sigma_adjust<S: Scalar>(mv: &MomentVector<S>) -> Result<MomentVector<S>> {
    if mv.adjusted {
        return Err(Error::AlreadyAdjusted);
    }
    mv.require(2)?;
    let mut m = mv.m.clone();
    m[1] = m[1].clone() + mv.sigma2.clone();
    Ok(MomentVector {
        m,
        sigma2: mv.sigma2.clone(),
        adjusted: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::from_ratio(p, q)
    }

    #[test]
    fn gamma_second_moment() {
        let mv = moments::<f64>(&LevyModel::gamma(10.0, 20.0), 2).unwrap();
        assert!((mv.m(2) - 0.025).abs() < 1e-15);
        assert!((mv.m(1) - 0.5).abs() < 1e-15);
        let mv = moments::<Rational>(&LevyModel::gamma(10.0, 20.0), 4).unwrap();
        assert_eq!(*mv.m(2), r(1, 40));
        assert_eq!(*mv.m(4), r(60, 160000));
    }

    #[test]
    fn brownian_has_no_jump_moments() {
        let mv = moments::<Rational>(&LevyModel::brownian(1.0), 5).unwrap();
        assert!(mv.values().iter().all(|v| *v == Rational::from_i64(0)));
        assert_eq!(*mv.sigma2(), Rational::from_i64(1));
    }

    #[test]
    fn deterministic_compound_poisson() {
        let model = LevyModel::compound_poisson(2.0, JumpLaw::Deterministic { value: 3.0 });
        let mv = moments::<Rational>(&model, 3).unwrap();
        assert_eq!(*mv.m(1), Rational::from_i64(6));
        assert_eq!(*mv.m(2), Rational::from_i64(18));
        assert_eq!(*mv.m(3), Rational::from_i64(54));
    }

    #[test]
    fn two_point_odd_moments_follow_the_law() {
        let law = JumpLaw::TwoPoint {
            low: -2.0,
            p_low: 0.75,
            high: 1.0,
            p_high: 0.25,
        };
        let mv = moments::<Rational>(&LevyModel::compound_poisson(4.0, law), 5).unwrap();
        // 4 * (0.75 * (-2)^i + 0.25)
        assert_eq!(*mv.m(3), Rational::from_i64(4) * (r(3, 4) * r(-8, 1) + r(1, 4)));
        assert!(*mv.m(3) < Rational::from_i64(0));
        assert!(*mv.m(5) < Rational::from_i64(0));
        assert!(*mv.m(4) > Rational::from_i64(0));
    }

    #[test]
    fn exponential_signed_moments() {
        let law = JumpLaw::ExponentialSigned { rate: 2.0, p_pos: 1.0 };
        let mv = moments::<Rational>(&LevyModel::compound_poisson(1.0, law), 3).unwrap();
        assert_eq!(*mv.m(3), r(6, 8));
        let law = JumpLaw::ExponentialSigned { rate: 2.0, p_pos: 0.5 };
        let mv = moments::<Rational>(&LevyModel::compound_poisson(1.0, law), 3).unwrap();
        assert_eq!(*mv.m(3), Rational::from_i64(0));
        assert_eq!(*mv.m(2), r(1, 2));
    }

    #[test]
    fn synthetic_moments_length() {
        let model = LevyModel::synthetic(0.0, 1.0, vec![4.0, 6.0]);
        let mv = moments::<f64>(&model, 3).unwrap();
        assert_eq!(mv.values(), &[1.0, 4.0, 6.0]);
        let e = moments::<f64>(&model, 4).unwrap_err();
        assert_eq!(e.code(), "models.insufficient_moments");
    }

    #[test]
    fn sigma_adjust_examples() {
        let mv = moments::<f64>(&LevyModel::gamma(10.0, 20.0), 3).unwrap();
        let adj = sigma_adjust(&mv).unwrap();
        assert_eq!(adj.m(2), mv.m(2));
        assert!(adj.is_adjusted());
        assert_eq!(sigma_adjust(&adj).unwrap_err(), Error::AlreadyAdjusted);

        let model: LevyModel = "brownian:sigma=0.01+gamma:a=10,b=20".parse().unwrap();
        let mv = moments::<Rational>(&model, 3).unwrap();
        let adj = sigma_adjust(&mv).unwrap();
        assert_eq!(*adj.m(2), r(251, 10000));

        let mv = MomentVector::new(vec![r(0, 1), r(0, 1), r(0, 1)], r(1, 1));
        let adj = sigma_adjust(&mv).unwrap();
        assert_eq!(adj.values(), &[r(0, 1), r(1, 1), r(0, 1)]);
    }

    #[test]
    fn invalid_models() {
        assert!(LevyModel::gamma(0.0, 1.0).validate().is_err());
        assert!(LevyModel::gamma(1.0, -1.0).validate().is_err());
        assert!(LevyModel::brownian(0.0).validate().is_err());
        let law = JumpLaw::TwoPoint {
            low: -1.0,
            p_low: 0.3,
            high: 1.0,
            p_high: 0.3,
        };
        assert!(LevyModel::compound_poisson(1.0, law).validate().is_err());
        assert!(moments::<f64>(&LevyModel::gamma(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn parse_grammar() {
        let m: LevyModel = "gamma:a=10,b=20".parse().unwrap();
        assert_eq!(m, LevyModel::gamma(10.0, 20.0));
        let m: LevyModel = "brownian:sigma=0.01+gamma:a=10,b=20".parse().unwrap();
        assert_eq!(m.sigma, 0.01);
        assert_eq!(m.mean_rate, 0.5);
        let m: LevyModel = "cpoisson:lambda=2,jump=point:-1:0.5:1".parse().unwrap();
        assert_eq!(m.mean_rate, 0.0);
        let m: LevyModel = "cpoisson:lambda=2,jump=const:3+drift:mu=1e+0".parse().unwrap();
        assert_eq!(m.mean_rate, 7.0);
        assert_eq!(m.drift(), 1.0);
        let m: LevyModel = "synthetic:mean=0,m2=4,m3=6+brownian:sigma=1".parse().unwrap();
        assert_eq!(
            m.jump_part,
            JumpPart::SyntheticMoments {
                moments: vec![4.0, 6.0]
            }
        );
        for bad in [
            "gamma:a=10",
            "gamma:a=x,b=1",
            "levy:a=1",
            "gamma:a=1,b=1+cpoisson:lambda=1,jump=const:1",
            "cpoisson:lambda=1,jump=point:1:2",
            "brownian:sigma=0",
        ] {
            assert!(bad.parse::<LevyModel>().is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn display_round_trips() {
        for spec in [
            "gamma:a=10,b=20",
            "brownian:sigma=0.02+gamma:a=10,b=20",
            "cpoisson:lambda=2,jump=point:-1:0.25:2+drift:mu=0.5",
            "synthetic:mean=0.5,m2=1,m3=2",
        ] {
            let m: LevyModel = spec.parse().unwrap();
            let again: LevyModel = m.to_string().parse().unwrap();
            assert_eq!(m, again, "{spec}");
        }
    }
}
