//! Norms on `R^n` in fixed basis coordinates and the constructions on them:
//! evaluation, dual, subnorm (pullback), quotient norm and metric scaling.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::interval::{decide_sign, ExpScale, Iv, RIv};
use crate::lp::l1_representation;
use crate::polytope::{hull_to_functionals, SymmetricPolytope};
use crate::rational::{parse_q, q_from_f64, q_to_f64, q_to_string, QMatrix, Q};
use crate::ring::{EmbeddingKind, NumberRing, RingRegistry, RingSpec};

/// A real number `log(ratio) + real`. Weights and scaling parameters use this
/// form so that values such as `log 2` are represented exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct LogWeight {
    pub ratio: Q,
    pub real: f64,
}

impl LogWeight {
    pub fn zero() -> Self {
        LogWeight { ratio: Q::one(), real: 0.0 }
    }

    pub fn real(x: f64) -> Self {
        LogWeight { ratio: Q::one(), real: x }
    }

    /// `log(r)` for a positive rational `r`.
    pub fn log_of(r: Q) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::InvalidInput(format!("log of non-positive {}", q_to_string(&r))));
        }
        Ok(LogWeight { ratio: r, real: 0.0 })
    }

    pub fn value(&self) -> f64 {
        crate::interval::ln_q(&self.ratio) + self.real
    }

    /// `e^w`.
    pub fn exp(&self) -> ExpScale {
        ExpScale { ratio: self.ratio.clone(), real: self.real }
    }

    pub fn is_zero(&self) -> bool {
        self.ratio.is_one() && self.real == 0.0
    }

    pub fn neg(&self) -> Self {
        LogWeight { ratio: self.ratio.recip(), real: -self.real }
    }

    pub fn add(&self, o: &LogWeight) -> Self {
        LogWeight { ratio: &self.ratio * &o.ratio, real: self.real + o.real }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        let ratio = if k >= 0 {
            num_traits::pow(self.ratio.clone(), k as usize)
        } else {
            num_traits::pow(self.ratio.recip(), k.unsigned_abs() as usize)
        };
        LogWeight { ratio, real: self.real * k as f64 }
    }

    pub fn to_json(&self) -> Value {
        if self.ratio.is_one() {
            return json!(self.real);
        }
        let mut s = format!("log({})", q_to_string(&self.ratio));
        if self.real != 0.0 {
            s.push_str(&format!("{:+}", self.real));
        }
        Value::String(s)
    }

    /// Accepts a JSON number or a string such as `"log(2)"`, `"-log(3/2)"`,
    /// `"log(2)+0.25"` or `"0.5"`.
    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => {
                let x = n.as_f64().ok_or_else(|| Error::Parse(format!("bad weight {n}")))?;
                Ok(LogWeight::real(x))
            }
            Value::String(s) => Self::parse(s),
            other => Err(Error::Parse(format!("weight must be a number or string, got {other}"))),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("bad weight {s:?}"));
        let (neg, rest) = match t.strip_prefix('-') {
            Some(r) if r.trim_start().starts_with("log(") => (true, r.trim_start()),
            _ => (false, t),
        };
        if let Some(inner) = rest.strip_prefix("log(") {
            let close = inner.find(')').ok_or_else(bad)?;
            let r = parse_q(&inner[..close])?;
            let mut w = LogWeight::log_of(r)?;
            if neg {
                w = w.neg();
            }
            let tail = inner[close + 1..].trim();
            if !tail.is_empty() {
                let x: f64 = tail.replace(' ', "").parse().map_err(|_| bad())?;
                if !x.is_finite() {
                    return Err(bad());
                }
                w.real += x;
            }
            return Ok(w);
        }
        let x: f64 = t.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        Ok(LogWeight::real(x))
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_json() {
            Value::String(s) => f.write_str(&s),
            v => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NormSpec {
    /// `sqrt(x^T G x)`.
    Ellipsoid { gram: QMatrix },
    /// `max_i |F_i x|`.
    MaxAbs { functionals: QMatrix },
    /// Gauge of `conv(±p_i)`: `min { |c|_1 : sum c_i p_i = x }`.
    Hull { points: QMatrix },
    /// `max_σ |σ(x)| e^{-w_σ}` on the power basis of a number ring.
    EmbeddingSup { ring: Arc<NumberRing>, weights: Vec<LogWeight> },
    /// `sum_σ |σ(T^{-1} x)| e^{-w_σ}` with `T` the trace form; the dual of
    /// `EmbeddingSup` with negated weights, in dual-basis coordinates.
    EmbeddingSum { ring: Arc<NumberRing>, weights: Vec<LogWeight> },
    /// `e^{-λ} · inner`.
    Scaled { lambda: LogWeight, inner: Box<NormSpec> },
}

impl PartialEq for NormSpec {
    fn eq(&self, other: &Self) -> bool {
        use NormSpec::*;
        match (self, other) {
            (Ellipsoid { gram: a }, Ellipsoid { gram: b }) => a == b,
            (MaxAbs { functionals: a }, MaxAbs { functionals: b }) => a == b,
            (Hull { points: a }, Hull { points: b }) => a == b,
            (EmbeddingSup { ring: r, weights: w }, EmbeddingSup { ring: s, weights: v })
            | (EmbeddingSum { ring: r, weights: w }, EmbeddingSum { ring: s, weights: v }) => {
                r.id() == s.id() && w == v
            }
            (Scaled { lambda: l, inner: a }, Scaled { lambda: m, inner: b }) => l == m && a == b,
            _ => false,
        }
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl NormSpec {
    pub fn euclidean(n: usize) -> Self {
        NormSpec::Ellipsoid { gram: QMatrix::identity(n) }
    }

    pub fn linf(n: usize) -> Self {
        NormSpec::MaxAbs { functionals: QMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        match self {
            NormSpec::Ellipsoid { gram } => gram.rows(),
            NormSpec::MaxAbs { functionals } => functionals.cols(),
            NormSpec::Hull { points } => points.cols(),
            NormSpec::EmbeddingSup { ring, .. } | NormSpec::EmbeddingSum { ring, .. } => ring.degree(),
            NormSpec::Scaled { inner, .. } => inner.dim(),
        }
    }

    /// Checks that the data describes a genuine norm.
    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Ellipsoid { gram } => {
                if !gram.is_symmetric() {
                    return Err(Error::DegenerateNorm("gram matrix is not symmetric".into()));
                }
                if gram.rows() > 0 && !gram.is_positive_definite() {
                    return Err(Error::DegenerateNorm("gram matrix is not positive definite".into()));
                }
            }
            NormSpec::MaxAbs { functionals: m } | NormSpec::Hull { points: m } => {
                if m.rank() < m.cols() {
                    return Err(Error::DegenerateNorm(format!(
                        "matrix has rank {} < dimension {}",
                        m.rank(),
                        m.cols()
                    )));
                }
            }
            NormSpec::EmbeddingSup { ring, weights } | NormSpec::EmbeddingSum { ring, weights } => {
                check_dim(ring.degree(), weights.len())?;
                for (i, k) in ring.kinds().iter().enumerate() {
                    if let EmbeddingKind::Complex { conjugate } = *k {
                        if weights[i] != weights[conjugate] {
                            return Err(Error::InvalidInput(format!(
                                "weights differ on conjugate embeddings {i} and {conjugate}"
                            )));
                        }
                    }
                }
            }
            NormSpec::Scaled { inner, .. } => inner.validate()?,
        }
        Ok(())
    }

    /// Floating-point value of `‖v‖`.
    pub fn eval(&self, v: &[Q]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(match self {
            NormSpec::Ellipsoid { gram } => q_to_f64(&gram.quadratic_form(v)).max(0.0).sqrt(),
            NormSpec::MaxAbs { functionals } => (0..functionals.rows())
                .map(|i| q_to_f64(&dot(functionals.row(i), v)).abs())
                .fold(0.0, f64::max),
            NormSpec::Hull { points } => q_to_f64(&l1_representation(points, v)?),
            NormSpec::EmbeddingSup { ring, weights } => ring
                .representatives()
                .into_iter()
                .map(|e| ring.eval_q(e, v).abs2().mid().max(0.0).sqrt() * (-weights[e].value()).exp())
                .fold(0.0, f64::max),
            NormSpec::EmbeddingSum { ring, weights } => {
                let y = ring.trace_form().solve_vec(v)?;
                (0..ring.degree())
                    .map(|e| ring.eval_q(e, &y).abs2().mid().max(0.0).sqrt() * (-weights[e].value()).exp())
                    .sum()
            }
            NormSpec::Scaled { lambda, inner } => (-lambda.value()).exp() * inner.eval(v)?,
        })
    }

    /// Decides `‖v‖ ≤ r` exactly (or errors when precision is exhausted).
    pub fn le(&self, v: &[Q], r: &ExpScale) -> Result<bool> {
        check_dim(self.dim(), v.len())?;
        Ok(self.cmp(v, r)? != Ordering::Greater)
    }

    /// Compares `‖v‖` with `r`.
    pub fn cmp(&self, v: &[Q], r: &ExpScale) -> Result<Ordering> {
        check_dim(self.dim(), v.len())?;
        match self {
            NormSpec::Ellipsoid { gram } => r.square().cmp_q(&gram.quadratic_form(v)),
            NormSpec::MaxAbs { functionals } => {
                let m = (0..functionals.rows()).map(|i| dot(functionals.row(i), v).abs()).max().unwrap_or_default();
                r.cmp_q(&m)
            }
            NormSpec::Hull { points } => r.cmp_q(&l1_representation(points, v)?),
            NormSpec::EmbeddingSup { ring, weights } => {
                let mut worst = Ordering::Less;
                for e in ring.representatives() {
                    let bound = r.mul(&weights[e].exp()).square();
                    worst = worst.max(ring.cmp_abs2(e, v, &bound)?);
                    if worst == Ordering::Greater {
                        break;
                    }
                }
                Ok(worst)
            }
            NormSpec::EmbeddingSum { ring, weights } => {
                let y = ring.trace_form().solve_vec(v)?;
                cmp_embedding_sum(ring, weights, &y, r)
            }
            NormSpec::Scaled { lambda, inner } => inner.cmp(v, &r.mul(&lambda.exp())),
        }
    }

    pub fn dual(&self) -> Result<NormSpec> {
        self.validate()?;
        Ok(match self {
            NormSpec::Ellipsoid { gram } => NormSpec::Ellipsoid { gram: gram.inverse()? },
            NormSpec::MaxAbs { functionals } => NormSpec::Hull { points: functionals.clone() },
            NormSpec::Hull { points } => NormSpec::MaxAbs { functionals: points.clone() },
            NormSpec::EmbeddingSup { ring, weights } => NormSpec::EmbeddingSum {
                ring: ring.clone(),
                weights: weights.iter().map(LogWeight::neg).collect(),
            },
            NormSpec::EmbeddingSum { ring, weights } => NormSpec::EmbeddingSup {
                ring: ring.clone(),
                weights: weights.iter().map(LogWeight::neg).collect(),
            },
            NormSpec::Scaled { lambda, inner } => {
                NormSpec::Scaled { lambda: lambda.neg(), inner: Box::new(inner.dual()?) }
            }
        })
    }

    /// Pullback along an injection `f: Z^k -> Z^n` given as an `n x k` matrix.
    pub fn subnorm(&self, f: &QMatrix) -> Result<NormSpec> {
        check_dim(self.dim(), f.rows())?;
        if f.rank() < f.cols() {
            return Err(Error::NotInjective { rank: f.rank(), cols: f.cols() });
        }
        Ok(match self {
            NormSpec::Ellipsoid { gram } => NormSpec::Ellipsoid { gram: f.transpose().mul(&gram.mul(f)?)? },
            NormSpec::MaxAbs { functionals } => NormSpec::MaxAbs { functionals: functionals.mul(f)? },
            NormSpec::Hull { points } => {
                NormSpec::MaxAbs { functionals: hull_to_functionals(points)?.mul(f)? }
            }
            NormSpec::Scaled { lambda, inner } => {
                NormSpec::Scaled { lambda: lambda.clone(), inner: Box::new(inner.subnorm(f)?) }
            }
            NormSpec::EmbeddingSup { .. } | NormSpec::EmbeddingSum { .. } => {
                return Err(Error::Unsupported("subnorm of an embedding norm".into()))
            }
        })
    }

    /// Quotient norm along a surjection `g: Z^n -> Z^k` given as a `k x n`
    /// matrix: `‖y‖'' = inf { ‖x‖ : g x = y }`.
    pub fn quotient(&self, g: &QMatrix) -> Result<NormSpec> {
        check_dim(self.dim(), g.cols())?;
        if g.rank() < g.rows() {
            return Err(Error::NotSurjective { rank: g.rank(), rows: g.rows() });
        }
        Ok(match self {
            NormSpec::Ellipsoid { gram } => {
                let inv = gram.inverse()?;
                NormSpec::Ellipsoid { gram: g.mul(&inv.mul(&g.transpose())?)?.inverse()? }
            }
            NormSpec::MaxAbs { functionals } => {
                let ball = SymmetricPolytope::from_functionals(functionals)?;
                let verts = QMatrix::from_rows(ball.half_vertices())?;
                NormSpec::Hull { points: verts.mul(&g.transpose())? }
            }
            NormSpec::Hull { points } => NormSpec::Hull { points: points.mul(&g.transpose())? },
            NormSpec::Scaled { lambda, inner } => {
                NormSpec::Scaled { lambda: lambda.clone(), inner: Box::new(inner.quotient(g)?) }
            }
            NormSpec::EmbeddingSup { .. } | NormSpec::EmbeddingSum { .. } => {
                return Err(Error::Unsupported("quotient of an embedding norm".into()))
            }
        })
    }

    /// `Scaled(λ, self)`, folding nested scalings.
    pub fn scale(&self, lambda: &LogWeight) -> NormSpec {
        match self {
            NormSpec::Scaled { lambda: l, inner } => {
                NormSpec::Scaled { lambda: l.add(lambda), inner: inner.clone() }
            }
            other => NormSpec::Scaled { lambda: lambda.clone(), inner: Box::new(other.clone()) },
        }
    }

    /// Peels off scalings: `(inner, total λ)`.
    pub fn unscaled(&self) -> (&NormSpec, LogWeight) {
        match self {
            NormSpec::Scaled { lambda, inner } => {
                let (n, l) = inner.unscaled();
                (n, l.add(lambda))
            }
            other => (other, LogWeight::zero()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NormSpec::Ellipsoid { .. } => "ellipsoid",
            NormSpec::MaxAbs { .. } => "max_abs",
            NormSpec::Hull { .. } => "hull",
            NormSpec::EmbeddingSup { .. } => "embedding_sup",
            NormSpec::EmbeddingSum { .. } => "embedding_sum",
            NormSpec::Scaled { .. } => "scaled",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), json!(self.kind_name()));
        match self {
            NormSpec::Ellipsoid { gram } => {
                m.insert("gram".into(), gram.to_json());
            }
            NormSpec::MaxAbs { functionals } => {
                m.insert("functionals".into(), functionals.to_json());
            }
            NormSpec::Hull { points } => {
                m.insert("points".into(), points.to_json());
            }
            NormSpec::EmbeddingSup { ring, weights } | NormSpec::EmbeddingSum { ring, weights } => {
                m.insert("ring".into(), json!(ring.id()));
                m.insert("weights".into(), Value::Array(weights.iter().map(LogWeight::to_json).collect()));
            }
            NormSpec::Scaled { lambda, inner } => {
                m.insert("lambda".into(), lambda.to_json());
                m.insert("inner".into(), inner.to_json());
            }
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value, rings: &mut RingRegistry) -> Result<NormSpec> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("norm must be an object".into()))?;
        let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Parse("norm needs a string \"kind\"".into()))?;
        let field = |name: &str| obj.get(name).ok_or_else(|| Error::Parse(format!("{kind} norm needs \"{name}\"")));
        let norm = match kind {
            "ellipsoid" => NormSpec::Ellipsoid { gram: square(QMatrix::from_json(field("gram")?)?, field("gram")?)? },
            "max_abs" => NormSpec::MaxAbs { functionals: QMatrix::from_json(field("functionals")?)? },
            "hull" => NormSpec::Hull { points: QMatrix::from_json(field("points")?)? },
            "embedding_sup" | "embedding_sum" => {
                let ring = resolve_ring(field("ring")?, rings)?;
                let weights = field("weights")?
                    .as_array()
                    .ok_or_else(|| Error::Parse("weights must be an array".into()))?
                    .iter()
                    .map(LogWeight::from_json)
                    .collect::<Result<Vec<_>>>()?;
                if kind == "embedding_sup" {
                    NormSpec::EmbeddingSup { ring, weights }
                } else {
                    NormSpec::EmbeddingSum { ring, weights }
                }
            }
            "scaled" => NormSpec::Scaled {
                lambda: LogWeight::from_json(field("lambda")?)?,
                inner: Box::new(NormSpec::from_json(field("inner")?, rings)?),
            },
            other => return Err(Error::Parse(format!("unknown norm kind {other:?}"))),
        };
        norm.validate()?;
        Ok(norm)
    }
}

fn square(m: QMatrix, raw: &Value) -> Result<QMatrix> {
    // an empty array describes the rank-0 gram
    if m.rows() == 0 && raw.as_array().is_some_and(Vec::is_empty) {
        return Ok(QMatrix::zeros(0, 0));
    }
    if m.rows() != m.cols() {
        return Err(Error::Parse(format!("gram must be square, got {}x{}", m.rows(), m.cols())));
    }
    Ok(m)
}

/// A ring reference is an identifier string or an inline ring spec object.
pub fn resolve_ring(v: &Value, rings: &mut RingRegistry) -> Result<Arc<NumberRing>> {
    match v {
        Value::String(id) => rings.resolve(id),
        Value::Object(_) => {
            let spec: RingSpec = serde_json::from_value(v.clone())?;
            let ring = Arc::new(NumberRing::from_spec(&spec)?);
            let id = ring.id().to_string();
            rings.insert(&id, ring.clone());
            Ok(ring)
        }
        other => Err(Error::Parse(format!("ring must be an id or a spec object, got {other}"))),
    }
}

/// Compares `sum_σ |σ(y)| e^{-w_σ}` with `r`.
pub fn cmp_embedding_sum(ring: &NumberRing, weights: &[LogWeight], y: &[Q], r: &ExpScale) -> Result<Ordering> {
    let reps = ring.representatives();
    let mult = |e: usize| if ring.kinds()[e] == EmbeddingKind::Real { 1.0 } else { 2.0 };
    let mut sum = Iv::ZERO;
    for &e in &reps {
        let term = ring.eval_q(e, y).abs2().sqrt().mul(weights[e].neg().exp().iv()).mul(Iv::exact(mult(e)));
        sum = sum.add(term);
    }
    if let Some(o) = sum.cmp_iv(&r.iv()) {
        return Ok(o);
    }
    if reps.len() == 1 {
        let e = reps[0];
        let k = if ring.kinds()[e] == EmbeddingKind::Real { Q::one() } else { Q::from_integer(2.into()) };
        let bound = r.mul(&weights[e].exp()).mul(&ExpScale::rational(k.recip())).square();
        return ring.cmp_abs2(e, y, &bound);
    }
    if reps.len() == 2 && ring.signature() == (2, 0) && weights[0] == weights[1] {
        // |a| + |b| = max(|a + b|, |a - b|), with a + b = Tr y and
        // (a - b)^2 = (Tr y)^2 - 4 N(y)
        let bound = r.mul(&weights[0].exp()).square();
        let t = ring.trace_q(y);
        let t2 = &t * &t;
        let diff2 = &t2 - Q::from_integer(4.into()) * ring.norm_q(y);
        let a = bound.cmp_q(&t2)?;
        let b = bound.cmp_q(&diff2)?;
        return Ok(a.max(b));
    }
    decide_sign(
        |bits| {
            let mut acc = RIv::point(Q::zero());
            for &e in &reps {
                let m = q_from_f64(mult(e)).expect("finite");
                let abs = ring.eval_hp(e, y, bits)?.abs2(bits + 16).sqrt(bits + 16);
                acc = acc.add(&abs.mul(&weights[e].neg().exp().riv(bits + 16), bits + 16).scale(&m, bits + 16));
            }
            Ok(acc.sub(&r.riv(bits + 16)))
        },
        "sum of embedding absolute values",
    )
}

pub fn norm_eval(norm: &NormSpec, v: &[Q]) -> Result<f64> {
    norm.eval(v)
}

pub fn dual_norm(norm: &NormSpec) -> Result<NormSpec> {
    norm.dual()
}

pub fn subnorm(injection: &QMatrix, norm: &NormSpec) -> Result<NormSpec> {
    norm.subnorm(injection)
}

pub fn quotient_norm(surjection: &QMatrix, norm: &NormSpec) -> Result<NormSpec> {
    norm.quotient(surjection)
}

pub fn scale_norm(norm: &NormSpec, lambda: &LogWeight) -> NormSpec {
    norm.scale(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(NormSpec::linf(2).eval(&qv(&[3, -4])).unwrap(), 4.0);
        assert_eq!(NormSpec::euclidean(2).eval(&qv(&[3, 4])).unwrap(), 5.0);
        let s = NormSpec::linf(2).scale(&LogWeight::log_of(q(2)).unwrap());
        assert!((s.eval(&qv(&[3, -4])).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(s.cmp(&qv(&[3, -4]), &ExpScale::rational(q(2))).unwrap(), Ordering::Equal);
    }

    #[test]
    fn dual_examples() {
        assert_eq!(NormSpec::euclidean(3).dual().unwrap(), NormSpec::euclidean(3));
        let d = NormSpec::linf(2).dual().unwrap();
        assert_eq!(d.eval(&qv(&[1, 1])).unwrap(), 2.0);
        let g = QMatrix::from_rows(vec![vec![q(2), q(1)], vec![q(1), qr(3, 2)]]).unwrap();
        let e = NormSpec::Ellipsoid { gram: g };
        assert_eq!(e.dual().unwrap().dual().unwrap(), e);
    }

    #[test]
    fn subnorm_examples() {
        let f = QMatrix::from_i64(&[vec![1], vec![1]]).unwrap();
        let s = NormSpec::linf(2).subnorm(&f).unwrap();
        assert_eq!(s.eval(&qv(&[-3])).unwrap(), 3.0);
        let e = NormSpec::euclidean(2).subnorm(&f).unwrap();
        assert!((e.eval(&qv(&[1])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let zero = QMatrix::from_i64(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(NormSpec::linf(2).subnorm(&zero), Err(Error::NotInjective { .. })));
    }

    #[test]
    fn quotient_examples() {
        let proj = QMatrix::from_i64(&[vec![1, 0]]).unwrap();
        let e = NormSpec::euclidean(2).quotient(&proj).unwrap();
        assert_eq!(e.eval(&qv(&[-7])).unwrap(), 7.0);
        let sum = QMatrix::from_i64(&[vec![1, 1]]).unwrap();
        let m = NormSpec::linf(2).quotient(&sum).unwrap();
        assert_eq!(m.cmp(&qv(&[3]), &ExpScale::rational(qr(3, 2))).unwrap(), Ordering::Equal);
        let id = QMatrix::identity(2);
        let same = NormSpec::linf(2).quotient(&id).unwrap();
        assert_eq!(same.eval(&qv(&[5, -2])).unwrap(), 5.0);
    }

    #[test]
    fn scaling_examples() {
        let abs = NormSpec::linf(1);
        let l2 = LogWeight::log_of(q(2)).unwrap();
        let s = abs.scale(&l2);
        assert_eq!(s.cmp(&qv(&[2]), &ExpScale::one()).unwrap(), Ordering::Equal);
        assert_eq!(abs.scale(&LogWeight::zero()).eval(&qv(&[3])).unwrap(), 3.0);
        let a = LogWeight::real(0.3);
        let b = LogWeight::real(-0.7);
        let nested = NormSpec::Scaled { lambda: a.clone(), inner: Box::new(abs.scale(&b)) };
        let folded = abs.scale(&a.add(&b));
        let v = qv(&[5]);
        assert!((nested.eval(&v).unwrap() - folded.eval(&v).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn embedding_norms() {
        let ring = Arc::new(NumberRing::new(&[1, 0, 1], 128).unwrap());
        let sup = NormSpec::EmbeddingSup { ring: ring.clone(), weights: vec![LogWeight::zero(); 2] };
        assert!((sup.eval(&qv(&[1, 1])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let dual = sup.dual().unwrap();
        // trace form of Z[i] is diag(2, -2); the dual basis vector (1, 0) is y = 1/2
        assert_eq!(dual.cmp(&qv(&[1, 0]), &ExpScale::one()).unwrap(), Ordering::Equal);
        let r2 = Arc::new(NumberRing::new(&[-2, 0, 1], 128).unwrap());
        let sum = NormSpec::EmbeddingSum { ring: r2, weights: vec![LogWeight::zero(); 2] };
        // T = diag(2, 4); x = (2, 0) is y = 1, sum of |σ(1)| = 2
        assert_eq!(sum.cmp(&qv(&[2, 0]), &ExpScale::rational(q(2))).unwrap(), Ordering::Equal);
    }

    #[test]
    fn weight_parsing() {
        let w = LogWeight::parse("log(3/2)+0.25").unwrap();
        assert_eq!(w.ratio, qr(3, 2));
        assert_eq!(w.real, 0.25);
        assert_eq!(LogWeight::parse("-log(2)").unwrap().ratio, qr(1, 2));
        assert_eq!(LogWeight::parse("0.5").unwrap(), LogWeight::real(0.5));
        assert!(LogWeight::parse("log(-1)").is_err());
        assert!(LogWeight::parse("log(2").is_err());
        for w in [w, LogWeight::real(-0.1), LogWeight::log_of(qr(1, 3)).unwrap()] {
            assert_eq!(LogWeight::from_json(&w.to_json()).unwrap(), w);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut reg = RingRegistry::new();
        let texts = [
            r#"{"kind":"ellipsoid","gram":[[2,"1/2"],["1/2",1]]}"#,
            r#"{"kind":"max_abs","functionals":[[1,1],[1,-1]]}"#,
            r#"{"kind":"embedding_sup","ring":"QQ_i","weights":[0.5,0.5]}"#,
            r#"{"kind":"scaled","lambda":"log(2)","inner":{"kind":"ellipsoid","gram":[[1]]}}"#,
        ];
        for t in texts {
            let n = NormSpec::from_json(&serde_json::from_str(t).unwrap(), &mut reg).unwrap();
            let back = NormSpec::from_json(&n.to_json(), &mut reg).unwrap();
            assert_eq!(n, back);
        }
        let bad = r#"{"kind":"embedding_sup","ring":"QQ_i","weights":[0.5,0.25]}"#;
        assert!(NormSpec::from_json(&serde_json::from_str(bad).unwrap(), &mut reg).is_err());
        let bad = r#"{"kind":"ellipsoid","gram":[[1,2],[2,1]]}"#;
        assert!(NormSpec::from_json(&serde_json::from_str(bad).unwrap(), &mut reg).is_err());
    }
}
