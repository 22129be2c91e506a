//! Norm balls compiled for enumeration: a bounding ellipsoid plus an exact
//! membership test on integer points.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::interval::ExpScale;
use crate::lp::{l1_representation, support_of_maxabs};
use crate::norm::{cmp_embedding_sum, LogWeight, NormSpec};
use crate::polytope::hull_to_functionals;
use crate::rational::{q, q_to_f64, QMatrix, Q};
use crate::ring::{EmbeddingKind, NumberRing};

pub trait Ball: Sync + Send {
    fn dim(&self) -> usize;

    /// `(B, R)` with the ball contained in `{x : x^T B x ≤ R}`.
    fn bounding(&self) -> (&[Vec<f64>], f64);

    /// Exact membership of an integer point.
    fn contains(&self, x: &[i64]) -> Result<bool>;

    /// Approximate `‖x‖ / r`; only used to steer line searches.
    fn approx(&self, x: &[i64]) -> f64;

    /// Whether [`Ball::contains`] is a certified decision.
    fn certified(&self) -> bool {
        true
    }

    /// Whether membership along every line is an interval, so line counts can
    /// use bisection.
    fn convex_lines(&self) -> bool {
        true
    }
}

fn to_qv(x: &[i64]) -> Vec<Q> {
    x.iter().map(|&v| q(v)).collect()
}

/// `D * m` as machine integers together with `D`, when everything fits.
fn integer_rows(m: &QMatrix) -> Option<(Vec<Vec<i128>>, BigInt)> {
    let d = m.common_denominator();
    let rows = (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|v| (v * Q::from_integer(d.clone())).to_integer().to_i128().filter(|x| x.abs() < 1 << 60))
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    Some((rows, d))
}

fn dot_i128(row: &[i128], x: &[i64]) -> Option<i128> {
    row.iter().zip(x).try_fold(0i128, |acc, (&a, &b)| acc.checked_add(a.checked_mul(b as i128)?))
}

fn gram_f64(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; n]; n];
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    g
}

fn xtgx(g: &[Vec<f64>], x: &[i64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            s += x[i] as f64 * v * x[j] as f64;
        }
    }
    s
}

struct EllipsoidBall {
    gram: QMatrix,
    int_gram: Option<(Vec<Vec<i128>>, BigInt)>,
    gram_f: Vec<Vec<f64>>,
    r2: ExpScale,
    r2_f: f64,
}

impl EllipsoidBall {
    fn new(gram: &QMatrix, r: &ExpScale) -> Self {
        let r2 = r.square();
        EllipsoidBall {
            gram: gram.clone(),
            int_gram: integer_rows(gram),
            gram_f: gram.to_f64_rows(),
            r2_f: r2.to_f64(),
            r2,
        }
    }

    fn form(&self, x: &[i64]) -> Q {
        if let Some((g, d)) = &self.int_gram {
            let mut acc: Option<i128> = Some(0);
            for (i, row) in g.iter().enumerate() {
                acc = acc.and_then(|a| a.checked_add(dot_i128(row, x)?.checked_mul(x[i] as i128)?));
            }
            if let Some(v) = acc {
                return Q::new(BigInt::from(v), d.clone());
            }
        }
        self.gram.quadratic_form(&to_qv(x))
    }
}

impl Ball for EllipsoidBall {
    fn dim(&self) -> usize {
        self.gram.rows()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.gram_f, self.r2_f)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        Ok(self.r2.cmp_q(&self.form(x))? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        (xtgx(&self.gram_f, x) / self.r2_f).max(0.0).sqrt()
    }
}

/// `max_i |F_i x| ≤ r`, with an ellipsoid supplied by the caller.
struct FunctionalBall {
    functionals: QMatrix,
    int_rows: Option<(Vec<Vec<i128>>, BigInt)>,
    rows_f: Vec<Vec<f64>>,
    r: ExpScale,
    r_f: f64,
    bound: Vec<Vec<f64>>,
    bound_r2: f64,
}

impl FunctionalBall {
    fn new(functionals: &QMatrix, r: &ExpScale, bound: Vec<Vec<f64>>, bound_r2: f64) -> Self {
        FunctionalBall {
            functionals: functionals.clone(),
            int_rows: integer_rows(functionals),
            rows_f: functionals.to_f64_rows(),
            r: r.clone(),
            r_f: r.to_f64(),
            bound,
            bound_r2,
        }
    }

    fn value(&self, x: &[i64]) -> Q {
        if let Some((rows, d)) = &self.int_rows {
            let m = rows.iter().try_fold(0i128, |acc, row| Some(acc.max(dot_i128(row, x)?.abs())));
            if let Some(m) = m {
                return Q::new(BigInt::from(m), d.clone());
            }
        }
        let xq = to_qv(x);
        (0..self.functionals.rows())
            .map(|i| self.functionals.row(i).iter().zip(&xq).map(|(a, b)| a * b).sum::<Q>())
            .map(|v: Q| if v < Q::zero() { -v } else { v })
            .max()
            .unwrap_or_default()
    }
}

impl Ball for FunctionalBall {
    fn dim(&self) -> usize {
        self.functionals.cols()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.bound, self.bound_r2)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        Ok(self.r.cmp_q(&self.value(x))? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        self.rows_f
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, &b)| a * b as f64).sum::<f64>().abs())
            .fold(0.0, f64::max)
            / self.r_f
    }
}

/// Hull balls whose facet description is too large: membership by LP.
struct LpHullBall {
    points: QMatrix,
    r: ExpScale,
    bound: Vec<Vec<f64>>,
    bound_r2: f64,
}

impl Ball for LpHullBall {
    fn dim(&self) -> usize {
        self.points.cols()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.bound, self.bound_r2)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let v = l1_representation(&self.points, &to_qv(x))?;
        Ok(self.r.cmp_q(&v)? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        l1_representation(&self.points, &to_qv(x)).map(|v| q_to_f64(&v)).unwrap_or(f64::INFINITY) / self.r.to_f64()
    }
}

/// `{x : x^T (P^T P)^{-1} x ≤ r^2}` contains `r conv(±p_i)`: every `p_i` has
/// leverage at most 1.
fn hull_bounding(points: &QMatrix, r: &ExpScale) -> Result<(Vec<Vec<f64>>, f64)> {
    let ptp = points.transpose().mul(points)?;
    let inv = ptp.inverse().map_err(|_| Error::DegenerateNorm("hull points do not span".into()))?;
    Ok((inv.to_f64_rows(), r.square().to_f64()))
}

struct SupBall {
    ring: Arc<NumberRing>,
    /// `(embedding, (r e^{w})^2, e^{-w} / r)` per conjugate class.
    reps: Vec<(usize, ExpScale, f64)>,
    bound: Vec<Vec<f64>>,
    bound_r2: f64,
}

impl Ball for SupBall {
    fn dim(&self) -> usize {
        self.ring.degree()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.bound, self.bound_r2)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let mut xq = None;
        for (e, b2, _) in &self.reps {
            match self.ring.eval_i64(*e, x).abs2().cmp_iv(&b2.iv()) {
                Some(Ordering::Greater) => return Ok(false),
                Some(_) => continue,
                None => {
                    let v = xq.get_or_insert_with(|| to_qv(x));
                    if self.ring.cmp_abs2(*e, v, b2)? == Ordering::Greater {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        self.reps.iter().map(|(e, _, s)| self.ring.eval_approx(*e, &xf).norm() * s).fold(0.0, f64::max)
    }
}

struct SumBall {
    ring: Arc<NumberRing>,
    weights: Vec<LogWeight>,
    tinv: QMatrix,
    tinv_f: Vec<Vec<f64>>,
    r: ExpScale,
    scales: Vec<f64>,
    bound: Vec<Vec<f64>>,
    bound_r2: f64,
}

impl Ball for SumBall {
    fn dim(&self) -> usize {
        self.ring.degree()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.bound, self.bound_r2)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let y = self.tinv.mul_vec(&to_qv(x))?;
        Ok(cmp_embedding_sum(&self.ring, &self.weights, &y, &self.r)? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        let y: Vec<f64> =
            self.tinv_f.iter().map(|row| row.iter().zip(x).map(|(a, &b)| a * b as f64).sum()).collect();
        (0..self.ring.degree()).map(|e| self.ring.eval_approx(e, &y).norm() * self.scales[e]).sum()
    }
}

fn weight_scales(weights: &[LogWeight], r: &ExpScale) -> Vec<f64> {
    weights.iter().map(|w| r.mul(&w.exp()).recip().to_f64()).collect()
}

/// Quadratic form `sum_σ c_σ |σ(x)|^2` pulled back through `t` (`x = t z`).
fn pulled_gram(ring: &NumberRing, scales2: &[f64], t: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    let g = ring.embedding_gram(scales2);
    let Some(t) = t else { return g };
    let n = g.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += t[a][i] * g[a][b] * t[b][j];
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// Ball `{x : ‖x‖ ≤ r}` ready for enumeration.
pub fn compile_ball(norm: &NormSpec, r: &ExpScale) -> Result<Box<dyn Ball>> {
    Ok(match norm {
        NormSpec::Ellipsoid { gram } => Box::new(EllipsoidBall::new(gram, r)),
        NormSpec::MaxAbs { functionals } => {
            let bound = gram_f64(&functionals.to_f64_rows());
            let r2 = r.square().to_f64() * functionals.rows() as f64;
            Box::new(FunctionalBall::new(functionals, r, bound, r2))
        }
        NormSpec::Hull { points } => {
            let (bound, r2) = hull_bounding(points, r)?;
            match hull_to_functionals(points) {
                Ok(f) => Box::new(FunctionalBall::new(&f, r, bound, r2)),
                Err(Error::Unsupported(_)) => {
                    Box::new(LpHullBall { points: points.clone(), r: r.clone(), bound, bound_r2: r2 })
                }
                Err(e) => return Err(e),
            }
        }
        NormSpec::EmbeddingSup { ring, weights } => {
            let scales = weight_scales(weights, r);
            let s2: Vec<f64> = scales.iter().map(|s| s * s).collect();
            let reps = ring
                .representatives()
                .into_iter()
                .map(|e| (e, r.mul(&weights[e].exp()).square(), scales[e]))
                .collect();
            // each |σ(x)|^2 e^{-2w} ≤ r^2, summed over all d embeddings
            Box::new(SupBall {
                ring: ring.clone(),
                reps,
                bound: pulled_gram(ring, &s2, None),
                bound_r2: ring.degree() as f64,
            })
        }
        NormSpec::EmbeddingSum { ring, weights } => {
            let scales = weight_scales(weights, r);
            let s2: Vec<f64> = scales.iter().map(|s| s * s).collect();
            let tinv = ring.trace_form().inverse()?;
            let tinv_f = tinv.to_f64_rows();
            // sum of squares is at most the square of the sum
            Box::new(SumBall {
                ring: ring.clone(),
                weights: weights.clone(),
                bound: pulled_gram(ring, &s2, Some(&tinv_f)),
                bound_r2: 1.0,
                tinv,
                tinv_f,
                r: r.clone(),
                scales,
            })
        }
        NormSpec::Scaled { lambda, inner } => compile_ball(inner, &r.mul(&lambda.exp()))?,
    })
}

/// Polar body `{x : sup_{‖y‖≤1} |<x, y>| ≤ 1}` evaluated through support
/// functions of the unit ball.
pub fn polar_ball(norm: &NormSpec) -> Result<Box<dyn Ball>> {
    polar_with_radius(norm, &ExpScale::one())
}

fn polar_with_radius(norm: &NormSpec, r: &ExpScale) -> Result<Box<dyn Ball>> {
    Ok(match norm {
        NormSpec::Ellipsoid { gram } => Box::new(LdlPolarBall::new(gram, r)?),
        NormSpec::MaxAbs { functionals } => {
            // polar of {|F y| ≤ 1} is conv(±F_i)
            let (bound, r2) = hull_bounding(functionals, r)?;
            Box::new(SupportLpBall { functionals: functionals.clone(), r: r.clone(), bound, bound_r2: r2 })
        }
        NormSpec::Hull { points } => {
            let bound = gram_f64(&points.to_f64_rows());
            let r2 = r.square().to_f64() * points.rows() as f64;
            Box::new(FunctionalBall::new(points, r, bound, r2))
        }
        NormSpec::EmbeddingSup { ring, weights } => {
            let dual = compile_ball(&NormSpec::EmbeddingSum { ring: ring.clone(), weights: weights.iter().map(LogWeight::neg).collect() }, r)?;
            Box::new(MinkowskiPolarBall::new(ring.clone(), weights, r, dual)?)
        }
        NormSpec::EmbeddingSum { .. } => compile_ball(&norm.dual()?, r)?,
        NormSpec::Scaled { lambda, inner } => polar_with_radius(inner, &r.mul(&lambda.neg().exp()))?,
    })
}

/// `x^T G^{-1} x ≤ r^2` evaluated by forward substitution in `G = L D L^T`.
struct LdlPolarBall {
    l: QMatrix,
    d: Vec<Q>,
    r2: ExpScale,
    inv_f: Vec<Vec<f64>>,
    r2_f: f64,
}

impl LdlPolarBall {
    fn new(g: &QMatrix, r: &ExpScale) -> Result<Self> {
        let n = g.rows();
        let mut l = QMatrix::identity(n);
        let mut d = vec![Q::zero(); n];
        for j in 0..n {
            let mut s = g[(j, j)].clone();
            for k in 0..j {
                s -= &l[(j, k)] * &l[(j, k)] * &d[k];
            }
            if s <= Q::zero() {
                return Err(Error::DegenerateNorm("gram matrix is not positive definite".into()));
            }
            d[j] = s;
            for i in j + 1..n {
                let mut t = g[(i, j)].clone();
                for k in 0..j {
                    t -= &l[(i, k)] * &l[(j, k)] * &d[k];
                }
                l[(i, j)] = t / &d[j];
            }
        }
        let r2 = r.square();
        Ok(LdlPolarBall { inv_f: g.inverse()?.to_f64_rows(), r2_f: r2.to_f64(), l, d, r2 })
    }

    fn form(&self, x: &[i64]) -> Q {
        let n = self.d.len();
        let mut z: Vec<Q> = Vec::with_capacity(n);
        let mut acc = Q::zero();
        for i in 0..n {
            let mut v = q(x[i]);
            for (k, zk) in z.iter().enumerate() {
                v -= &self.l[(i, k)] * zk;
            }
            acc += &v * &v / &self.d[i];
            z.push(v);
        }
        acc
    }
}

impl Ball for LdlPolarBall {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.inv_f, self.r2_f)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        Ok(self.r2.cmp_q(&self.form(x))? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        (xtgx(&self.inv_f, x) / self.r2_f).max(0.0).sqrt()
    }
}

/// Support function of `{|F y| ≤ 1}` by linear programming.
struct SupportLpBall {
    functionals: QMatrix,
    r: ExpScale,
    bound: Vec<Vec<f64>>,
    bound_r2: f64,
}

impl Ball for SupportLpBall {
    fn dim(&self) -> usize {
        self.functionals.cols()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.bound, self.bound_r2)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let v = support_of_maxabs(&self.functionals, &to_qv(x))?;
        Ok(self.r.cmp_q(&v)? != Ordering::Greater)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        support_of_maxabs(&self.functionals, &to_qv(x)).map(|v| q_to_f64(&v)).unwrap_or(f64::INFINITY)
            / self.r.to_f64()
    }
}

/// Support function of the embedding box computed in Minkowski coordinates;
/// near-ties defer to the exact trace-dual evaluation.
struct MinkowskiPolarBall {
    ring: Arc<NumberRing>,
    /// rows of `M^{-T}`
    mt_inv: Vec<Vec<f64>>,
    /// per Minkowski block: (row indices, e^{w} / r)
    blocks: Vec<(Vec<usize>, f64)>,
    exact: Box<dyn Ball>,
}

impl MinkowskiPolarBall {
    fn new(ring: Arc<NumberRing>, weights: &[LogWeight], r: &ExpScale, exact: Box<dyn Ball>) -> Result<Self> {
        let m = ring.minkowski_matrix();
        let n = m.len();
        let mq = QMatrix::from_rows(
            m.iter().map(|row| row.iter().map(|&v| crate::rational::q_from_f64(v)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?,
        )?;
        let inv = mq.inverse()?.transpose().to_f64_rows();
        let mut blocks = Vec::new();
        let mut row = 0;
        for e in ring.representatives() {
            let s = weights[e].exp().mul(&r.recip()).to_f64();
            if ring.kinds()[e] == EmbeddingKind::Real {
                blocks.push((vec![row], s));
                row += 1;
            } else {
                blocks.push((vec![row, row + 1], s));
                row += 2;
            }
        }
        debug_assert_eq!(row, n);
        Ok(MinkowskiPolarBall { ring, mt_inv: inv, blocks, exact })
    }

    fn support(&self, x: &[i64]) -> f64 {
        let v: Vec<f64> = self.mt_inv.iter().map(|row| row.iter().zip(x).map(|(a, &b)| a * b as f64).sum()).collect();
        self.blocks
            .iter()
            .map(|(rows, s)| rows.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt() * s)
            .sum()
    }
}

impl Ball for MinkowskiPolarBall {
    fn dim(&self) -> usize {
        self.ring.degree()
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        self.exact.bounding()
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let h = self.support(x);
        if (h - 1.0).abs() > 1e-9 {
            return Ok(h < 1.0);
        }
        self.exact.contains(x)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        self.support(x)
    }
}
