//! Orders `Z[θ]` of number fields given by a monic integer polynomial, with
//! certified complex embeddings.
//!
//! Embeddings are ordered real roots first (ascending), then complex pairs,
//! each root with positive imaginary part immediately followed by its
//! conjugate. Every root carries a disc that provably isolates it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{decide_sign, max_precision_bits, round_down, ExpScale, Iv, RIv};
use crate::rational::{int_det, q, QMatrix, Q};

pub const MAX_DEGREE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Real,
    Complex { conjugate: usize },
}

/// Complex rectangle with double endpoints.
#[derive(Clone, Copy, Debug)]
pub struct CIv {
    pub re: Iv,
    pub im: Iv,
}

impl CIv {
    pub const ZERO: CIv = CIv { re: Iv::ZERO, im: Iv::ZERO };

    pub fn add(self, o: CIv) -> CIv {
        CIv { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn mul(self, o: CIv) -> CIv {
        CIv {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn scale(self, k: Iv) -> CIv {
        CIv { re: self.re.mul(k), im: self.im.mul(k) }
    }

    pub fn abs2(self) -> Iv {
        self.re.sqr().add(self.im.sqr())
    }
}

/// Complex rectangle with dyadic rational endpoints.
#[derive(Clone, Debug)]
pub struct CRIv {
    pub re: RIv,
    pub im: RIv,
}

impl CRIv {
    fn zero() -> CRIv {
        CRIv { re: RIv::point(Q::zero()), im: RIv::point(Q::zero()) }
    }

    fn add(&self, o: &CRIv) -> CRIv {
        CRIv { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    fn mul(&self, o: &CRIv, bits: u32) -> CRIv {
        CRIv {
            re: self.re.mul(&o.re, bits).sub(&self.im.mul(&o.im, bits)),
            im: self.re.mul(&o.im, bits).add(&self.im.mul(&o.re, bits)),
        }
    }

    fn scale(&self, s: &Q, bits: u32) -> CRIv {
        CRIv { re: self.re.scale(s, bits), im: self.im.scale(s, bits) }
    }

    pub fn abs2(&self, bits: u32) -> RIv {
        self.re.sqr(bits).add(&self.im.sqr(bits))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSpec {
    /// Coefficients `c_0, ..., c_d` of a monic polynomial (`c_d = 1`).
    pub poly: Vec<i64>,
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
}

fn default_bits() -> u32 {
    crate::interval::start_precision_bits()
}

#[derive(Debug)]
pub struct NumberRing {
    id: String,
    poly: Vec<BigInt>,
    degree: usize,
    signature: (usize, usize),
    kinds: Vec<EmbeddingKind>,
    approx: Vec<Complex64>,
    exact_roots: Vec<Option<(BigInt, BigInt)>>,
    powers_f64: Vec<Vec<CIv>>,
    precision_bits: u32,
    hp_powers: Mutex<BTreeMap<u32, Arc<Vec<Vec<CRIv>>>>>,
    discriminant: BigInt,
    trace_form: QMatrix,
    minkowski: Vec<Vec<f64>>,
}

// ---------- polynomial helpers over Q ----------

fn trim(p: &mut Vec<Q>) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn poly_rem(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let f = &r[dr] / &lead;
        for i in 0..=db {
            let t = &f * &b[i];
            r[dr - db + i] -= t;
        }
        r.pop();
        if r.is_empty() {
            r.push(Q::zero());
        }
        trim(&mut r);
        if r.len() - 1 < db {
            break;
        }
    }
    r
}

fn poly_gcd_degree(a: &[Q], b: &[Q]) -> usize {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !(y.len() == 1 && y[0].is_zero()) {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    x.len() - 1
}

fn eval_poly_c(p: &[BigInt], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for c in p.iter().rev() {
        dv = dv * z + v;
        v = v * z + Complex64::new(c.to_f64().unwrap_or(f64::MAX), 0.0);
    }
    (v, dv)
}

/// Aberth-Ehrlich simultaneous root approximation.
fn approximate_roots(p: &[BigInt]) -> Vec<Complex64> {
    let d = p.len() - 1;
    let bound = 1.0 + p[..d].iter().map(|c| c.to_f64().unwrap_or(f64::MAX).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / d as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let (v, dv) = eval_poly_c(p, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / dv;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != i {
                    s += Complex64::new(1.0, 0.0) / (z[i] - z[j]);
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Exact value of p and p' at a Gaussian rational.
fn eval_exact(p: &[BigInt], re: &Q, im: &Q) -> ((Q, Q), (Q, Q)) {
    let mut v = (Q::zero(), Q::zero());
    let mut dv = (Q::zero(), Q::zero());
    for c in p.iter().rev() {
        dv = (&dv.0 * re - &dv.1 * im + &v.0, &dv.0 * im + &dv.1 * re + &v.1);
        v = (&v.0 * re - &v.1 * im + Q::from_integer(c.clone()), &v.0 * im + &v.1 * re);
    }
    (v, dv)
}

struct RootDisc {
    re: Q,
    im: Q,
    radius: Q,
}

fn refine_root(p: &[BigInt], start: Complex64, real: bool, bits: u32) -> Result<RootDisc> {
    let d = (p.len() - 1) as i64;
    let work = bits + 32;
    let mut re = crate::rational::q_from_f64(start.re)?;
    let mut im = if real { Q::zero() } else { crate::rational::q_from_f64(start.im)? };
    let tol = Q::new(BigInt::one(), BigInt::one() << (2 * (bits + 8)));
    for _ in 0..200 {
        let ((vr, vi), (dr, di)) = eval_exact(p, &re, &im);
        let den = &dr * &dr + &di * &di;
        if den.is_zero() {
            return Err(Error::Precision { bits, what: "vanishing derivative during root refinement".into() });
        }
        // (vr + i vi) / (dr + i di)
        let cr = (&vr * &dr + &vi * &di) / &den;
        let ci = (&vi * &dr - &vr * &di) / &den;
        re = round_down(&(&re - &cr), work);
        if !real {
            im = round_down(&(&im - &ci), work);
        }
        if &cr * &cr + &ci * &ci < tol {
            break;
        }
    }
    let ((vr, vi), (dr, di)) = eval_exact(p, &re, &im);
    let pv2 = &vr * &vr + &vi * &vi;
    let dv2 = &dr * &dr + &di * &di;
    if dv2.is_zero() {
        return Err(Error::Precision { bits, what: "vanishing derivative at root".into() });
    }
    // some root lies within d |p(z)| / |p'(z)|
    let r2 = Q::from_integer(BigInt::from(d * d)) * pv2 / dv2;
    let radius = RIv::point(r2).sqrt(work).hi;
    Ok(RootDisc { re, im, radius })
}

fn certify(discs: &[RootDisc]) -> bool {
    for i in 0..discs.len() {
        for j in 0..i {
            let dr = &discs[i].re - &discs[j].re;
            let di = &discs[i].im - &discs[j].im;
            let s = &discs[i].radius + &discs[j].radius;
            if &dr * &dr + &di * &di <= &s * &s {
                return false;
            }
        }
    }
    true
}

fn riv_around(c: &Q, r: &Q) -> RIv {
    RIv::new(c - r, c + r)
}

impl NumberRing {
    pub fn from_spec(spec: &RingSpec) -> Result<NumberRing> {
        Self::new(&spec.poly, spec.precision_bits)
    }

    /// Builds the order `Z[x]/(poly)`; `poly` lists `c_0, ..., c_d`.
    pub fn new(poly: &[i64], precision_bits: u32) -> Result<NumberRing> {
        let poly: Vec<BigInt> = poly.iter().map(|&c| BigInt::from(c)).collect();
        if poly.len() < 2 {
            return Err(Error::BadPolynomial("degree must be at least 1".into()));
        }
        if !poly.last().unwrap().is_one() {
            return Err(Error::BadPolynomial("polynomial must be monic".into()));
        }
        let d = poly.len() - 1;
        if d > MAX_DEGREE {
            return Err(Error::BadPolynomial(format!("degree {d} exceeds supported maximum {MAX_DEGREE}")));
        }
        let pq: Vec<Q> = poly.iter().map(|c| Q::from_integer(c.clone())).collect();
        let dp: Vec<Q> = (1..=d).map(|k| &pq[k] * q(k as i64)).collect();
        if d > 1 && poly_gcd_degree(&pq, &dp) > 0 {
            return Err(Error::BadPolynomial("polynomial is not squarefree".into()));
        }
        let precision_bits = precision_bits.max(64);

        let approx_raw = approximate_roots(&poly);
        let scale = |z: &Complex64| 1e-7 * (1.0 + z.norm());
        let mut reals: Vec<f64> =
            approx_raw.iter().filter(|z| z.im.abs() <= scale(z)).map(|z| z.re).collect();
        reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut uppers: Vec<Complex64> = approx_raw.iter().filter(|z| z.im > scale(z)).copied().collect();
        uppers.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let (r1, r2) = (reals.len(), uppers.len());
        if r1 + 2 * r2 != d {
            return Err(Error::Precision { bits: 53, what: "could not separate real and complex roots".into() });
        }
        let mut approx = Vec::with_capacity(d);
        let mut kinds = Vec::with_capacity(d);
        for &x in &reals {
            approx.push(Complex64::new(x, 0.0));
            kinds.push(EmbeddingKind::Real);
        }
        for z in &uppers {
            let i = approx.len();
            approx.push(*z);
            approx.push(z.conj());
            kinds.push(EmbeddingKind::Complex { conjugate: i + 1 });
            kinds.push(EmbeddingKind::Complex { conjugate: i });
        }

        let exact_roots = approx
            .iter()
            .map(|z| {
                let (gr, gi) = (BigInt::from(z.re.round() as i64), BigInt::from(z.im.round() as i64));
                let ((vr, vi), _) = eval_exact(&poly, &Q::from_integer(gr.clone()), &Q::from_integer(gi.clone()));
                (vr.is_zero() && vi.is_zero()).then_some((gr, gi))
            })
            .collect();

        let mut ring = NumberRing {
            id: String::new(),
            poly,
            degree: d,
            signature: (r1, r2),
            kinds,
            approx,
            exact_roots,
            powers_f64: Vec::new(),
            precision_bits,
            hp_powers: Mutex::new(BTreeMap::new()),
            discriminant: BigInt::zero(),
            trace_form: QMatrix::zeros(0, 0),
            minkowski: Vec::new(),
        };
        ring.id = format!(
            "poly:{}",
            ring.poly.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        let hp = ring.powers_at(precision_bits)?;
        ring.powers_f64 = hp
            .iter()
            .map(|row| row.iter().map(|c| CIv { re: Iv::from_riv(&c.re), im: Iv::from_riv(&c.im) }).collect())
            .collect();
        ring.check_irreducible()?;
        ring.discriminant = ring.compute_discriminant();
        ring.trace_form = ring.compute_trace_form();
        ring.minkowski = ring.compute_minkowski();
        Ok(ring)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn poly(&self) -> &[BigInt] {
        &self.poly
    }

    pub fn spec(&self) -> RingSpec {
        RingSpec {
            poly: self.poly.iter().map(|c| c.to_i64().unwrap_or(0)).collect(),
            precision_bits: self.precision_bits,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn kinds(&self) -> &[EmbeddingKind] {
        &self.kinds
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    pub fn trace_form(&self) -> &QMatrix {
        &self.trace_form
    }

    /// Rows: real embeddings, then (Re τ, Im τ) for each complex pair.
    pub fn minkowski_matrix(&self) -> &[Vec<f64>] {
        &self.minkowski
    }

    pub fn root_approx(&self, emb: usize) -> Complex64 {
        self.approx[emb]
    }

    pub fn root_is_exact(&self, emb: usize) -> bool {
        self.exact_roots[emb].is_some()
    }

    /// Indices of one embedding per conjugate class (real ones and the
    /// upper member of each pair).
    pub fn representatives(&self) -> Vec<usize> {
        (0..self.degree)
            .filter(|&i| match self.kinds[i] {
                EmbeddingKind::Real => true,
                EmbeddingKind::Complex { conjugate } => conjugate > i,
            })
            .collect()
    }

    /// Power table `θ_j^k` for each embedding at the given precision.
    fn powers_at(&self, bits: u32) -> Result<Arc<Vec<Vec<CRIv>>>> {
        if let Some(t) = self.hp_powers.lock().unwrap().get(&bits) {
            return Ok(t.clone());
        }
        let d = self.degree;
        let mut b = bits;
        let discs = loop {
            let mut discs = Vec::with_capacity(d);
            let mut j = 0;
            while j < d {
                let disc = match &self.exact_roots[j] {
                    Some((gr, gi)) => RootDisc {
                        re: Q::from_integer(gr.clone()),
                        im: Q::from_integer(gi.clone()),
                        radius: Q::zero(),
                    },
                    None => refine_root(&self.poly, self.approx[j], self.kinds[j] == EmbeddingKind::Real, b)?,
                };
                if let EmbeddingKind::Complex { conjugate } = self.kinds[j] {
                    let conj = RootDisc { re: disc.re.clone(), im: -disc.im.clone(), radius: disc.radius.clone() };
                    discs.push(disc);
                    discs.push(conj);
                    debug_assert_eq!(conjugate, j + 1);
                    j += 2;
                } else {
                    discs.push(disc);
                    j += 1;
                }
            }
            if certify(&discs) {
                break discs;
            }
            if b >= max_precision_bits() {
                return Err(Error::Precision { bits: b, what: "root isolation".into() });
            }
            b *= 2;
        };
        let work = bits + 16;
        let table: Vec<Vec<CRIv>> = discs
            .iter()
            .enumerate()
            .map(|(j, disc)| {
                let root = CRIv {
                    re: riv_around(&disc.re, &disc.radius),
                    im: if self.kinds[j] == EmbeddingKind::Real {
                        RIv::point(Q::zero())
                    } else {
                        riv_around(&disc.im, &disc.radius)
                    },
                };
                let mut row = Vec::with_capacity(d);
                let mut cur = CRIv { re: RIv::point(q(1)), im: RIv::point(Q::zero()) };
                for _ in 0..d {
                    row.push(cur.clone());
                    cur = cur.mul(&root, work);
                }
                row
            })
            .collect();
        let table = Arc::new(table);
        self.hp_powers.lock().unwrap().insert(bits, table.clone());
        Ok(table)
    }

    fn check_irreducible(&self) -> Result<()> {
        let d = self.degree;
        if d == 1 {
            return Ok(());
        }
        let roots: Vec<CIv> = self.powers_f64.iter().map(|row| {
            if d > 1 { row[1] } else { CIv::ZERO }
        }).collect();
        for mask in 1u32..(1 << d) {
            let k = mask.count_ones() as usize;
            if k > d / 2 {
                continue;
            }
            // only conjugation-closed subsets can give rational factors
            let closed = (0..d).all(|j| {
                mask >> j & 1 == 0
                    || match self.kinds[j] {
                        EmbeddingKind::Real => true,
                        EmbeddingKind::Complex { conjugate } => mask >> conjugate & 1 == 1,
                    }
            });
            if !closed {
                continue;
            }
            let mut coeffs = vec![CIv { re: Iv::exact(1.0), im: Iv::ZERO }];
            for (j, root) in roots.iter().enumerate() {
                if mask >> j & 1 == 0 {
                    continue;
                }
                // multiply by (x - root)
                let mut next = vec![CIv::ZERO; coeffs.len() + 1];
                for (i, c) in coeffs.iter().enumerate() {
                    next[i + 1] = next[i + 1].add(*c);
                    next[i] = next[i].add(c.mul(CIv { re: root.re.neg(), im: root.im.neg() }));
                }
                coeffs = next;
            }
            let candidate: Option<Vec<BigInt>> = coeffs
                .iter()
                .map(|c| {
                    let n = c.re.mid().round();
                    (c.im.lo <= 0.0 && c.im.hi >= 0.0 && c.re.lo <= n && c.re.hi >= n)
                        .then(|| BigInt::from(n as i64))
                })
                .collect();
            if let Some(f) = candidate {
                let fq: Vec<Q> = f.iter().map(|c| Q::from_integer(c.clone())).collect();
                let pq: Vec<Q> = self.poly.iter().map(|c| Q::from_integer(c.clone())).collect();
                let r = poly_rem(&pq, &fq);
                if r.iter().all(Zero::is_zero) {
                    return Err(Error::BadPolynomial(format!("polynomial is reducible (factor {f:?})")));
                }
            }
        }
        Ok(())
    }

    // ---------- exact ring arithmetic in the power basis ----------

    fn reduce(&self, mut c: Vec<BigInt>) -> Vec<BigInt> {
        let d = self.degree;
        while c.len() > d {
            let top = c.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let k = c.len() - d;
            for i in 0..d {
                let t = &top * &self.poly[i];
                c[k + i] -= t;
            }
        }
        c.resize(d, BigInt::zero());
        c
    }

    pub fn mul(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut c = vec![BigInt::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        self.reduce(c)
    }

    pub fn pow(&self, a: &[BigInt], e: u32) -> Vec<BigInt> {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }

    pub fn one(&self) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.degree];
        v[0] = BigInt::one();
        v
    }

    /// Matrix of multiplication by `s` (column k = s θ^k).
    pub fn mult_matrix(&self, s: &[BigInt]) -> Vec<Vec<BigInt>> {
        let d = self.degree;
        let mut cols = Vec::with_capacity(d);
        for k in 0..d {
            let mut e = vec![BigInt::zero(); d];
            e[k] = BigInt::one();
            cols.push(self.mul(s, &e));
        }
        (0..d).map(|i| (0..d).map(|k| cols[k][i].clone()).collect()).collect()
    }

    /// `N_{K/Q}(s)` as the determinant of multiplication by `s`.
    pub fn norm(&self, s: &[BigInt]) -> BigInt {
        int_det(&self.mult_matrix(s))
    }

    pub fn mul_q(&self, a: &[Q], b: &[Q]) -> Vec<Q> {
        let d = self.degree;
        let mut c = vec![Q::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        while c.len() > d {
            let top = c.pop().unwrap();
            let k = c.len() - d;
            for i in 0..d {
                let t = &top * Q::from_integer(self.poly[i].clone());
                c[k + i] -= t;
            }
        }
        c
    }

    /// `Tr_{K/Q}(y)` for `y` in power-basis coordinates.
    pub fn trace_q(&self, y: &[Q]) -> Q {
        (0..self.degree).map(|k| &self.trace_form[(0, k)] * &y[k]).sum()
    }

    /// `N_{K/Q}(y)` for rational `y`.
    pub fn norm_q(&self, y: &[Q]) -> Q {
        let d = self.degree;
        let mut m = QMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = vec![Q::zero(); d];
            e[k] = q(1);
            let mut col = self.mul_q(y, &e);
            col.resize(d, Q::zero());
            for i in 0..d {
                m[(i, k)] = col[i].clone();
            }
        }
        m.det().expect("square")
    }

    /// `sum_σ c_σ Re(σ(θ^j) conj σ(θ^k))` over all embeddings.
    pub fn embedding_gram(&self, scales: &[f64]) -> Vec<Vec<f64>> {
        let d = self.degree;
        let mut g = vec![vec![0.0; d]; d];
        for (e, &c) in scales.iter().enumerate() {
            let row = &self.powers_f64[e];
            for j in 0..d {
                for k in 0..d {
                    let (a, b) = (row[j], row[k]);
                    g[j][k] += c * (a.re.mid() * b.re.mid() + a.im.mid() * b.im.mid());
                }
            }
        }
        g
    }

    fn compute_discriminant(&self) -> BigInt {
        let d = self.degree;
        if d == 1 {
            return BigInt::one();
        }
        // Sylvester matrix of p (degree d) and p' (degree d - 1)
        let dp: Vec<BigInt> = (1..=d).map(|k| &self.poly[k] * BigInt::from(k)).collect();
        let n = 2 * d - 1;
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for i in 0..d - 1 {
            for (k, c) in self.poly.iter().rev().enumerate() {
                m[i][i + k] = c.clone();
            }
        }
        for i in 0..d {
            for (k, c) in dp.iter().rev().enumerate() {
                m[d - 1 + i][i + k] = c.clone();
            }
        }
        let res = int_det(&m);
        if (d * (d - 1) / 2) % 2 == 1 { -res } else { res }
    }

    fn compute_trace_form(&self) -> QMatrix {
        let d = self.degree;
        let mut theta = vec![BigInt::zero(); d];
        if d > 1 {
            theta[1] = BigInt::one();
        } else {
            theta[0] = -self.poly[0].clone();
        }
        let mut traces = Vec::with_capacity(2 * d);
        let mut cur = self.one();
        for _ in 0..2 * d {
            let m = self.mult_matrix(&cur);
            traces.push((0..d).map(|i| m[i][i].clone()).fold(BigInt::zero(), |a, b| a + b));
            cur = self.mul(&cur, &theta);
        }
        let mut t = QMatrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                t[(i, k)] = Q::from_integer(traces[i + k].clone());
            }
        }
        t
    }

    fn compute_minkowski(&self) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.degree);
        for j in self.representatives() {
            let re: Vec<f64> = self.powers_f64[j].iter().map(|c| c.re.mid()).collect();
            rows.push(re);
            if let EmbeddingKind::Complex { .. } = self.kinds[j] {
                rows.push(self.powers_f64[j].iter().map(|c| c.im.mid()).collect());
            }
        }
        rows
    }

    // ---------- evaluation of embeddings ----------

    pub fn eval_i64(&self, emb: usize, x: &[i64]) -> CIv {
        let mut acc = CIv::ZERO;
        for (k, &c) in x.iter().enumerate() {
            if c != 0 {
                acc = acc.add(self.powers_f64[emb][k].scale(Iv::int(c)));
            }
        }
        acc
    }

    /// Uncertified value of `σ_emb(y)` for a real coordinate vector.
    pub fn eval_approx(&self, emb: usize, y: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in y.iter().enumerate() {
            let p = self.powers_f64[emb][k];
            acc += Complex64::new(p.re.mid(), p.im.mid()) * c;
        }
        acc
    }

    pub fn eval_q(&self, emb: usize, x: &[Q]) -> CIv {
        let mut acc = CIv::ZERO;
        for (k, c) in x.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(self.powers_f64[emb][k].scale(Iv::from_q(c)));
            }
        }
        acc
    }

    pub fn eval_hp(&self, emb: usize, x: &[Q], bits: u32) -> Result<CRIv> {
        let table = self.powers_at(bits)?;
        let mut acc = CRIv::zero();
        for (k, c) in x.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&table[emb][k].scale(c, bits + 16));
            }
        }
        Ok(acc)
    }

    /// Exact `(Re, Im)` of `σ(x)` when the root is a Gaussian integer.
    pub fn eval_exact(&self, emb: usize, x: &[Q]) -> Option<(Q, Q)> {
        let (gr, gi) = self.exact_roots[emb].as_ref()?;
        let (gr, gi) = (Q::from_integer(gr.clone()), Q::from_integer(gi.clone()));
        let mut v = (Q::zero(), Q::zero());
        for c in x.iter().rev() {
            v = (&v.0 * &gr - &v.1 * &gi + c, &v.0 * &gi + &v.1 * &gr);
        }
        Some(v)
    }

    /// Compares `|σ_emb(x)|^2` with `bound`.
    pub fn cmp_abs2(&self, emb: usize, x: &[Q], bound: &ExpScale) -> Result<Ordering> {
        if let Some(o) = self.eval_q(emb, x).abs2().cmp_iv(&bound.iv()) {
            return Ok(o);
        }
        if let Some((re, im)) = self.eval_exact(emb, x) {
            let v = &re * &re + &im * &im;
            return bound.cmp_q(&v);
        }
        if bound.is_rational() && self.kinds[emb] == EmbeddingKind::Real {
            // σ(x)^2 - c vanishes iff x^2 - c is zero in K
            let mut y = self.mul_q(x, x);
            y.resize(self.degree, Q::zero());
            y[0] -= &bound.ratio;
            if y.iter().all(Zero::is_zero) {
                return Ok(Ordering::Equal);
            }
        }
        decide_sign(
            |bits| Ok(self.eval_hp(emb, x, bits)?.abs2(bits + 16).sub(&bound.riv(bits))),
            "embedding absolute value against a bound",
        )
    }
}

/// Resolves ring identifiers: a few builtin names, `poly:c0,...,cd`, or
/// explicitly registered rings.
#[derive(Default)]
pub struct RingRegistry {
    rings: HashMap<String, Arc<NumberRing>>,
}

pub fn builtin_poly(name: &str) -> Option<Vec<i64>> {
    match name {
        "QQ" | "Q" => Some(vec![-1, 1]),
        "QQ_i" | "Q(i)" => Some(vec![1, 0, 1]),
        "QQ_sqrt2" | "Q(sqrt2)" => Some(vec![-2, 0, 1]),
        _ => None,
    }
}

impl RingRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, ring: Arc<NumberRing>) {
        self.rings.insert(name.to_string(), ring.clone());
        self.rings.insert(ring.id().to_string(), ring);
    }

    pub fn resolve(&mut self, id: &str) -> Result<Arc<NumberRing>> {
        if let Some(r) = self.rings.get(id) {
            return Ok(r.clone());
        }
        let poly = if let Some(p) = builtin_poly(id) {
            p
        } else if let Some(rest) = id.strip_prefix("poly:") {
            rest.split(',')
                .map(|c| c.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad ring id {id:?}"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            return Err(Error::Parse(format!("unknown ring {id:?}")));
        };
        let ring = Arc::new(NumberRing::new(&poly, crate::interval::start_precision_bits())?);
        self.insert(id, ring.clone());
        Ok(ring)
    }
}

/// `log |N(s)|`, the log-size of the cokernel of multiplication by `s`.
pub fn log_abs_norm(ring: &NumberRing, s: &[BigInt]) -> Result<f64> {
    let n = ring.norm(s);
    if n.is_zero() {
        return Err(Error::InvalidInput("element is zero".into()));
    }
    Ok(crate::interval::ln_q(&Q::from_integer(n.abs())))
}

pub fn gcd_content(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |a, b| a.gcd(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_comparison_near_a_transcendental_bound() {
        // 3·ln 2 rounded to a double lies just below ln 8
        let z = NumberRing::new(&[-1, 1], 128).unwrap();
        let b = ExpScale { ratio: Q::one(), real: 2.0 * (3.0 * std::f64::consts::LN_2) };
        assert_eq!(z.cmp_abs2(0, &[Q::from_integer(8.into())], &b).unwrap(), Ordering::Greater);
        assert_eq!(z.cmp_abs2(0, &[Q::from_integer(7.into())], &b).unwrap(), Ordering::Less);
        let g = NumberRing::new(&[1, 0, 1], 128).unwrap();
        let b = ExpScale { ratio: Q::one(), real: 2f64.ln() };
        let x = [Q::one(), Q::one()];
        assert_eq!(g.cmp_abs2(0, &x, &b).unwrap(), Ordering::Greater);
    }

    #[test]
    fn gaussian_integers() {
        let r = NumberRing::new(&[1, 0, 1], 128).unwrap();
        assert_eq!(r.signature(), (0, 1));
        assert!(r.root_is_exact(0));
        assert_eq!(r.root_approx(0), Complex64::new(0.0, 1.0));
        assert_eq!(r.discriminant(), &BigInt::from(-4));
        let s = vec![BigInt::from(1), BigInt::from(1)];
        assert_eq!(r.norm(&s), BigInt::from(2));
    }

    #[test]
    fn real_quadratic() {
        let r = NumberRing::new(&[-2, 0, 1], 128).unwrap();
        assert_eq!(r.signature(), (2, 0));
        assert!(!r.root_is_exact(0));
        let x = r.root_approx(1).re;
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(r.discriminant(), &BigInt::from(8));
        assert_eq!(r.trace_form(), &QMatrix::from_i64(&[vec![2, 0], vec![0, 4]]).unwrap());
    }

    #[test]
    fn rationals() {
        let r = NumberRing::new(&[-1, 1], 128).unwrap();
        assert_eq!(r.degree(), 1);
        assert_eq!(r.signature(), (1, 0));
        assert!(r.root_is_exact(0));
    }

    #[test]
    fn rejects_bad_polynomials() {
        assert!(matches!(NumberRing::new(&[1, 0, 2], 128), Err(Error::BadPolynomial(_))));
        assert!(matches!(NumberRing::new(&[1, 2, 1], 128), Err(Error::BadPolynomial(_))));
        // (x^2 + 1)(x^2 - 2)
        assert!(matches!(NumberRing::new(&[-2, 0, -1, 0, 1], 128), Err(Error::BadPolynomial(_))));
        // (x - 1)(x^2 + x + 1)
        assert!(matches!(NumberRing::new(&[-1, 0, 0, 1], 128), Err(Error::BadPolynomial(_))));
    }

    #[test]
    fn cyclotomic_rings() {
        let r = NumberRing::new(&[1, 1, 1], 128).unwrap();
        assert_eq!(r.signature(), (0, 1));
        let r = NumberRing::new(&[1, -1, 1, -1, 1], 128).unwrap();
        assert_eq!(r.signature(), (0, 2));
    }

    #[test]
    fn cubic_with_complex_pair() {
        let r = NumberRing::new(&[-2, 0, 0, 1], 128).unwrap();
        assert_eq!(r.signature(), (1, 1));
        assert_eq!(r.discriminant(), &BigInt::from(-108));
        // conjugate embeddings agree in absolute value
        let x = [q(1), q(2), q(-1)];
        let a = r.eval_q(1, &x).abs2();
        let b = r.eval_q(2, &x).abs2();
        assert!((a.mid() - b.mid()).abs() < 1e-12);
    }

    #[test]
    fn boundary_decided_exactly_for_real_embeddings() {
        // σ(2) = 2 in Q(sqrt2): |σ(2)|^2 = 4 is an exact tie
        let r = NumberRing::new(&[-2, 0, 1], 128).unwrap();
        let x = [q(2), q(0)];
        assert_eq!(r.cmp_abs2(0, &x, &ExpScale::rational(q(4))).unwrap(), Ordering::Equal);
        // 1 + sqrt2 squared is 3 + 2 sqrt2 ≈ 5.83
        let y = [q(1), q(1)];
        assert_eq!(r.cmp_abs2(1, &y, &ExpScale::rational(q(6))).unwrap(), Ordering::Less);
        assert_eq!(r.cmp_abs2(0, &y, &ExpScale::rational(q(6))).unwrap(), Ordering::Less);
    }

    #[test]
    fn high_precision_escalation() {
        let r = NumberRing::new(&[-2, 0, 1], 128).unwrap();
        // 3 - 2 sqrt2 ≈ 0.1716; its square ≈ 0.0294 vs 0.029437251522859...
        let x = [q(3), q(-2)];
        let exact = (3.0 - 2.0 * std::f64::consts::SQRT_2).powi(2);
        let bound = ExpScale::rational(crate::rational::q_from_f64(exact).unwrap());
        assert!(r.cmp_abs2(1, &x, &bound).is_ok());
    }
}
