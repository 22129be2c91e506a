//! Certified enclosures.
//!
//! Two tiers: [`Iv`] is a double-precision interval widened outward after
//! every operation, cheap enough for inner loops; [`RIv`] has dyadic rational
//! endpoints at a chosen number of fractional bits and is used when a
//! comparison is undecided at double precision. Callers escalate by doubling
//! the bit count up to [`max_precision_bits`].

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{q, q_from_f64, q_to_f64, Q};

static START_BITS: AtomicU32 = AtomicU32::new(128);
static MAX_BITS: AtomicU32 = AtomicU32::new(4096);

pub fn start_precision_bits() -> u32 {
    START_BITS.load(AtomicOrdering::Relaxed)
}

pub fn max_precision_bits() -> u32 {
    MAX_BITS.load(AtomicOrdering::Relaxed)
}

/// Sets the starting precision used when double precision cannot decide a
/// comparison. The cap stays at least 32x the start.
pub fn set_start_precision_bits(bits: u32) {
    let bits = bits.clamp(64, 1 << 16);
    START_BITS.store(bits, AtomicOrdering::Relaxed);
    MAX_BITS.store((bits * 32).max(4096), AtomicOrdering::Relaxed);
}

/// Closed interval of doubles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

impl Iv {
    pub const ZERO: Iv = Iv { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Iv {
        debug_assert!(lo <= hi, "bad interval [{lo}, {hi}]");
        Iv { lo, hi }
    }

    /// Exactly representable point.
    pub fn exact(x: f64) -> Iv {
        Iv { lo: x, hi: x }
    }

    /// Enclosure of an integer (exact below 2^53).
    pub fn int(x: i64) -> Iv {
        let f = x as f64;
        if f.abs() < 9.0e15 {
            Iv::exact(f)
        } else {
            Iv::new(down(f), up(f))
        }
    }

    pub fn from_q(x: &Q) -> Iv {
        let f = q_to_f64(x);
        if x.is_integer() && f.abs() < 9.0e15 {
            return Iv::exact(f);
        }
        Iv::new(down(f), up(f))
    }

    pub fn from_riv(x: &RIv) -> Iv {
        Iv::new(down(q_to_f64(&x.lo)), up(q_to_f64(&x.hi)))
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn add(self, o: Iv) -> Iv {
        Iv::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }

    pub fn sub(self, o: Iv) -> Iv {
        Iv::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }

    pub fn neg(self) -> Iv {
        Iv::new(-self.hi, -self.lo)
    }

    pub fn mul(self, o: Iv) -> Iv {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Iv::new(down(lo), up(hi))
    }

    pub fn scale_int(self, k: i64) -> Iv {
        self.mul(Iv::int(k))
    }

    pub fn sqr(self) -> Iv {
        if self.lo >= 0.0 {
            Iv::new(down(self.lo * self.lo), up(self.hi * self.hi))
        } else if self.hi <= 0.0 {
            Iv::new(down(self.hi * self.hi), up(self.lo * self.lo))
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Iv::new(0.0, up(m * m))
        }
    }

    pub fn abs(self) -> Iv {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Iv::new(0.0, self.lo.abs().max(self.hi))
        }
    }

    pub fn sqrt(self) -> Iv {
        let lo = if self.lo <= 0.0 { 0.0 } else { down(self.lo.sqrt()).max(0.0) };
        Iv::new(lo, up(self.hi.max(0.0).sqrt()))
    }

    /// `exp` of a point; the platform `exp` is within one ulp, we allow four.
    pub fn exp_of(t: f64) -> Iv {
        let e = t.exp();
        let mut lo = e;
        let mut hi = e;
        for _ in 0..4 {
            lo = down(lo);
            hi = up(hi);
        }
        Iv::new(lo.max(0.0), hi)
    }

    /// Sign relative to zero when decided.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo > 0.0 {
            Some(Ordering::Greater)
        } else if self.hi < 0.0 {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Decides `self` against `other` when the intervals are disjoint.
    pub fn cmp_iv(&self, other: &Iv) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

/// Interval with dyadic rational endpoints rounded outward to `bits`
/// fractional bits.
#[derive(Clone, Debug, PartialEq)]
pub struct RIv {
    pub lo: Q,
    pub hi: Q,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits
}

pub fn round_down(x: &Q, bits: u32) -> Q {
    let scaled = x * Q::from_integer(pow2(bits));
    Q::new(scaled.floor().to_integer(), pow2(bits))
}

pub fn round_up(x: &Q, bits: u32) -> Q {
    let scaled = x * Q::from_integer(pow2(bits));
    Q::new(scaled.ceil().to_integer(), pow2(bits))
}

impl RIv {
    pub fn point(x: Q) -> RIv {
        RIv { lo: x.clone(), hi: x }
    }

    pub fn new(lo: Q, hi: Q) -> RIv {
        debug_assert!(lo <= hi);
        RIv { lo, hi }
    }

    pub fn round(self, bits: u32) -> RIv {
        RIv { lo: round_down(&self.lo, bits), hi: round_up(&self.hi, bits) }
    }

    pub fn add(&self, o: &RIv) -> RIv {
        RIv { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &RIv) -> RIv {
        RIv { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> RIv {
        RIv { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn mul(&self, o: &RIv, bits: u32) -> RIv {
        let p = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = p.iter().min().unwrap().clone();
        let hi = p.iter().max().unwrap().clone();
        RIv { lo, hi }.round(bits)
    }

    pub fn scale(&self, s: &Q, bits: u32) -> RIv {
        let a = &self.lo * s;
        let b = &self.hi * s;
        if s.is_negative() { RIv { lo: b, hi: a } } else { RIv { lo: a, hi: b } }.round(bits)
    }

    pub fn sqr(&self, bits: u32) -> RIv {
        let a = &self.lo * &self.lo;
        let b = &self.hi * &self.hi;
        if !self.lo.is_negative() {
            RIv { lo: a, hi: b }
        } else if !self.hi.is_positive() {
            RIv { lo: b, hi: a }
        } else {
            RIv { lo: Q::zero(), hi: a.max(b) }
        }
        .round(bits)
    }

    pub fn abs(&self) -> RIv {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            RIv { lo: Q::zero(), hi: (-self.lo.clone()).max(self.hi.clone()) }
        }
    }

    pub fn sqrt(&self, bits: u32) -> RIv {
        let lo = if self.lo.is_positive() { sqrt_down(&self.lo, bits) } else { Q::zero() };
        let hi = if self.hi.is_positive() { sqrt_up(&self.hi, bits) } else { Q::zero() };
        RIv { lo, hi }
    }

    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }
}

fn sqrt_down(x: &Q, bits: u32) -> Q {
    // floor(sqrt(x * 4^bits)) / 2^bits
    let scaled = x * Q::from_integer(pow2(2 * bits));
    let n = scaled.floor().to_integer();
    Q::new(n.sqrt(), pow2(bits))
}

fn sqrt_up(x: &Q, bits: u32) -> Q {
    let scaled = x * Q::from_integer(pow2(2 * bits));
    let n = scaled.ceil().to_integer();
    let r = n.sqrt();
    let r = if &r * &r == n { r } else { r + 1 };
    Q::new(r, pow2(bits))
}

/// Enclosure of `e^t` for rational `t`, accurate to roughly `2^-bits`
/// relative to max(1, e^t).
pub fn exp_enclosure(t: &Q, bits: u32) -> RIv {
    if t.is_zero() {
        return RIv::point(q(1));
    }
    // halve until |y| <= 1/2
    let mut s: u32 = 0;
    let half = Q::new(BigInt::one(), BigInt::from(2));
    let mut y = t.clone();
    while y.abs() > half {
        y /= Q::from_integer(BigInt::from(2));
        s += 1;
    }
    let w = bits + s + 16;
    let yi = RIv::point(y.clone()).round(w + 8);
    let mut term = RIv::point(q(1));
    let mut sum = RIv::point(q(1));
    let tiny = Q::new(BigInt::one(), pow2(w + 2));
    let mut k: i64 = 1;
    loop {
        term = term.mul(&yi, w + 8).scale(&Q::new(BigInt::one(), BigInt::from(k)), w + 8);
        sum = sum.add(&term);
        k += 1;
        let mag = term.abs().hi;
        if mag < tiny {
            // tail of a series with ratio <= 1/2 is at most twice the last term
            let r = &mag * q(2);
            sum = RIv { lo: &sum.lo - &r, hi: &sum.hi + &r };
            break;
        }
    }
    let mut e = sum.round(w);
    for _ in 0..s {
        e = e.sqr(w);
    }
    e.round(bits)
}

/// Decides the sign of a real quantity by successively tighter enclosures.
/// The closure receives the working precision and returns an enclosure.
pub fn decide_sign(mut enclose: impl FnMut(u32) -> Result<RIv>, what: &str) -> Result<Ordering> {
    let mut bits = start_precision_bits();
    let cap = max_precision_bits();
    loop {
        if let Some(s) = enclose(bits)?.sign() {
            return Ok(s);
        }
        if bits >= cap {
            return Err(Error::Precision { bits, what: what.to_string() });
        }
        bits = (bits * 2).min(cap);
    }
}

/// A positive real of the form `ratio * e^real`, the shape every radius and
/// metric weight takes in this crate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpScale {
    pub ratio: Q,
    pub real: f64,
}

impl ExpScale {
    pub fn one() -> ExpScale {
        ExpScale { ratio: q(1), real: 0.0 }
    }

    pub fn rational(ratio: Q) -> ExpScale {
        ExpScale { ratio, real: 0.0 }
    }

    pub fn is_rational(&self) -> bool {
        self.real == 0.0
    }

    pub fn mul(&self, o: &ExpScale) -> ExpScale {
        ExpScale { ratio: &self.ratio * &o.ratio, real: self.real + o.real }
    }

    pub fn recip(&self) -> ExpScale {
        ExpScale { ratio: self.ratio.recip(), real: -self.real }
    }

    pub fn square(&self) -> ExpScale {
        ExpScale { ratio: &self.ratio * &self.ratio, real: 2.0 * self.real }
    }

    pub fn to_f64(&self) -> f64 {
        q_to_f64(&self.ratio) * self.real.exp()
    }

    pub fn ln(&self) -> f64 {
        ln_q(&self.ratio) + self.real
    }

    pub fn iv(&self) -> Iv {
        Iv::from_q(&self.ratio).mul(Iv::exp_of(self.real))
    }

    pub fn riv(&self, bits: u32) -> RIv {
        if self.real == 0.0 {
            return RIv::point(self.ratio.clone());
        }
        let t = q_from_f64(self.real).expect("finite exponent");
        exp_enclosure(&t, bits + 8).scale(&self.ratio, bits)
    }

    /// Compares a nonnegative exact rational `v` against this value.
    pub fn cmp_q(&self, v: &Q) -> Result<Ordering> {
        if self.real == 0.0 {
            return Ok(v.cmp(&self.ratio));
        }
        if let Some(o) = Iv::from_q(v).cmp_iv(&self.iv()) {
            return Ok(o);
        }
        // e^t is transcendental for rational t != 0, so equality cannot occur
        decide_sign(|bits| Ok(RIv::point(v.clone()).sub(&self.riv(bits))), "rational vs exponential")
    }
}

/// Natural log of a positive rational without overflowing f64.
pub fn ln_q(x: &Q) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return q_to_f64(&Q::from_integer(n.clone())).abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    q_to_f64(&Q::from_integer(top)).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `floor` for a rational as BigInt.
pub fn floor_q(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn is_nonneg_int(x: &BigInt) -> bool {
    x.sign() != Sign::Minus
}
