//! Fincke–Pohst traversal of a bounding ellipsoid in LLL-reduced
//! coordinates. The innermost coordinate is handled a whole line at a time:
//! balls are convex, so their members on a line form an integer interval
//! whose ends are found by bisection with exact membership tests.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;

use super::ball::Ball;
use super::lll::{gram_schmidt, lll_reduce, transformed_gram};
use super::EnumOptions;
use crate::error::{Error, Result};

/// Relative inflation of the bounding radius to absorb rounding in the
/// floating-point ellipsoid.
const INFLATE: f64 = 1e-8;

#[derive(Clone, Debug, Default)]
pub struct CountOutcome {
    pub count: u64,
    pub examined: u64,
    pub budget_exceeded: bool,
    pub points: Option<Vec<Vec<i64>>>,
}

struct Ctx<'a> {
    ball: &'a dyn Ball,
    u: Vec<Vec<i64>>,
    mu: Vec<Vec<f64>>,
    bstar: Vec<f64>,
    collect: bool,
    budget: u64,
    examined: AtomicU64,
    over: AtomicBool,
}

#[derive(Default)]
struct Acc {
    count: u64,
    points: Vec<Vec<i64>>,
}

impl Ctx<'_> {
    fn tick(&self, k: u64) -> bool {
        let v = self.examined.fetch_add(k, Ordering::Relaxed) + k;
        if v > self.budget {
            self.over.store(true, Ordering::Relaxed);
        }
        self.over.load(Ordering::Relaxed)
    }

    fn range(&self, level: usize, y: &[i64], rem: f64) -> (f64, i64, i64) {
        let n = self.bstar.len();
        let c: f64 = -(level + 1..n).map(|j| self.mu[j][level] * y[j] as f64).sum::<f64>();
        let half = (rem.max(0.0) / self.bstar[level]).sqrt();
        let slack = 1e-9 * (1.0 + c.abs() + half);
        ((c), (c - half - slack).ceil() as i64, (c + half + slack).floor() as i64)
    }

    fn point(&self, y: &[i64], t: i64) -> Vec<i64> {
        let n = self.u.len();
        (0..n)
            .map(|r| self.u[r][0] * t + (1..n).map(|j| self.u[r][j] * y[j]).sum::<i64>())
            .collect()
    }

    fn member(&self, y: &[i64], t: i64) -> Result<bool> {
        self.tick(1);
        self.ball.contains(&self.point(y, t))
    }

    fn approx(&self, y: &[i64], t: i64) -> f64 {
        self.ball.approx(&self.point(y, t))
    }

    fn recurse(&self, level: usize, y: &mut Vec<i64>, rem: f64, acc: &mut Acc) -> Result<()> {
        if self.over.load(Ordering::Relaxed) {
            return Ok(());
        }
        let (c, lo, hi) = self.range(level, y, rem);
        if level == 0 {
            return self.line(y, lo, hi, acc);
        }
        for v in lo..=hi {
            if self.tick(1) {
                return Ok(());
            }
            y[level] = v;
            let d = v as f64 - c;
            let next = rem - self.bstar[level] * d * d;
            self.recurse(level - 1, y, next.max(0.0), acc)?;
        }
        y[level] = 0;
        Ok(())
    }

    fn scan(&self, y: &[i64], lo: i64, hi: i64, acc: &mut Acc) -> Result<()> {
        for t in lo..=hi {
            if self.member(y, t)? {
                self.push(y, t, t, acc);
            }
        }
        Ok(())
    }

    fn push(&self, y: &[i64], from: i64, to: i64, acc: &mut Acc) {
        acc.count += (to - from + 1) as u64;
        if self.collect {
            for t in from..=to {
                acc.points.push(self.point(y, t));
            }
        }
    }

    fn line(&self, y: &[i64], lo: i64, hi: i64, acc: &mut Acc) -> Result<()> {
        if hi < lo {
            return Ok(());
        }
        if !self.ball.convex_lines() || hi - lo <= 6 {
            return self.scan(y, lo, hi, acc);
        }
        // integer ternary search for the minimum of the (convex) norm
        let (mut a, mut b) = (lo, hi);
        while b - a > 2 {
            let m1 = a + (b - a) / 3;
            let m2 = b - (b - a) / 3;
            let (f1, f2) = (self.approx(y, m1), self.approx(y, m2));
            if f1 < f2 {
                b = m2 - 1;
            } else if f1 > f2 {
                a = m1 + 1;
            } else {
                a = m1;
                b = m2;
            }
        }
        let mut best = a;
        for t in a..=b {
            if self.approx(y, t) < self.approx(y, best) {
                best = t;
            }
        }
        if !self.member(y, best)? {
            if self.approx(y, best) <= 1.0 + 1e-6 {
                return self.scan(y, lo, hi, acc);
            }
            return Ok(());
        }
        let left = if self.member(y, lo)? {
            lo
        } else {
            let (mut out, mut inn) = (lo, best);
            while inn - out > 1 {
                let mid = out + (inn - out) / 2;
                if self.member(y, mid)? {
                    inn = mid;
                } else {
                    out = mid;
                }
            }
            inn
        };
        let right = if self.member(y, hi)? {
            hi
        } else {
            let (mut inn, mut out) = (best, hi);
            while out - inn > 1 {
                let mid = inn + (out - inn) / 2;
                if self.member(y, mid)? {
                    inn = mid;
                } else {
                    out = mid;
                }
            }
            inn
        };
        self.push(y, left, right, acc);
        Ok(())
    }
}

/// Counts integer points in the ball (optionally listing them in
/// lexicographic order). The count does not depend on `opts.parallel`.
pub fn count_points(ball: &dyn Ball, opts: &EnumOptions) -> Result<CountOutcome> {
    let n = ball.dim();
    if n == 0 {
        return Ok(CountOutcome {
            count: 1,
            examined: 1,
            budget_exceeded: false,
            points: opts.collect_points.then(|| vec![vec![]]),
        });
    }
    let (g, r2) = ball.bounding();
    if !r2.is_finite() || g.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateNorm("bounding ellipsoid is not finite".into()));
    }
    let u = lll_reduce(g);
    let (mu, bstar) = gram_schmidt(&transformed_gram(g, &u));
    if bstar.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::DegenerateNorm("bounding form is not positive definite".into()));
    }
    let ctx = Ctx {
        ball,
        u,
        mu,
        bstar,
        collect: opts.collect_points,
        budget: opts.budget,
        examined: AtomicU64::new(0),
        over: AtomicBool::new(false),
    };
    let rem = r2.max(0.0) * (1.0 + INFLATE) + 1e-12;
    let mut total = Acc::default();
    if n >= 2 && opts.parallel {
        let top = n - 1;
        let (c, lo, hi) = ctx.range(top, &vec![0; n], rem);
        let parts: Vec<Result<Acc>> = (lo..=hi)
            .into_par_iter()
            .map(|v| {
                let mut acc = Acc::default();
                if ctx.tick(1) {
                    return Ok(acc);
                }
                let mut y = vec![0i64; n];
                y[top] = v;
                let d = v as f64 - c;
                ctx.recurse(top - 1, &mut y, (rem - ctx.bstar[top] * d * d).max(0.0), &mut acc)?;
                Ok(acc)
            })
            .collect();
        for p in parts {
            let p = p?;
            total.count += p.count;
            total.points.extend(p.points);
        }
    } else {
        ctx.recurse(n - 1, &mut vec![0i64; n], rem, &mut total)?;
    }
    let points = opts.collect_points.then(|| {
        let mut p = total.points;
        p.sort();
        p
    });
    Ok(CountOutcome {
        count: total.count,
        examined: ctx.examined.load(Ordering::Relaxed),
        budget_exceeded: ctx.over.load(Ordering::Relaxed),
        points,
    })
}
