//! Exact rational linear programming for the small programs behind dual and
//! quotient norms of polytope norms. Dense two-phase simplex with Bland's rule,
//! so it always terminates; dimensions here stay below a few dozen.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{QMatrix, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Q, x: Vec<Q> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows 0..m constraints, each of width n + 1 (last column = rhs)
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs for objective `cost` (length n).
    fn reduced(&self, cost: &[Q], allowed: &[bool]) -> Vec<Q> {
        let mut red = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.n {
                if !self.rows[i][j].is_zero() {
                    red[j] -= cb * &self.rows[i][j];
                }
            }
        }
        for j in 0..self.n {
            if !allowed[j] {
                red[j] = Q::zero();
            }
        }
        red
    }

    /// Runs the simplex minimizing `cost`; returns false when unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let red = self.reduced(cost, allowed);
            // Bland: smallest index with negative reduced cost
            let Some(enter) = (0..self.n).find(|&j| allowed[j] && red[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if a.is_positive() {
                    let ratio = &row[self.n] / a;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x >= 0`.
pub fn minimize(c: &[Q], a: &QMatrix, b: &[Q]) -> LpOutcome {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let neg = b[i].is_negative();
        let mut row = vec![Q::zero(); total + 1];
        for j in 0..n {
            row[j] = if neg { -a[(i, j)].clone() } else { a[(i, j)].clone() };
        }
        row[n + i] = Q::one();
        row[total] = if neg { -b[i].clone() } else { b[i].clone() };
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), n: total };
    let mut phase1 = vec![Q::zero(); total];
    for v in phase1.iter_mut().skip(n) {
        *v = Q::one();
    }
    let all = vec![true; total];
    t.optimize(&phase1, &all);
    let infeas: Q = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(i, _)| t.rows[i][total].clone())
        .sum();
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // drive artificial variables out of the basis where possible
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, j);
            }
        }
    }
    let mut cost = vec![Q::zero(); total];
    cost[..n].clone_from_slice(c);
    let mut allowed = vec![true; total];
    for v in allowed.iter_mut().skip(n) {
        *v = false;
    }
    if !t.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][total].clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { value, x }
}

/// `min { ||c||_1 : sum_i c_i rows_i = target }`: the gauge of the symmetric
/// hull of the rows, i.e. the dual of the max-abs norm with these rows.
pub fn l1_representation(rows: &QMatrix, target: &[Q]) -> Result<Q> {
    let m = rows.rows();
    let n = rows.cols();
    if target.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: target.len() });
    }
    // variables c+ (m), c- (m); constraints: for each coordinate k
    let mut a = QMatrix::zeros(n, 2 * m);
    for k in 0..n {
        for i in 0..m {
            a[(k, i)] = rows[(i, k)].clone();
            a[(k, m + i)] = -rows[(i, k)].clone();
        }
    }
    let cost = vec![Q::one(); 2 * m];
    match minimize(&cost, &a, target) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::Infeasible("target outside the span of the hull points".into())),
        LpOutcome::Unbounded => unreachable!("l1 objective is bounded below"),
    }
}

/// `max { <x, y> : |F y|_inf <= 1 }`, the support function of the max-abs
/// unit ball in direction `x`.
pub fn support_of_maxabs(functionals: &QMatrix, x: &[Q]) -> Result<Q> {
    let m = functionals.rows();
    let n = functionals.cols();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    // y = y+ - y-, slacks s (F y + s = 1) and s' (-F y + s' = 1)
    let vars = 2 * n + 2 * m;
    let mut a = QMatrix::zeros(2 * m, vars);
    let mut b = vec![Q::one(); 2 * m];
    for i in 0..m {
        for k in 0..n {
            let f = functionals[(i, k)].clone();
            a[(i, k)] = f.clone();
            a[(i, n + k)] = -f.clone();
            a[(m + i, k)] = -f.clone();
            a[(m + i, n + k)] = f;
        }
        a[(i, 2 * n + i)] = Q::one();
        a[(m + i, 2 * n + m + i)] = Q::one();
        b[i] = Q::one();
    }
    let mut cost = vec![Q::zero(); vars];
    for k in 0..n {
        cost[k] = -x[k].clone();
        cost[n + k] = x[k].clone();
    }
    match minimize(&cost, &a, &b) {
        LpOutcome::Optimal { value, .. } => Ok(-value),
        LpOutcome::Unbounded => Err(Error::DegenerateNorm("functionals do not bound the ball".into())),
        LpOutcome::Infeasible => unreachable!("origin is feasible"),
    }
}

/// `min { max_i |F_i x| : G x = y }`, the quotient of a max-abs norm.
pub fn quotient_of_maxabs(functionals: &QMatrix, surjection: &QMatrix, y: &[Q]) -> Result<Q> {
    let m = functionals.rows();
    let n = functionals.cols();
    let k = surjection.rows();
    if surjection.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: surjection.cols() });
    }
    if y.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: y.len() });
    }
    // variables x+ (n), x- (n), t (1), slacks s (m), s' (m)
    let vars = 2 * n + 1 + 2 * m;
    let tcol = 2 * n;
    let mut a = QMatrix::zeros(2 * m + k, vars);
    let mut b = vec![Q::zero(); 2 * m + k];
    for i in 0..m {
        for j in 0..n {
            let f = functionals[(i, j)].clone();
            a[(i, j)] = f.clone();
            a[(i, n + j)] = -f.clone();
            a[(m + i, j)] = -f.clone();
            a[(m + i, n + j)] = f;
        }
        a[(i, tcol)] = -Q::one();
        a[(m + i, tcol)] = -Q::one();
        a[(i, tcol + 1 + i)] = Q::one();
        a[(m + i, tcol + 1 + m + i)] = Q::one();
    }
    for r in 0..k {
        for j in 0..n {
            let g = surjection[(r, j)].clone();
            a[(2 * m + r, j)] = g.clone();
            a[(2 * m + r, n + j)] = -g;
        }
        b[2 * m + r] = y[r].clone();
    }
    let mut cost = vec![Q::zero(); vars];
    cost[tcol] = Q::one();
    match minimize(&cost, &a, &b) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::NotSurjective { rank: surjection.rank(), rows: k }),
        LpOutcome::Unbounded => unreachable!("objective bounded below by zero"),
    }
}
