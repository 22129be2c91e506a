//! LLL reduction of a positive-definite Gram matrix in floating point, with
//! the unimodular transform tracked exactly. Reduction quality only affects
//! enumeration speed, never counts.

pub const DELTA: f64 = 0.99;

fn gram_of(g: &[Vec<f64>], u: &[Vec<i64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    // columns of u are the basis vectors
    let mut gu = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            gu[i][j] = (0..n).map(|k| g[i][k] * u[k][j] as f64).sum();
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|k| u[k][i] as f64 * gu[k][j]).sum();
        }
    }
    out
}

/// Gram–Schmidt data of a Gram matrix: `(mu, b*)` with `b*_i = |b_i^*|^2`.
pub fn gram_schmidt(g: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = g.len();
    let mut mu = vec![vec![0.0; n]; n];
    let mut bstar = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= mu[j][k] * mu[i][k] * bstar[k];
            }
            mu[i][j] = s / bstar[j];
        }
        let mut s = g[i][i];
        for k in 0..i {
            s -= mu[i][k] * mu[i][k] * bstar[k];
        }
        bstar[i] = s;
        mu[i][i] = 1.0;
    }
    (mu, bstar)
}

fn add_col(u: &mut [Vec<i64>], dst: usize, src: usize, k: i64) -> bool {
    for row in u.iter_mut() {
        match row[src].checked_mul(k).and_then(|t| row[dst].checked_sub(t)) {
            Some(v) => row[dst] = v,
            None => return false,
        }
    }
    true
}

/// Returns a unimodular `U` (columns = new basis in old coordinates) such
/// that `U^T G U` is LLL-reduced, or the best transform reached before an
/// integer overflow.
pub fn lll_reduce(g: &[Vec<f64>]) -> Vec<Vec<i64>> {
    let n = g.len();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    if n < 2 {
        return u;
    }
    let mut k = 1;
    let mut steps = 0usize;
    while k < n && steps < 10_000 {
        steps += 1;
        // size-reduce column k
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&gram_of(g, &u));
            let r = mu[k][j].round();
            if r == 0.0 {
                continue;
            }
            let mut next = u.clone();
            if r.abs() > 1e15 || !add_col(&mut next, k, j, r as i64) {
                return u;
            }
            u = next;
        }
        let (mu, bstar) = gram_schmidt(&gram_of(g, &u));
        if bstar[k] >= (DELTA - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            k += 1;
        } else {
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = (k - 1).max(1);
        }
    }
    u
}

/// `U^T G U` in floating point.
pub fn transformed_gram(g: &[Vec<f64>], u: &[Vec<i64>]) -> Vec<Vec<f64>> {
    gram_of(g, u)
}
