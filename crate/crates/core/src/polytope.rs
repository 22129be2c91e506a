//! Centrally symmetric polytopes `{x : |F x|_inf <= 1}` in exact arithmetic.

use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{q, q_to_f64, QMatrix, Q};

/// Vertex enumeration cap; `C(m, n) * 2^n` linear solves.
const MAX_SYSTEMS: u128 = 2_000_000;

#[derive(Clone, Debug)]
pub struct SymmetricPolytope {
    pub dim: usize,
    pub vertices: Vec<Vec<Q>>,
    /// For each vertex, the tight half-space indices (2i: F_i x = 1, 2i+1: F_i x = -1).
    tight: Vec<BTreeSet<usize>>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Floating-point inverse, `None` when a pivot is tiny relative to the
/// matrix scale (the exact path then decides).
fn inverse_f64(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().copied().chain((0..n).map(|j| (i == j) as u8 as f64)).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))?;
        if m[p][c].abs() <= 1e-9 * scale {
            return None;
        }
        m.swap(p, c);
        let inv = 1.0 / m[c][c];
        for x in m[c].iter_mut() {
            *x *= inv;
        }
        let pivot = m[c].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != c {
                let k = row[c];
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= k * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn combinations(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl SymmetricPolytope {
    pub fn from_functionals(f: &QMatrix) -> Result<Self> {
        let m = f.rows();
        let n = f.cols();
        if n == 0 {
            return Ok(SymmetricPolytope { dim: 0, vertices: vec![vec![]], tight: vec![BTreeSet::new()] });
        }
        if f.rank() < n {
            return Err(Error::DegenerateNorm("functional matrix lacks full column rank".into()));
        }
        let systems = binomial(m, n).saturating_mul(1u128 << n.min(100));
        if systems > MAX_SYSTEMS {
            return Err(Error::Unsupported(format!(
                "vertex enumeration needs {systems} solves (cap {MAX_SYSTEMS})"
            )));
        }
        let ff = f.to_f64_rows();
        let mut seen: HashSet<Vec<Q>> = HashSet::new();
        let mut found_f: Vec<Vec<f64>> = Vec::new();
        let mut vertices = Vec::new();
        combinations(m, n, |rows| {
            let sub_f: Vec<Vec<f64>> = rows.iter().map(|&i| ff[i].clone()).collect();
            let inv_f = inverse_f64(&sub_f);
            let mut exact: Option<QMatrix> = None;
            for signs in 0..(1u32 << n) {
                if let Some(inv_f) = &inv_f {
                    let sign = |k: usize| if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                    let vf: Vec<f64> =
                        inv_f.iter().map(|r| r.iter().enumerate().map(|(k, a)| a * sign(k)).sum()).collect();
                    let slack = 1e-7 * (1.0 + vf.iter().map(|x| x.abs()).sum::<f64>());
                    if ff.iter().any(|r| r.iter().zip(&vf).map(|(a, b)| a * b).sum::<f64>().abs() > 1.0 + slack) {
                        continue;
                    }
                    // degenerate vertices are hit by many row subsets
                    if found_f.iter().any(|w: &Vec<f64>| w.iter().zip(&vf).all(|(a, b)| (a - b).abs() <= slack * 1e-2)) {
                        continue;
                    }
                }
                if exact.is_none() {
                    let sub = QMatrix::from_rows(rows.iter().map(|&i| f.row(i).to_vec()).collect()).unwrap();
                    match sub.inverse() {
                        Ok(inv) => exact = Some(inv),
                        Err(_) => return,
                    }
                }
                let inv = exact.as_ref().unwrap();
                let s: Vec<Q> =
                    (0..n).map(|k| if signs >> k & 1 == 1 { -Q::one() } else { Q::one() }).collect();
                let v = inv.mul_vec(&s).unwrap();
                if seen.contains(&v) {
                    continue;
                }
                let feasible = (0..m).all(|i| {
                    let val: Q = f.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
                    val.abs() <= Q::one()
                });
                if feasible {
                    found_f.push(v.iter().map(q_to_f64).collect());
                    seen.insert(v.clone());
                    vertices.push(v);
                }
            }
        });
        Ok(Self::with_tight_sets(f, vertices))
    }

    /// `conv(±points)`, with vertices taken from the points rather than
    /// enumerated from the (possibly many) facets.
    pub fn from_hull(points: &QMatrix) -> Result<Self> {
        let n = points.cols();
        if n == 0 {
            return Ok(SymmetricPolytope { dim: 0, vertices: vec![vec![]], tight: vec![BTreeSet::new()] });
        }
        let facets = hull_to_functionals(points)?;
        let mut candidates: Vec<Vec<Q>> = Vec::new();
        for p in points.row_vecs() {
            if p.iter().all(Zero::is_zero) {
                continue;
            }
            candidates.push(p.iter().map(|x| -x).collect());
            candidates.push(p);
        }
        candidates.sort();
        candidates.dedup();
        let all = Self::with_tight_sets(&facets, candidates);
        let (mut vertices, mut tight) = (Vec::new(), Vec::new());
        for (v, t) in all.vertices.into_iter().zip(all.tight) {
            let rows: Vec<Vec<Q>> = t
                .iter()
                .map(|&c| {
                    let r = facets.row(c / 2);
                    if c % 2 == 0 { r.to_vec() } else { r.iter().map(|x| -x).collect() }
                })
                .collect();
            if !rows.is_empty() && QMatrix::from_rows(rows)?.rank() == n {
                vertices.push(v);
                tight.push(t);
            }
        }
        Ok(SymmetricPolytope { dim: n, vertices, tight })
    }

    fn with_tight_sets(f: &QMatrix, mut vertices: Vec<Vec<Q>>) -> Self {
        let (m, n) = (f.rows(), f.cols());
        vertices.sort();
        let tight = vertices
            .iter()
            .map(|v| {
                let mut t = BTreeSet::new();
                for i in 0..m {
                    let val: Q = f.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
                    if val == Q::one() {
                        t.insert(2 * i);
                    } else if val == -Q::one() {
                        t.insert(2 * i + 1);
                    }
                }
                t
            })
            .collect();
        SymmetricPolytope { dim: n, vertices, tight }
    }

    /// One representative of each antipodal vertex pair.
    pub fn half_vertices(&self) -> Vec<Vec<Q>> {
        self.vertices
            .iter()
            .filter(|v| v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_positive()))
            .cloned()
            .collect()
    }

    fn affine_dim(&self, verts: &[usize]) -> usize {
        if verts.len() <= 1 {
            return 0;
        }
        let base = &self.vertices[verts[0]];
        let rows: Vec<Vec<Q>> = verts[1..]
            .iter()
            .map(|&i| self.vertices[i].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        QMatrix::from_rows(rows).unwrap().rank()
    }

    fn triangulate(&self, verts: &[usize], dim: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v0 = verts[0];
        if dim == 0 {
            let mut s = prefix.clone();
            s.push(v0);
            out.push(s);
            return;
        }
        let constraints: BTreeSet<usize> = verts.iter().flat_map(|&v| self.tight[v].iter().copied()).collect();
        let mut faces: HashSet<Vec<usize>> = HashSet::new();
        for c in constraints {
            let sub: Vec<usize> = verts.iter().copied().filter(|&v| self.tight[v].contains(&c)).collect();
            if sub.len() < dim || sub.contains(&v0) || faces.contains(&sub) {
                continue;
            }
            if self.affine_dim(&sub) == dim - 1 {
                faces.insert(sub);
            }
        }
        let mut faces: Vec<Vec<usize>> = faces.into_iter().collect();
        faces.sort();
        prefix.push(v0);
        for face in faces {
            self.triangulate(&face, dim - 1, prefix, out);
        }
        prefix.pop();
    }

    /// Exact volume by pulling triangulation from the lowest-indexed vertex.
    pub fn volume(&self) -> Q {
        let n = self.dim;
        if n == 0 {
            return Q::one();
        }
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let mut simplices = Vec::new();
        self.triangulate(&all, n, &mut Vec::new(), &mut simplices);
        let mut fact = Q::one();
        for k in 2..=n {
            fact *= q(k as i64);
        }
        let mut total = Q::zero();
        for s in simplices {
            let base = &self.vertices[s[0]];
            let rows: Vec<Vec<Q>> = s[1..]
                .iter()
                .map(|&i| self.vertices[i].iter().zip(base).map(|(a, b)| a - b).collect())
                .collect();
            total += QMatrix::from_rows(rows).unwrap().det().unwrap().abs();
        }
        total / fact
    }
}

/// Facet functionals of `conv(±points)`: the vertices of the polar polytope.
pub fn hull_to_functionals(points: &QMatrix) -> Result<QMatrix> {
    let polar = SymmetricPolytope::from_functionals(points)?;
    QMatrix::from_rows(polar.half_vertices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    #[test]
    fn cube_and_cross_polytope() {
        let cube = SymmetricPolytope::from_functionals(&QMatrix::identity(3)).unwrap();
        assert_eq!(cube.vertices.len(), 8);
        assert_eq!(cube.volume(), q(8));
        // l1 ball in the plane via functionals x+y, x-y
        let f = QMatrix::from_i64(&[vec![1, 1], vec![1, -1]]).unwrap();
        let diamond = SymmetricPolytope::from_functionals(&f).unwrap();
        assert_eq!(diamond.volume(), q(2));
    }

    #[test]
    fn hull_drops_interior_points() {
        // cross polytope plus a point inside it and a repeated vertex
        let p = QMatrix::from_rows(vec![
            vec![q(1), q(0), q(0)],
            vec![q(0), q(1), q(0)],
            vec![q(0), q(0), q(1)],
            vec![qr(1, 4), qr(1, 4), q(0)],
            vec![q(-1), q(0), q(0)],
        ])
        .unwrap();
        let h = SymmetricPolytope::from_hull(&p).unwrap();
        assert_eq!(h.vertices.len(), 6);
        assert_eq!(h.volume(), qr(4, 3));
        let hex = QMatrix::from_i64(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let direct = SymmetricPolytope::from_functionals(&hull_to_functionals(&hex).unwrap()).unwrap();
        assert_eq!(SymmetricPolytope::from_hull(&hex).unwrap().volume(), direct.volume());
    }

    #[test]
    fn l1_ball_in_three_dims() {
        // 8 facet functionals (±1,±1,±1); volume 8/6
        let mut rows = vec![];
        for s in 0..4 {
            rows.push(vec![1, if s & 1 == 1 { -1 } else { 1 }, if s & 2 == 2 { -1 } else { 1 }]);
        }
        let p = SymmetricPolytope::from_functionals(&QMatrix::from_i64(&rows).unwrap()).unwrap();
        assert_eq!(p.vertices.len(), 6);
        assert_eq!(p.volume(), qr(4, 3));
    }

    #[test]
    fn redundant_rows_and_hexagon() {
        // hexagon |x|<=1, |y|<=1, |x+y|<=1 has area 3
        let f = QMatrix::from_rows(vec![
            vec![q(1), q(0)],
            vec![q(0), q(1)],
            vec![q(1), q(1)],
            vec![qr(1, 2), qr(-1, 2)],
        ])
        .unwrap();
        let p = SymmetricPolytope::from_functionals(&f).unwrap();
        assert_eq!(p.vertices.len(), 6);
        assert_eq!(p.volume(), q(3));
    }

    #[test]
    fn hull_of_unit_vectors_is_cross_polytope() {
        let f = hull_to_functionals(&QMatrix::identity(2)).unwrap();
        assert_eq!(f.rows(), 2);
        let p = SymmetricPolytope::from_functionals(&f).unwrap();
        assert_eq!(p.volume(), q(2));
    }
}
