//! Exhaustive box scan, the ground truth for enumeration tests.

use rayon::prelude::*;

use super::ball::{compile_ball, Ball};
use crate::error::{Error, Result};
use crate::interval::ExpScale;
use crate::module::NormedZModule;

pub const BRUTE_MAX_BOX_POINTS: f64 = 1e8;
pub const BRUTE_MAX_RANK: usize = 6;

fn invert(g: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = g.len();
    let mut a: Vec<Vec<f64>> = g
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| (i == j) as u8 as f64));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(p, c);
        let inv = 1.0 / a[c][c];
        for v in a[c].iter_mut() {
            *v *= inv;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c];
                let pivot = a[c].clone();
                for (v, pv) in a[i].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Largest `|x_i|` over the bounding ellipsoid, rounded down.
fn needed_box(ball: &dyn Ball) -> Result<i64> {
    let (g, r2) = ball.bounding();
    let inv = invert(g).ok_or_else(|| Error::DegenerateNorm("singular bounding form".into()))?;
    let ext = (0..g.len()).map(|i| (r2 * inv[i][i]).max(0.0).sqrt() * (1.0 + 1e-8) + 1e-9).fold(0.0, f64::max);
    Ok(ext.floor() as i64)
}

/// Counts members of the ball in `[-b, b]^n` after checking that the box
/// contains the whole ball.
pub fn brute_force_count(ball: &dyn Ball, box_radius: i64) -> Result<u64> {
    let n = ball.dim();
    if n == 0 {
        return Ok(1);
    }
    if n > BRUTE_MAX_RANK {
        return Err(Error::Unsupported(format!("brute force needs rank ≤ {BRUTE_MAX_RANK}, got {n}")));
    }
    if box_radius < 0 || ((2 * box_radius + 1) as f64).powi(n as i32) > BRUTE_MAX_BOX_POINTS {
        return Err(Error::BudgetExceeded { budget: BRUTE_MAX_BOX_POINTS as u64 });
    }
    let needed = needed_box(ball)?;
    if needed > box_radius {
        return Err(Error::BoxTooSmall { box_radius, needed });
    }
    let b = box_radius;
    (-b..=b)
        .into_par_iter()
        .map(|first| {
            let mut x = vec![-b; n];
            x[0] = first;
            let mut count = 0u64;
            loop {
                if ball.contains(&x)? {
                    count += 1;
                }
                let mut i = n - 1;
                loop {
                    if i == 0 {
                        return Ok(count);
                    }
                    if x[i] < b {
                        x[i] += 1;
                        break;
                    }
                    x[i] = -b;
                    i -= 1;
                }
            }
        })
        .sum()
}

pub fn brute_force_oracle(module: &NormedZModule, box_radius: i64) -> Result<u64> {
    let ball = compile_ball(&module.norm, &ExpScale::one())?;
    brute_force_count(ball.as_ref(), box_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;
    use crate::rational::QMatrix;

    #[test]
    fn small_boxes() {
        let e = NormedZModule::free(NormSpec::euclidean(2)).unwrap();
        assert_eq!(brute_force_oracle(&e, 1).unwrap(), 5);
        let l1 = NormSpec::MaxAbs { functionals: QMatrix::from_i64(&[vec![1, 1], vec![1, -1]]).unwrap() };
        assert_eq!(brute_force_oracle(&NormedZModule::free(l1).unwrap(), 1).unwrap(), 5);
    }

    #[test]
    fn rejects_small_box() {
        let g = QMatrix::from_rows(vec![vec![crate::rational::qr(1, 9)]]).unwrap();
        let m = NormedZModule::free(NormSpec::Ellipsoid { gram: g }).unwrap();
        assert!(matches!(brute_force_oracle(&m, 2), Err(Error::BoxTooSmall { needed: 3, .. })));
        assert_eq!(brute_force_oracle(&m, 3).unwrap(), 7);
    }
}
