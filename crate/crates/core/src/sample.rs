//! Seeded random instances for cross-checks and verification suites.

use num_traits::Signed;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::module::{NormedZModule, TorsionData};
use crate::norm::NormSpec;
use crate::rational::{q, qr, QMatrix, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormFamily {
    Ellipsoid,
    MaxAbs,
}

/// Entry distribution: `p / den` with `den ≤ max_den` and `|p / den| ≤ bound`.
#[derive(Clone, Copy, Debug)]
pub struct EntryRange {
    pub bound: i64,
    pub max_den: i64,
}

impl EntryRange {
    pub const INTEGERS: EntryRange = EntryRange { bound: 3, max_den: 1 };

    fn sample(&self, rng: &mut impl Rng) -> Q {
        let den = rng.random_range(1..=self.max_den);
        qr(rng.random_range(-self.bound * den..=self.bound * den), den)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the master seed.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, e: EntryRange) -> QMatrix {
    QMatrix::from_rows((0..rows).map(|_| (0..cols).map(|_| e.sample(rng)).collect()).collect()).unwrap()
}

/// Symmetric positive-definite Gram matrix with entries in the range, built
/// row by row: each new diagonal entry is drawn above the Schur complement
/// bound of the rows before it.
pub fn random_gram(rng: &mut impl Rng, n: usize, e: EntryRange) -> QMatrix {
    let mut g: Vec<Vec<Q>> = Vec::with_capacity(n);
    let limit = q(e.bound);
    while g.len() < n {
        let k = g.len();
        let v: Vec<Q> = (0..k).map(|_| e.sample(rng)).collect();
        let floor = if k == 0 {
            q(0)
        } else {
            let prev = QMatrix::from_rows(g.clone()).unwrap();
            let y = prev.solve_vec(&v).unwrap();
            y.iter().zip(&v).map(|(a, b)| a * b).sum()
        };
        if floor >= limit {
            continue;
        }
        let d = loop {
            let d = e.sample(rng).abs();
            if d > floor {
                break d;
            }
        };
        for (row, x) in g.iter_mut().zip(&v) {
            row.push(x.clone());
        }
        let mut row = v;
        row.push(d);
        g.push(row);
    }
    QMatrix::from_rows(g).unwrap()
}

/// `m × n` functional matrix of full column rank, `n ≤ m ≤ n + extra`.
pub fn random_functionals(rng: &mut impl Rng, n: usize, extra: usize, e: EntryRange) -> QMatrix {
    let m = n + rng.random_range(0..=extra);
    loop {
        let f = random_matrix(rng, m, n, e);
        if f.rank() == n {
            return f;
        }
    }
}

pub fn random_norm(rng: &mut impl Rng, n: usize, family: NormFamily, e: EntryRange) -> NormSpec {
    match family {
        NormFamily::Ellipsoid => NormSpec::Ellipsoid { gram: random_gram(rng, n, e) },
        NormFamily::MaxAbs => NormSpec::MaxAbs { functionals: random_functionals(rng, n, 3, e) },
    }
}

pub fn random_torsion(rng: &mut impl Rng) -> TorsionData {
    let choices: [&[u64]; 5] = [&[], &[], &[2], &[3], &[2, 4]];
    TorsionData::new(choices.choose(rng).unwrap().to_vec()).unwrap()
}

pub fn random_module(rng: &mut impl Rng, n: usize, family: NormFamily, e: EntryRange, torsion: bool) -> NormedZModule {
    let t = if torsion { random_torsion(rng) } else { TorsionData::none() };
    NormedZModule::new(n, t, random_norm(rng, n, family, e)).unwrap()
}

/// Unimodular integer matrix built from elementary operations.
pub fn random_unimodular(rng: &mut impl Rng, n: usize, steps: usize) -> QMatrix {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    if n >= 2 {
        for _ in 0..steps {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let k = rng.random_range(-2..=2i64);
            for row in m.iter_mut() {
                row[i] += k * row[j];
            }
        }
    }
    for i in 0..n {
        if rng.random_bool(0.5) {
            for row in m.iter_mut() {
                row[i] = -row[i];
            }
        }
    }
    QMatrix::from_i64(&m).unwrap()
}
