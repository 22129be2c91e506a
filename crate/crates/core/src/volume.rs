//! Unit-ball volumes and χ̂.

use std::f64::consts::PI;

use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::ExpScale;
use crate::lattice::compile_ball;
use crate::module::NormedZModule;
use crate::norm::NormSpec;
use crate::polytope::{hull_to_functionals, SymmetricPolytope};
use crate::rational::{q_to_f64, QMatrix};

/// Exact polytope volumes are attempted up to this rank.
pub const EXACT_POLYTOPE_MAX_RANK: usize = 6;

const CHUNK: u64 = 1 << 14;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeResult {
    pub value: f64,
    pub method: VolumeMethod,
    /// 95% confidence half-width; 0 for exact values.
    pub half_width: f64,
    pub samples: u64,
}

impl VolumeResult {
    fn exact(value: f64) -> Self {
        VolumeResult { value, method: VolumeMethod::Exact, half_width: 0.0, samples: 0 }
    }

    pub fn is_exact(&self) -> bool {
        self.method == VolumeMethod::Exact
    }

    /// Half-width of the induced interval for `log value`.
    pub fn log_half_width(&self) -> f64 {
        if self.half_width == 0.0 {
            return 0.0;
        }
        let lo = (self.value - self.half_width).max(self.value * 1e-300);
        (self.value.ln() - lo.ln()).max((self.value + self.half_width).ln() - self.value.ln())
    }
}

#[derive(Clone, Debug)]
pub struct VolumeOptions {
    pub seed: u64,
    pub max_samples: u64,
    /// Target relative 95% half-width.
    pub target_rel: f64,
    /// Skip exact formulas and always sample.
    pub force_monte_carlo: bool,
    /// Return the best estimate instead of an error when the target is missed.
    pub allow_partial: bool,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            seed: 0x5eed,
            max_samples: 1_000_000,
            target_rel: 0.01,
            force_monte_carlo: false,
            allow_partial: false,
        }
    }
}

/// Volume of the Euclidean unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        let next = 2.0 * PI / k as f64 * v[k % 2];
        v[k % 2] = next;
    }
    v[n % 2]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn polytope_volume(functionals: &QMatrix) -> Option<f64> {
    let n = functionals.cols();
    if n == functionals.rows() {
        let d = functionals.det().ok()?;
        return Some(2f64.powi(n as i32) / q_to_f64(&d.abs()));
    }
    if n > EXACT_POLYTOPE_MAX_RANK {
        return None;
    }
    SymmetricPolytope::from_functionals(functionals).ok().map(|p| q_to_f64(&p.volume()))
}

fn exact_volume(norm: &NormSpec) -> Result<Option<f64>> {
    let n = norm.dim();
    Ok(match norm {
        NormSpec::Ellipsoid { gram } => Some(unit_ball_volume(n) / q_to_f64(&gram.det()?).sqrt()),
        NormSpec::MaxAbs { functionals } => polytope_volume(functionals),
        NormSpec::Hull { points } => {
            if n == points.rows() {
                Some(2f64.powi(n as i32) * q_to_f64(&points.det()?.abs()) / factorial(n))
            } else if n > EXACT_POLYTOPE_MAX_RANK {
                None
            } else {
                SymmetricPolytope::from_hull(points).ok().map(|p| q_to_f64(&p.volume()))
            }
        }
        NormSpec::EmbeddingSup { ring, weights } => {
            let (r1, r2) = ring.signature();
            let sw: f64 = weights.iter().map(|w| w.value()).sum();
            let disc = ring.discriminant().abs().to_f64().unwrap_or(f64::INFINITY);
            Some(2f64.powi(r1 as i32) * (2.0 * PI).powi(r2 as i32) * sw.exp() / disc.sqrt())
        }
        NormSpec::EmbeddingSum { ring, weights } => {
            let (r1, r2) = ring.signature();
            let sw: f64 = weights.iter().map(|w| w.value()).sum();
            let disc = ring.discriminant().abs().to_f64().unwrap_or(f64::INFINITY);
            Some(2f64.powi(r1 as i32) * PI.powi(r2 as i32) * disc.sqrt() * sw.exp() / factorial(n))
        }
        NormSpec::Scaled { lambda, inner } => exact_volume(inner)?.map(|v| v * (n as f64 * lambda.value()).exp()),
    })
}

/// Floating-point evaluation at real points, precompiled for sampling.
enum RealNorm {
    Quadratic(Vec<Vec<f64>>),
    Functionals(Vec<Vec<f64>>),
    Sup { emb: Vec<(Vec<f64>, Vec<f64>, f64)> },
    Sum { tinv: Vec<Vec<f64>>, emb: Vec<(Vec<f64>, Vec<f64>, f64)> },
    Scaled(f64, Box<RealNorm>),
}

/// Real and imaginary parts of `σ(θ^k)` together with `e^{-w_σ}`.
fn embedding_rows(ring: &crate::ring::NumberRing, weights: &[crate::norm::LogWeight], all: bool) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    let d = ring.degree();
    let embs: Vec<usize> = if all { (0..d).collect() } else { ring.representatives() };
    embs.into_iter()
        .map(|e| {
            let root = ring.root_approx(e);
            let mut p = num_complex::Complex64::new(1.0, 0.0);
            let (mut re, mut im) = (Vec::with_capacity(d), Vec::with_capacity(d));
            for _ in 0..d {
                re.push(p.re);
                im.push(p.im);
                p *= root;
            }
            (re, im, (-weights[e].value()).exp())
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl RealNorm {
    fn compile(norm: &NormSpec) -> Result<RealNorm> {
        Ok(match norm {
            NormSpec::Ellipsoid { gram } => RealNorm::Quadratic(gram.to_f64_rows()),
            NormSpec::MaxAbs { functionals } => RealNorm::Functionals(functionals.to_f64_rows()),
            NormSpec::Hull { points } => RealNorm::Functionals(hull_to_functionals(points)?.to_f64_rows()),
            NormSpec::EmbeddingSup { ring, weights } => RealNorm::Sup { emb: embedding_rows(ring, weights, false) },
            NormSpec::EmbeddingSum { ring, weights } => RealNorm::Sum {
                tinv: ring.trace_form().inverse()?.to_f64_rows(),
                emb: embedding_rows(ring, weights, true),
            },
            NormSpec::Scaled { lambda, inner } => RealNorm::Scaled((-lambda.value()).exp(), Box::new(Self::compile(inner)?)),
        })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RealNorm::Quadratic(g) => g.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum::<f64>().max(0.0).sqrt(),
            RealNorm::Functionals(f) => f.iter().map(|row| dot(row, x).abs()).fold(0.0, f64::max),
            RealNorm::Sup { emb } => emb.iter().map(|(re, im, s)| dot(re, x).hypot(dot(im, x)) * s).fold(0.0, f64::max),
            RealNorm::Sum { tinv, emb } => {
                let y: Vec<f64> = tinv.iter().map(|row| dot(row, x)).collect();
                emb.iter().map(|(re, im, s)| dot(re, &y).hypot(dot(im, &y)) * s).sum()
            }
            RealNorm::Scaled(s, inner) => s * inner.eval(x),
        }
    }
}

/// Lower-triangular `L` with `L Lᵀ = a`.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::DegenerateNorm("bounding form is not positive definite".into()));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
fn solve_upper_t(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s = b[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>();
        x[i] = s / l[i][i];
    }
    x
}

fn hits_in_chunk(norm: &RealNorm, l: &[Vec<f64>], scale: f64, seed: u64, chunk: u64) -> u64 {
    let n = l.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut hits = 0;
    let mut g = vec![0.0; n];
    for _ in 0..CHUNK {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let len = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r: f64 = rng.random::<f64>().powf(1.0 / n as f64);
        let u: Vec<f64> = g.iter().map(|v| v / len * r * scale).collect();
        if norm.eval(&solve_upper_t(l, &u)) <= 1.0 {
            hits += 1;
        }
    }
    hits
}

/// Hit-ratio estimate of the unit-ball volume from uniform samples in the
/// bounding ellipsoid. Samples come in fixed chunks, each from its own
/// ChaCha stream, so the estimate does not depend on the thread count.
pub fn monte_carlo_volume(norm: &NormSpec, opts: &VolumeOptions) -> Result<VolumeResult> {
    norm.validate()?;
    let n = norm.dim();
    if n == 0 {
        return Ok(VolumeResult::exact(1.0));
    }
    let ball = compile_ball(norm, &ExpScale::one())?;
    let (b, r2) = ball.bounding();
    let l = cholesky(b)?;
    let scale = r2.sqrt() * (1.0 + 1e-9);
    let det_l: f64 = (0..n).map(|i| l[i][i]).product();
    let ell_volume = unit_ball_volume(n) * scale.powi(n as i32) / det_l;
    let evaluator = RealNorm::compile(norm)?;
    let max_chunks = opts.max_samples.div_ceil(CHUNK).max(1);
    let batch = 8u64;
    let (mut hits, mut chunks) = (0u64, 0u64);
    loop {
        let upto = (chunks + batch).min(max_chunks);
        hits += (chunks..upto)
            .into_par_iter()
            .map(|c| hits_in_chunk(&evaluator, &l, scale, opts.seed, c))
            .sum::<u64>();
        chunks = upto;
        let samples = chunks * CHUNK;
        let p = hits as f64 / samples as f64;
        let value = ell_volume * p;
        let half_width = Z95 * ell_volume * (p * (1.0 - p) / samples as f64).sqrt();
        let done = hits > 0 && half_width <= opts.target_rel * value;
        if done || chunks >= max_chunks {
            if !done && !opts.allow_partial {
                return Err(Error::MonteCarloBudget {
                    samples,
                    achieved: if value > 0.0 { half_width / value } else { f64::INFINITY },
                    target: opts.target_rel,
                });
            }
            return Ok(VolumeResult { value, method: VolumeMethod::MonteCarlo, half_width, samples });
        }
    }
}

pub fn ball_volume(norm: &NormSpec) -> Result<VolumeResult> {
    ball_volume_with(norm, &VolumeOptions::default())
}

pub fn ball_volume_with(norm: &NormSpec, opts: &VolumeOptions) -> Result<VolumeResult> {
    norm.validate()?;
    if !opts.force_monte_carlo {
        if let Some(v) = exact_volume(norm)? {
            return Ok(VolumeResult::exact(v));
        }
    }
    monte_carlo_volume(norm, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiValue {
    pub value: f64,
    pub half_width: f64,
    pub volume: VolumeResult,
}

/// `χ̂ = log vol(B) + log #M_tor` with covolume 1 in the given basis.
pub fn chi(module: &NormedZModule) -> Result<ChiValue> {
    chi_with(module, &VolumeOptions::default())
}

pub fn chi_with(module: &NormedZModule, opts: &VolumeOptions) -> Result<ChiValue> {
    if module.rank == 0 {
        let volume = VolumeResult::exact(1.0);
        return Ok(ChiValue { value: module.torsion.log_order(), half_width: 0.0, volume });
    }
    let volume = ball_volume_with(&module.norm, opts)?;
    Ok(ChiValue {
        value: volume.value.ln() + module.torsion.log_order(),
        half_width: volume.log_half_width(),
        volume,
    })
}
