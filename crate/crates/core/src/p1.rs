//! Integer binary forms of degree `m` as sections of `O(m)` on `P¹` over ℤ,
//! with the Fubini–Study metric `|s(z)| / (|z₀|² + |z₁|²)^{m/2}` and the
//! normalized Fubini–Study volume form.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gs::{log_factorial, xlogx, InequalityReport};
use crate::interval::ExpScale;
use crate::lattice::{count_points, enumerate_ball, Ball, EnumOptions, EnumerationReport};
use crate::module::NormedZModule;
use crate::norm::NormSpec;
use crate::rational::{q_to_f64, QMatrix, Q};
use crate::sample::instance_rng;
use crate::volume::{unit_ball_volume, VolumeMethod, VolumeResult};

/// `Σ_k c_k x^k y^{m-k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryForm {
    pub coeffs: Vec<i64>,
}

impl BinaryForm {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("a form of degree m has m + 1 coefficients".into()));
        }
        Ok(BinaryForm { coeffs })
    }

    /// `x^k y^{m-k}`.
    pub fn monomial(m: usize, k: usize) -> Self {
        let mut coeffs = vec![0; m + 1];
        coeffs[k] = 1;
        BinaryForm { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The form with `x` and `y` exchanged.
    pub fn reversed(&self) -> Self {
        BinaryForm { coeffs: self.coeffs.iter().rev().copied().collect() }
    }

    pub fn eval(&self, z0: Complex64, z1: Complex64) -> Complex64 {
        let m = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| z0.powu(k as u32) * z1.powu((m - k) as u32) * c as f64)
            .sum()
    }

    fn as_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|&c| c as f64).collect()
    }
}

/// Quadrature and sup-search parameters for degree `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FSNormContext {
    pub m: usize,
    /// Gauss–Legendre nodes in `t = cos² a`.
    pub quad_t: usize,
    /// Uniform nodes in the phase `φ`.
    pub quad_phi: usize,
    /// Grid intervals on `a ∈ [0, π/2]`; the phase uses four times as many.
    pub grid: usize,
    pub tol: f64,
}

impl FSNormContext {
    pub fn new(m: usize) -> Self {
        FSNormContext { m, quad_t: 2 * (m + 1), quad_phi: 2 * (m + 1), grid: 8 * (m + 1), tol: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        let need = 4 * (self.m + 1) * (self.m + 1);
        if self.quad_t * self.quad_phi < need || self.quad_phi <= self.m || 2 * self.quad_t < self.m + 1 {
            return Err(Error::InvalidInput(format!(
                "quadrature {}x{} is too small for degree {} (need at least {need} nodes)",
                self.quad_t, self.quad_phi, self.m
            )));
        }
        if self.grid == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput("grid must be positive and tolerance > 0".into()));
        }
        Ok(())
    }

    fn check(&self, s: &BinaryForm) -> Result<()> {
        self.validate()?;
        if s.degree() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m + 1, got: s.coeffs.len() });
        }
        Ok(())
    }
}

/// `|s(z₀, z₁)| / (|z₀|² + |z₁|²)^{m/2}`.
pub fn p1_pointwise_norm(s: &BinaryForm, z0: Complex64, z1: Complex64) -> Result<f64> {
    let n2 = z0.norm_sqr() + z1.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::InvalidInput("(0, 0) is not a point of P¹".into()));
    }
    Ok(s.eval(z0, z1).norm() / n2.powf(s.degree() as f64 / 2.0))
}

/// `|s|` at `(cos a, sin a · e^{iφ})`, by Horner in the second variable.
fn chart_abs(c: &[f64], a: f64, phi: f64) -> f64 {
    let (sa, ca) = a.sin_cos();
    let w = Complex64::from_polar(sa, phi);
    let mut acc = Complex64::new(c[0], 0.0);
    let mut cpow = 1.0;
    for &ck in &c[1..] {
        cpow *= ca;
        acc = acc * w + ck * cpow;
    }
    acc.norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    /// Best value found, a lower bound for the supremum.
    pub value: f64,
    /// Bound from the grid maximum and Bernstein's inequality.
    pub upper: f64,
    pub gap: f64,
    /// Chart coordinates `(a, φ)` of the best point.
    pub argmax: (f64, f64),
}

impl SupNorm {
    fn exact(v: f64, argmax: (f64, f64)) -> Self {
        SupNorm { value: v, upper: v, gap: 0.0, argmax }
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn sup_search(c: &[f64], grid: usize, tol: f64) -> SupNorm {
    let m = c.len() - 1;
    let nz: Vec<usize> = (0..=m).filter(|&k| c[k] != 0.0).collect();
    match nz.as_slice() {
        [] => return SupNorm::exact(0.0, (0.0, 0.0)),
        &[k] => {
            // |c| cos^k a sin^{m-k} a peaks at cos² a = k/m
            let (kf, mf) = (k as f64, m as f64);
            let t = if m == 0 { 1.0 } else { kf / mf };
            let v = c[k].abs() * (t.powf(kf) * (1.0 - t).powf(mf - kf)).sqrt();
            return SupNorm::exact(v, (t.sqrt().acos(), 0.0));
        }
        _ => {}
    }
    let n_a = grid;
    let n_phi = 4 * grid;
    let h_a = FRAC_PI_2 / n_a as f64;
    let h_phi = 2.0 * PI / n_phi as f64;
    let mut top: Vec<(f64, f64, f64)> = Vec::new();
    let mut grid_max: f64 = 0.0;
    for i in 0..=n_a {
        let a = i as f64 * h_a;
        let rows = if i == 0 { 1 } else { n_phi };
        for j in 0..rows {
            let phi = j as f64 * h_phi;
            let v = chart_abs(c, a, phi);
            grid_max = grid_max.max(v);
            if top.len() < 4 || v > top[top.len() - 1].0 {
                top.push((v, a, phi));
                top.sort_by(|x, y| y.0.total_cmp(&x.0));
                top.truncate(4);
            }
        }
    }
    let mut best = (grid_max, top[0].1, top[0].2);
    for &(_, a0, p0) in &top {
        let (mut a, mut p) = (a0, p0);
        let mut val = chart_abs(c, a, p);
        for _ in 0..40 {
            let (na, _) = golden_max(|x| chart_abs(c, x, p), a - h_a, a + h_a, tol);
            let (np, nv) = golden_max(|y| chart_abs(c, na, y), p - h_phi, p + h_phi, tol);
            let done = nv - val <= tol * (1.0 + val);
            if nv > val {
                (a, p, val) = (na, np, nv);
            }
            if done {
                break;
            }
        }
        if val > best.0 {
            best = (val, a, p);
        }
    }
    // |s|² has frequencies at most 2m in a and m in φ, so along any unit
    // direction its second derivative is at most 5 m² times its maximum
    let m2 = (m * m) as f64;
    let shrink = 1.0 - 1.25 * m2 * (h_a * h_a + h_phi * h_phi);
    let upper = if shrink > 0.0 { grid_max / shrink.sqrt() * (1.0 + 1e-12) } else { f64::INFINITY };
    let upper = upper.max(best.0);
    SupNorm { value: best.0, upper, gap: upper - best.0, argmax: (best.1, best.2) }
}

/// `sup_{P¹(ℂ)} |s|`, searched on a grid in `(a, φ)` and refined by golden
/// section.
pub fn p1_sup_norm(s: &BinaryForm, ctx: &FSNormContext) -> Result<SupNorm> {
    ctx.check(s)?;
    Ok(sup_search(&s.as_f64(), ctx.grid, ctx.tol))
}

/// Gram matrix of the monomial basis for `∫ |s|² Ω` by quadrature.
pub fn p1_l2_gram(ctx: &FSNormContext) -> Result<Vec<Vec<f64>>> {
    ctx.validate()?;
    let m = ctx.m;
    let rule = GaussLegendre::new(NonZeroUsize::new(ctx.quad_t).expect("validated"));
    let nodes: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect();
    let mut g = vec![vec![0.0; m + 1]; m + 1];
    for l in 0..ctx.quad_phi {
        let phi = 2.0 * PI * l as f64 / ctx.quad_phi as f64;
        for &(t, w) in &nodes {
            let (ca, sa) = (t.sqrt(), (1.0 - t).sqrt());
            let b: Vec<Complex64> = (0..=m)
                .map(|k| Complex64::from_polar(ca.powi(k as i32) * sa.powi((m - k) as i32), (m - k) as f64 * phi))
                .collect();
            let wt = w / ctx.quad_phi as f64;
            for j in 0..=m {
                for k in 0..=m {
                    g[j][k] += wt * (b[j].conj() * b[k]).re;
                }
            }
        }
    }
    Ok(g)
}

/// The exact Gram: diagonal with entries `k!(m-k)!/(m+1)!`.
pub fn p1_l2_gram_exact(m: usize) -> QMatrix {
    let fact = |n: usize| -> Q { Q::from_integer((1..=n as u64).product::<u64>().into()) };
    let mut g = QMatrix::zeros(m + 1, m + 1);
    for k in 0..=m {
        g[(k, k)] = fact(k) * fact(m - k) / fact(m + 1);
    }
    g
}

fn l2_diag(m: usize) -> Vec<f64> {
    let g = p1_l2_gram_exact(m);
    (0..=m).map(|k| q_to_f64(&g[(k, k)])).collect()
}

pub fn p1_l2_norm(s: &BinaryForm) -> f64 {
    l2_diag(s.degree()).iter().zip(&s.coeffs).map(|(g, &c)| g * (c * c) as f64).sum::<f64>().sqrt()
}

/// `H⁰(P¹, O(m))` with the L² norm, as a normed ℤ-module in the monomial basis.
pub fn p1_l2_module(m: usize) -> NormedZModule {
    NormedZModule::free(NormSpec::Ellipsoid { gram: p1_l2_gram_exact(m) }).expect("positive diagonal")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Norm {
    Sup,
    L2,
}

/// Unit sup-ball, enumerated inside the unit L² ellipsoid. Membership uses the
/// best value found by the search, so it can only over-count.
pub struct SupFormBall {
    ctx: FSNormContext,
    gram: Vec<Vec<f64>>,
    diag: Vec<f64>,
    ambiguous: AtomicU64,
}

impl SupFormBall {
    pub fn new(ctx: FSNormContext) -> Result<Self> {
        ctx.validate()?;
        let diag = l2_diag(ctx.m);
        let n = ctx.m + 1;
        let gram = (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        Ok(SupFormBall { ctx, gram, diag, ambiguous: AtomicU64::new(0) })
    }

    /// Membership tests whose search interval straddled 1.
    pub fn ambiguous_tests(&self) -> u64 {
        self.ambiguous.load(Ordering::Relaxed)
    }

    fn coarse(&self, c: &[f64]) -> f64 {
        sup_search(c, (self.ctx.grid / 2).max(1), 1e-6).value
    }
}

impl Ball for SupFormBall {
    fn dim(&self) -> usize {
        self.ctx.m + 1
    }

    fn bounding(&self) -> (&[Vec<f64>], f64) {
        (&self.gram, 1.0 + 1e-9)
    }

    fn contains(&self, x: &[i64]) -> Result<bool> {
        let c: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let l2: f64 = self.diag.iter().zip(&c).map(|(g, v)| g * v * v).sum();
        let m = self.ctx.m;
        if l2 > 1.0 + 1e-9 || c[0].abs() > 1.0 || c[m].abs() > 1.0 {
            return Ok(false);
        }
        let s = sup_search(&c, self.ctx.grid, self.ctx.tol);
        let inside = s.value <= 1.0 + 1e-12;
        if inside && s.upper > 1.0 {
            self.ambiguous.fetch_add(1, Ordering::Relaxed);
        }
        Ok(inside)
    }

    fn approx(&self, x: &[i64]) -> f64 {
        let c: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        self.coarse(&c)
    }

    fn certified(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1Count {
    #[serde(flatten)]
    pub report: EnumerationReport,
    pub norm: P1Norm,
    pub m: usize,
    /// Membership tests where the sup search could not separate the form from 1.
    pub ambiguous_tests: u64,
}

/// Integer forms of degree `m` with norm at most 1.
pub fn p1_h0(m: usize, norm: P1Norm, ctx: &FSNormContext, opts: &EnumOptions) -> Result<P1Count> {
    if ctx.m != m {
        return Err(Error::DimensionMismatch { expected: m, got: ctx.m });
    }
    match norm {
        P1Norm::L2 => {
            let report = enumerate_ball(&p1_l2_module(m), &ExpScale::one(), opts)?;
            Ok(P1Count { report, norm, m, ambiguous_tests: 0 })
        }
        P1Norm::Sup => {
            let ball = SupFormBall::new(ctx.clone())?;
            let out = count_points(&ball, opts)?;
            let ambiguous = ball.ambiguous_tests();
            let report = EnumerationReport {
                count: out.count,
                log_count_plus_torsion: (out.count.max(1) as f64).ln(),
                bounding_ellipsoid_radius: 1.0,
                points_examined: out.examined,
                exact: !out.budget_exceeded && ambiguous == 0,
                budget_exceeded: out.budget_exceeded,
                points: out.points,
            };
            Ok(P1Count { report, norm, m, ambiguous_tests: ambiguous })
        }
    }
}

/// `ĥ¹` for the sup norm. The dual ball lies in `√(m+1)` times the dual L²
/// ball (since `‖s‖_sup ≤ √(m+1) ‖s‖_{L²}`), whose only lattice points are
/// `0, ±e₀, ±e_m`; those have dual norm exactly 1 because `|c₀|` and `|c_m|`
/// are values of `|s|` at the poles.
pub fn p1_h1_sup(m: usize, opts: &EnumOptions) -> Result<f64> {
    let n = m + 1;
    let mut g = QMatrix::zeros(n, n);
    let exact = p1_l2_gram_exact(m);
    for k in 0..n {
        g[(k, k)] = exact[(k, k)].recip() / Q::from_integer((m as i64 + 1).into());
    }
    let cand = enumerate_ball(&NormedZModule::free(NormSpec::Ellipsoid { gram: g })?, &ExpScale::one(), &EnumOptions { collect_points: true, ..opts.clone() })?;
    if cand.budget_exceeded {
        return Err(Error::BudgetExceeded { budget: opts.budget });
    }
    let pts = cand.points.unwrap_or_default();
    let mut count = 0u64;
    for y in &pts {
        let support: Vec<usize> = (0..n).filter(|&k| y[k] != 0).collect();
        match support.as_slice() {
            [] => count += 1,
            &[k] if (k == 0 || k == m) && y[k].abs() == 1 => count += 1,
            _ => return Err(Error::Unsupported(format!("dual sup-norm of {y:?}"))),
        }
    }
    Ok((count as f64).ln())
}

/// Volume of the unit sup-ball from `vol K = V_n E[‖u‖_K^{-n}]` over uniform
/// directions `u` of the L² sphere.
pub fn p1_sup_ball_volume(ctx: &FSNormContext, samples: usize, seed: u64) -> Result<VolumeResult> {
    ctx.validate()?;
    let m = ctx.m;
    let n = m + 1;
    let diag = l2_diag(m);
    if m == 0 {
        return Ok(VolumeResult { value: 2.0, method: VolumeMethod::Exact, half_width: 0.0, samples: 0 });
    }
    const CHUNK: usize = 256;
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = instance_rng(seed, ch as u64);
            let len = CHUNK.min(samples - ch * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let c: Vec<f64> = u.iter().zip(&diag).map(|(v, g)| v / r / g.sqrt()).collect();
                let rho = 1.0 / sup_search(&c, ctx.grid, ctx.tol).value;
                let x = rho.powi(n as i32);
                s1 += x;
                s2 += x * x;
            }
            (s1, s2, len)
        })
        .collect();
    let (s1, s2, cnt) = sums.iter().fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let k = cnt as f64;
    let mean = s1 / k;
    let var = (s2 / k - mean * mean).max(0.0) * k / (k - 1.0).max(1.0);
    let scale = unit_ball_volume(n) / diag.iter().map(|g| g.sqrt()).product::<f64>();
    Ok(VolumeResult {
        value: scale * mean,
        method: VolumeMethod::MonteCarlo,
        half_width: scale * 1.96 * (var / k).sqrt(),
        samples: cnt as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GromovReport {
    pub m: usize,
    pub trials: usize,
    /// `max ‖s‖²_sup / ((m+1)² ‖s‖²_{L²})` over the sampled forms.
    pub ratio: f64,
    pub argmax: Vec<i64>,
}

/// Largest sampled Gromov ratio among forms with coefficients in `[-3, 3]`.
pub fn p1_gromov_ratio(m: usize, trials: usize, ctx: &FSNormContext, seed: u64) -> Result<GromovReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if ctx.m != m {
        return Err(Error::DimensionMismatch { expected: m, got: ctx.m });
    }
    ctx.validate()?;
    let mut rng = instance_rng(seed, m as u64);
    let forms: Vec<BinaryForm> = (0..trials)
        .map(|_| loop {
            let c: Vec<i64> = (0..=m).map(|_| rng.random_range(-3..=3)).collect();
            if c.iter().any(|&v| v != 0) {
                break BinaryForm { coeffs: c };
            }
        })
        .collect();
    let scale = ((m + 1) * (m + 1)) as f64;
    let ratios: Vec<f64> = forms
        .par_iter()
        .map(|s| {
            let sup = sup_search(&s.as_f64(), ctx.grid, ctx.tol).value;
            let l2 = p1_l2_norm(s);
            sup * sup / (scale * l2 * l2)
        })
        .collect();
    let (i, &ratio) = ratios.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("trials ≥ 1");
    Ok(GromovReport { m, trials, ratio, argmax: forms[i].coeffs.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsEntry {
    pub m: usize,
    pub rank: usize,
    pub h0: f64,
    pub h1: f64,
    pub chi: f64,
    pub chi_half_width: f64,
    /// `2 ĥ⁰ / m²`.
    pub slope: f64,
    /// `2 χ̂ / m²`.
    pub chi_slope: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsSeries {
    pub entries: Vec<HsEntry>,
    pub reports: Vec<InequalityReport>,
}

#[derive(Clone, Debug)]
pub struct HsOptions {
    pub enumeration: EnumOptions,
    pub volume_samples: usize,
    pub seed: u64,
}

impl Default for HsOptions {
    fn default() -> Self {
        HsOptions { enumeration: EnumOptions::default(), volume_samples: 2000, seed: 0x5eed }
    }
}

/// Default series length: the sup-ball counts grow too fast beyond this.
pub const HS_DEFAULT_M_MAX: usize = 5;

/// Sup-norm `ĥ⁰`, `ĥ¹`, `χ̂` for `m = 1..m_max` with the gap inequalities
/// `−log 6·rk ≤ ĥ⁰ − ĥ¹ − χ̂ ≤ log(3/2)·rk + 2 log rk!` at each `m`.
pub fn p1_hs_series(m_max: usize, opts: &HsOptions) -> Result<HsSeries> {
    let mut entries = Vec::new();
    let mut reports = Vec::new();
    for m in 1..=m_max {
        let ctx = FSNormContext::new(m);
        let count = p1_h0(m, P1Norm::Sup, &ctx, &opts.enumeration)?;
        if count.report.budget_exceeded {
            return Err(Error::BudgetExceeded { budget: opts.enumeration.budget });
        }
        let h0 = count.report.log_count_plus_torsion;
        let h1 = p1_h1_sup(m, &opts.enumeration)?;
        let vol = p1_sup_ball_volume(&ctx, opts.volume_samples, opts.seed.wrapping_add(m as u64))?;
        let chi = vol.value.ln();
        let hw = vol.log_half_width();
        let rank = m + 1;
        let rk = rank as f64;
        let m2 = (m * m) as f64;
        entries.push(HsEntry {
            m,
            rank,
            h0,
            h1,
            chi,
            chi_half_width: hw,
            slope: 2.0 * h0 / m2,
            chi_slope: 2.0 * chi / m2,
            exact: count.report.exact,
        });
        let gap = h0 - h1 - chi;
        let digest = crate::gs::digest_json(&serde_json::json!({ "p1_sup": m }));
        let ci = 3.0 * hw;
        reports.push(InequalityReport::new(&format!("h0_h1_chi_lower[m={m}]"), -6f64.ln() * rk, gap, ci, &digest));
        reports.push(InequalityReport::new(&format!("h0_h1_chi_upper[m={m}]"), gap, 1.5f64.ln() * rk + 2.0 * log_factorial(rank), ci, &digest));
        reports.push(InequalityReport::new(&format!("h0_h1_chi_simple[m={m}]"), gap.abs(), (1.5f64.ln() + 2.0) * xlogx(rank), ci, &digest));
    }
    Ok(HsSeries { entries, reports })
}
