//! Checks of the counting inequalities relating ĥ⁰, ĥ¹, χ̂, lattice counts
//! and ball volumes.

use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interval::ExpScale;
use crate::lattice::{enumerate_ball, h0_with, EnumOptions};
use crate::module::{NormedZModule, TorsionData};
use crate::norm::{LogWeight, NormSpec};
use crate::rational::{q, q_from_f64, QMatrix, Q};
use crate::sample::{self, EntryRange, NormFamily};
use crate::volume::{ball_volume_with, chi_with, ChiValue, VolumeOptions};

/// Absolute slack for floating-point rounding of sums of logarithms.
pub const FP_TOLERANCE: f64 = 1e-9;

/// Mahler's lower bound `4ⁿ / (n!)²` for `V(K) V(K*)`.
pub fn mahler_bound(n: usize) -> f64 {
    log_mahler_bound(n).exp()
}

pub fn log_mahler_bound(n: usize) -> f64 {
    n as f64 * 4f64.ln() - 2.0 * log_factorial(n)
}

pub fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `(r + 1) log(r + 1)`.
pub fn xlogx(r: usize) -> f64 {
    let x = (r + 1) as f64;
    x * x.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// Confidence allowance added to `rhs` for sampled volumes.
    pub allowance: f64,
    pub holds: bool,
    pub instance_digest: String,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, allowance: f64, digest: &str) -> Self {
        InequalityReport {
            name: name.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
            allowance,
            holds: lhs <= rhs + allowance + FP_TOLERANCE * (1.0 + rhs.abs()),
            instance_digest: digest.to_string(),
        }
    }
}

/// Short stable hash of a JSON value (keys sorted by `serde_json`'s map).
pub fn digest_json(v: &serde_json::Value) -> String {
    hex::encode(&Sha256::digest(v.to_string().as_bytes())[..8])
}

pub fn module_digest(m: &NormedZModule) -> String {
    digest_json(&m.to_json())
}

#[derive(Clone, Debug, Default)]
pub struct GsOptions {
    pub enumeration: EnumOptions,
    pub volume: VolumeOptions,
}

fn count(m: &NormedZModule, r: &ExpScale, opts: &GsOptions) -> Result<u64> {
    let rep = enumerate_ball(m, r, &opts.enumeration)?;
    if rep.budget_exceeded {
        return Err(Error::BudgetExceeded { budget: opts.enumeration.budget });
    }
    Ok(rep.count)
}

fn h0(m: &NormedZModule, opts: &GsOptions) -> Result<f64> {
    h0_with(m, &opts.enumeration)
}

fn h1(m: &NormedZModule, opts: &GsOptions) -> Result<f64> {
    h0_with(&m.dual()?, &opts.enumeration)
}

fn free_part(m: &NormedZModule) -> NormedZModule {
    NormedZModule { rank: m.rank, torsion: TorsionData::none(), norm: m.norm.clone() }
}

/// Count/volume comparisons for the unit ball `K` of the free part:
/// `6⁻ⁿ ≤ M(K) / (M(K*) V(K)) ≤ 6ⁿ / f(n)`, `M(K) ≤ M(aK) ≤ aⁿ M(K) 36ⁿ / f(n)`
/// for each `a > 1`, and `V(K) V(K*) ≥ f(n)` when both volumes are exact.
pub fn gs_core_report(module: &NormedZModule, a_values: &[f64], opts: &GsOptions) -> Result<Vec<InequalityReport>> {
    let m = free_part(module);
    let n = m.rank;
    let digest = module_digest(module);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lf = log_mahler_bound(n);
    let nf = n as f64;
    let mk = (count(&m, &ExpScale::one(), opts)? as f64).ln();
    let mks = (count(&m.dual()?, &ExpScale::one(), opts)? as f64).ln();
    let vol = ball_volume_with(&m.norm, &opts.volume)?;
    let ci = 3.0 * vol.log_half_width();
    let mid = mk - mks - vol.value.ln();
    let mut out = vec![
        InequalityReport::new("count_ratio_lower", -nf * 6f64.ln(), mid, ci, &digest),
        InequalityReport::new("count_ratio_upper", mid, nf * 6f64.ln() - lf, ci, &digest),
    ];
    for &a in a_values {
        if !(a > 1.0) {
            return Err(Error::InvalidInput(format!("dilation factor must exceed 1, got {a}")));
        }
        let mak = (count(&m, &ExpScale::rational(q_from_f64(a)?), opts)? as f64).ln();
        out.push(InequalityReport::new(&format!("dilation_lower[a={a}]"), mk, mak, 0.0, &digest));
        out.push(InequalityReport::new(
            &format!("dilation_upper[a={a}]"),
            mak,
            nf * a.ln() + mk + nf * 36f64.ln() - lf,
            0.0,
            &digest,
        ));
    }
    if vol.is_exact() {
        if let Ok(dv) = ball_volume_with(&m.norm.dual()?, &VolumeOptions { force_monte_carlo: false, ..opts.volume.clone() }) {
            if dv.is_exact() {
                out.push(InequalityReport::new("mahler_product", lf, vol.value.ln() + dv.value.ln(), 0.0, &digest));
            }
        }
    }
    Ok(out)
}

/// `0 → M' → M → M'' → 0` with `M' = ℤᵏ`, the subnorm on `M'` and the quotient
/// norm on `M''`.
#[derive(Clone, Debug)]
pub struct ExactSequence {
    pub injection: QMatrix,
    pub surjection: QMatrix,
    pub sub: NormedZModule,
    pub quotient: NormedZModule,
}

impl ExactSequence {
    /// Splits along a unimodular `u`: `M'` is spanned by the first `k`
    /// columns of `u`, and `M → M''` is the last `n - k` rows of `u⁻¹`.
    /// The torsion of `module` goes to the quotient.
    pub fn split(module: &NormedZModule, k: usize, u: &QMatrix) -> Result<ExactSequence> {
        let norm = &module.norm;
        let n = norm.dim();
        if k > n || u.rows() != n || u.cols() != n {
            return Err(Error::InvalidInput(format!("cannot split rank {n} at {k} with a {}x{} matrix", u.rows(), u.cols())));
        }
        if !u.is_integral() || !u.inverse()?.is_integral() {
            return Err(Error::InvalidInput("splitting matrix is not unimodular".into()));
        }
        let inv = u.inverse()?;
        let injection = QMatrix::from_rows((0..n).map(|i| u.row(i)[..k].to_vec()).collect())?;
        let surjection = if k == n { QMatrix::zeros(0, n) } else { QMatrix::from_rows((k..n).map(|i| inv.row(i).to_vec()).collect())? };
        let sub = if k == 0 { NormedZModule::zero() } else { NormedZModule::free(norm.subnorm(&injection)?)? };
        let quotient = if k == n {
            NormedZModule { torsion: module.torsion.clone(), ..NormedZModule::zero() }
        } else {
            NormedZModule::new(n - k, module.torsion.clone(), norm.quotient(&surjection)?)?
        };
        Ok(ExactSequence { injection, surjection, sub, quotient })
    }

    fn check(&self, n: usize) -> Result<()> {
        let (f, g) = (&self.injection, &self.surjection);
        if f.rows() != n || g.cols() != n || f.cols() + g.rows() != n {
            return Err(Error::InvalidInput("exact sequence shapes do not match the module".into()));
        }
        if f.cols() > 0 && g.rows() > 0 && g.mul(f)?.row_vecs().iter().flatten().any(|v| *v != q(0)) {
            return Err(Error::InvalidInput("composite of the sequence maps is not zero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Prop21Inputs {
    /// Scaling exponents `λ ≥ 0` for the comparison with `e^{-λ}‖·‖`.
    pub lambdas: Vec<LogWeight>,
    /// A norm `‖·‖₂ ≥ ‖·‖` on the same module.
    pub larger_norm: Option<NormSpec>,
    pub sequence: Option<ExactSequence>,
    /// Columns form a basis of `M/M_tor` with norms at most 1.
    pub basis: Option<QMatrix>,
}

struct Values {
    h0: f64,
    h1: f64,
    chi: ChiValue,
}

fn values(m: &NormedZModule, opts: &GsOptions) -> Result<Values> {
    Ok(Values { h0: h0(m, opts)?, h1: h1(m, opts)?, chi: chi_with(m, &opts.volume)? })
}

fn reports_with(
    module: &NormedZModule,
    inputs: &Prop21Inputs,
    opts: &GsOptions,
    base: &Values,
    larger: Option<&Values>,
) -> Result<Vec<InequalityReport>> {
    let rk = module.rank;
    let rkf = rk as f64;
    let digest = module_digest(module);
    let two_lf = 2.0 * log_factorial(rk);
    let mut out = Vec::new();

    let gap = base.h0 - base.h1 - base.chi.value;
    let ci = 3.0 * base.chi.half_width;
    out.push(InequalityReport::new("h0_h1_chi_lower", -6f64.ln() * rkf, gap, ci, &digest));
    out.push(InequalityReport::new("h0_h1_chi_upper", gap, 1.5f64.ln() * rkf + two_lf, ci, &digest));
    out.push(InequalityReport::new("h0_h1_chi_simple", gap.abs(), (1.5f64.ln() + 2.0) * xlogx(rk), ci, &digest));

    if let Some(v2) = larger {
        let ci = 3.0 * (base.chi.half_width + v2.chi.half_width);
        out.push(InequalityReport::new("monotone_h0", v2.h0, base.h0, 0.0, &digest));
        out.push(InequalityReport::new("monotone_h1", base.h1, v2.h1, 0.0, &digest));
        let dchi = v2.chi.value - base.chi.value;
        let dh0 = v2.h0 - base.h0;
        out.push(InequalityReport::new("chi_vs_h0", dchi, dh0 + 9f64.ln() * rkf + two_lf, ci, &digest));
        out.push(InequalityReport::new("chi_vs_h0_simple", dchi, dh0 + (9f64.ln() + 2.0) * xlogx(rk), ci, &digest));
    }

    for lw in &inputs.lambdas {
        let lambda = lw.value();
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("scaling exponent must be nonnegative, got {lambda}")));
        }
        let scaled = NormedZModule { norm: module.norm.scale(lw), ..module.clone() };
        let gain = h0(&scaled, opts)? - base.h0;
        out.push(InequalityReport::new(&format!("scaling_lower[λ={lw}]"), 0.0, gain, 0.0, &digest));
        out.push(InequalityReport::new(
            &format!("scaling_upper[λ={lw}]"),
            gain,
            lambda * rkf + 9f64.ln() * rkf + two_lf,
            0.0,
            &digest,
        ));
        out.push(InequalityReport::new(
            &format!("scaling_simple[λ={lw}]"),
            gain,
            lambda * rkf + (9f64.ln() + 2.0) * xlogx(rk),
            0.0,
            &digest,
        ));
    }

    if let Some(seq) = &inputs.sequence {
        seq.check(rk)?;
        let rs = seq.sub.rank;
        let sum = h0(&seq.sub, opts)? + h0(&seq.quotient, opts)?;
        out.push(InequalityReport::new(
            "exact_sequence",
            base.h0,
            sum + 18f64.ln() * rs as f64 + 2.0 * log_factorial(rs),
            0.0,
            &digest,
        ));
        out.push(InequalityReport::new("exact_sequence_simple", base.h0, sum + (18f64.ln() + 2.0) * xlogx(rs), 0.0, &digest));
    }

    if let Some(basis) = &inputs.basis {
        if basis.rows() != rk || basis.cols() != rk || !basis.is_integral() || basis.det()?.abs() != q(1) {
            return Err(Error::InvalidInput("basis must be a unimodular integer matrix".into()));
        }
        for j in 0..rk {
            let col: Vec<Q> = (0..rk).map(|i| basis[(i, j)].clone()).collect();
            if !module.norm.le(&col, &ExpScale::one())? {
                return Err(Error::Precondition(format!("basis vector {j} has norm greater than 1")));
            }
        }
        out.push(InequalityReport::new("unit_basis_h1", base.h1, 3f64.ln() * rkf, 0.0, &digest));
    }
    Ok(out)
}

/// All applicable inequalities between ĥ⁰, ĥ¹ and χ̂ for `module` and the
/// auxiliary data supplied. Failures that involve a sampled volume are
/// re-checked once with ten times the samples.
pub fn prop21_report(module: &NormedZModule, inputs: &Prop21Inputs, opts: &GsOptions) -> Result<Vec<InequalityReport>> {
    let base = values(module, opts)?;
    let larger = match &inputs.larger_norm {
        Some(n2) => Some(values(&NormedZModule::new(module.rank, module.torsion.clone(), n2.clone())?, opts)?),
        None => None,
    };
    let reports = reports_with(module, inputs, opts, &base, larger.as_ref())?;
    let stochastic = !base.chi.volume.is_exact() || larger.as_ref().is_some_and(|v| !v.chi.volume.is_exact());
    if stochastic && reports.iter().any(|r| !r.holds) {
        let mut more = opts.clone();
        more.volume.max_samples *= 10;
        more.volume.allow_partial = true;
        let base = values(module, &more)?;
        let larger = match &inputs.larger_norm {
            Some(n2) => Some(values(&NormedZModule::new(module.rank, module.torsion.clone(), n2.clone())?, &more)?),
            None => None,
        };
        return reports_with(module, inputs, &more, &base, larger.as_ref());
    }
    Ok(reports)
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: usize,
    pub max_rank: usize,
    pub entries: EntryRange,
    pub dilations: Vec<f64>,
    pub lambdas: Vec<LogWeight>,
    pub options: GsOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            instances: 500,
            max_rank: 5,
            entries: EntryRange::INTEGERS,
            dilations: vec![1.5, 2.0, 3.0],
            lambdas: [0.1, 0.5, 1.0, 2.0].into_iter().map(LogWeight::real).collect(),
            options: GsOptions::default(),
        }
    }
}

/// One randomized instance with all auxiliary data for the harness.
#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub module: NormedZModule,
    pub inputs: Prop21Inputs,
    /// A torsion-free module with a basis of vectors of norm at most 1.
    pub unit_basis: (NormedZModule, QMatrix),
}

fn larger_norm(rng: &mut impl rand::Rng, norm: &NormSpec, e: EntryRange) -> Result<NormSpec> {
    let n = norm.dim();
    let v: Vec<Q> = (0..n).map(|_| q(rng.random_range(-e.bound..=e.bound))).collect();
    Ok(match norm {
        NormSpec::Ellipsoid { gram } => {
            let rows = (0..n).map(|i| (0..n).map(|j| &gram[(i, j)] + &v[i] * &v[j]).collect()).collect();
            NormSpec::Ellipsoid { gram: QMatrix::from_rows(rows)? }
        }
        NormSpec::MaxAbs { functionals } => {
            let mut rows = functionals.row_vecs();
            rows.push(v);
            NormSpec::MaxAbs { functionals: QMatrix::from_rows(rows)? }
        }
        other => NormSpec::Scaled { lambda: LogWeight::real(-0.25), inner: Box::new(other.clone()) },
    })
}

/// Rescales so every standard basis vector has norm at most 1.
fn unit_normalized(norm: &NormSpec) -> Result<NormSpec> {
    Ok(match norm {
        NormSpec::Ellipsoid { gram } => {
            let m = (0..gram.rows()).map(|i| gram[(i, i)].clone()).max().unwrap_or_else(|| q(1));
            NormSpec::Ellipsoid { gram: gram.scale(&(q(1) / m)) }
        }
        NormSpec::MaxAbs { functionals } => {
            let m = functionals.row_vecs().into_iter().flatten().map(|v| v.abs()).max().unwrap_or_else(|| q(1));
            NormSpec::MaxAbs { functionals: functionals.scale(&(q(1) / m)) }
        }
        _ => return Err(Error::Unsupported(format!("unit normalization of {} norms", norm.kind_name()))),
    })
}

pub fn suite_instance(config: &SuiteConfig, index: usize) -> Result<SuiteInstance> {
    use rand::Rng as _;
    let mut rng = sample::instance_rng(config.seed, index as u64);
    let rank = rng.random_range(1..=config.max_rank);
    let family = if index % 2 == 0 { NormFamily::Ellipsoid } else { NormFamily::MaxAbs };
    let module = sample::random_module(&mut rng, rank, family, config.entries, true);
    let larger = larger_norm(&mut rng, &module.norm, config.entries)?;
    let k = rng.random_range(0..=rank);
    let u = sample::random_unimodular(&mut rng, rank, 2 * rank);
    let sequence = ExactSequence::split(&module, k, &u)?;
    let plain = sample::random_norm(&mut rng, rank, family, config.entries);
    let w = sample::random_unimodular(&mut rng, rank, 2 * rank);
    let unit = NormedZModule::free(unit_normalized(&plain)?.subnorm(&w.inverse()?)?)?;
    Ok(SuiteInstance {
        module,
        inputs: Prop21Inputs { lambdas: config.lambdas.clone(), larger_norm: Some(larger), sequence: Some(sequence), basis: None },
        unit_basis: (unit, w),
    })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SuiteResult {
    pub reports: Vec<InequalityReport>,
    pub violations: usize,
}

/// Runs every check on `config.instances` seeded instances in parallel;
/// reports are ordered by instance then by check.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteResult> {
    let per: Vec<Result<Vec<InequalityReport>>> = (0..config.instances)
        .into_par_iter()
        .map(|i| {
            let inst = suite_instance(config, i)?;
            let mut r = gs_core_report(&inst.module, &config.dilations, &config.options)?;
            r.extend(prop21_report(&inst.module, &inst.inputs, &config.options)?);
            let (unit, basis) = &inst.unit_basis;
            let unit_inputs = Prop21Inputs { basis: Some(basis.clone()), ..Default::default() };
            r.extend(prop21_report(unit, &unit_inputs, &config.options)?.into_iter().filter(|x| x.name == "unit_basis_h1"));
            Ok(r)
        })
        .collect();
    let mut reports = Vec::new();
    for p in per {
        reports.extend(p?);
    }
    let violations = reports.iter().filter(|r| !r.holds).count();
    Ok(SuiteResult { reports, violations })
}
