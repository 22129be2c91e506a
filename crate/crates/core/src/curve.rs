//! Free rank-1 modules over `ℤ[θ]` with a metric at every complex embedding,
//! and the degree / volume experiments on them.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gs::{digest_json, InequalityReport};
use crate::interval::{ExpScale, Iv};
use crate::lattice::{enumerate_ball, EnumOptions};
use crate::module::NormedZModule;
use crate::norm::{resolve_ring, LogWeight, NormSpec};
use crate::rational::{q, smith_diagonal, Q};
use crate::ring::{log_abs_norm, NumberRing, RingRegistry};
use crate::volume::ball_volume;

/// Largest ball count allowed when the series length is chosen automatically.
pub const AUTO_COUNT_CAP: u64 = 1_000_000;
/// Series length used when `adeg ≤ 0` and no length was given.
pub const FALLBACK_M: usize = 20;
const AUTO_M_LIMIT: usize = 5000;
/// Tolerance on regression slopes in the scaling and homogeneity checks.
pub const SLOPE_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct NormedInvertibleModule {
    pub ring: Arc<NumberRing>,
    pub weights: Vec<LogWeight>,
}

impl PartialEq for NormedInvertibleModule {
    fn eq(&self, o: &Self) -> bool {
        self.ring.poly() == o.ring.poly() && self.weights == o.weights
    }
}

impl NormedInvertibleModule {
    pub fn new(ring: Arc<NumberRing>, weights: Vec<LogWeight>) -> Result<Self> {
        let m = NormedInvertibleModule { ring, weights };
        m.norm().validate()?;
        Ok(m)
    }

    /// The same weight at every embedding.
    pub fn constant(ring: Arc<NumberRing>, w: LogWeight) -> Self {
        let weights = vec![w; ring.degree()];
        NormedInvertibleModule { ring, weights }
    }

    pub fn trivial(ring: Arc<NumberRing>) -> Self {
        Self::constant(ring, LogWeight::zero())
    }

    pub fn degree(&self) -> usize {
        self.ring.degree()
    }

    pub fn norm(&self) -> NormSpec {
        NormSpec::EmbeddingSup { ring: self.ring.clone(), weights: self.weights.clone() }
    }

    /// The underlying rank-`d` normed ℤ-module with the sup-norm.
    pub fn z_module(&self) -> NormedZModule {
        NormedZModule::free(self.norm()).expect("validated weights")
    }

    /// `L^λ`: every weight raised by `λ`.
    pub fn twist(&self, lambda: &LogWeight) -> Self {
        let weights = self.weights.iter().map(|w| w.add(lambda)).collect();
        NormedInvertibleModule { ring: self.ring.clone(), weights }
    }

    /// Weights `w_L + ε·w_A` with real `ε`.
    pub fn perturb(&self, eps: f64, a: &NormedInvertibleModule) -> Result<Self> {
        same_ring(self, a)?;
        if eps == 0.0 {
            return Ok(self.clone());
        }
        let weights = self.weights.iter().zip(&a.weights).map(|(w, v)| w.add(&LogWeight::real(eps * v.value()))).collect();
        Ok(NormedInvertibleModule { ring: self.ring.clone(), weights })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "ring": self.ring.id(),
            "weights": self.weights.iter().map(LogWeight::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value, rings: &mut RingRegistry) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("module must be an object".into()))?;
        let ring = resolve_ring(obj.get("ring").ok_or_else(|| Error::Parse("module needs \"ring\"".into()))?, rings)?;
        let weights = match obj.get("weights") {
            None => vec![LogWeight::zero(); ring.degree()],
            Some(Value::Array(ws)) if ws.len() == 1 && ring.degree() > 1 => vec![LogWeight::from_json(&ws[0])?; ring.degree()],
            Some(Value::Array(ws)) => ws.iter().map(LogWeight::from_json).collect::<Result<_>>()?,
            Some(w) => vec![LogWeight::from_json(w)?; ring.degree()],
        };
        Self::new(ring, weights)
    }
}

fn same_ring(a: &NormedInvertibleModule, b: &NormedInvertibleModule) -> Result<()> {
    if a.ring.poly() != b.ring.poly() {
        return Err(Error::RingMismatch(format!("{} vs {}", a.ring.id(), b.ring.id())));
    }
    Ok(())
}

fn check_element(ring: &NumberRing, x: &[i64]) -> Result<()> {
    if x.len() != ring.degree() {
        return Err(Error::DimensionMismatch { expected: ring.degree(), got: x.len() });
    }
    Ok(())
}

/// `|σ(x)| e^{-w_σ}` for every embedding, as enclosures.
fn embedding_sizes(module: &NormedInvertibleModule, x: &[i64]) -> Result<Vec<Iv>> {
    check_element(&module.ring, x)?;
    Ok((0..module.degree())
        .map(|e| module.ring.eval_i64(e, x).abs2().sqrt().mul(module.weights[e].exp().recip().iv()))
        .collect())
}

/// `max_σ |σ(x)| e^{-w_σ}`, enclosed.
pub fn sup_norm(module: &NormedInvertibleModule, x: &[i64]) -> Result<Iv> {
    let s = embedding_sizes(module, x)?;
    Ok(s.into_iter().fold(Iv::exact(0.0), |a, b| Iv::new(a.lo.max(b.lo), a.hi.max(b.hi))))
}

/// `min_σ |σ(s)| e^{-w_σ}`, enclosed.
pub fn c_prime(module: &NormedInvertibleModule, s: &[i64]) -> Result<Iv> {
    if s.iter().all(|&c| c == 0) {
        return Err(Error::InvalidInput("element is zero".into()));
    }
    let v = embedding_sizes(module, s)?;
    Ok(v.into_iter().reduce(|a, b| Iv::new(a.lo.min(b.lo), a.hi.min(b.hi))).expect("degree ≥ 1"))
}

/// Weights `a·w_L + b·w_A`.
pub fn combine(l: &NormedInvertibleModule, a: i64, big_a: &NormedInvertibleModule, b: i64) -> Result<NormedInvertibleModule> {
    same_ring(l, big_a)?;
    let weights = l.weights.iter().zip(&big_a.weights).map(|(x, y)| x.scale_int(a).add(&y.scale_int(b))).collect();
    Ok(NormedInvertibleModule { ring: l.ring.clone(), weights })
}

pub fn h0_curve(module: &NormedInvertibleModule) -> Result<f64> {
    h0_curve_with(module, &EnumOptions::default())
}

pub fn h0_curve_with(module: &NormedInvertibleModule, opts: &EnumOptions) -> Result<f64> {
    crate::lattice::h0_with(&module.z_module(), opts)
}

/// `Σ_σ w_σ` over all embeddings.
pub fn adeg(module: &NormedInvertibleModule) -> f64 {
    adeg_weight(module).value()
}

fn adeg_weight(module: &NormedInvertibleModule) -> LogWeight {
    module.weights.iter().fold(LogWeight::zero(), |a, w| a.add(w))
}

fn adeg_sign(module: &NormedInvertibleModule) -> Ordering {
    let w = adeg_weight(module);
    if w.real == 0.0 {
        w.ratio.cmp(&Q::one())
    } else {
        w.value().partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
}

/// `log #Coker(R →ˢ R) = log |N(s)|`.
pub fn coker_log(ring: &NumberRing, s: &[i64]) -> Result<f64> {
    check_element(ring, s)?;
    let s: Vec<BigInt> = s.iter().map(|&c| BigInt::from(c)).collect();
    log_abs_norm(ring, &s)
}

/// The same quantity from the invariant factors of the multiplication matrix.
pub fn coker_log_smith(ring: &NumberRing, s: &[i64]) -> Result<f64> {
    check_element(ring, s)?;
    let s: Vec<BigInt> = s.iter().map(|&c| BigInt::from(c)).collect();
    let diag = smith_diagonal(&ring.mult_matrix(&s));
    if diag.len() < ring.degree() || diag.iter().any(Zero::is_zero) {
        return Err(Error::InvalidInput("element is zero".into()));
    }
    Ok(diag.iter().map(|d| crate::interval::ln_q(&Q::from_integer(d.abs()))).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub m: usize,
    pub h0: f64,
    pub h0_over_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub entries: Vec<EstimateEntry>,
    pub running_sup: f64,
    pub last: f64,
    /// Least-squares slope of `ĥ⁰(m)` against `m` over the upper half of the range.
    pub extrapolated: f64,
    /// Enumeration stopped early because an `m` exceeded the budget.
    pub truncated: bool,
}

impl EstimateSeries {
    pub fn m_max(&self) -> usize {
        self.entries.last().map_or(0, |e| e.m)
    }

    fn from_entries(entries: Vec<EstimateEntry>, truncated: bool) -> Self {
        let running_sup = entries.iter().map(|e| e.h0_over_m).fold(f64::NEG_INFINITY, f64::max);
        let last = entries.last().map_or(0.0, |e| e.h0_over_m);
        let extrapolated = upper_half_slope(&entries);
        EstimateSeries { running_sup: if entries.is_empty() { 0.0 } else { running_sup }, last, extrapolated, entries, truncated }
    }
}

fn upper_half_slope(entries: &[EstimateEntry]) -> f64 {
    let Some(top) = entries.last() else { return 0.0 };
    let start = top.m.div_ceil(2);
    let pts: Vec<(f64, f64)> = entries.iter().filter(|e| e.m >= start).map(|e| (e.m as f64, e.h0)).collect();
    if pts.len() < 2 {
        return top.h0_over_m;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug)]
pub struct SeriesOptions {
    /// `None` picks the largest `m` whose ball count stays within `count_cap`.
    pub m_max: Option<usize>,
    pub count_cap: u64,
    pub enumeration: EnumOptions,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { m_max: None, count_cap: AUTO_COUNT_CAP, enumeration: EnumOptions::default() }
    }
}

impl SeriesOptions {
    pub fn fixed(m_max: usize) -> Self {
        SeriesOptions { m_max: Some(m_max), ..Self::default() }
    }
}

/// `m·L + N`.
fn series_module(l: &NormedInvertibleModule, n: Option<&NormedInvertibleModule>, m: usize) -> NormedInvertibleModule {
    let base = NormedInvertibleModule {
        ring: l.ring.clone(),
        weights: l.weights.iter().map(|w| w.scale_int(m as i64)).collect(),
    };
    match n {
        None => base,
        Some(n) => NormedInvertibleModule {
            ring: l.ring.clone(),
            weights: base.weights.iter().zip(&n.weights).map(|(a, b)| a.add(b)).collect(),
        },
    }
}

/// Counts for the given `m` in parallel; `None` marks a blown budget.
fn counts_for(
    l: &NormedInvertibleModule,
    n: Option<&NormedInvertibleModule>,
    ms: &[usize],
    opts: &EnumOptions,
) -> Result<Vec<Option<u64>>> {
    ms.par_iter()
        .map(|&m| {
            let r = enumerate_ball(&series_module(l, n, m).z_module(), &ExpScale::one(), opts)?;
            Ok((!r.budget_exceeded).then_some(r.count))
        })
        .collect()
}

fn entries_from(ms: &[usize], counts: &[Option<u64>]) -> (Vec<EstimateEntry>, bool) {
    let mut entries = Vec::new();
    for (&m, c) in ms.iter().zip(counts) {
        let Some(c) = c else { return (entries, true) };
        let h0 = (*c as f64).ln();
        entries.push(EstimateEntry { m, h0, h0_over_m: h0 / m as f64 });
    }
    (entries, false)
}

/// Largest `m` whose predicted ball count is below `cap`, from the volume of
/// the unit-weight ball and the growth rate `e^{m·adeg}`.
fn predicted_m(l: &NormedInvertibleModule, n: Option<&NormedInvertibleModule>, cap: u64) -> Result<usize> {
    let rate = adeg(l);
    let base = NormedInvertibleModule { ring: l.ring.clone(), weights: n.map_or_else(|| vec![LogWeight::zero(); l.degree()], |n| n.weights.clone()) };
    let log_v0 = ball_volume(&base.norm())?.value.ln();
    let m = ((cap as f64).ln() - log_v0) / rate;
    Ok(m.floor().clamp(1.0, AUTO_M_LIMIT as f64) as usize)
}

/// `ĥ⁰(m·L + N)/m` for `m = 1..m_max`.
pub fn volume_estimate(l: &NormedInvertibleModule, n: Option<&NormedInvertibleModule>, opts: &SeriesOptions) -> Result<EstimateSeries> {
    if let Some(n) = n {
        same_ring(l, n)?;
    }
    if let Some(m_max) = opts.m_max {
        let ms: Vec<usize> = (1..=m_max).collect();
        let (entries, truncated) = entries_from(&ms, &counts_for(l, n, &ms, &opts.enumeration)?);
        return Ok(EstimateSeries::from_entries(entries, truncated));
    }
    if adeg(l) <= 0.0 {
        return volume_estimate(l, n, &SeriesOptions { m_max: Some(FALLBACK_M), ..opts.clone() });
    }
    let guess = predicted_m(l, n, opts.count_cap)?;
    let mut ms: Vec<usize> = (1..=guess).collect();
    let mut counts = counts_for(l, n, &ms, &opts.enumeration)?;
    // extend past the prediction while counts stay under the cap
    while ms.len() < AUTO_M_LIMIT && counts.last().is_some_and(|c| c.is_some_and(|c| c <= opts.count_cap)) {
        let m = ms.len() + 1;
        counts.extend(counts_for(l, n, &[m], &opts.enumeration)?);
        ms.push(m);
    }
    let keep = counts.iter().rposition(|c| c.is_some_and(|c| c <= opts.count_cap)).map_or(0, |i| i + 1);
    let (entries, truncated) = entries_from(&ms[..keep], &counts[..keep]);
    Ok(EstimateSeries::from_entries(entries, truncated))
}

/// Checks `ĥ⁰(aL + (b−c)A) ≤ ĥ⁰(aL − cA) + C·b + D̃` for `0 ≤ c ≤ b ≤ a ≤ a_max`,
/// with `C = log #Coker(s) + d·|log C′(s)|` and `D̃ = 2(log 18 + 2)(d+1)log(d+1)`.
pub fn prop37_verify(
    l: &NormedInvertibleModule,
    big_a: &NormedInvertibleModule,
    s: &[i64],
    a_max: usize,
    opts: &EnumOptions,
) -> Result<Vec<InequalityReport>> {
    same_ring(l, big_a)?;
    check_element(&l.ring, s)?;
    if s.iter().all(|&c| c == 0) {
        return Err(Error::Precondition("s must be nonzero".into()));
    }
    if !big_a.norm().le(&s.iter().map(|&c| q(c)).collect::<Vec<_>>(), &ExpScale::one())? {
        return Err(Error::Precondition("s has sup-norm greater than 1 on A".into()));
    }
    let d = l.degree() as f64;
    let cp = c_prime(big_a, s)?;
    let c = coker_log(&l.ring, s)? + d * cp.lo.ln().abs();
    let d_tilde = 2.0 * (18f64.ln() + 2.0) * (d + 1.0) * (d + 1.0).ln();
    let digest = digest_json(&json!({ "L": l.to_json(), "A": big_a.to_json(), "s": s, "a_max": a_max }));

    let keys: Vec<(i64, i64)> = (0..=a_max as i64).flat_map(|a| (-a..=a).map(move |k| (a, k))).collect();
    let values: HashMap<(i64, i64), f64> = keys
        .par_iter()
        .map(|&(a, k)| Ok(((a, k), h0_curve_with(&combine(l, a, big_a, k)?, opts)?)))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for a in 0..=a_max as i64 {
        for b in 0..=a {
            for cc in 0..=b {
                let lhs = values[&(a, b - cc)];
                let rhs = values[&(a, -cc)] + c * b as f64 + d_tilde;
                out.push(InequalityReport::new(&format!("rank_one_bound[a={a},b={b},c={cc}]"), lhs, rhs, 0.0, &digest));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub eps: f64,
    pub estimate: f64,
    pub prediction: f64,
    pub m_max: usize,
}

/// Estimates for `L + εA` against `adeg(L) + ε·adeg(A)`, all at one `m_max`.
/// Without an explicit `m`, the length is the automatic one for the row of
/// largest degree.
pub fn continuity_table(
    l: &NormedInvertibleModule,
    big_a: &NormedInvertibleModule,
    eps_list: &[f64],
    m: Option<usize>,
    opts: &SeriesOptions,
) -> Result<Vec<ContinuityRow>> {
    let rows: Vec<NormedInvertibleModule> = eps_list.iter().map(|&e| l.perturb(e, big_a)).collect::<Result<_>>()?;
    let m_max = match m {
        Some(m) => m,
        None => {
            let top = rows.iter().max_by(|x, y| adeg(x).total_cmp(&adeg(y)));
            match top {
                Some(top) => volume_estimate(top, None, &SeriesOptions { m_max: None, ..opts.clone() })?.m_max().max(1),
                None => return Ok(Vec::new()),
            }
        }
    };
    let fixed = SeriesOptions { m_max: Some(m_max), ..opts.clone() };
    eps_list
        .iter()
        .zip(&rows)
        .map(|(&eps, row)| {
            let s = volume_estimate(row, None, &fixed)?;
            if s.truncated {
                return Err(Error::BudgetExceeded { budget: opts.enumeration.budget });
            }
            Ok(ContinuityRow { eps, estimate: s.extrapolated, prediction: adeg(l) + eps * adeg(big_a), m_max })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bigness {
    Big,
    NotBig,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BignessWitness {
    pub m: usize,
    pub x: Vec<i64>,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BignessResult {
    pub class: Bigness,
    pub adeg: f64,
    pub witness: Option<BignessWitness>,
}

/// Looks for `x ≠ 0` with `‖x‖_sup < 1` on `m·L` for `m ≤ m_probe`.
pub fn bigness_classify(l: &NormedInvertibleModule, m_probe: usize, opts: &EnumOptions) -> Result<BignessResult> {
    let deg = adeg(l);
    if adeg_sign(l) != Ordering::Greater {
        return Ok(BignessResult { class: Bigness::NotBig, adeg: deg, witness: None });
    }
    let collect = EnumOptions { collect_points: true, ..opts.clone() };
    for m in 1..=m_probe {
        let module = series_module(l, None, m);
        let r = enumerate_ball(&module.z_module(), &ExpScale::one(), &collect)?;
        if r.budget_exceeded {
            break;
        }
        let norm = module.norm();
        for x in r.points.unwrap_or_default() {
            if x.iter().all(|&c| c == 0) {
                continue;
            }
            let xq: Vec<Q> = x.iter().map(|&c| q(c)).collect();
            if norm.cmp(&xq, &ExpScale::one())? == Ordering::Less {
                let sup_norm = sup_norm(&module, &x)?.mid();
                return Ok(BignessResult { class: Bigness::Big, adeg: deg, witness: Some(BignessWitness { m, x, sup_norm }) });
            }
        }
    }
    Ok(BignessResult { class: Bigness::Inconclusive, adeg: deg, witness: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub p: usize,
    pub m: usize,
    /// Estimate for `pL` over `1..m`.
    pub scaled: f64,
    /// `p` times the estimate for `L` over `1..p·m`.
    pub multiplied: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn homogeneity_check(l: &NormedInvertibleModule, p: usize, m: Option<usize>, opts: &SeriesOptions) -> Result<HomogeneityReport> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be at least 1".into()));
    }
    let pl = series_module(l, None, p);
    let scaled_series = volume_estimate(&pl, None, &SeriesOptions { m_max: m, ..opts.clone() })?;
    let m = scaled_series.m_max();
    let base = volume_estimate(l, None, &SeriesOptions { m_max: Some(p * m), ..opts.clone() })?;
    if scaled_series.truncated || base.truncated {
        return Err(Error::BudgetExceeded { budget: opts.enumeration.budget });
    }
    let scaled = scaled_series.extrapolated;
    let multiplied = p as f64 * base.extrapolated;
    let slack = (scaled - multiplied).abs();
    Ok(HomogeneityReport { p, m, scaled, multiplied, slack, holds: slack <= SLOPE_TOLERANCE })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub m: usize,
    pub estimate: f64,
    pub estimate_scaled: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub adeg_gain: f64,
    pub adeg_expected: f64,
    pub adeg_error: f64,
}

/// Compares the estimates for `L` and `L^λ` at a common `m`.
pub fn scaling_check(l: &NormedInvertibleModule, lambda: &LogWeight, m: Option<usize>, opts: &SeriesOptions) -> Result<ScalingReport> {
    let lam = lambda.value();
    if lam < 0.0 {
        return Err(Error::InvalidInput("λ must be nonnegative".into()));
    }
    let twisted = l.twist(lambda);
    let top = volume_estimate(&twisted, None, &SeriesOptions { m_max: m, ..opts.clone() })?;
    let m = top.m_max();
    let base = volume_estimate(l, None, &SeriesOptions { m_max: Some(m), ..opts.clone() })?;
    if top.truncated || base.truncated {
        return Err(Error::BudgetExceeded { budget: opts.enumeration.budget });
    }
    let d = l.degree() as f64;
    let adeg_gain = adeg(&twisted) - adeg(l);
    Ok(ScalingReport {
        lambda: lam,
        m,
        estimate: base.extrapolated,
        estimate_scaled: top.extrapolated,
        lower_holds: base.extrapolated <= top.extrapolated + SLOPE_TOLERANCE,
        upper_holds: top.extrapolated <= base.extrapolated + lam * d + SLOPE_TOLERANCE,
        adeg_gain,
        adeg_expected: lam * d,
        adeg_error: (adeg_gain - lam * d).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    fn ring(poly: &[i64]) -> Arc<NumberRing> {
        Arc::new(NumberRing::new(poly, 128).unwrap())
    }

    fn module(poly: &[i64], w: &[f64]) -> NormedInvertibleModule {
        let r = ring(poly);
        NormedInvertibleModule::new(r, w.iter().map(|&x| LogWeight::real(x)).collect()).unwrap()
    }

    fn log2() -> LogWeight {
        LogWeight::log_of(q(2)).unwrap()
    }

    #[test]
    fn sup_norm_and_c_prime() {
        let g = module(&[1, 0, 1], &[0.0, 0.0]);
        let s = sup_norm(&g, &[1, 1]).unwrap();
        assert!(s.lo <= 2f64.sqrt() && 2f64.sqrt() <= s.hi && s.width() < 1e-12);
        let c = c_prime(&g, &[1, 1]).unwrap();
        assert!((c.mid() - 2f64.sqrt()).abs() < 1e-12);
        let t = module(&[-2, 0, 1], &[0.7, 0.7]);
        assert!((sup_norm(&t, &[1, 0]).unwrap().mid() - (-0.7f64).exp()).abs() < 1e-12);
        // 1 + √2 and its conjugate 1 − √2
        assert!((sup_norm(&module(&[-2, 0, 1], &[0.0, 0.0]), &[1, 1]).unwrap().mid() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((c_prime(&module(&[-2, 0, 1], &[0.0, 0.0]), &[1, 1]).unwrap().mid() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(c_prime(&g, &[0, 0]).is_err());
    }

    #[test]
    fn combine_weights() {
        let r = ring(&[-2, 0, 1]);
        let l = NormedInvertibleModule::constant(r.clone(), LogWeight::real(1.0));
        let a = NormedInvertibleModule::constant(r.clone(), LogWeight::real(0.5));
        let c = combine(&l, 2, &a, -1).unwrap();
        assert!(c.weights.iter().all(|w| (w.value() - 1.5).abs() < 1e-15));
        assert_eq!(combine(&l, 1, &a, 0).unwrap(), l);
        assert!(combine(&l, 0, &a, 0).unwrap().weights.iter().all(LogWeight::is_zero));
        assert!((adeg(&c) - (2.0 * adeg(&l) - adeg(&a))).abs() < 1e-15);
        let other = NormedInvertibleModule::trivial(ring(&[1, 0, 1]));
        assert!(combine(&l, 1, &other, 1).is_err());
    }

    #[test]
    fn h0_examples() {
        assert!((h0_curve(&module(&[1, 0, 1], &[0.0, 0.0])).unwrap() - 5f64.ln()).abs() < 1e-12);
        let z = NormedInvertibleModule::constant(ring(&[-1, 1]), log2());
        assert!((h0_curve(&z).unwrap() - 5f64.ln()).abs() < 1e-12);
        assert_eq!(h0_curve(&module(&[1, 0, 1], &[-1.0, -1.0])).unwrap(), 0.0);
        assert_eq!(h0_curve(&module(&[-2, 0, 1], &[-1.0, -1.0])).unwrap(), 0.0);
        assert_eq!(h0_curve(&module(&[-2, 0, 0, 1], &[-1.0, -1.0, -1.0])).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_h0_matches_brute_force() {
        for w in [0.0, 0.3, 0.9, 1.4] {
            let r = (w as f64).exp();
            let n = r.floor() as i64;
            let count = (-n..=n).flat_map(|a| (-n..=n).map(move |b| (a, b))).filter(|&(a, b)| ((a * a + b * b) as f64) <= r * r).count();
            assert!((h0_curve(&module(&[1, 0, 1], &[w, w])).unwrap() - (count as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn coker_examples() {
        let g = ring(&[1, 0, 1]);
        assert!((coker_log(&g, &[1, 1]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(coker_log(&g, &[1, 0]).unwrap(), 0.0);
        assert!((coker_log(&g, &[2, 0]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(coker_log(&g, &[0, 0]).is_err());
        let c = ring(&[-2, 0, 0, 1]);
        for s in [[1, 1, 0], [3, -1, 2], [0, 0, 5]] {
            assert!((coker_log(&c, &s).unwrap() - coker_log_smith(&c, &s).unwrap()).abs() < 1e-12);
        }
        let st = c.mul(&[1, 1, 0].map(BigInt::from), &[3, -1, 2].map(BigInt::from));
        let st: Vec<i64> = st.iter().map(|x| i64::try_from(x).unwrap()).collect();
        let sum = coker_log(&c, &[1, 1, 0]).unwrap() + coker_log(&c, &[3, -1, 2]).unwrap();
        assert!((coker_log(&c, &st).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn rational_series_matches_closed_form() {
        for w in [0.3, 0.25, 0.35] {
            let l = NormedInvertibleModule::constant(ring(&[-1, 1]), LogWeight::real(w));
            let s = volume_estimate(&l, None, &SeriesOptions::fixed(20)).unwrap();
            for e in &s.entries {
                let expect = (2.0 * (e.m as f64 * w).exp().floor() + 1.0).ln();
                assert!((e.h0 - expect).abs() < 1e-12, "m={} {} {}", e.m, e.h0, expect);
            }
            assert!((s.extrapolated - w).abs() < 0.05);
            assert!(s.running_sup >= s.last);
        }
        let l = NormedInvertibleModule::constant(ring(&[-1, 1]), log2());
        let s = volume_estimate(&l, None, &SeriesOptions::fixed(20)).unwrap();
        for e in &s.entries {
            assert!((e.h0 - (2f64.powi(e.m as i32 + 1) + 1.0).ln()).abs() < 1e-12);
        }
        assert!((s.extrapolated - 2f64.ln()).abs() < 0.05);
    }

    #[test]
    fn degenerate_series() {
        let z = NormedInvertibleModule::trivial(ring(&[-1, 1]));
        let s = volume_estimate(&z, None, &SeriesOptions::fixed(10)).unwrap();
        assert!(s.entries.iter().all(|e| (e.h0 - 3f64.ln()).abs() < 1e-12));
        assert!(s.extrapolated.abs() < 1e-12);
        let neg = NormedInvertibleModule::constant(ring(&[-1, 1]), LogWeight::real(-1.0));
        let s = volume_estimate(&neg, None, &SeriesOptions::default()).unwrap();
        assert_eq!(s.entries.len(), FALLBACK_M);
        assert!(s.entries.iter().all(|e| e.h0 == 0.0) && s.extrapolated == 0.0);
    }

    #[test]
    fn auto_length_respects_the_cap() {
        let l = NormedInvertibleModule::constant(ring(&[-1, 1]), LogWeight::real(0.3));
        let opts = SeriesOptions { count_cap: 10_000, ..SeriesOptions::default() };
        let s = volume_estimate(&l, None, &opts).unwrap();
        let count = |m: usize| 2.0 * (m as f64 * 0.3).exp().floor() + 1.0;
        assert!(count(s.m_max()) <= 10_000.0 && count(s.m_max() + 1) > 10_000.0);
    }

    #[test]
    fn series_with_twist() {
        let r = ring(&[-1, 1]);
        let l = NormedInvertibleModule::constant(r.clone(), LogWeight::real(0.3));
        let n = NormedInvertibleModule::constant(r, log2());
        let s = volume_estimate(&l, Some(&n), &SeriesOptions::fixed(10)).unwrap();
        for e in &s.entries {
            let expect = (2.0 * (2.0 * (e.m as f64 * 0.3).exp()).floor() + 1.0).ln();
            assert!((e.h0 - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn prop37_small_grids() {
        let g = ring(&[1, 0, 1]);
        let l = NormedInvertibleModule::constant(g.clone(), LogWeight::real(0.15));
        let a = NormedInvertibleModule::constant(g, LogWeight::real(0.6));
        let reps = prop37_verify(&l, &a, &[1, 1], 4, &EnumOptions::default()).unwrap();
        assert_eq!(reps.len(), 35);
        assert!(reps.iter().all(|r| r.holds));
        assert!(reps.iter().filter(|r| r.name.contains("b=0,")).all(|r| r.slack > 0.0));
        let too_long = NormedInvertibleModule::trivial(ring(&[1, 0, 1]));
        assert!(matches!(prop37_verify(&l, &too_long, &[1, 1], 2, &EnumOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn continuity_on_rationals() {
        let r = ring(&[-1, 1]);
        let l = NormedInvertibleModule::constant(r.clone(), LogWeight::real(0.2));
        let a = NormedInvertibleModule::constant(r, LogWeight::real(1.0));
        let rows = continuity_table(&l, &a, &[0.0, 0.1], Some(30), &SeriesOptions::default()).unwrap();
        let base = volume_estimate(&l, None, &SeriesOptions::fixed(30)).unwrap();
        assert_eq!(rows[0].estimate, base.extrapolated);
        assert!((rows[1].estimate - 0.3).abs() < 0.05);
    }

    #[test]
    fn bigness_examples() {
        let z = NormedInvertibleModule::constant(ring(&[-1, 1]), log2());
        let b = bigness_classify(&z, 5, &EnumOptions::default()).unwrap();
        assert_eq!(b.class, Bigness::Big);
        let w = b.witness.unwrap();
        assert_eq!((w.m, w.x.len()), (1, 1));
        assert_eq!(w.x[0].abs(), 1);
        assert!((w.sup_norm - 0.5).abs() < 1e-12);
        let t = NormedInvertibleModule::trivial(ring(&[1, 0, 1]));
        assert_eq!(bigness_classify(&t, 5, &EnumOptions::default()).unwrap().class, Bigness::NotBig);
        let exact_zero = NormedInvertibleModule::new(ring(&[-2, 0, 1]), vec![log2(), log2().neg()]).unwrap();
        assert_eq!(bigness_classify(&exact_zero, 5, &EnumOptions::default()).unwrap().class, Bigness::NotBig);
        let skew = module(&[-2, 0, 1], &[1.0, -0.5]);
        let b = bigness_classify(&skew, 10, &EnumOptions::default()).unwrap();
        assert_eq!(b.class, Bigness::Big);
        let w = b.witness.unwrap();
        let m = w.m as f64;
        for (e, wt) in [(0, 1.0), (1, -0.5)] {
            let root = skew.ring.root_approx(e).re;
            assert!((w.x[0] as f64 + w.x[1] as f64 * root).abs() < (m * wt).exp());
        }
        assert!(w.x != vec![0, 0]);
    }

    #[test]
    fn homogeneity_and_scaling() {
        let r = ring(&[-1, 1]);
        let l = NormedInvertibleModule::constant(r.clone(), LogWeight::real(0.3));
        let h = homogeneity_check(&l, 1, Some(15), &SeriesOptions::default()).unwrap();
        assert_eq!(h.slack, 0.0);
        let h = homogeneity_check(&l, 2, Some(20), &SeriesOptions::default()).unwrap();
        assert!(h.holds, "{h:?}");
        let zero = NormedInvertibleModule::trivial(r.clone());
        let h = homogeneity_check(&zero, 3, Some(10), &SeriesOptions::default()).unwrap();
        assert!(h.scaled.abs() < 1e-12 && h.multiplied.abs() < 1e-12);

        let s = scaling_check(&l, &LogWeight::real(0.4), Some(25), &SeriesOptions::default()).unwrap();
        let gain = s.estimate_scaled - s.estimate;
        assert!((0.35..=0.45).contains(&gain) && s.lower_holds && s.upper_holds);
        let s = scaling_check(&l, &LogWeight::zero(), Some(25), &SeriesOptions::default()).unwrap();
        assert_eq!(s.estimate, s.estimate_scaled);
        let g = NormedInvertibleModule::trivial(ring(&[1, 0, 1]));
        let s = scaling_check(&g, &LogWeight::real(0.5), Some(10), &SeriesOptions::default()).unwrap();
        assert_eq!(s.adeg_gain, 1.0);
        let s = scaling_check(&g, &LogWeight::log_of(qr(3, 2)).unwrap(), Some(6), &SeriesOptions::default()).unwrap();
        assert!(s.adeg_error < 1e-12);
    }

    #[test]
    fn h1_vanishes_for_large_multiples() {
        for (poly, w) in [(vec![1, 0, 1], 0.2), (vec![-2, 0, 1], 0.15), (vec![-1, 1], 0.1)] {
            let l = NormedInvertibleModule::constant(ring(&poly), LogWeight::real(w));
            let h1: Vec<f64> = (1..=40).map(|m| crate::lattice::h1(&series_module(&l, None, m).z_module()).unwrap()).collect();
            let first = h1.iter().position(|&v| v == 0.0).expect("vanishes");
            assert!(h1[first..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn json_round_trip() {
        let mut reg = RingRegistry::new();
        let v = json!({"ring": "QQ_i", "weights": ["log(2)", "log(2)"]});
        let m = NormedInvertibleModule::from_json(&v, &mut reg).unwrap();
        assert_eq!(m.weights[0], log2());
        let back = NormedInvertibleModule::from_json(&m.to_json(), &mut reg).unwrap();
        assert_eq!(back, m);
        assert!(NormedInvertibleModule::from_json(&json!({"ring": "QQ_i", "weights": [0.1, 0.2]}), &mut reg).is_err());
    }
}
