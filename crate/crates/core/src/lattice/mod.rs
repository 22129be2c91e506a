//! Lattice points in norm balls: exact counts, ĥ⁰ and ĥ¹.

mod ball;
mod brute;
mod enumerate;
pub mod lll;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ball::{compile_ball, Ball};
pub use brute::{brute_force_count, brute_force_oracle, BRUTE_MAX_BOX_POINTS};
pub use enumerate::{count_points, CountOutcome};

use crate::error::{Error, Result};
use crate::interval::ExpScale;
use crate::module::NormedZModule;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct EnumOptions {
    /// Cap on examined points (ellipsoid nodes plus exact membership tests).
    pub budget: u64,
    pub collect_points: bool,
    pub parallel: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { budget: DEFAULT_BUDGET, collect_points: false, parallel: true }
    }
}

impl EnumOptions {
    pub fn with_budget(budget: u64) -> Self {
        EnumOptions { budget, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub count: u64,
    pub log_count_plus_torsion: f64,
    pub bounding_ellipsoid_radius: f64,
    pub points_examined: u64,
    /// Every membership test was decided exactly and the enumeration finished.
    pub exact: bool,
    pub budget_exceeded: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub points: Option<Vec<Vec<i64>>>,
}

impl EnumerationReport {
    /// Writes the point list, one whitespace-separated vector per line.
    pub fn write_points(&self, path: &Path) -> Result<()> {
        let pts = self.points.as_ref().ok_or_else(|| Error::Precondition("points were not collected".into()))?;
        let io = |e: std::io::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for p in pts {
            let line: Vec<String> = p.iter().map(i64::to_string).collect();
            writeln!(f, "{}", line.join(" ")).map_err(io)?;
        }
        f.flush().map_err(io)
    }
}

/// Points of `M/M_tor` with `‖x‖ ≤ radius`.
pub fn enumerate_ball(module: &NormedZModule, radius: &ExpScale, opts: &EnumOptions) -> Result<EnumerationReport> {
    let ball = compile_ball(&module.norm, radius)?;
    let out = count_points(ball.as_ref(), opts)?;
    Ok(report_from(out, module.torsion.log_order(), ball.as_ref()))
}

pub(crate) fn report_from(out: CountOutcome, torsion_log: f64, ball: &dyn Ball) -> EnumerationReport {
    let (_, r2) = ball.bounding();
    EnumerationReport {
        count: out.count,
        log_count_plus_torsion: (out.count.max(1) as f64).ln() + torsion_log,
        bounding_ellipsoid_radius: r2.max(0.0).sqrt(),
        points_examined: out.examined,
        exact: !out.budget_exceeded && ball.certified(),
        budget_exceeded: out.budget_exceeded,
        points: out.points,
    }
}

/// `ĥ⁰ = log #{x : ‖x‖ ≤ 1} + log #M_tor`; 0 for the zero module.
pub fn h0(module: &NormedZModule) -> Result<f64> {
    h0_with(module, &EnumOptions::default())
}

pub fn h0_with(module: &NormedZModule, opts: &EnumOptions) -> Result<f64> {
    let r = enumerate_ball(module, &ExpScale::one(), opts)?;
    if r.budget_exceeded {
        return Err(Error::BudgetExceeded { budget: opts.budget });
    }
    Ok(r.log_count_plus_torsion)
}

/// `ĥ¹ = ĥ⁰(M^∨, ‖·‖^∨)`.
pub fn h1(module: &NormedZModule) -> Result<f64> {
    h1_with(module, &EnumOptions::default())
}

pub fn h1_with(module: &NormedZModule, opts: &EnumOptions) -> Result<f64> {
    h0_with(&module.dual()?, opts)
}

/// ĥ¹ computed from the polar body directly: counts `x` with
/// `|<x, y>| ≤ 1` for all `y` in the unit ball, using the support function of
/// the ball rather than the dual norm construction.
pub fn h1_polar(module: &NormedZModule, opts: &EnumOptions) -> Result<f64> {
    let ball = ball::polar_ball(&module.norm)?;
    let out = count_points(ball.as_ref(), opts)?;
    if out.budget_exceeded {
        return Err(Error::BudgetExceeded { budget: opts.budget });
    }
    Ok((out.count as f64).ln())
}
