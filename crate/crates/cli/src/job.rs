//! Job specifications, dispatch, and result records.

use std::path::{Path, PathBuf};

use arakelov_core::curve::{
    adeg, bigness_classify, continuity_table, prop37_verify, volume_estimate, NormedInvertibleModule, SeriesOptions,
};
use arakelov_core::gs::{gs_core_report, prop21_report, run_suite, GsOptions, InequalityReport, Prop21Inputs, SuiteConfig};
use arakelov_core::interval::ExpScale;
use arakelov_core::lattice::{enumerate_ball, h1_polar, h1_with, EnumOptions};
use arakelov_core::module::NormedZModule;
use arakelov_core::norm::{LogWeight, NormSpec};
use arakelov_core::p1::{p1_gromov_ratio, p1_h0, p1_hs_series, FSNormContext, HsOptions, P1Norm};
use arakelov_core::ring::RingRegistry;
use arakelov_core::volume::{chi_with, VolumeOptions};
use arakelov_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Hzero,
    Hone,
    Chi,
    Dual,
    GsCheck,
    CurveVolume,
    CurveDegree,
    CurveContinuity,
    Prop37,
    Bigness,
    P1Hs,
    P1Gromov,
    P1Count,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Hzero => "hzero",
            Command::Hone => "hone",
            Command::Chi => "chi",
            Command::Dual => "dual",
            Command::GsCheck => "gs-check",
            Command::CurveVolume => "curve-volume",
            Command::CurveDegree => "curve-degree",
            Command::CurveContinuity => "curve-continuity",
            Command::Prop37 => "prop37",
            Command::Bigness => "bigness",
            Command::P1Hs => "p1-hs",
            Command::P1Gromov => "p1-gromov",
            Command::P1Count => "p1-count",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Command::Hzero | Command::Hone | Command::Chi | Command::Dual => &["module"],
            Command::CurveVolume | Command::CurveDegree | Command::Bigness => &["L"],
            Command::CurveContinuity => &["L", "A"],
            Command::Prop37 => &["L", "A", "s"],
            Command::P1Count => &["m"],
            Command::GsCheck | Command::P1Hs | Command::P1Gromov => &[],
        }
    }
}

/// Input fields that may name a JSON file instead of holding the object.
const FILE_KEYS: [&str; 5] = ["module", "L", "A", "N", "larger_norm"];

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_budget() -> u64 {
    arakelov_core::lattice::DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    #[serde(default)]
    pub inputs: Map<String, Value>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

impl JobError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        JobError::Io { path: path.to_path_buf(), msg: e.to_string() }
    }

    /// 2 for unusable input, 3 for exhausted budgets, 4 for precision
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Core(e) => match e {
                Error::Parse(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::DegenerateNorm(_)
                | Error::BadPolynomial(_)
                | Error::RingMismatch(_)
                | Error::NotInjective { .. }
                | Error::NotSurjective { .. }
                | Error::Precondition(_) => 2,
                Error::BudgetExceeded { .. } | Error::MonteCarloBudget { .. } => 3,
                Error::Precision { .. } => 4,
                _ => 1,
            },
            JobError::Io { .. } => 1,
        }
    }
}

pub type JobResult<T> = std::result::Result<T, JobError>;

fn parse_err(msg: impl Into<String>) -> JobError {
    JobError::Core(Error::Parse(msg.into()))
}

impl JobSpec {
    pub fn new(command: Command) -> Self {
        JobSpec { command, inputs: Map::new(), seed: DEFAULT_SEED, budget: default_budget(), cache_dir: None }
    }

    pub fn with(mut self, key: &str, v: Value) -> Self {
        self.inputs.insert(key.to_string(), v);
        self
    }

    pub fn parse(text: &str) -> JobResult<Self> {
        let spec: JobSpec = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    /// Reads a spec; file references inside it are resolved relative to its directory.
    pub fn load(path: &Path) -> JobResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| JobError::io(path, e))?;
        let mut spec = Self::parse(&text)?;
        spec.resolve_files(path.parent().unwrap_or(Path::new(".")))?;
        Ok(spec)
    }

    pub fn check(&self) -> JobResult<()> {
        for key in self.command.required() {
            if !self.inputs.contains_key(*key) {
                return Err(parse_err(format!("{} needs input \"{key}\"", self.command.name())));
            }
        }
        Ok(())
    }

    /// Replaces string values of object-valued inputs by the parsed file they name.
    pub fn resolve_files(&mut self, base: &Path) -> JobResult<()> {
        for key in FILE_KEYS {
            if let Some(Value::String(p)) = self.inputs.get(key) {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| JobError::io(&path, e))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
                self.inputs.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    /// The spec without its cache location; keys are sorted by `serde_json`.
    pub fn canonical(&self) -> Value {
        json!({ "command": self.command, "inputs": self.inputs, "seed": self.seed, "budget": self.budget })
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().to_string().as_bytes()))
    }

    fn enum_opts(&self) -> EnumOptions {
        EnumOptions::with_budget(self.budget)
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.inputs.get(key).filter(|v| !v.is_null())
    }

    fn usize_or(&self, key: &str, default: usize) -> JobResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|x| x as usize).ok_or_else(|| parse_err(format!("\"{key}\" must be a nonnegative integer"))),
        }
    }

    fn opt_usize(&self, key: &str) -> JobResult<Option<usize>> {
        self.get(key).map(|_| self.usize_or(key, 0)).transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> JobResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| parse_err(format!("\"{key}\" must be a number"))),
        }
    }

    fn f64_list_or(&self, key: &str, default: &[f64]) -> JobResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(xs)) => {
                xs.iter().map(|x| x.as_f64().ok_or_else(|| parse_err(format!("\"{key}\" must hold numbers")))).collect()
            }
            Some(_) => Err(parse_err(format!("\"{key}\" must be an array"))),
        }
    }

    fn weights_or(&self, key: &str, default: &[f64]) -> JobResult<Vec<LogWeight>> {
        match self.get(key) {
            None => Ok(default.iter().map(|&x| LogWeight::real(x)).collect()),
            Some(Value::Array(xs)) => Ok(xs.iter().map(LogWeight::from_json).collect::<Result<_, _>>()?),
            Some(_) => Err(parse_err(format!("\"{key}\" must be an array"))),
        }
    }

    fn z_module(&self, rings: &mut RingRegistry) -> JobResult<NormedZModule> {
        Ok(NormedZModule::from_json(&self.inputs["module"], rings)?)
    }

    fn curve(&self, key: &str, rings: &mut RingRegistry) -> JobResult<NormedInvertibleModule> {
        let v = self.get(key).ok_or_else(|| parse_err(format!("missing input \"{key}\"")))?;
        Ok(NormedInvertibleModule::from_json(v, rings)?)
    }

    fn ctx(&self, m: usize) -> JobResult<FSNormContext> {
        let mut ctx = FSNormContext::new(m);
        if let Some(g) = self.opt_usize("grid")? {
            ctx.grid = g;
        }
        ctx.tol = self.f64_or("tol", ctx.tol)?;
        ctx.validate()?;
        Ok(ctx)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub digest: String,
    pub command: Command,
    pub version: String,
    /// Seconds since the Unix epoch when the payload was computed.
    pub timestamp: u64,
    /// Every count and volume in the payload was decided exactly.
    pub exact: bool,
    /// Largest 95% half-width on a log scale among sampled quantities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Inequalities reported as failing.
    pub violations: u64,
    pub payload: Value,
}

impl ResultRecord {
    /// Pretty JSON with keys in sorted order.
    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string_pretty(&to_value(self)).expect("serializable")
    }
}

struct Outcome {
    payload: Value,
    exact: bool,
    half_width: Option<f64>,
    violations: u64,
}

impl Outcome {
    fn exact(payload: Value) -> Self {
        Outcome { payload, exact: true, half_width: None, violations: 0 }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn reports_outcome(reports: Vec<InequalityReport>, exact: bool, half_width: Option<f64>) -> Outcome {
    let violations = reports.iter().filter(|r| !r.holds).count() as u64;
    Outcome { payload: json!({ "reports": reports, "violations": violations }), exact, half_width, violations }
}

/// Runs one job. Equal specs give equal payloads.
pub fn run_job(spec: &JobSpec) -> JobResult<ResultRecord> {
    spec.check()?;
    let out = dispatch(spec)?;
    Ok(ResultRecord {
        digest: spec.digest(),
        command: spec.command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        exact: out.exact,
        half_width: out.half_width,
        violations: out.violations,
        payload: out.payload,
    })
}

fn dispatch(spec: &JobSpec) -> JobResult<Outcome> {
    let mut rings = RingRegistry::new();
    let opts = spec.enum_opts();
    Ok(match spec.command {
        Command::Hzero => {
            let module = spec.z_module(&mut rings)?;
            let collect = matches!(spec.get("collect_points"), Some(Value::Bool(true)));
            let r = enumerate_ball(&module, &ExpScale::one(), &EnumOptions { collect_points: collect, ..opts.clone() })?;
            if r.budget_exceeded {
                return Err(Error::BudgetExceeded { budget: opts.budget }.into());
            }
            let mut payload = to_value(&r);
            payload["h0"] = json!(r.log_count_plus_torsion);
            Outcome { exact: r.exact, ..Outcome::exact(payload) }
        }
        Command::Hone => {
            let module = spec.z_module(&mut rings)?;
            let h1 = h1_with(&module, &opts)?;
            let mut payload = json!({ "h1": h1 });
            if matches!(spec.get("check_polar"), Some(Value::Bool(true))) {
                let polar = h1_polar(&module, &opts)?;
                payload["h1_polar"] = json!(polar);
                payload["agree"] = json!(polar == h1);
            }
            Outcome::exact(payload)
        }
        Command::Chi => {
            let module = spec.z_module(&mut rings)?;
            let vopts = volume_opts(spec)?;
            let c = chi_with(&module, &vopts)?;
            let exact = c.volume.is_exact();
            Outcome {
                payload: to_value(&c),
                exact,
                half_width: (!exact).then_some(c.half_width),
                violations: 0,
            }
        }
        Command::Dual => {
            let module = spec.z_module(&mut rings)?;
            Outcome::exact(json!({ "dual": module.dual()?.to_json() }))
        }
        Command::GsCheck => gs_check(spec, &mut rings)?,
        Command::CurveVolume => {
            let l = spec.curve("L", &mut rings)?;
            let n = spec.get("N").map(|_| spec.curve("N", &mut rings)).transpose()?;
            let sopts = SeriesOptions {
                m_max: spec.opt_usize("m_max")?,
                count_cap: spec.usize_or("count_cap", arakelov_core::curve::AUTO_COUNT_CAP as usize)? as u64,
                enumeration: opts,
            };
            let s = volume_estimate(&l, n.as_ref(), &sopts)?;
            let mut payload = to_value(&s);
            payload["adeg"] = json!(adeg(&l));
            Outcome { exact: !s.truncated, ..Outcome::exact(payload) }
        }
        Command::CurveDegree => {
            let l = spec.curve("L", &mut rings)?;
            Outcome::exact(json!({ "adeg": adeg(&l) }))
        }
        Command::CurveContinuity => {
            let l = spec.curve("L", &mut rings)?;
            let a = spec.curve("A", &mut rings)?;
            let eps = spec.f64_list_or("eps", &[0.2, 0.1, 0.05])?;
            let sopts = SeriesOptions { enumeration: opts, ..SeriesOptions::default() };
            let rows = continuity_table(&l, &a, &eps, spec.opt_usize("m")?, &sopts)?;
            Outcome::exact(json!({ "rows": rows }))
        }
        Command::Prop37 => {
            let l = spec.curve("L", &mut rings)?;
            let a = spec.curve("A", &mut rings)?;
            let s: Vec<i64> = serde_json::from_value(spec.inputs["s"].clone()).map_err(|e| parse_err(format!("\"s\": {e}")))?;
            let a_max = spec.usize_or("a_max", 12)?;
            reports_outcome(prop37_verify(&l, &a, &s, a_max, &opts)?, true, None)
        }
        Command::Bigness => {
            let l = spec.curve("L", &mut rings)?;
            let r = bigness_classify(&l, spec.usize_or("m_probe", 10)?, &opts)?;
            Outcome::exact(to_value(&r))
        }
        Command::P1Hs => {
            let hopts = HsOptions {
                enumeration: opts,
                volume_samples: spec.usize_or("samples", HsOptions::default().volume_samples)?,
                seed: spec.seed,
            };
            let s = p1_hs_series(spec.usize_or("m_max", arakelov_core::p1::HS_DEFAULT_M_MAX)?, &hopts)?;
            let exact = s.entries.iter().all(|e| e.exact);
            let hw = s.entries.iter().map(|e| e.chi_half_width).fold(0.0, f64::max);
            let violations = s.reports.iter().filter(|r| !r.holds).count() as u64;
            Outcome { payload: to_value(&s), exact, half_width: Some(hw), violations }
        }
        Command::P1Gromov => {
            let m_max = spec.usize_or("m_max", 10)?;
            let trials = spec.usize_or("trials", 200)?;
            let rows = (0..=m_max)
                .into_par_iter()
                .map(|m| Ok(p1_gromov_ratio(m, trials, &spec.ctx(m)?, spec.seed)?))
                .collect::<JobResult<Vec<_>>>()?;
            let max_ratio = rows.iter().skip(1).map(|r| r.ratio).fold(0.0, f64::max);
            let base = rows.get(1).map_or(f64::NAN, |r| r.ratio);
            let bounded = m_max < 1 || max_ratio <= 3.0 * base;
            Outcome {
                payload: json!({ "rows": rows, "max_ratio": max_ratio, "ratio_at_1": base, "bounded": bounded }),
                exact: false,
                half_width: None,
                violations: u64::from(!bounded),
            }
        }
        Command::P1Count => {
            let m = spec.usize_or("m", 0)?;
            let norm = match spec.get("norm").and_then(Value::as_str).unwrap_or("sup") {
                "sup" => P1Norm::Sup,
                "l2" => P1Norm::L2,
                other => return Err(parse_err(format!("unknown norm {other:?}; expected sup or l2"))),
            };
            let collect = matches!(spec.get("collect_points"), Some(Value::Bool(true)));
            let c = p1_h0(m, norm, &spec.ctx(m)?, &EnumOptions { collect_points: collect, ..opts })?;
            if c.report.budget_exceeded {
                return Err(Error::BudgetExceeded { budget: spec.budget }.into());
            }
            Outcome { exact: c.report.exact, ..Outcome::exact(to_value(&c)) }
        }
    })
}

fn volume_opts(spec: &JobSpec) -> JobResult<VolumeOptions> {
    let d = VolumeOptions::default();
    Ok(VolumeOptions {
        seed: spec.seed,
        max_samples: spec.usize_or("samples", d.max_samples as usize)? as u64,
        target_rel: spec.f64_or("target_rel", d.target_rel)?,
        force_monte_carlo: matches!(spec.get("force_monte_carlo"), Some(Value::Bool(true))),
        ..d
    })
}

fn gs_check(spec: &JobSpec, rings: &mut RingRegistry) -> JobResult<Outcome> {
    let gopts = GsOptions { enumeration: spec.enum_opts(), volume: volume_opts(spec)? };
    let a_values = spec.f64_list_or("a_values", &[1.5, 2.0, 3.0])?;
    let lambdas = spec.weights_or("lambdas", &[0.1, 0.5, 1.0, 2.0])?;
    if spec.get("module").is_some() {
        let module = spec.z_module(rings)?;
        let larger_norm = spec.get("larger_norm").map(|v| NormSpec::from_json(v, rings)).transpose()?;
        let inputs = Prop21Inputs { lambdas, larger_norm, sequence: None, basis: None };
        let mut reports = gs_core_report(&module, &a_values, &gopts)?;
        reports.extend(prop21_report(&module, &inputs, &gopts)?);
        return Ok(reports_outcome(reports, true, None));
    }
    let config = SuiteConfig {
        seed: spec.seed,
        instances: spec.usize_or("instances", 50)?,
        max_rank: spec.usize_or("max_rank", 3)?,
        dilations: a_values,
        lambdas,
        options: gopts,
        ..SuiteConfig::default()
    };
    let result = run_suite(&config)?;
    Ok(reports_outcome(result.reports, true, None))
}
