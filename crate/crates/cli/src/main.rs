use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use arakelov_cli::{apply_precision_env, emit_outputs, Cache, Command, Format, JobError, JobSpec};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "arakelov", version, about = "Lattice-point invariants of normed Z-modules and arithmetic curves")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on lattice points examined per enumeration.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Cache directory (default: $ARAKELOV_CACHE or .arakelov-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    /// Directory for output files; without it the record is printed.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a job file (`-` reads stdin).
    Run { job: PathBuf },
    /// Log count of the unit ball plus log torsion order.
    Hzero {
        #[arg(long)]
        module: String,
        #[arg(long)]
        points: bool,
    },
    /// The same invariant for the dual module.
    Hone {
        #[arg(long)]
        module: String,
        /// Also count with the polar body and compare.
        #[arg(long)]
        check_polar: bool,
    },
    /// Log volume of the unit ball plus log torsion order.
    Chi {
        #[arg(long)]
        module: String,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        target_rel: Option<f64>,
    },
    /// Print the dual module.
    Dual {
        #[arg(long)]
        module: String,
    },
    /// Check the inequality suite on one module, or on seeded random instances.
    GsCheck {
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        max_rank: Option<usize>,
    },
    #[command(subcommand)]
    Curve(CurveCmd),
    #[command(subcommand)]
    P1(P1Cmd),
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Series of h0(mL + N)/m.
    Volume {
        #[arg(long)]
        module: String,
        #[arg(long)]
        twist: Option<String>,
        #[arg(long)]
        m_max: Option<usize>,
    },
    Degree {
        #[arg(long)]
        module: String,
    },
    /// Volume estimates for L + eps A.
    Continuity {
        #[arg(long)]
        module: String,
        #[arg(long)]
        direction: String,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Rank-one bound for aL + bA against cL + cA.
    Prop37 {
        #[arg(long)]
        module: String,
        #[arg(long)]
        direction: String,
        /// Section coordinates, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        section: Vec<i64>,
        #[arg(long)]
        a_max: Option<usize>,
    },
    Bigness {
        #[arg(long)]
        module: String,
        #[arg(long)]
        m_probe: Option<usize>,
    },
}

#[derive(Subcommand)]
enum P1Cmd {
    /// h0, h1 and chi of binary forms under the sup norm.
    Hs {
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Sampled ratio of sup to L2 norms.
    Gromov {
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Count forms of degree m in the unit ball.
    Count {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "sup")]
        norm: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        points: bool,
    },
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn value_arg(s: &str) -> Result<Value, JobError> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| arakelov_core::Error::Parse(e.to_string()).into());
    }
    let path = PathBuf::from(s);
    let text = std::fs::read_to_string(&path).map_err(|e| JobError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| arakelov_core::Error::Parse(format!("{s}: {e}")).into())
}

fn set(spec: &mut JobSpec, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        spec.inputs.insert(key.into(), v);
    }
}

fn build_spec(cmd: Cmd) -> Result<JobSpec, JobError> {
    let opt = |s: Option<String>| s.as_deref().map(value_arg).transpose();
    let mut spec;
    match cmd {
        Cmd::Run { job } => {
            if job.as_os_str() == "-" {
                let mut text = String::new();
                std::io::stdin().read_to_string(&mut text).map_err(|e| JobError::io(&job, e))?;
                spec = JobSpec::parse(&text)?;
                spec.resolve_files(std::path::Path::new("."))?;
            } else {
                spec = JobSpec::load(&job)?;
            }
        }
        Cmd::Hzero { module, points } => {
            spec = JobSpec::new(Command::Hzero).with("module", value_arg(&module)?);
            set(&mut spec, "collect_points", points.then_some(json!(true)));
        }
        Cmd::Hone { module, check_polar } => {
            spec = JobSpec::new(Command::Hone).with("module", value_arg(&module)?);
            set(&mut spec, "check_polar", check_polar.then_some(json!(true)));
        }
        Cmd::Chi { module, samples, target_rel } => {
            spec = JobSpec::new(Command::Chi).with("module", value_arg(&module)?);
            set(&mut spec, "samples", samples.map(|x| json!(x)));
            set(&mut spec, "target_rel", target_rel.map(|x| json!(x)));
        }
        Cmd::Dual { module } => spec = JobSpec::new(Command::Dual).with("module", value_arg(&module)?),
        Cmd::GsCheck { module, instances, max_rank } => {
            spec = JobSpec::new(Command::GsCheck);
            set(&mut spec, "module", opt(module)?);
            set(&mut spec, "instances", instances.map(|x| json!(x)));
            set(&mut spec, "max_rank", max_rank.map(|x| json!(x)));
        }
        Cmd::Curve(c) => match c {
            CurveCmd::Volume { module, twist, m_max } => {
                spec = JobSpec::new(Command::CurveVolume).with("L", value_arg(&module)?);
                set(&mut spec, "N", opt(twist)?);
                set(&mut spec, "m_max", m_max.map(|x| json!(x)));
            }
            CurveCmd::Degree { module } => spec = JobSpec::new(Command::CurveDegree).with("L", value_arg(&module)?),
            CurveCmd::Continuity { module, direction, eps, m } => {
                spec = JobSpec::new(Command::CurveContinuity).with("L", value_arg(&module)?).with("A", value_arg(&direction)?);
                set(&mut spec, "eps", eps.map(|x| json!(x)));
                set(&mut spec, "m", m.map(|x| json!(x)));
            }
            CurveCmd::Prop37 { module, direction, section, a_max } => {
                spec = JobSpec::new(Command::Prop37)
                    .with("L", value_arg(&module)?)
                    .with("A", value_arg(&direction)?)
                    .with("s", json!(section));
                set(&mut spec, "a_max", a_max.map(|x| json!(x)));
            }
            CurveCmd::Bigness { module, m_probe } => {
                spec = JobSpec::new(Command::Bigness).with("L", value_arg(&module)?);
                set(&mut spec, "m_probe", m_probe.map(|x| json!(x)));
            }
        },
        Cmd::P1(c) => match c {
            P1Cmd::Hs { m_max, samples } => {
                spec = JobSpec::new(Command::P1Hs);
                set(&mut spec, "m_max", m_max.map(|x| json!(x)));
                set(&mut spec, "samples", samples.map(|x| json!(x)));
            }
            P1Cmd::Gromov { m_max, trials, grid, tol } => {
                spec = JobSpec::new(Command::P1Gromov);
                set(&mut spec, "m_max", m_max.map(|x| json!(x)));
                set(&mut spec, "trials", trials.map(|x| json!(x)));
                set(&mut spec, "grid", grid.map(|x| json!(x)));
                set(&mut spec, "tol", tol.map(|x| json!(x)));
            }
            P1Cmd::Count { m, norm, grid, tol, points } => {
                spec = JobSpec::new(Command::P1Count).with("m", json!(m)).with("norm", json!(norm));
                set(&mut spec, "grid", grid.map(|x| json!(x)));
                set(&mut spec, "tol", tol.map(|x| json!(x)));
                set(&mut spec, "collect_points", points.then_some(json!(true)));
            }
        },
    }
    spec.check()?;
    Ok(spec)
}

fn main_inner(cli: Cli) -> Result<u8, JobError> {
    apply_precision_env()?;
    let mut spec = build_spec(cli.cmd)?;
    let g = cli.global;
    if let Some(s) = g.seed {
        spec.seed = s;
    }
    if let Some(b) = g.budget {
        spec.budget = b;
    }
    let record = if g.no_cache {
        arakelov_cli::run_job(&spec)?
    } else {
        let dir = g.cache_dir.or_else(|| spec.cache_dir.clone()).unwrap_or_else(Cache::default_dir);
        Cache::open(dir)?.run(&spec)?.0
    };
    match &g.out {
        Some(dir) => {
            for p in emit_outputs(&record, &g.format, dir, spec.command.name())? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => println!("{}", record.to_canonical_string()),
    }
    Ok(if record.violations > 0 { 5 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
