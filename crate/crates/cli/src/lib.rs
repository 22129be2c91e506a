//! Reproducible job runner over `arakelov-core`.

pub mod cache;
pub mod emit;
pub mod job;

pub use cache::Cache;
pub use emit::{emit_outputs, Format};
pub use job::{run_job, Command, JobError, JobSpec, ResultRecord};

pub const PRECISION_ENV: &str = "ARAKELOV_PRECISION_BITS";

/// Applies `ARAKELOV_PRECISION_BITS` to the starting interval precision.
pub fn apply_precision_env() -> Result<(), JobError> {
    let Some(v) = std::env::var_os(PRECISION_ENV) else { return Ok(()) };
    let bits = v
        .to_str()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .filter(|&b| b >= 64)
        .ok_or_else(|| arakelov_core::Error::Parse(format!("{PRECISION_ENV} must be an integer of at least 64")))?;
    arakelov_core::interval::set_start_precision_bits(bits);
    Ok(())
}
