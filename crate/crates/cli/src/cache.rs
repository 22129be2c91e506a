//! On-disk result cache keyed by job digest.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::job::{run_job, JobError, JobResult, JobSpec, ResultRecord};

pub const CACHE_ENV: &str = "ARAKELOV_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".arakelov-cache";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> JobResult<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| JobError::io(&dir, e))?;
        Ok(Cache { dir })
    }

    /// `$ARAKELOV_CACHE`, or `.arakelov-cache` in the working directory.
    pub fn default_dir() -> PathBuf {
        std::env::var_os(CACHE_ENV).map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), PathBuf::from)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn get(&self, digest: &str) -> Option<ResultRecord> {
        let text = fs::read_to_string(self.path_for(digest)).ok()?;
        serde_json::from_str::<ResultRecord>(&text).ok().filter(|r| r.digest == digest)
    }

    pub fn put(&self, record: &ResultRecord) -> JobResult<()> {
        let path = self.path_for(&record.digest);
        let tmp = self.dir.join(format!("{}.tmp", record.digest));
        let text = record.to_canonical_string();
        let mut f = File::create(&tmp).map_err(|e| JobError::io(&tmp, e))?;
        f.write_all(text.as_bytes()).and_then(|_| f.sync_all()).map_err(|e| JobError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| JobError::io(&path, e))
    }

    /// Returns the cached record for `spec`, computing and storing it on a miss.
    /// Concurrent callers with the same digest wait on a per-digest lock file.
    pub fn run(&self, spec: &JobSpec) -> JobResult<(ResultRecord, bool)> {
        let digest = spec.digest();
        if let Some(r) = self.get(&digest) {
            return Ok((r, true));
        }
        let lock_path = self.dir.join(format!("{digest}.lock"));
        let lock = File::create(&lock_path).map_err(|e| JobError::io(&lock_path, e))?;
        lock.lock().map_err(|e| JobError::io(&lock_path, e))?;
        if let Some(r) = self.get(&digest) {
            return Ok((r, true));
        }
        let record = run_job(spec)?;
        self.put(&record)?;
        Ok((record, false))
    }
}
