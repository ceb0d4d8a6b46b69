//! Run manifests: enough provenance to rerun a command and check its outputs.
//!
//! A manifest is itself a valid config file. Provenance lines are `#`
//! comments and the resolved configuration follows as `key = value` lines,
//! so `match <command> --config <manifest>` replays the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use super::config::RunConfig;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "-", env!("PROOFMATCH_GIT_DESCRIBE"));

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub started: SystemTime,
    pub elapsed: Duration,
    pub status: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn render(&self, config: &RunConfig) -> String {
        let mut s = String::new();
        let started = self.started.duration_since(UNIX_EPOCH).unwrap_or_default();
        let _ = writeln!(s, "# match {} manifest", self.command);
        let _ = writeln!(s, "# version: {VERSION}");
        let _ = writeln!(s, "# argv: {}", self.argv.join(" "));
        let _ = writeln!(s, "# started_unix: {}.{:03}", started.as_secs(), started.subsec_millis());
        let _ = writeln!(s, "# elapsed_seconds: {:.3}", self.elapsed.as_secs_f64());
        let _ = writeln!(s, "# status: {}", self.status);
        for (kind, paths) in [("input", &self.inputs), ("output", &self.outputs)] {
            for p in paths {
                let digest = sha256_file(p).unwrap_or_else(|e| format!("unreadable ({e})"));
                let _ = writeln!(s, "# {kind}: {} sha256={digest}", p.display());
            }
        }
        s.push_str(&config.render());
        s
    }

    pub fn write(&self, config: &RunConfig) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&config.out_dir)?;
        let path = config.out_dir.join(format!("{}.manifest", self.command));
        fs::write(&path, self.render(config))?;
        Ok(path)
    }
}
