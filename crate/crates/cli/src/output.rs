//! Atomic file output and reproduction manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let wrap = |source| CliError::Output {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.flush().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

pub fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))
}

/// `<prefix><suffix>` as a path.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Where the seed came from.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Env,
    Default,
}

/// Everything needed to rerun a subcommand and get the same bytes.
#[derive(Debug, Serialize)]
pub struct Manifest<P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub parameters: P,
    pub outputs: Vec<String>,
}

impl<P: Serialize> Manifest<P> {
    pub fn new(command: &'static str, seed: (u64, SeedSource), parameters: P, outputs: &[PathBuf]) -> Self {
        Manifest {
            tool: "rpcsp",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().skip(1).collect(),
            seed: seed.0,
            seed_source: seed.1,
            parameters,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// The effective seed: `RPCSP_SEED` wins over `--seed`, which wins over 0.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<(u64, SeedSource)> {
    match std::env::var("RPCSP_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(|s| (s, SeedSource::Env))
            .map_err(|e| CliError::usage(format!("RPCSP_SEED `{v}`: {e}"))),
        Err(_) => Ok(match flag {
            Some(s) => (s, SeedSource::Flag),
            None => (0, SeedSource::Default),
        }),
    }
}
