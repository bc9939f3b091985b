//! Interrupt-safe output writing: everything goes through write-then-rename
//! so partial trial outputs never masquerade as complete ones.

use std::fs;
use std::path::{Path, PathBuf};

use crate::failure::Failure;

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)
        .map_err(|e| Failure::partial(format!("creating {}: {e}", dir.display())))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Failure::invalid(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)
        .map_err(|e| Failure::partial(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| Failure::partial(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("reading {}: {e}", path.display())))
}

/// Directories holding one trial each: `trial-<morphology>-<regime>-<treatment>-<seed>`.
pub fn trial_dir_name(morphology: &str, regime: &str, treatment: &str, seed: u64) -> String {
    format!("trial-{morphology}-{regime}-{treatment}-{seed}")
}

pub struct TrialPaths {
    pub dir: PathBuf,
}

impl TrialPaths {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn champion(&self) -> PathBuf {
        self.dir.join("champion.txt")
    }

    pub fn ledger(&self) -> PathBuf {
        self.dir.join("ledger.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}
