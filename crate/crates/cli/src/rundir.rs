use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{Context, Result};
use effmass_core::harness::ExperimentConfig;

use crate::io;

/// Output directory of one invocation: the resolved config, a copy of the
/// source config file and a version stamp.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path, config: &ExperimentConfig, source: Option<&Path>) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        io::write_json(&path.join("config.json"), config)?;
        if let Some(src) = source {
            let name = match src.extension() {
                Some(ext) => format!("config.source.{}", ext.to_string_lossy()),
                None => "config.source".to_string(),
            };
            fs::copy(src, path.join(name)).with_context(|| format!("copying {}", src.display()))?;
        }
        io::write_text(&path.join("stamp.txt"), &format!("{}\n", version_stamp()))?;
        Ok(Self { path: path.to_path_buf() })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

/// `git describe --always --dirty` of the working tree, falling back to the
/// crate version outside a checkout.
pub fn version_stamp() -> String {
    let described = Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{} {d}", env!("CARGO_PKG_VERSION")),
        None => format!("{} (no git)", env!("CARGO_PKG_VERSION")),
    }
}
