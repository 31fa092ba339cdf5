use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tunnelvision_core::QuadratureConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run, written next to its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, for `replay`.
    pub argv: Vec<String>,
    pub parameters: Value,
    pub quadrature: QuadratureConfig,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

/// Collects output files under one directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = self.written;
        let path = self.root.join(MANIFEST_FILE);
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
    }
}
