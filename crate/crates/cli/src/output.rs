// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliResult;

/// Output directory that remembers what it wrote so failures can clean up.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        std::fs::create_dir_all(&self.root)?;
        let path = self.root.join(name);
        self.written.push(path.clone());
        std::fs::write(&path, bytes)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn file_names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    /// Deletes every file written so far.
    pub fn discard(&mut self) {
        for path in self.written.drain(..) {
            if let Err(e) = std::fs::remove_file(&path) {
                log::warn!("could not remove partial output {}: {e}", path.display());
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub argv: Vec<String>,
    pub settings: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub status: &'static str,
    pub error: Option<String>,
    pub wall_time_seconds: f64,
}

impl<'a> Manifest<'a> {
    pub fn new(subcommand: &'a str, argv: Vec<String>, settings: serde_json::Value) -> Self {
        Self {
            tool: "nsqcd",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            argv,
            settings,
            seed: None,
            outputs: Vec::new(),
            status: "ok",
            error: None,
            wall_time_seconds: 0.0,
        }
    }

    pub fn finish(&mut self, started: Instant) {
        self.wall_time_seconds = started.elapsed().as_secs_f64();
    }
}
