use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliResult;
use crate::output::write_json;

/// Provenance record written next to every command's outputs. Wall-clock
/// time lives only here so the outputs themselves are reproducible.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub args: serde_json::Value,
    pub seed: Option<u64>,
    pub layout_version: &'static str,
    pub workers: usize,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub wall_seconds: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, args: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                tool: "wdist",
                tool_version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                args,
                seed,
                layout_version: wdist::features::LAYOUT_VERSION,
                workers: rayon::current_num_threads(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                results: serde_json::Value::Null,
                wall_seconds: 0.0,
            },
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.manifest.outputs.push(p.display().to_string());
    }

    pub fn results(&mut self, v: serde_json::Value) {
        self.manifest.results = v;
    }

    pub fn finish(mut self, path: &Path) -> CliResult<PathBuf> {
        self.manifest.wall_seconds = self.started.elapsed().as_secs_f64();
        write_json(path, &self.manifest)?;
        Ok(path.to_path_buf())
    }
}

/// Manifest path for an output file: `<file>.manifest.json`.
pub fn manifest_for(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
