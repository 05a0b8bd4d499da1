//! Run manifests: every command writes exactly one, recording the command
//! line, a config echo, the library version, the seed, timestamps, and the
//! produced files.

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command_line: Vec<String>,
    pub library_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(seed: Option<u64>) -> Self {
        Self {
            schema_version: hsar::SCHEMA_VERSION,
            command_line: std::env::args().collect(),
            library_version: hsar::VERSION.to_string(),
            seed,
            started_unix: now(),
            finished_unix: 0.0,
            config: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Stamp the end time and write `<primary>.manifest.json`.
    pub fn finish_for(
        &mut self,
        primary_output: &Path,
        config: serde_json::Value,
    ) -> Result<(), Box<dyn std::error::Error>> {
        self.finished_unix = now();
        self.config = config;
        let mut path = PathBuf::from(primary_output);
        let file_name = path
            .file_name()
            .map(|f| f.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".to_string());
        path.set_file_name(format!("{file_name}.manifest.json"));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n")?;
        Ok(())
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
