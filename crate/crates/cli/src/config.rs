//! JSON run configuration for `analyze`. Every field is optional; command-line
//! flags take precedence over whatever the file sets.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use splitvote::ingest::GasProfile;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default)]
    pub snapshots: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub min_balance: Option<String>,
    pub setup_cost: Option<String>,
    pub gas: Option<GasProfile>,
}

impl AnalyzeConfig {
    /// Reads a config file. Relative snapshot and output paths are resolved
    /// against the directory holding the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: AnalyzeConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for snap in &mut config.snapshots {
            if snap.is_relative() {
                *snap = base.join(&*snap);
            }
        }
        if let Some(out) = &mut config.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(config)
    }
}
