use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "WIRETAP_REGION_SEED";

/// What produced an output file. Rerunning `command` with the same
/// `channel_path`, `params` and `seed` reproduces the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub channel_path: Option<PathBuf>,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: DateTime<Utc>,
}

impl RunManifest {
    pub fn new(command: &str, channel_path: Option<&Path>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            channel_path: channel_path.map(Path::to_path_buf),
            params: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: Utc::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// `<output>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_next_to(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = Self::path_for(output);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    pub fn timestamp_string(&self) -> String {
        self.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true)
    }
}

/// The environment variable wins over the flag.
pub fn resolve_seed(flag: u64) -> anyhow::Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(e).with_context(|| format!("cannot read {SEED_ENV}")),
    }
}
