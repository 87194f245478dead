//! Output directory handling and the per-run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_DIR_ENV: &str = "FORWARDTEST_DATA_DIR";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: &'a str,
    parameters: &'a serde_json::Value,
    parameters_sha256: String,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs and outputs of one command run.
pub struct Run {
    pub out: PathBuf,
    pub seed: u64,
    command: String,
    config_sha256: String,
    parameters: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    pub fn new(out: &Path, command: &str, seed: u64, config_sha256: String) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Run {
            out: out.to_path_buf(),
            seed,
            command: command.to_string(),
            config_sha256,
            parameters: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn set_parameters(&mut self, params: &impl Serialize) -> Result<()> {
        self.parameters = serde_json::to_value(params)?;
        Ok(())
    }

    /// Resolves `path` directly or under `$FORWARDTEST_DATA_DIR`, reads it and
    /// records its hash under the name it was given.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let resolved = resolve_input(path)?;
        let bytes = std::fs::read(&resolved).with_context(|| format!("reading {}", resolved.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_input_text(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Writes `name` under the output directory. Text outputs are hashed into
    /// the manifest; SVG files are not.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let bytes = contents.as_ref();
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        if !name.ends_with(".svg") {
            self.outputs.insert(name.to_string(), sha256_hex(bytes));
        }
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self) -> Result<()> {
        let parameters_sha256 = sha256_hex(serde_json::to_string(&self.parameters)?.as_bytes());
        let manifest = Manifest {
            tool: "forwardtest",
            version: env!("CARGO_PKG_VERSION"),
            core_version: forwardtest::VERSION,
            command: &self.command,
            seed: self.seed,
            config_sha256: &self.config_sha256,
            parameters: &self.parameters,
            parameters_sha256,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join(MANIFEST_FILE);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn resolve_input(path: &Path) -> Result<PathBuf> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return Ok(candidate);
        }
    }
    anyhow::bail!("input {} not found (also looked under ${DATA_DIR_ENV})", path.display())
}
