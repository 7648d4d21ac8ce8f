//! Run manifests: everything needed to reproduce a command's outputs.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Invocation;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn read(path: &str) -> Result<(String, InputFile)> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
        let input = InputFile { path: path.to_string(), sha256: sha256_hex(text.as_bytes()) };
        Ok((text, input))
    }

    /// Re-read the file and check it is unchanged.
    pub fn verify(&self) -> Result<String> {
        let (text, now) = Self::read(&self.path)?;
        if now.sha256 != self.sha256 {
            bail!("input {} changed since the manifest was written (sha256 {} != {})", self.path, now.sha256, self.sha256);
        }
        Ok(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Thread count and wall-clock time are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub version: String,
    pub invocation: Invocation,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let m: RunManifest = serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            bail!("{}: unsupported manifest schema_version {}", path.display(), m.schema_version);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Files produced by a command, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("output serializes");
        s.push('\n');
        self.add(name, s);
    }

    pub fn write(self, dir: &Path, invocation: Invocation, inputs: Vec<InputFile>) -> Result<RunManifest> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(&name);
            fs::write(&path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
            outputs.push(OutputFile { file: name, sha256: sha256_hex(&bytes) });
        }
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").into(),
            invocation,
            inputs,
            outputs,
        };
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, manifest.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(manifest)
    }
}
