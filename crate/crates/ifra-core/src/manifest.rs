//! Run manifests: every CLI output file is accompanied by a JSON manifest
//! recording the command, configuration echo, input digests, master seed,
//! and tool version, so re-running with the same inputs reproduces the
//! outputs byte for byte. Manifests deliberately contain no timestamps.

use crate::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const TOOL_NAME: &str = "ifra";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: command.to_string(),
            master_seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = std::fs::read(path.as_ref())?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs.push(InputDigest {
            path: path.as_ref().display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(())
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    /// Write `<output>.manifest.json` next to the output file.
    pub fn write_alongside(&self, output: impl AsRef<Path>) -> Result<PathBuf> {
        let mut name = output.as_ref().as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        std::fs::write(&input, "a,b\n1,2\n").unwrap();
        let output = dir.path().join("out.json");
        std::fs::write(&output, "{}\n").unwrap();

        let build = || {
            let mut m = RunManifest::new("select", Some(7), serde_json::json!({"alpha": 0.05}));
            m.add_input(&input).unwrap();
            m.add_output(&output);
            m
        };
        let p1 = build().write_alongside(&output).unwrap();
        let bytes1 = std::fs::read(&p1).unwrap();
        let p2 = build().write_alongside(&output).unwrap();
        assert_eq!(bytes1, std::fs::read(&p2).unwrap());
        assert!(p1.to_string_lossy().ends_with("out.json.manifest.json"));
        let text = String::from_utf8(bytes1).unwrap();
        assert!(text.contains("sha256"));
        assert!(text.contains("\"master_seed\": 7"));
    }
}
