//! Report envelopes and artifact sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const TOOL: &str = "lsem";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    /// SHA-256 of the command's parameters (paths excluded).
    pub config_hash: String,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> Self {
        let body = serde_json::json!({ "command": command, "config": config });
        let digest = Sha256::digest(body.to_string().as_bytes());
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: hex::encode(digest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: String,
    pub provenance: Provenance,
    pub report: serde_json::Value,
}

impl Envelope {
    pub fn new<R: Serialize>(kind: &str, provenance: Provenance, report: &R) -> CliResult<Self> {
        Ok(Self { kind: kind.into(), provenance, report: serde_json::to_value(report)? })
    }

    pub fn to_pretty(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes to `out`, or prints to stdout when no path is given.
    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        let text = self.to_pretty()?;
        match out {
            Some(p) => fs::write(p, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `<artifact>.meta.json` describing how the artifact was produced.
pub fn write_sidecar(
    artifact: &Path,
    kind: &str,
    provenance: &Provenance,
    details: serde_json::Value,
) -> CliResult<()> {
    let meta = serde_json::json!({
        "kind": kind,
        "provenance": provenance,
        "details": details,
    });
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(sidecar_path(artifact), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_only() {
        let a = Provenance::new("sample", Some(1), &serde_json::json!({"dim": 4}));
        let b = Provenance::new("sample", Some(1), &serde_json::json!({"dim": 4}));
        let c = Provenance::new("sample", Some(1), &serde_json::json!({"dim": 5}));
        assert_eq!(a, b);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/z.lsdf")), PathBuf::from("out/z.lsdf.meta.json"));
    }
}
