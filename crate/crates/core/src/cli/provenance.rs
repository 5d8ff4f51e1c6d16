//! Output provenance: every result file embeds the hashes needed to
//! reproduce it.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    /// SHA-256 of the run-config file bytes.
    pub config_sha256: String,
    /// SHA-256 of the fitted-model JSON, when a model is involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_sha256: Option<String>,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], seed: u64) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(config_bytes),
            model_sha256: None,
            seed,
        }
    }

    /// Single-line `#`-comment form for CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!(
            "# situtest version={} config_sha256={} model_sha256={} seed={}",
            self.tool_version,
            self.config_sha256,
            self.model_sha256.as_deref().unwrap_or("-"),
            self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_matches_known_vector() {
        // Standard test vector for "abc".
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn comment_line_is_single_line() {
        let mut p = Provenance::new(b"config", 7);
        p.model_sha256 = Some("deadbeef".into());
        let line = p.csv_comment();
        assert!(line.starts_with('#'));
        assert!(!line.contains('\n'));
        assert!(line.contains("seed=7"));
    }
}
