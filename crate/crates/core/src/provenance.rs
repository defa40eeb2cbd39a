//! Content-hash provenance stanzas embedded in every artifact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::store::dten;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub stage: String,
    pub seed: u64,
    /// Input name to SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    pub params: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(stage: &str, seed: u64) -> Self {
        Provenance {
            tool: concat!("disco ", env!("CARGO_PKG_VERSION")).to_string(),
            stage: stage.to_string(),
            seed,
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn input(mut self, name: &str, hash: String) -> Self {
        self.inputs.insert(name.to_string(), hash);
        self
    }

    pub fn param(mut self, name: &str, value: impl ToString) -> Self {
        self.params.insert(name.to_string(), value.to_string());
        self
    }

    /// Fails with `StaleArtifact` unless the recorded hash of `name` equals `current`.
    pub fn expect_input(&self, artifact: &Path, name: &str, current: &str) -> Result<()> {
        match self.inputs.get(name) {
            Some(h) if h == current => Ok(()),
            recorded => Err(Error::StaleArtifact {
                path: artifact.to_path_buf(),
                what: name.to_string(),
                recorded: recorded.cloned().unwrap_or_else(|| "<none>".into()),
                current: current.to_string(),
            }),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&dten::read_file(path)?))
}
