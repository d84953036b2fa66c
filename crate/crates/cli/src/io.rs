use std::fs;
use std::path::Path;

use amdplab_core::mdp::{DeterministicPolicy, MdpModel};
use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Reads and parses a JSON input. Missing or malformed inputs are
/// validation errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Validation)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::Validation)
}

pub fn read_model(path: &Path) -> CliResult<MdpModel> {
    read_json(path)
}

pub fn read_policy(path: &Path) -> CliResult<DeterministicPolicy> {
    read_json(path)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json_pretty(value))
}

/// First 16 hex digits of the SHA-256 of the model's JSON form.
pub fn model_hash(model: &MdpModel) -> String {
    let digest = Sha256::digest(model.to_json().as_bytes());
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.5]).unwrap();
        let b = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.25]).unwrap();
        assert_eq!(model_hash(&a), model_hash(&a.clone()));
        assert_ne!(model_hash(&a), model_hash(&b));
        assert_eq!(model_hash(&a).len(), 16);
    }
}
