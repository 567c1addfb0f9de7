use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Machine-readable record of what produced a results directory. Holds no
/// timestamps so reruns reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub experiment: String,
    pub seed: u64,
    /// SHA-256 over every input file and the effective overrides.
    pub config_sha256: String,
    pub inputs: Vec<InputDigest>,
    pub overrides: BTreeMap<String, String>,
    pub schedulers: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(
        command: &str,
        experiment: &str,
        seed: u64,
        inputs: &[(String, Vec<u8>)],
        overrides: BTreeMap<String, String>,
    ) -> Self {
        let mut all = Sha256::new();
        for (_, bytes) in inputs {
            all.update(hex(bytes).as_bytes());
        }
        for (k, v) in &overrides {
            all.update(format!("{k}={v}\n").as_bytes());
        }
        Self {
            tool: "ibdash",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            experiment: experiment.to_string(),
            seed,
            config_sha256: format!("{:x}", all.finalize()),
            inputs: inputs
                .iter()
                .map(|(path, bytes)| InputDigest {
                    path: path.clone(),
                    sha256: hex(bytes),
                })
                .collect(),
            overrides,
            schedulers: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_inputs_and_overrides() {
        let inputs = vec![("a.toml".to_string(), b"x = 1".to_vec())];
        let a = Manifest::new("run", "e", 1, &inputs, BTreeMap::new());
        let b = Manifest::new("run", "e", 1, &inputs, BTreeMap::new());
        assert_eq!(a.to_json(), b.to_json());
        let mut o = BTreeMap::new();
        o.insert("seed".to_string(), "7".to_string());
        let c = Manifest::new("run", "e", 7, &inputs, o);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.inputs[0].sha256.len(), 64);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
