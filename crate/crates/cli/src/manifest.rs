// Copyright 2026 The aspectval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Run manifests: what a command read, with content hashes, and what it wrote.

use std::path::{Path, PathBuf};

use aspectval::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    /// SHA-256 of the git blob framing `blob <len>\0<bytes>`.
    pub hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub elapsed_ms: u128,
}

/// Everything needed to re-run a command and get the same outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub arguments: Vec<String>,
    pub config: Option<PathBuf>,
    pub inputs: Vec<InputRecord>,
    pub rng_seed: Option<u64>,
    pub threads: usize,
    /// Hash over the input hashes in order.
    pub input_hash: String,
    pub outputs: Vec<PathBuf>,
    pub timings: Timings,
}

pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Collects inputs and outputs while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    command: String,
    config: Option<PathBuf>,
    inputs: Vec<InputRecord>,
    outputs: Vec<PathBuf>,
    rng_seed: Option<u64>,
    threads: usize,
}

impl ManifestBuilder {
    pub fn new(command: &str, threads: usize) -> Self {
        ManifestBuilder {
            command: command.to_owned(),
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            rng_seed: None,
            threads,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        self.inputs.push(InputRecord {
            role: role.to_owned(),
            path: path.to_owned(),
            hash: blob_hash(&bytes),
        });
        Ok(())
    }

    pub fn config(&mut self, path: &Path) -> Result<()> {
        self.config = Some(path.to_owned());
        self.input("config", path)
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_owned());
    }

    pub fn seed(&mut self, seed: u64) {
        self.rng_seed = Some(seed);
    }

    pub fn finish(self, elapsed_ms: u128) -> RunManifest {
        let mut h = Sha256::new();
        for input in &self.inputs {
            h.update(input.role.as_bytes());
            h.update(b"\0");
            h.update(input.hash.as_bytes());
            h.update(b"\n");
        }
        RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            arguments: std::env::args().skip(1).collect(),
            config: self.config,
            inputs: self.inputs,
            rng_seed: self.rng_seed,
            threads: self.threads,
            input_hash: hex::encode(h.finalize()),
            outputs: self.outputs,
            timings: Timings { elapsed_ms },
        }
    }
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}
