use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// One file written by a command together with its schema tag.
#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub schema: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub status: String,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    Ok(sha256_hex(&buf))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let w = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }
}
