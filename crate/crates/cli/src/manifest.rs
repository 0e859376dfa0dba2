use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Ordered `key=value` lines. Holds nothing time- or host-dependent.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.put("tool", env!("CARGO_PKG_NAME"));
        m.put("version", env!("CARGO_PKG_VERSION"));
        m.put("command", command);
        m
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        debug_assert!(self.entries.iter().all(|(k, _)| *k != key), "duplicate manifest key {key}");
        self.entries.push((key, value.to_string()));
    }

    pub fn put_file_hash(&mut self, key: &str, path: &Path) -> io::Result<()> {
        let bytes = fs::read(path)?;
        self.put(key, sha256_hex(&bytes));
        Ok(())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Creates `dir`, then writes the manifest and config copies before any data
/// file so an interrupted run is still self-describing.
pub struct OutputDir<'a> {
    dir: &'a Path,
}

impl<'a> OutputDir<'a> {
    pub fn open(dir: &'a Path, manifest: &Manifest, configs: &[(&str, &str)]) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.txt"), manifest.render())?;
        for (name, body) in configs {
            fs::write(dir.join(name), body)?;
        }
        Ok(Self { dir })
    }

    pub fn path(&self) -> &Path {
        self.dir
    }

    pub fn write(&self, name: &str, body: impl AsRef<[u8]>) -> io::Result<()> {
        fs::write(self.dir.join(name), body)
    }
}
