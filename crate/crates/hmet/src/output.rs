//! Run directory writer. Every CSV starts with a `# seed=... config_sha256=...`
//! comment line and a header row; `manifest.json` lists every file with its
//! digest. Nothing written here depends on the clock unless timing is asked for.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!("# seed={} config_sha256={}\n", self.seed, self.config_sha256)
    }
}

#[derive(Debug, Clone, Serialize)]
struct FileRecord {
    name: String,
    sha256: String,
    bytes: usize,
    /// Data rows, header excluded. `None` for non-CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: &'a str,
    files: &'a [FileRecord],
}

pub struct RunDir {
    dir: PathBuf,
    provenance: Provenance,
    files: Vec<FileRecord>,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

impl RunDir {
    pub fn create(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>, rows: Option<usize>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord {
            name: name.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len(),
            rows,
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<()> {
        self.put(name, contents.as_bytes().to_vec(), None)
    }

    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let fail = |e: csv::Error| HarnessError::Output {
            file: name.to_owned(),
            message: e.to_string(),
        };
        let mut buf = self.provenance.comment_line().into_bytes();
        let mut count = 0;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(fail)?;
            for row in rows {
                w.write_record(row).map_err(fail)?;
                count += 1;
            }
            w.flush().map_err(|e| HarnessError::io(self.dir.join(name), e))?;
        }
        self.put(name, buf, Some(count))
    }

    /// Write `manifest.json` and return its path.
    pub fn finish(mut self, command: &str) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: self.provenance.seed,
            config_sha256: &self.provenance.config_sha256,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}
