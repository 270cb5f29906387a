use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetRecord, PipelineError, RunStats};
use crate::num::Real;

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub records: u64,
    pub target: u64,
    pub complete: bool,
    /// sha256 of the stage file once complete.
    pub digest: Option<String>,
    pub stats: Option<RunStats>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_digest: Option<String>,
    pub stages: BTreeMap<String, StageEntry>,
}

/// Directory of append-only JSON Lines files plus a manifest.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn exists(&self, file: &str) -> bool {
        self.path(file).exists()
    }

    /// Reads every record of `file`; a missing file reads as empty. A torn
    /// final line left by an interrupted append is cut off.
    pub fn read<F: Real>(&self, file: &str) -> Result<Vec<DatasetRecord<F>>, PipelineError> {
        let path = self.path(file);
        let handle = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut reader = BufReader::new(handle);
        let mut records = Vec::new();
        let mut good_len: u64 = 0;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            let complete = line.ends_with('\n');
            match serde_json::from_str::<DatasetRecord<F>>(line.trim_end()) {
                Ok(r) if complete => {
                    records.push(r);
                    good_len += n as u64;
                }
                Ok(_) | Err(_) => {
                    let mut rest = String::new();
                    if reader.read_line(&mut rest)? != 0 {
                        return Err(PipelineError::Store(format!(
                            "{}: corrupt record after line {}",
                            path.display(),
                            records.len()
                        )));
                    }
                    log::warn!("{}: dropping torn final line", path.display());
                    OpenOptions::new().write(true).open(&path)?.set_len(good_len)?;
                    break;
                }
            }
        }
        Ok(records)
    }

    pub fn appender(&self, file: &str) -> Result<Appender, PipelineError> {
        let f = OpenOptions::new().create(true).append(true).open(self.path(file))?;
        Ok(Appender { out: BufWriter::new(f) })
    }

    pub fn file_digest(&self, file: &str) -> Result<String, PipelineError> {
        Ok(sha256_hex(&fs::read(self.path(file))?))
    }

    pub fn manifest(&self) -> Result<Manifest, PipelineError> {
        match fs::read_to_string(self.path(MANIFEST)) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| PipelineError::Store(format!("manifest: {e}"))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Replaces the manifest atomically.
    pub fn write_manifest(&self, m: &Manifest) -> Result<(), PipelineError> {
        let tmp = self.path("manifest.json.tmp");
        let text = serde_json::to_string_pretty(m).map_err(|e| PipelineError::Store(e.to_string()))?;
        fs::write(&tmp, text + "\n")?;
        fs::rename(&tmp, self.path(MANIFEST))?;
        Ok(())
    }

    pub fn update_manifest(&self, f: impl FnOnce(&mut Manifest)) -> Result<(), PipelineError> {
        let mut m = self.manifest()?;
        f(&mut m);
        self.write_manifest(&m)
    }
}

/// Single writer for one stage file.
pub struct Appender {
    out: BufWriter<File>,
}

impl Appender {
    pub fn push<F: Real>(&mut self, r: &DatasetRecord<F>) -> Result<(), PipelineError> {
        let line = serde_json::to_string(r).map_err(|e| PipelineError::Store(e.to_string()))?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    /// Flushes buffered records to the file.
    pub fn commit(&mut self) -> Result<(), PipelineError> {
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        Ok(())
    }
}
