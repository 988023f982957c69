use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Result, SlipError};

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = partial_path(path);
    let mut f = File::create(&tmp).map_err(|e| SlipError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| SlipError::io(&tmp, e))?;
    f.sync_all().map_err(|e| SlipError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SlipError::io(path, e))
}

/// One JSON document per line. Lines go to `<name>.partial` and are flushed
/// as they are written; [`JsonlWriter::finish`] renames the file into place.
pub struct JsonlWriter {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let tmp = partial_path(path);
        let f = File::create(&tmp).map_err(|e| SlipError::io(&tmp, e))?;
        Ok(JsonlWriter {
            path: path.to_path_buf(),
            tmp,
            out: BufWriter::new(f),
        })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let line = serde_json::to_string(record).map_err(|e| SlipError::parse("jsonl record", e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| SlipError::io(&self.tmp, e))?;
        self.out.flush().map_err(|e| SlipError::io(&self.tmp, e))
    }

    pub fn finish(self) -> Result<()> {
        let f = self.out.into_inner().map_err(|e| SlipError::io(&self.tmp, e.into_error()))?;
        f.sync_all().map_err(|e| SlipError::io(&self.tmp, e))?;
        fs::rename(&self.tmp, &self.path).map_err(|e| SlipError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert!(!partial_path(&p).exists());
    }

    #[test]
    fn jsonl_is_visible_while_running() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.jsonl");
        let mut w = JsonlWriter::create(&p).unwrap();
        w.append(&[1, 2]).unwrap();
        assert_eq!(fs::read_to_string(partial_path(&p)).unwrap(), "[1,2]\n");
        assert!(!p.exists());
        w.append(&"x").unwrap();
        w.finish().unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "[1,2]\n\"x\"\n");
    }
}
