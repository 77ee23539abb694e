//! Plain-text file formats: run configuration, time-stamp series, hidden
//! variable traces, summaries and scan tables. Every writer is
//! deterministic and every file is written through a temp file and rename.

mod config;
mod summary;
mod trace;
mod tsv;

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::EngineError;

pub use config::{format_config, parse_angle, parse_angle_list, parse_config, read_config};
pub use summary::{format_diff, format_scan, format_summary};
pub use trace::{format_trace, parse_trace, read_trace};
pub use tsv::{format_tsv, parse_tsv, read_tsv, TSV_HEADER};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<IoError> },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl IoError {
    fn parse(line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse {
            line,
            msg: msg.into(),
        }
    }

    fn in_file(self, path: &Path) -> Self {
        match self {
            IoError::File { .. } | IoError::InFile { .. } => self,
            other => IoError::InFile {
                path: path.to_path_buf(),
                source: Box::new(other),
            },
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents` to a temp file next to `path`, then renames it over.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |source| IoError::File {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_parent_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("no/such/dir/x.txt");
        assert!(matches!(write_atomic(&p, "x"), Err(IoError::File { .. })));
    }
}
