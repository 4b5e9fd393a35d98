//! Artifact emission. Files are written to a temporary sibling and renamed
//! into place only after every artifact of the run has been produced, so a
//! failing run never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::CliError;

/// One output: a file when `path` is set, stdout otherwise.
#[derive(Debug)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub body: String,
}

impl Artifact {
    pub fn new(path: Option<PathBuf>, body: String) -> Self {
        Self { path, body }
    }
}

fn stage(path: &Path, body: &str) -> Result<NamedTempFile, CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(body.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    Ok(tmp)
}

pub fn emit(artifacts: Vec<Artifact>) -> Result<(), CliError> {
    let mut staged = Vec::new();
    let mut stdout = String::new();
    for a in artifacts {
        match a.path {
            Some(p) => {
                let tmp = stage(&p, &a.body)?;
                staged.push((tmp, p));
            }
            None => stdout.push_str(&a.body),
        }
    }
    for (tmp, p) in staged {
        tmp.persist(&p)
            .map_err(|e| CliError::io(format!("{}: {}", p.display(), e.error)))?;
    }
    let mut out = std::io::stdout().lock();
    out.write_all(stdout.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(format!("stdout: {e}")))
}
