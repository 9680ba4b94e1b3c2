use std::io::Write;
use std::path::{Path, PathBuf};

use hsc_core::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_PLAN_INFEASIBLE: u8 = 4;
pub const EXIT_DIVERGED: u8 = 5;
pub const EXIT_TRIALS_FAILED: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {err}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible { .. } => EXIT_INFEASIBLE,
            Error::PlanInfeasible(_) => EXIT_PLAN_INFEASIBLE,
            Error::NumericalDivergence { .. } => EXIT_DIVERGED,
            Error::Trial { .. } => EXIT_TRIALS_FAILED,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

/// Files of one command, written together once every one of them is ready.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<PathBuf>, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }

    /// Writes each file through a temporary in the same directory and renames
    /// it into place, so a reader never sees a partial file.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        let mut written = Vec::new();
        for (name, body) in self.files {
            let path = dir.join(name);
            let parent = path.parent().unwrap_or(dir);
            let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Failure::io(parent, e))?;
            tmp.write_all(&body).map_err(|e| Failure::io(&path, e))?;
            tmp.persist(&path).map_err(|e| Failure::io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
