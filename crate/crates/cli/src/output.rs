use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::{runtime, CliError};

/// Output directory whose writes are atomic (temp file, then rename).
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(OutDir(dir.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        let fail = |e: std::io::Error| runtime(format!("cannot write {}: {e}", path.display()));
        let mut tmp = NamedTempFile::new_in(&self.0).map_err(fail)?;
        tmp.write_all(contents.as_bytes()).map_err(fail)?;
        tmp.persist(&path).map_err(|e| fail(e.error))?;
        Ok(path)
    }
}
