use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use crate::error::{io_err, Result};

/// A scratch directory next to the destination. Nothing reaches the
/// destination unless [`Staging::commit`] runs; dropping it discards the
/// partial output.
pub struct Staging {
    tmp: TempDir,
    dest: PathBuf,
}

impl Staging {
    pub fn new(dest: &Path) -> Result<Self> {
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(io_err(&parent))?;
        let tmp = tempfile::Builder::new().prefix(".radiolab-staging-").tempdir_in(&parent).map_err(io_err(&parent))?;
        Ok(Self { tmp, dest: dest.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    /// Moves the staged tree to the destination, replacing any previous run.
    pub fn commit(self) -> Result<PathBuf> {
        let staged = self.tmp.keep();
        if self.dest.exists() {
            let old = staged.with_extension("old");
            fs::rename(&self.dest, &old).map_err(io_err(&self.dest))?;
            fs::rename(&staged, &self.dest).map_err(io_err(&self.dest))?;
            fs::remove_dir_all(&old).map_err(io_err(&old))?;
        } else {
            fs::rename(&staged, &self.dest).map_err(io_err(&self.dest))?;
        }
        Ok(self.dest)
    }
}
