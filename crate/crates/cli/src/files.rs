use std::io::Write;
use std::path::{Path, PathBuf};

use btm_disagg::data::{ingest_csv, read_attributes, read_groups, ColumnMapping};
use btm_disagg::FeederDataset;
use serde::Serialize;

use crate::args::DataArgs;
use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_dataset(args: &DataArgs) -> Result<FeederDataset, CliError> {
    let mut ds = ingest_csv(&args.data, &ColumnMapping::default())?;
    if let Some(g) = &args.groups {
        ds = ds.with_groups(read_groups(g)?)?;
    }
    if let Some(a) = &args.attributes {
        ds = ds.with_attributes(read_attributes(a)?);
    }
    Ok(ds)
}

/// Files staged in memory and written together, each one atomically.
#[derive(Debug, Default)]
pub struct FileSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl FileSet {
    pub fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(btm_disagg::Error::from)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Writes every file under `dir` through a temporary file and a rename,
    /// so a reader never sees a partially written file.
    pub fn write_to(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            let parent = path.parent().unwrap_or(dir).to_path_buf();
            std::fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
            let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(|e| CliError::io(&parent, e))?;
            tmp.write_all(&bytes).map_err(|e| CliError::io(&path, e))?;
            tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
