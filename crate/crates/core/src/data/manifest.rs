use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_embedding_file, write_embedding_file, DatasetSplit};
use crate::error::FormatError;

/// Names the three EMBX files of a split. Relative paths are resolved
/// against the manifest's own directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: PathBuf,
    pub retrieval: PathBuf,
    pub query: PathBuf,
    pub category_count: usize,
}

impl SplitManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Reads the manifest and all three member files.
    pub fn load_split(path: impl AsRef<Path>) -> Result<DatasetSplit, FormatError> {
        let path = path.as_ref();
        let manifest = Self::read(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let load = |p: &Path| read_embedding_file(base.join(p));
        DatasetSplit::new(
            load(&manifest.train)?,
            load(&manifest.retrieval)?,
            load(&manifest.query)?,
            manifest.category_count,
        )
    }

    /// Writes `<prefix>.train.embx`, `<prefix>.retrieval.embx`,
    /// `<prefix>.query.embx` and the manifest itself into `dir`.
    pub fn save_split(
        split: &DatasetSplit,
        dir: impl AsRef<Path>,
        prefix: &str,
    ) -> Result<(Self, PathBuf), FormatError> {
        let dir = dir.as_ref();
        let name = |role: &str| PathBuf::from(format!("{prefix}.{role}.embx"));
        let manifest = SplitManifest {
            train: name("train"),
            retrieval: name("retrieval"),
            query: name("query"),
            category_count: split.category_count(),
        };
        write_embedding_file(&split.train, dir.join(&manifest.train))?;
        write_embedding_file(&split.retrieval, dir.join(&manifest.retrieval))?;
        write_embedding_file(&split.query, dir.join(&manifest.query))?;
        let path = dir.join(format!("{prefix}.split.json"));
        manifest.write(&path)?;
        Ok((manifest, path))
    }
}
