//! The on-disk store: a single TSV snapshot inside the data directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use komohe::Store;

pub const SNAPSHOT_FILE: &str = "store.tsv";

pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.root.join(SNAPSHOT_FILE)
    }

    /// Loads the snapshot; a missing snapshot is an empty store.
    pub fn load(&self) -> Result<Store> {
        let path = self.snapshot_path();
        let mut store = Store::new();
        if !path.exists() {
            return Ok(store);
        }
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let report = store
            .import_tsv(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        if let Some(err) = report.errors.first() {
            bail!(
                "{}:{}: corrupt snapshot: {}",
                path.display(),
                err.line,
                err.reason
            );
        }
        Ok(store)
    }

    /// Replaces the snapshot atomically.
    pub fn save(&self, store: &Store) -> Result<()> {
        fs::create_dir_all(&self.root)
            .with_context(|| format!("creating data directory {}", self.root.display()))?;
        let path = self.snapshot_path();
        let tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        {
            let mut out = BufWriter::new(tmp.as_file());
            store.write_snapshot(&mut out)?;
            out.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}
