pub mod eval;
pub mod report;
pub mod synth;
pub mod train;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use mmref::datamodel::{load_corpus, DialogueDocument};

use crate::error::usage;

/// `explicit` if given, else `<root>/<name>`; created if missing.
pub fn out_dir(explicit: Option<&Path>, root: &Path, name: &str) -> Result<PathBuf> {
    let dir = explicit.map_or_else(|| root.join(name), Path::to_path_buf);
    fs::create_dir_all(&dir)
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn read_corpus(path: &Path) -> Result<Vec<DialogueDocument>> {
    load_corpus(path).map_err(|e| usage(format!("cannot load corpus {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}
