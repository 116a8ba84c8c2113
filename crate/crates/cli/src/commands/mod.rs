pub mod distribution;
pub mod evaluate;
pub mod fuse;
pub mod phantom;
pub mod preprocess;
pub mod stats;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}
