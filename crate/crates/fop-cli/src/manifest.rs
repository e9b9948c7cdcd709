//! Dataset manifests: one `<mask.pbm> <obs.pgm> <name>` triple per line,
//! paths relative to the manifest's directory.  Blank lines and `#`
//! comments are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fop_core::image::{BinaryImage, GrayImage};

use crate::pnm;

#[derive(Debug)]
pub struct DatasetEntry {
    pub mask: BinaryImage,
    pub observation: GrayImage,
    pub name: String,
}

pub fn load_manifest(path: &Path) -> Result<Vec<DatasetEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(mask), Some(obs), Some(name)) = (parts.next(), parts.next(), parts.next()) else {
            bail!(
                "{}:{}: expected `<mask> <observation> <name>`",
                path.display(),
                lineno + 1
            );
        };
        if parts.next().is_some() {
            bail!("{}:{}: trailing fields", path.display(), lineno + 1);
        }
        let mask = pnm::read_pbm(&base.join(mask))?;
        let observation = pnm::read_pgm(&base.join(obs))?;
        if mask.rows() != observation.rows() || mask.cols() != observation.cols() {
            bail!(
                "{}:{}: `{name}` mask is {}x{} but observation is {}x{}",
                path.display(),
                lineno + 1,
                mask.rows(),
                mask.cols(),
                observation.rows(),
                observation.cols()
            );
        }
        entries.push(DatasetEntry {
            mask,
            observation,
            name: name.to_string(),
        });
    }
    if entries.is_empty() {
        bail!("{}: manifest lists no images", path.display());
    }
    Ok(entries)
}

/// Writes a manifest given (mask, observation, name) path triples.
pub fn write_manifest(path: &Path, rows: &[(PathBuf, PathBuf, String)]) -> Result<()> {
    let mut out = String::new();
    for (mask, obs, name) in rows {
        out.push_str(&format!("{} {} {}\n", mask.display(), obs.display(), name));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
