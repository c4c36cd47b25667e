//! Where recordings come from: a dataset directory or the generator.

use std::collections::BTreeSet;
use std::path::PathBuf;

use emgait_core::dataset::{exclude_injured, exclude_subjects, generate_synthetic, Recording, SyntheticConfig};

use crate::error::Result;
use crate::io::{load_dataset, read_json};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Directory(PathBuf),
    /// Generated recordings. `None` uses the default generator settings.
    Synthetic { config: Option<PathBuf>, seed: u64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Exclusions {
    pub subjects: BTreeSet<String>,
    pub injured: bool,
}

pub fn synthetic_config(path: Option<&std::path::Path>) -> Result<SyntheticConfig> {
    let config = match path {
        Some(p) => read_json(p)?,
        None => SyntheticConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_recordings(source: &DataSource, exclusions: &Exclusions) -> Result<Vec<Recording>> {
    let recs = match source {
        DataSource::Directory(dir) => load_dataset(dir)?,
        DataSource::Synthetic { config, seed } => generate_synthetic(&synthetic_config(config.as_deref())?, *seed)?,
    };
    let before = recs.len();
    let mut recs = exclude_subjects(recs, &exclusions.subjects);
    if exclusions.injured {
        recs = exclude_injured(recs);
    }
    log::info!("{} recordings loaded, {} after exclusions", before, recs.len());
    Ok(recs)
}
