//! Locations of the data shipped with the repository.
//!
//! `BODYMAP_HOME` overrides the root; otherwise the workspace checkout this
//! crate was built from is used.

use std::path::PathBuf;

pub fn home() -> PathBuf {
    match std::env::var_os("BODYMAP_HOME") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../..")),
    }
}

pub fn atlas_path() -> PathBuf {
    home().join("data/atlas.json")
}

pub fn kb_path() -> PathBuf {
    home().join("data/kb.json")
}

pub fn prompts_dir() -> PathBuf {
    home().join("prompts")
}

pub fn diagnosis_pool_path() -> PathBuf {
    home().join("data/other_diagnoses.txt")
}

pub fn fixtures_dir() -> PathBuf {
    home().join("fixtures")
}
