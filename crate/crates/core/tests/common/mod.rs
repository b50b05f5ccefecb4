#![allow(dead_code)]

use std::path::PathBuf;

use dqi_core::ProblemFile;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> ProblemFile {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    dqi_core::parse(&text).expect("fixture parses")
}
