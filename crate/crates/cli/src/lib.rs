//! Front end for the simulator and checkers: scenario files in, JSON reports
//! out.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

/// Scenarios shipped with the tool, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig1a", include_str!("../scenarios/fig1a.toml")),
    ("fig1b", include_str!("../scenarios/fig1b.toml")),
    ("fig2a", include_str!("../scenarios/fig2a.toml")),
    ("fig2b", include_str!("../scenarios/fig2b.toml")),
    (
        "degenerate-total-conflict",
        include_str!("../scenarios/degenerate-total-conflict.toml"),
    ),
    (
        "degenerate-no-conflict",
        include_str!("../scenarios/degenerate-no-conflict.toml"),
    ),
    ("solo-suffix", include_str!("../scenarios/solo-suffix.toml")),
];

/// Directory holding the bundled scenario files in the source tree.
pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Loads `name_or_path` as a file path, or else as the name of a bundled scenario.
pub fn load_scenario(name_or_path: &str) -> Result<config::Scenario, config::ConfigError> {
    let path = Path::new(name_or_path);
    if !path.exists() {
        if let Some((name, text)) = BUNDLED.iter().find(|(name, _)| *name == name_or_path) {
            return config::parse(text, &format!("{name}.toml"));
        }
    }
    config::load(path)
}
