//! Shared fixtures for the benchmark targets.

use lsn_core::engine::ScenarioConfig;
use std::path::Path;

/// OneWeb-scale scenario pointing at the bundled city table.
pub fn oneweb_config() -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/oneweb.toml");
    ScenarioConfig::load(&path, &[]).expect("bundled config loads")
}
