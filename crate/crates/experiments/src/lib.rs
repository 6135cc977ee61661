//! Named experiments over the sensing models, written as CSV bundles with a
//! JSON manifest.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod pipeline;

pub use config::{ConfigFile, Diagnostic, ExperimentConfig, ExperimentId, Overrides, Severity};
pub use error::{Error, Result};
pub use experiments::run;
pub use output::{Bundle, Manifest, Table, SCHEMA_VERSION};

use std::time::Instant;

/// Runs an experiment and writes its bundle to [`ExperimentConfig::bundle_dir`].
pub fn execute(cfg: &ExperimentConfig) -> Result<(Bundle, Manifest)> {
    let start = Instant::now();
    let bundle = run(cfg)?;
    let manifest = output::write_bundle(cfg, &bundle, start.elapsed())?;
    Ok((bundle, manifest))
}
