//! Scenario-driven front end for `vsatlink-core`: configuration loading,
//! the end-to-end simulation pipeline, link-budget reports, parameter
//! sweeps and artifact files.

pub mod budget;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

use thiserror::Error;

pub use config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: vsatlink_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for everything
    /// that goes wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline { .. } | CliError::Io { .. } => 3,
        }
    }
}

/// Attaches a stage name to a core error.
pub(crate) fn at<T>(stage: &'static str, r: vsatlink_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Pipeline { stage, source })
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce5_e4b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream seed `index` derived from `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}
