// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `tapbound-core`: TOML scenario files,
//! parallel trial execution and CSV/text reports.

pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;

use thiserror::Error;

/// Exit code when every requested check held.
pub const EXIT_OK: i32 = 0;
/// Exit code when a check was violated.
pub const EXIT_VIOLATED: i32 = 1;
/// Exit code for configuration and domain errors.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{key}: {source}")]
    Invalid {
        key: String,
        #[source]
        source: tapbound_core::Error,
    },
    #[error(transparent)]
    Core(#[from] tapbound_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}
