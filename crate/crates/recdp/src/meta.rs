//! Provenance block stamped on every emitted file.

use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, run-config hash and master seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Meta {
    pub tool: String,
    pub config_hash: String,
    pub master_seed: u64,
}

impl Meta {
    pub fn new(config_hash: impl Into<String>, master_seed: u64) -> Self {
        Meta {
            tool: format!("{TOOL_NAME} {TOOL_VERSION}"),
            config_hash: config_hash.into(),
            master_seed,
        }
    }

    /// `#`-prefixed header for delimiter-separated files.
    pub fn comment_header(&self) -> String {
        format!(
            "# {}\n# config-hash {}\n# master-seed {}\n",
            self.tool, self.config_hash, self.master_seed
        )
    }
}
