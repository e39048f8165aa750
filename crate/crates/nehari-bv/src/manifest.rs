use serde::{Deserialize, Serialize};

use crate::config::Command;

/// Outcome of a command or of the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Completed.
    Ok,
    /// Stopped with an error; see the record's `error`.
    Failed,
    /// Not attempted because an earlier command failed.
    Skipped,
}

/// What one command did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    /// The command.
    pub command: Command,
    /// Its outcome.
    pub status: Status,
    /// Error message with command context, for failed commands.
    pub error: Option<String>,
    /// Command-specific summary (audit report, solve summary, …).
    pub output: serde_json::Value,
}

/// An emitted file and its content hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// File name inside the output directory.
    pub name: String,
    /// Lower-case hex SHA-256 of the contents.
    pub sha256: String,
    /// Size in bytes.
    pub bytes: u64,
}

/// `manifest.json`. For a fixed configuration every field except
/// `wall_time_seconds` is reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Producing program.
    pub artifact: String,
    /// Its version.
    pub version: String,
    /// Overall outcome.
    pub status: Status,
    /// Solver seed.
    pub seed: u64,
    /// Effective configuration with defaults filled in.
    pub config: serde_json::Value,
    /// One record per requested command, in execution order.
    pub commands: Vec<CommandRecord>,
    /// Files written next to the manifest.
    pub files: Vec<FileEntry>,
    /// Elapsed time of the run.
    pub wall_time_seconds: f64,
}

impl RunManifest {
    /// Record of `command`, if it was requested.
    pub fn command(&self, command: Command) -> Option<&CommandRecord> {
        self.commands.iter().find(|c| c.command == command)
    }

    /// Hash of the emitted file `name`.
    pub fn file_hash(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.sha256.as_str())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
