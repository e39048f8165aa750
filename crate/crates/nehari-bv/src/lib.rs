//! Batch front end for [`nehari_core`]: TOML run configurations, parallel
//! restarts, field and trace files, and hashed run manifests.
//!
//! A run executes a subset of the commands audit, solve, certify and
//! continuation (always in that order) and writes into its output directory:
//!
//! | file               | written by  | contents                                   |
//! |--------------------|-------------|--------------------------------------------|
//! | `manifest.json`    | every run   | config echo, command summaries, file hashes |
//! | `field.csv`        | solve       | ground state, one row per grid row          |
//! | `field.pgm`        | solve       | 8-bit greymap of the ground state           |
//! | `trace.csv`        | solve       | descent log of the best restart             |
//! | `certificate.json` | certify     | criticality report                          |
//! | `z_x.csv`, `z_y.csv` | certify with `export_z` | dual vector field          |

#![warn(missing_docs)]

pub mod config;
mod error;
pub mod io;
mod manifest;
pub mod runner;

pub use config::{parse_config, Command, RunConfig};
pub use error::{ConfigError, RunError};
pub use manifest::{CommandRecord, FileEntry, RunManifest, Status};
pub use runner::{run, solve_parallel};
