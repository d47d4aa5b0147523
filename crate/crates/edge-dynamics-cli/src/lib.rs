//! Command implementations, CSV/SVG writers and the manifest runner behind
//! the `edge-dynamics` binary. Everything here is also callable as a
//! library so integration tests can drive full runs in-process.

pub mod commands;
pub mod csv_out;
pub mod manifest;
pub mod svg;

use edge_dynamics::Error;

/// Process exit code for an error: 2 for parameter/usage problems, 3 for
/// anything rooted in input data or the filesystem.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse { .. } | Error::NoPositiveLabel | Error::Orthogonality { .. } => 3,
        _ => 2,
    }
}
