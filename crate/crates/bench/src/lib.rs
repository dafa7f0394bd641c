//! Shared inputs for the criterion benches.

use std::path::PathBuf;

/// Reads a listing from the `programs/` directory.
pub fn listing(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub const LISTINGS: [&str; 6] = [
    "cointoss.qpl",
    "epr.qpl",
    "teleport.qpl",
    "dump_ft.qpl",
    "control_flow.qpl",
    "procs.qpl",
];
