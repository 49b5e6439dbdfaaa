//! Run manifests: `#` provenance comments, then the resolved scenario.
//!
//! The comment lines are ignored when a manifest is read back through
//! `--config`, so replaying it reproduces the table byte for byte.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::scenario::Scenario;

pub fn path_for(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

pub fn render(s: &Scenario, seed: Option<u64>, csv_path: &Path, csv: &str) -> String {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = format!("# nng-lab {}\n# created_unix_s {created}\n", env!("CARGO_PKG_VERSION"));
    if let Some(seed) = seed {
        out.push_str(&format!("# seed {seed}\n"));
    }
    out.push_str(&format!("# sha256 {} {name}\n", sha256_hex(csv.as_bytes())));
    out.push_str(&s.render());
    out
}
