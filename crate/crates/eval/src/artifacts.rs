//! Byte-level comparison of two output trees.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bubble_core::Result;

/// CSV and JSON files below `root` keyed by relative path, skipping those
/// whose file name starts with `timing` (wall-clock measurements).
pub fn reproducible_files(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    walk(root, root, &mut out)?;
    Ok(out)
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) -> Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            walk(root, &p, out)?;
            continue;
        }
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let data_file = name.ends_with(".csv") || name.ends_with(".json");
        if data_file && !name.starts_with("timing") {
            let rel = p.strip_prefix(root).expect("walked below root").to_path_buf();
            out.insert(rel, fs::read(&p)?);
        }
    }
    Ok(())
}

/// Relative paths that are missing on one side or differ in content.
pub fn differing(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
    out.extend(b.keys().filter(|k| !a.contains_key(*k)).cloned());
    out.sort();
    out
}
