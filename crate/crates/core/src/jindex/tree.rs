//! Parsing every Java file below a checkout root.

use std::path::Path;

use rayon::prelude::*;
use walkdir::WalkDir;

use super::extract::{parse_file, ParsedFile};

/// True when `rel` lies under one of the excluded directory names.
pub fn is_excluded(rel: &str, exclude: &[String]) -> bool {
    exclude.iter().any(|e| {
        let e = e.trim_matches('/');
        !e.is_empty() && (rel.starts_with(&format!("{e}/")) || rel.contains(&format!("/{e}/")))
    })
}

/// Repository-relative paths of all `.java` files, sorted, honouring the
/// directory exclude list.
pub fn java_files(root: &Path, exclude: &[String]) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(std::io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Ok(rel) = entry.path().strip_prefix(root) else {
            continue;
        };
        let rel = rel.to_string_lossy().replace('\\', "/");
        if rel.starts_with(".git/") || !rel.ends_with(".java") || is_excluded(&rel, exclude) {
            continue;
        }
        out.push(rel);
    }
    out.sort();
    Ok(out)
}

/// Parses the tree file-parallel; output order is the sorted path order.
/// Invalid UTF-8 is replaced rather than rejected.
pub fn parse_tree(root: &Path, exclude: &[String]) -> std::io::Result<Vec<ParsedFile>> {
    let files = java_files(root, exclude)?;
    files
        .par_iter()
        .map(|rel| {
            let bytes = std::fs::read(root.join(rel))?;
            Ok(parse_file(rel, &String::from_utf8_lossy(&bytes)))
        })
        .collect()
}
