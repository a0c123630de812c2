//! Dataset manifests: UTF-8 text, one `label<TAB>path` record per line, paths
//! relative to the manifest's directory. Blank lines and lines starting with `#`
//! are skipped.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::{DatasetItem, ItemSource, LabeledDataset};

/// Parses a manifest; matrices are loaded lazily when the dataset is featurized.
pub fn read_manifest(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

pub(crate) fn parse_manifest(text: &str, path: &Path) -> Result<LabeledDataset> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut items = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let record = raw.trim_end_matches('\r');
        if record.trim().is_empty() || record.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Manifest { path: path.to_path_buf(), line, message };
        let (label, rel) = record.split_once('\t').ok_or_else(|| bad("expected `label<TAB>path`".into()))?;
        if label.is_empty() {
            return Err(bad("empty label".into()));
        }
        if rel.is_empty() {
            return Err(bad("empty path".into()));
        }
        if let Some(first) = seen.insert(rel.to_string(), line) {
            return Err(bad(format!("duplicate path {rel:?} (first listed on line {first}, again on line {line})")));
        }
        items.push(DatasetItem {
            id: rel.to_string(),
            label: label.to_string(),
            source: ItemSource::File { path: base.join(rel), manifest: path.to_path_buf(), line },
        });
    }
    LabeledDataset::new(items)
}

/// Writes `label<TAB>path` records, preceded by a comment header.
pub fn write_manifest(path: &Path, records: &[(String, PathBuf)]) -> Result<()> {
    let mut text = String::from("# label\tpath\n");
    for (label, rel) in records {
        text.push_str(label);
        text.push('\t');
        text.push_str(&rel.to_string_lossy());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
