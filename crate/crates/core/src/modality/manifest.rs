use std::path::{Path, PathBuf};

use super::{ModalityError, ModalityKind};

/// One `source_path, modality, output_path` line of a batch manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub line: usize,
    pub source: PathBuf,
    pub modality: ModalityKind,
    pub output: PathBuf,
}

/// Parses manifest text. Blank lines are ignored.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ModalityError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(ModalityError::Manifest {
                line,
                reason: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[2].is_empty() {
            return Err(ModalityError::Manifest { line, reason: "empty path".into() });
        }
        let modality = fields[1]
            .parse()
            .map_err(|_| ModalityError::Manifest { line, reason: format!("unknown modality {:?}", fields[1]) })?;
        entries.push(ManifestEntry {
            line,
            source: PathBuf::from(fields[0]),
            modality,
            output: PathBuf::from(fields[2]),
        });
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ModalityError> {
    parse_manifest(&std::fs::read_to_string(path)?)
}
