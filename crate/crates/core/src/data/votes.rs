use std::fmt::Write as _;
use std::path::Path;

use super::{DataError, LabeledImage};
use crate::dist::BINS;

const FIELDS: usize = 2 + BINS + 3;

/// Parses whitespace-separated vote lines:
/// `index imageId c1 … c10 tag1 tag2 challengeId`. Blank lines are skipped.
pub fn parse_votes(text: &str) -> Result<Vec<LabeledImage>, DataError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != FIELDS {
            return Err(DataError::Parse { line, reason: format!("expected {FIELDS} fields, found {}", fields.len()) });
        }
        let num = |i: usize, what: &str| -> Result<u64, DataError> {
            fields[i].parse().map_err(|_| DataError::Parse {
                line,
                reason: format!("{what} {:?} is not a non-negative integer", fields[i]),
            })
        };
        let index = num(0, "index")?;
        let mut counts = [0u64; BINS];
        for (k, c) in counts.iter_mut().enumerate() {
            *c = num(2 + k, "count")?;
        }
        let small = |i: usize, what: &str| -> Result<u32, DataError> {
            u32::try_from(num(i, what)?).map_err(|_| DataError::Parse { line, reason: format!("{what} out of range") })
        };
        let tags = [small(12, "tag")?, small(13, "tag")?];
        let challenge = small(14, "challenge id")?;
        let record = LabeledImage::new(index, fields[1], counts, tags, challenge)
            .map_err(|_| DataError::AllZeroCounts { line })?;
        out.push(record);
    }
    Ok(out)
}

pub fn parse_vote_file(path: &Path) -> Result<Vec<LabeledImage>, DataError> {
    parse_votes(&std::fs::read_to_string(path)?)
}

/// Inverse of [`parse_votes`]: one line per record, newline-terminated.
pub fn write_votes(records: &[LabeledImage]) -> String {
    let mut s = String::new();
    for r in records {
        write!(s, "{} {}", r.index, r.id).unwrap();
        for c in &r.gt_counts {
            write!(s, " {c}").unwrap();
        }
        writeln!(s, " {} {} {}", r.tags[0], r.tags[1], r.challenge).unwrap();
    }
    s
}
