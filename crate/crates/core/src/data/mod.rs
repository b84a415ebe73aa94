//! Label ingestion, synthetic data generation and train/val/test splits.

mod categories;
mod split;
mod synth;
mod votes;

use std::path::PathBuf;

use thiserror::Error;

use crate::dist::{ScoreDistribution, BINS};
use crate::modality::ModalityError;

pub use self::categories::{parse_category_csv, parse_category_text, CategoryKind, CategoryTable};
pub use self::split::{split, SplitSpec};
pub use self::synth::{
    discretize_normal, image_stats, synth_dataset, synth_image, synthetic_distribution, synthetic_label,
    truncated_normal_mean, ImageStats, SynthImage, SYNTH_COUNT_SCALE,
};
pub use self::votes::{parse_vote_file, parse_votes, write_votes};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: all vote counts are zero")]
    AllZeroCounts { line: usize },
    #[error("{id}, {category}: value {value} outside {allowed}")]
    Range { id: String, category: String, value: f64, allowed: &'static str },
    #[error("{id}: one-hot row has no category set")]
    EmptyOneHot { id: String },
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Modality(#[from] ModalityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One image with its vote histogram, in the layout of an AVA vote line.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub index: u64,
    pub id: String,
    /// Path relative to the image directory, `<id>.png` by default.
    pub image_path: PathBuf,
    pub gt: ScoreDistribution,
    pub gt_counts: [u64; BINS],
    pub tags: [u32; 2],
    pub challenge: u32,
}

impl LabeledImage {
    pub fn new(index: u64, id: &str, counts: [u64; BINS], tags: [u32; 2], challenge: u32) -> Result<Self, DataError> {
        let gt = ScoreDistribution::from_votes(&counts).map_err(|_| DataError::AllZeroCounts { line: 0 })?;
        Ok(Self {
            index,
            id: id.to_string(),
            image_path: PathBuf::from(format!("{id}.png")),
            gt,
            gt_counts: counts,
            tags,
            challenge,
        })
    }
}

/// Average mean and average variance of the ground-truth distributions.
pub fn dataset_moments(records: &[LabeledImage]) -> Option<(f64, f64)> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    let (m, v) = records.iter().fold((0.0, 0.0), |(m, v), r| (m + r.gt.mean(), v + r.gt.variance()));
    Some((m / n, v / n))
}
