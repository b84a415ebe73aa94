use aesthete::data::{dataset_moments, parse_vote_file, split, synth_dataset, LabeledImage};
use aesthete::modality::{resize, ImageBuffer};
use aesthete::model::{Example, InputTensor, ModelConfig};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::config::{require_dir, require_file, DataSource, RunConfig, SplitName};

/// A labeled image prepared as network input.
#[derive(Debug, Clone)]
pub struct Sample {
    pub record: LabeledImage,
    pub example: Example,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Mean of the per-image ground-truth means over every record.
    pub dataset_mean: f64,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> Vec<Sample> {
        match name {
            SplitName::Train => self.train.clone(),
            SplitName::Val => self.val.clone(),
            SplitName::Test => self.test.clone(),
            SplitName::All => {
                let mut all: Vec<Sample> = self.train.iter().chain(&self.val).chain(&self.test).cloned().collect();
                all.sort_by_key(|s| s.record.index);
                all
            }
        }
    }
}

pub fn examples(samples: &[Sample]) -> Vec<Example> {
    samples.iter().map(|s| s.example.clone()).collect()
}

/// Converts channels and resizes to the model input.
pub fn prepare(img: &ImageBuffer, model: &ModelConfig) -> Result<InputTensor> {
    let mut img =
        if img.channels() == model.input_channels { img.clone() } else { img.with_channels(model.input_channels) };
    if img.width() != model.input_size || img.height() != model.input_size {
        img = resize(&img, model.input_size, model.input_size)?;
    }
    Ok(InputTensor::from_image(&img))
}

/// Checks that the configured data inputs exist.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    match cfg.data.source {
        DataSource::Files => {
            let Some(votes) = &cfg.data.votes else { bail!("data.votes is required when data.source = \"files\"") };
            let Some(images) = &cfg.data.images else { bail!("data.images is required when data.source = \"files\"") };
            require_file(votes, "vote file")?;
            require_dir(images, "image directory")
        }
        DataSource::Synthetic => Ok(()),
    }
}

/// Loads or generates the labeled images and splits them.
pub fn load(cfg: &RunConfig, model: &ModelConfig) -> Result<Splits> {
    validate(cfg)?;
    let spec = cfg.data.split_spec(cfg.seed);
    spec.validate()?;
    let samples: Vec<Sample> = match cfg.data.source {
        DataSource::Synthetic => synth_dataset(cfg.synth.n, cfg.seed, cfg.synth.size)?
            .into_par_iter()
            .map(|s| {
                Ok(Sample {
                    example: Example { input: prepare(&s.image, model)?, gt: s.record.gt.clone() },
                    record: s.record,
                })
            })
            .collect::<Result<_>>()?,
        DataSource::Files => {
            let votes = cfg.data.votes.as_ref().expect("validated");
            let dir = cfg.data.images.as_ref().expect("validated");
            let records = parse_vote_file(votes).with_context(|| format!("reading {}", votes.display()))?;
            let missing: Vec<String> = records
                .iter()
                .filter(|r| !dir.join(&r.image_path).is_file())
                .map(|r| r.image_path.display().to_string())
                .collect();
            if !missing.is_empty() {
                let shown = missing.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
                bail!("{} images missing from {}: {shown}", missing.len(), dir.display());
            }
            records
                .into_par_iter()
                .map(|record| {
                    let path = dir.join(&record.image_path);
                    let img = ImageBuffer::load_png(&path)?;
                    let input = prepare(&img, model).with_context(|| path.display().to_string())?;
                    Ok(Sample { example: Example { input, gt: record.gt.clone() }, record })
                })
                .collect::<Result<_>>()?
        }
    };
    if samples.is_empty() {
        bail!("the label set is empty");
    }
    let records: Vec<LabeledImage> = samples.iter().map(|s| s.record.clone()).collect();
    let (dataset_mean, _) = dataset_moments(&records).expect("non-empty");
    let (train, val, test) = split(&samples, &spec)?;
    Ok(Splits { train, val, test, dataset_mean })
}
