use std::path::{Path, PathBuf};

use aesthete::data::{CategoryKind, SplitSpec};
use aesthete::modality::ModalityKind;
use aesthete::model::{ModelConfig, TrainConfig};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Name of the resolved configuration written to every output directory.
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

/// Complete run configuration. Every section is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives data splits, model initialization, shuffling and synthesis.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads for image processing and evaluation; 0 picks the
    /// number of CPUs.
    pub workers: usize,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub modality: ModalityConfig,
    /// `seed` here is always replaced by the global seed.
    pub model: ModelConfig,
    pub train: TrainSection,
    pub eval: EvalConfig,
    pub analyze: AnalyzeConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            modality: ModalityConfig::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            eval: EvalConfig::default(),
            analyze: AnalyzeConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// A vote file plus a directory of `<id>.png` images.
    #[default]
    Files,
    /// Generated in memory from the `[synth]` section and the global seed.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub votes: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        let s = SplitSpec::default();
        Self {
            source: DataSource::Files,
            votes: None,
            images: None,
            train_fraction: s.train,
            val_fraction: s.val,
            test_fraction: s.test,
        }
    }
}

impl DataConfig {
    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec { seed, train: self.train_fraction, val: self.val_fraction, test: self.test_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 500, size: 32 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModalityConfig {
    /// Lines of `source, modality, output`. Sources resolve against the
    /// manifest's directory, outputs against the output directory.
    pub manifest: Option<PathBuf>,
    /// Alternative to a manifest: every PNG in this directory is transformed
    /// into each of `kinds`.
    pub input_dir: Option<PathBuf>,
    pub kinds: Vec<ModalityKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Checkpoint to continue from. Its architecture replaces `[model]`.
    pub init: Option<PathBuf>,
    /// Stages run in order on one checkpoint, e.g. SGD then Adam.
    pub stages: Vec<TrainConfig>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { init: None, stages: vec![TrainConfig::default()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Defaults to the training output `model.aesk` in the output directory.
    pub checkpoint: Option<PathBuf>,
    pub split: SplitName,
    /// Second accuracy threshold. Defaults to the mean of the per-image
    /// ground-truth means over the whole label set.
    pub mean_threshold: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { checkpoint: None, split: SplitName::Test, mean_threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInput {
    pub modality: ModalityKind,
    /// Records CSV written by `eval`.
    pub records: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryInput {
    /// Used in output file names.
    pub name: String,
    pub path: PathBuf,
    pub kind: CategoryKind,
    /// Covary against the absolute mean error instead of the EMD.
    #[serde(default)]
    pub mean_diff: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub runs: Vec<RunInput>,
    pub categories: Vec<CategoryInput>,
    /// CSV `image_id,gt_mean` for mean-difference covariances. Without it the
    /// ground-truth means stored in each records file are used.
    pub gt_means: Option<PathBuf>,
    pub score_bin_width: f64,
    /// Also write correlation matrices next to the covariances.
    pub correlation: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            runs: Vec::new(),
            categories: Vec::new(),
            gt_means: None,
            score_bin_width: aesthete::metrics::SCORE_BIN_WIDTH,
            correlation: true,
        }
    }
}

/// Grid axes. An empty axis keeps the value from the training stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lr_conv: Vec<f64>,
    pub lr_dense: Vec<f64>,
    pub lr_decay: Vec<f64>,
    pub freeze_fraction: Vec<f64>,
    pub h_mu: Vec<f64>,
    pub h_v: Vec<f64>,
    /// Cross the grid with the four loss-term settings: pure EMD, with the
    /// mean term, with the variance term, with both.
    pub ablation: bool,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` (or starts from defaults), resolves relative paths
    /// against the file's directory and applies the overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let cfg = Self::parse(&text).with_context(|| format!("parsing config {}", p.display()))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                cfg.resolved_against(&absolute(&base)?)
            }
            None => Self::default().resolved_against(&std::env::current_dir()?),
        };
        if let Some(out) = &overrides.out {
            cfg.output_dir = absolute(out)?;
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        cfg.model.seed = cfg.seed;
        Ok(cfg)
    }

    fn resolved_against(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.data.votes,
            &mut self.data.images,
            &mut self.modality.manifest,
            &mut self.modality.input_dir,
            &mut self.train.init,
            &mut self.eval.checkpoint,
            &mut self.analyze.gt_means,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for r in &mut self.analyze.runs {
            fix(&mut r.records);
        }
        for c in &mut self.analyze.categories {
            fix(&mut c.path);
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the resolved configuration to the output directory.
    pub fn echo(&self) -> Result<()> {
        crate::io::write(&self.output_dir.join(EFFECTIVE_CONFIG), self.to_toml())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.eval.checkpoint.clone().unwrap_or_else(|| self.output_dir.join(crate::commands::train::MODEL_FILE))
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.is_absolute() {
        Ok(p.to_path_buf())
    } else {
        Ok(std::env::current_dir()?.join(p))
    }
}

/// Fails unless `path` is an existing file.
pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        bail!("{what} {} is not a directory", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("sed = 1").is_err());
        assert!(RunConfig::parse("[train]\nstages = [{ lr = 0.1 }]").is_err());
        assert!(RunConfig::parse("[model]\ninput_size = 8\nwidth = 3").is_err());
    }

    #[test]
    fn partial_sections_take_defaults() {
        let cfg = RunConfig::parse("seed = 4\n[model]\ninput_size = 8\n[[train.stages]]\nepochs = 2\n").unwrap();
        assert_eq!(cfg.model.input_size, 8);
        assert_eq!(cfg.model.conv_blocks, ModelConfig::default().conv_blocks);
        assert_eq!(cfg.train.stages.len(), 1);
        assert_eq!(cfg.train.stages[0].epochs, 2);
        assert_eq!(cfg.synth, SynthConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.train.stages.push(TrainConfig { target_val_emd: Some(0.1), ..TrainConfig::default() });
        cfg.analyze.runs.push(RunInput { modality: ModalityKind::Blur, records: "/r.csv".into() });
        cfg.analyze.categories.push(CategoryInput {
            name: "eva".into(),
            path: "/eva.csv".into(),
            kind: CategoryKind::Scored,
            mean_diff: false,
        });
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
