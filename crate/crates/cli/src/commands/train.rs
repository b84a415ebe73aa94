use std::path::Path;

use aesthete::model::{train, Checkpoint, Example, TrainConfig, TrainReport};
use anyhow::{bail, Context, Result};

use crate::config::RunConfig;
use crate::dataset::{self, Splits};
use crate::io::write;

pub const MODEL_FILE: &str = "model.aesk";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_FILE: &str = "train_report.json";

/// Header of the per-epoch history. `lr` is the convolutional learning rate.
pub const HISTORY_HEADER: &str = "epoch,train_emd,val_emd,lr\n";

/// Runs `stages` in order on `ckpt`, appending one history row per epoch.
pub fn run_stages(
    ckpt: &mut Checkpoint,
    stages: &[TrainConfig],
    train_set: &[Example],
    val_set: &[Example],
    history: &mut String,
    mut after_stage: impl FnMut(usize, &Checkpoint) -> Result<()>,
) -> Result<Vec<TrainReport>> {
    let mut reports = Vec::with_capacity(stages.len());
    for (k, stage) in stages.iter().enumerate() {
        let report = train(ckpt, train_set, val_set, stage, &mut |e| {
            let val = e.val_emd.map(|v| v.to_string()).unwrap_or_default();
            history.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_emd, val, e.lr_conv));
        })
        .with_context(|| format!("training stage {}", k + 1))?;
        after_stage(k, ckpt)?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn validate_stages(stages: &[TrainConfig]) -> Result<()> {
    if stages.is_empty() {
        bail!("train.stages is empty");
    }
    for (k, s) in stages.iter().enumerate() {
        s.validate().with_context(|| format!("train stage {}", k + 1))?;
    }
    Ok(())
}

pub fn run(mut cfg: RunConfig) -> Result<()> {
    validate_stages(&cfg.train.stages)?;
    dataset::validate(&cfg)?;
    let mut ckpt = match &cfg.train.init {
        Some(path) => {
            let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            cfg.model = ckpt.config().clone();
            ckpt
        }
        None => Checkpoint::build(&cfg.model)?,
    };
    cfg.echo()?;
    let Splits { train: tr, val, .. } = dataset::load(&cfg, ckpt.config())?;
    if tr.is_empty() {
        bail!("the training split is empty");
    }
    let (tr, val) = (dataset::examples(&tr), dataset::examples(&val));
    println!("training on {} images, validating on {}", tr.len(), val.len());

    let out = &cfg.output_dir;
    let mut history = String::from(HISTORY_HEADER);
    let reports = run_stages(&mut ckpt, &cfg.train.stages, &tr, &val, &mut history, |k, c| {
        let path = out.join(format!("stage_{}.aesk", k + 1));
        println!("stage {} done at epoch {}", k + 1, c.epoch());
        Ok(c.save(&path)?)
    })?;
    ckpt.save(&out.join(MODEL_FILE))?;
    write(&out.join(HISTORY_FILE), &history)?;
    write(&out.join(REPORT_FILE), serde_json::to_string_pretty(&reports)? + "\n")?;
    if let Some(v) = reports.last().and_then(TrainReport::final_val_emd) {
        println!("final validation EMD {v:.6}");
    }
    println!("checkpoint written to {}", Path::new(out).join(MODEL_FILE).display());
    Ok(())
}
