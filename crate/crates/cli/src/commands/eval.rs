use aesthete::metrics::{write_records_csv, EvalRecord, MetricReport};
use aesthete::model::Checkpoint;
use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::config::{require_file, RunConfig};
use crate::dataset::{self, Sample};
use crate::io::write;

pub const RECORDS_FILE: &str = "records.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Predicts every sample and returns records sorted by id.
pub fn evaluate(ckpt: &Checkpoint, samples: &[Sample]) -> Result<Vec<EvalRecord>> {
    let mut records: Vec<EvalRecord> = samples
        .par_iter()
        .map(|s| {
            let pred = ckpt.forward(std::slice::from_ref(&s.example.input))?.remove(0);
            Ok(EvalRecord::new(s.record.id.clone(), s.example.gt.clone(), pred))
        })
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let path = cfg.checkpoint_path();
    require_file(&path, "checkpoint")?;
    dataset::validate(cfg)?;
    cfg.echo()?;
    let ckpt = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let splits = dataset::load(cfg, ckpt.config())?;
    let samples = splits.get(cfg.eval.split);
    let records = evaluate(&ckpt, &samples)?;
    let threshold = cfg.eval.mean_threshold.unwrap_or(splits.dataset_mean);
    let report = MetricReport::compute(&records, threshold)
        .with_context(|| format!("evaluating the {:?} split", cfg.eval.split))?;
    let out = &cfg.output_dir;
    write(&out.join(RECORDS_FILE), write_records_csv(&records))?;
    write(&out.join(REPORT_JSON), report.to_json())?;
    write(&out.join(REPORT_CSV), report.to_csv())?;
    println!(
        "{} images: accuracy {:.2}% at 5, {:.2}% at {threshold:.5} (baseline {:.2}%), mean EMD {:.6}",
        records.len(),
        report.acc_at_5,
        report.acc_at_mean,
        report.baseline_at_mean,
        report.mean_emd
    );
    Ok(())
}
