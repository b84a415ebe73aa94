use std::collections::BTreeMap;
use std::path::Path;

use aesthete::analysis::{
    assemble_matrix, category_score_bins, covariance_emd, covariance_mean_diff, modality_preference, ModalityRun,
};
use aesthete::data::{parse_category_csv, CategoryKind, CategoryTable};
use aesthete::metrics::{
    histogram_emd, histogram_pair_csv, read_records_csv, score_bin_emd, score_bins_csv, HISTOGRAM_BINS, MEAN_RANGE,
    STD_RANGE,
};
use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::config::{require_file, CategoryInput, RunConfig};
use crate::io::write;

pub const ANALYSIS_DIR: &str = "analysis";

#[derive(Deserialize)]
struct GtMean {
    image_id: String,
    gt_mean: f64,
}

fn read_gt_means(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize() {
        let row: GtMean = row?;
        out.insert(row.image_id, row.gt_mean);
    }
    Ok(out)
}

fn load_runs(cfg: &RunConfig) -> Result<Vec<ModalityRun>> {
    cfg.analyze
        .runs
        .iter()
        .map(|r| {
            let text = std::fs::read_to_string(&r.records)?;
            let records = read_records_csv(&text)?;
            Ok(ModalityRun::new(r.modality, records)?)
        })
        .map(|r: Result<ModalityRun>| r.with_context(|| "loading records"))
        .collect()
}

/// Collects per-analysis failures so the remaining outputs are still written.
struct Ledger {
    failures: Vec<String>,
}

impl Ledger {
    fn attempt(&mut self, what: &str, f: impl FnOnce() -> Result<()>) {
        if let Err(e) = f() {
            eprintln!("{what} failed: {e:#}");
            self.failures.push(format!("{what}: {e:#}"));
        }
    }
}

fn per_run_outputs(dir: &Path, run: &ModalityRun, width: f64) -> Result<(f64, f64)> {
    let m = run.modality.name();
    let bins = score_bin_emd(&run.records, width, MEAN_RANGE)?;
    write(&dir.join(format!("{m}_score_bins.csv")), score_bins_csv(&bins))?;
    let col = |f: fn(&aesthete::metrics::RecordSummary) -> f64| run.records.iter().map(f).collect::<Vec<_>>();
    let (pm, gm, ps, gs) = (col(|r| r.pred_mean), col(|r| r.gt_mean), col(|r| r.pred_std), col(|r| r.gt_std));
    write(&dir.join(format!("{m}_hist_mean.csv")), histogram_pair_csv(&pm, &gm, HISTOGRAM_BINS, MEAN_RANGE)?)?;
    write(&dir.join(format!("{m}_hist_std.csv")), histogram_pair_csv(&ps, &gs, HISTOGRAM_BINS, STD_RANGE)?)?;
    Ok((histogram_emd(&pm, &gm, HISTOGRAM_BINS, MEAN_RANGE)?, histogram_emd(&ps, &gs, HISTOGRAM_BINS, STD_RANGE)?))
}

fn category_outputs(
    dir: &Path,
    runs: &[ModalityRun],
    input: &CategoryInput,
    table: &CategoryTable,
    gt_means: Option<&BTreeMap<String, f64>>,
    correlation: bool,
) -> Result<()> {
    let rows = runs
        .iter()
        .map(|run| {
            if input.mean_diff {
                let own: BTreeMap<String, f64>;
                let means = match gt_means {
                    Some(m) => m,
                    None => {
                        own = run.records.iter().map(|r| (r.id.clone(), r.gt_mean)).collect();
                        &own
                    }
                };
                covariance_mean_diff(run, table, means)
            } else {
                covariance_emd(run, table)
            }
            .with_context(|| format!("{} run", run.modality))
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = assemble_matrix(&rows)?;
    let name = &input.name;
    write(&dir.join(format!("covariance_{name}.json")), matrix.to_json())?;
    write(&dir.join(format!("covariance_{name}.csv")), matrix.to_csv(false))?;
    if correlation {
        write(&dir.join(format!("correlation_{name}.csv")), matrix.to_csv(true))?;
    }
    Ok(())
}

fn one_hot_bins(
    dir: &Path,
    runs: &[ModalityRun],
    input: &CategoryInput,
    table: &CategoryTable,
    width: f64,
) -> Result<()> {
    for run in runs {
        for category in &table.category_names {
            let bins = category_score_bins(&run.records, table, category, width, MEAN_RANGE)?;
            let file = format!("{}_{}_{category}_score_bins.csv", run.modality, input.name);
            write(&dir.join(file), score_bins_csv(&bins))?;
        }
    }
    Ok(())
}

/// Runs every analysis the inputs allow. A failing analysis is reported and
/// the others still run; the command then exits nonzero.
pub fn run(cfg: &RunConfig) -> Result<()> {
    let a = &cfg.analyze;
    if a.runs.is_empty() {
        bail!("analyze.runs is empty");
    }
    for r in &a.runs {
        require_file(&r.records, "records file")?;
    }
    for c in &a.categories {
        require_file(&c.path, "category file")?;
    }
    if let Some(p) = &a.gt_means {
        require_file(p, "ground-truth means file")?;
    }
    cfg.echo()?;

    let runs = load_runs(cfg)?;
    let dir = cfg.output_dir.join(ANALYSIS_DIR);
    let mut ledger = Ledger { failures: Vec::new() };

    let mut hist = String::from("modality,histogram_emd_mean,histogram_emd_std\n");
    for run in &runs {
        ledger.attempt(&format!("{} score bins and histograms", run.modality), || {
            let (m, s) = per_run_outputs(&dir, run, a.score_bin_width)?;
            hist.push_str(&format!("{},{m},{s}\n", run.modality));
            Ok(())
        });
    }
    ledger.attempt("histogram EMD table", || write(&dir.join("histogram_emd.csv"), &hist));

    if runs.len() >= 2 {
        ledger.attempt("modality preference", || {
            let p = modality_preference(&runs)?;
            write(&dir.join("preference.csv"), p.to_csv())?;
            let summary = serde_json::json!({
                "groups": p.groups.iter().map(|(k, v)| (k.name(), v)).collect::<BTreeMap<_, _>>(),
                "ties": p.ties,
                "unmatched": p.unmatched,
            });
            write(&dir.join("preference_groups.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
            println!("modality preference over {} images, {} ties", p.rows.len(), p.ties);
            Ok(())
        });
    }

    let gt_means = match &a.gt_means {
        Some(p) => Some(read_gt_means(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    for input in &a.categories {
        let table = match parse_category_csv(&input.path, input.kind) {
            Ok(t) => t,
            Err(e) => {
                ledger.attempt(&format!("category table {}", input.name), || Err(e.into()));
                continue;
            }
        };
        ledger.attempt(&format!("covariance {}", input.name), || {
            category_outputs(&dir, &runs, input, &table, gt_means.as_ref(), a.correlation)
        });
        if input.kind == CategoryKind::OneHot {
            ledger.attempt(&format!("category score bins {}", input.name), || {
                one_hot_bins(&dir, &runs, input, &table, a.score_bin_width)
            });
        }
    }

    if !ledger.failures.is_empty() {
        bail!("{} analyses failed:\n  {}", ledger.failures.len(), ledger.failures.join("\n  "));
    }
    println!("analysis written to {}", dir.display());
    Ok(())
}
