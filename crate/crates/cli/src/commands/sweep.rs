use aesthete::dist::LossTerms;
use aesthete::model::{Checkpoint, TrainConfig, TrainReport};
use anyhow::{bail, Result};

use super::train::{run_stages, validate_stages, HISTORY_FILE, HISTORY_HEADER};
use crate::config::RunConfig;
use crate::dataset;
use crate::io::write;

pub const SWEEP_DIR: &str = "sweep";
pub const LEADERBOARD_FILE: &str = "leaderboard.csv";

const ABLATION: [LossTerms; 4] = [
    LossTerms::PURE_EMD,
    LossTerms { mean: true, variance: false },
    LossTerms { mean: false, variance: true },
    LossTerms { mean: true, variance: true },
];

/// One grid point. `None` keeps the per-stage value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cell {
    pub lr_conv: Option<f64>,
    pub lr_dense: Option<f64>,
    pub lr_decay: Option<f64>,
    pub freeze_fraction: Option<f64>,
    pub h_mu: Option<f64>,
    pub h_v: Option<f64>,
    pub terms: Option<LossTerms>,
}

impl Cell {
    pub fn apply(&self, stage: &TrainConfig) -> TrainConfig {
        let mut s = stage.clone();
        s.lr_conv = self.lr_conv.unwrap_or(s.lr_conv);
        s.lr_dense = self.lr_dense.unwrap_or(s.lr_dense);
        s.lr_decay = self.lr_decay.unwrap_or(s.lr_decay);
        s.freeze_fraction = self.freeze_fraction.unwrap_or(s.freeze_fraction);
        s.loss.h_mu = self.h_mu.unwrap_or(s.loss.h_mu);
        s.loss.h_v = self.h_v.unwrap_or(s.loss.h_v);
        s.loss.terms = self.terms.unwrap_or(s.loss.terms);
        s
    }
}

fn axis(values: &[f64]) -> Vec<Option<f64>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Cartesian product in axis order, the last axis varying fastest.
pub fn grid(cfg: &RunConfig) -> Vec<Cell> {
    let s = &cfg.sweep;
    let terms: Vec<Option<LossTerms>> = if s.ablation { ABLATION.map(Some).to_vec() } else { vec![None] };
    let mut cells = Vec::new();
    for &lr_conv in &axis(&s.lr_conv) {
        for &lr_dense in &axis(&s.lr_dense) {
            for &lr_decay in &axis(&s.lr_decay) {
                for &freeze_fraction in &axis(&s.freeze_fraction) {
                    for &h_mu in &axis(&s.h_mu) {
                        for &h_v in &axis(&s.h_v) {
                            for &t in &terms {
                                cells.push(Cell { lr_conv, lr_dense, lr_decay, freeze_fraction, h_mu, h_v, terms: t });
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

struct Row {
    cell: usize,
    stage: TrainConfig,
    train_emd: f64,
    val_emd: f64,
}

/// Trains every grid cell from the same initialization and ranks the cells
/// by final validation EMD.
pub fn run(cfg: &RunConfig) -> Result<()> {
    validate_stages(&cfg.train.stages)?;
    let cells = grid(cfg);
    for (k, c) in cells.iter().enumerate() {
        let stages: Vec<TrainConfig> = cfg.train.stages.iter().map(|s| c.apply(s)).collect();
        validate_stages(&stages).map_err(|e| e.context(format!("sweep cell {k}")))?;
    }
    dataset::validate(cfg)?;
    Checkpoint::build(&cfg.model)?;
    cfg.echo()?;
    let splits = dataset::load(cfg, &cfg.model)?;
    if splits.train.is_empty() || splits.val.is_empty() {
        bail!("a sweep needs non-empty training and validation splits");
    }
    let (tr, val) = (dataset::examples(&splits.train), dataset::examples(&splits.val));
    let dir = cfg.output_dir.join(SWEEP_DIR);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        let stages: Vec<TrainConfig> = cfg.train.stages.iter().map(|s| cell.apply(s)).collect();
        let mut ckpt = Checkpoint::build(&cfg.model)?;
        let mut history = String::from(HISTORY_HEADER);
        match run_stages(&mut ckpt, &stages, &tr, &val, &mut history, |_, _| Ok(())) {
            Ok(reports) => {
                write(&dir.join(format!("cell_{k:03}")).join(HISTORY_FILE), &history)?;
                let last = reports.last().expect("at least one stage");
                let val_emd = TrainReport::final_val_emd(last).expect("validation split is non-empty");
                let train_emd = last.epochs.last().map_or(last.initial_train_emd, |e| e.train_emd);
                println!("cell {k}: validation EMD {val_emd:.6}");
                rows.push(Row { cell: k, stage: stages[0].clone(), train_emd, val_emd });
            }
            Err(e) => {
                eprintln!("cell {k} failed: {e:#}");
                failures.push(format!("cell {k}: {e:#}"));
            }
        }
    }
    rows.sort_by(|a, b| a.val_emd.total_cmp(&b.val_emd).then(a.cell.cmp(&b.cell)));
    let mut board = String::from(
        "rank,cell,loss_terms,lr_conv,lr_dense,lr_decay,freeze_fraction,h_mu,h_v,final_train_emd,final_val_emd\n",
    );
    for (rank, r) in rows.iter().enumerate() {
        let s = &r.stage;
        board.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            rank + 1,
            r.cell,
            s.loss.terms.label(),
            s.lr_conv,
            s.lr_dense,
            s.lr_decay,
            s.freeze_fraction,
            s.loss.h_mu,
            s.loss.h_v,
            r.train_emd,
            r.val_emd
        ));
    }
    write(&dir.join(LEADERBOARD_FILE), board)?;
    if !failures.is_empty() {
        bail!("{} of {} cells failed:\n  {}", failures.len(), cells.len(), failures.join("\n  "));
    }
    println!("leaderboard of {} cells written to {}", rows.len(), dir.join(LEADERBOARD_FILE).display());
    Ok(())
}
