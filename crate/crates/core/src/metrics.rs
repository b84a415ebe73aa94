//! Evaluation metrics over per-image predictions: threshold accuracies,
//! correlations, EMD aggregates, histogram EMD and score-binned EMD.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{emd, DistError, ScoreDistribution, ScoreHistogram};

/// Mean score of the AVA dataset, the second accuracy threshold.
pub const AVA_MEAN_SCORE: f64 = 5.38331;
pub const DEFAULT_THRESHOLD: f64 = 5.0;
pub const HISTOGRAM_BINS: usize = 100;
pub const MEAN_RANGE: (f64, f64) = (1.0, 10.0);
pub const STD_RANGE: (f64, f64) = (0.0, 5.0);
pub const SCORE_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("no records")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    InsufficientData(usize),
    #[error("zero variance")]
    DegenerateVariance,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("records csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Per-image summary used by every metric and analysis.
pub trait ScoredRecord {
    fn id(&self) -> &str;
    fn gt_mean(&self) -> f64;
    fn gt_std(&self) -> f64;
    fn pred_mean(&self) -> f64;
    fn pred_std(&self) -> f64;
    /// Pure EMD (r = 2) between ground truth and prediction.
    fn emd2(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub gt: ScoreDistribution,
    pub pred: ScoreDistribution,
    pub emd2: f64,
}

impl EvalRecord {
    pub fn new(id: impl Into<String>, gt: ScoreDistribution, pred: ScoreDistribution) -> Self {
        Self { id: id.into(), emd2: emd(&gt, &pred, 2.0), gt, pred }
    }

    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            id: self.id.clone(),
            gt_mean: self.gt.mean(),
            gt_std: self.gt.std_dev(),
            pred_mean: self.pred.mean(),
            pred_std: self.pred.std_dev(),
            emd2: self.emd2,
        }
    }
}

impl ScoredRecord for EvalRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn gt_mean(&self) -> f64 {
        self.gt.mean()
    }
    fn gt_std(&self) -> f64 {
        self.gt.std_dev()
    }
    fn pred_mean(&self) -> f64 {
        self.pred.mean()
    }
    fn pred_std(&self) -> f64 {
        self.pred.std_dev()
    }
    fn emd2(&self) -> f64 {
        self.emd2
    }
}

/// One row of a records CSV: `id,gt_mean,gt_std,pred_mean,pred_std,emd2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub id: String,
    pub gt_mean: f64,
    pub gt_std: f64,
    pub pred_mean: f64,
    pub pred_std: f64,
    pub emd2: f64,
}

impl ScoredRecord for RecordSummary {
    fn id(&self) -> &str {
        &self.id
    }
    fn gt_mean(&self) -> f64 {
        self.gt_mean
    }
    fn gt_std(&self) -> f64 {
        self.gt_std
    }
    fn pred_mean(&self) -> f64 {
        self.pred_mean
    }
    fn pred_std(&self) -> f64 {
        self.pred_std
    }
    fn emd2(&self) -> f64 {
        self.emd2
    }
}

pub fn write_records_csv<R: ScoredRecord>(records: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "gt_mean", "gt_std", "pred_mean", "pred_std", "emd2"]).unwrap();
    for r in records {
        let nums = [r.gt_mean(), r.gt_std(), r.pred_mean(), r.pred_std(), r.emd2()].map(|v| v.to_string());
        w.write_record(std::iter::once(r.id().to_string()).chain(nums)).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn read_records_csv(text: &str) -> Result<Vec<RecordSummary>, MetricError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(|e: csv::Error| MetricError::Csv(e.to_string()))).collect()
}

fn non_empty<T>(records: &[T]) -> Result<(), MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}

/// Percent of records whose predicted and ground-truth means fall on the same
/// side of `threshold` (strictly above counts as good).
pub fn two_class_accuracy<R: ScoredRecord>(records: &[R], threshold: f64) -> Result<f64, MetricError> {
    non_empty(records)?;
    let hits = records.iter().filter(|r| (r.pred_mean() > threshold) == (r.gt_mean() > threshold)).count();
    Ok(100.0 * hits as f64 / records.len() as f64)
}

/// Accuracy of always predicting "good": percent of ground-truth means
/// strictly above `threshold`.
pub fn baseline_accuracy<R: ScoredRecord>(records: &[R], threshold: f64) -> Result<f64, MetricError> {
    non_empty(records)?;
    let good = records.iter().filter(|r| r.gt_mean() > threshold).count();
    Ok(100.0 * good as f64 / records.len() as f64)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::InsufficientData(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their rank span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlations {
    pub lcc_mean: f64,
    pub srcc_mean: f64,
    pub lcc_std: f64,
    pub srcc_std: f64,
}

/// Pearson and Spearman of predicted against ground-truth means and
/// standard deviations.
pub fn correlation_suite<R: ScoredRecord>(records: &[R]) -> Result<Correlations, MetricError> {
    let (pm, gm, ps, gs) = moment_columns(records);
    Ok(Correlations {
        lcc_mean: pearson(&pm, &gm)?,
        srcc_mean: spearman(&pm, &gm)?,
        lcc_std: pearson(&ps, &gs)?,
        srcc_std: spearman(&ps, &gs)?,
    })
}

fn moment_columns<R: ScoredRecord>(records: &[R]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        records.iter().map(R::pred_mean).collect(),
        records.iter().map(R::gt_mean).collect(),
        records.iter().map(R::pred_std).collect(),
        records.iter().map(R::gt_std).collect(),
    )
}

/// Distance between count histograms of two value lists: the sum over bins
/// of the absolute cumulative-count difference, divided by `bins`.
pub fn histogram_emd(pred: &[f64], gt: &[f64], bins: usize, range: (f64, f64)) -> Result<f64, MetricError> {
    let hp = ScoreHistogram::from_values(bins, range.0, range.1, pred)?;
    let hg = ScoreHistogram::from_values(bins, range.0, range.1, gt)?;
    Ok(hp.cumulative_distance(&hg)?)
}

pub fn mean_emd<R: ScoredRecord>(records: &[R]) -> Result<f64, MetricError> {
    non_empty(records)?;
    Ok(records.iter().map(R::emd2).sum::<f64>() / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    /// Absent for empty bins.
    pub mean_emd: Option<f64>,
    pub count: usize,
}

/// Groups records by ground-truth mean into left-closed bins of `width` over
/// `range` (out-of-range means go to the end bins) and averages `emd2` per
/// bin. No records gives no bins.
pub fn score_bin_emd<R: ScoredRecord>(
    records: &[R],
    width: f64,
    range: (f64, f64),
) -> Result<Vec<ScoreBin>, MetricError> {
    let (lo, hi) = range;
    if !(width > 0.0) || !(hi > lo) || !width.is_finite() || !lo.is_finite() || !hi.is_finite() {
        return Err(MetricError::InvalidParams(format!("bin width {width} over [{lo}, {hi}]")));
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let bins = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for r in records {
        let m = r.gt_mean();
        let mut k = ((m - lo) / width).floor().max(0.0) as usize;
        // Guard against quotients landing just below an exact edge.
        if k + 1 < bins && lo + (k + 1) as f64 * width <= m {
            k += 1;
        }
        let k = k.min(bins - 1);
        sums[k] += r.emd2();
        counts[k] += 1;
    }
    Ok((0..bins)
        .map(|k| {
            let b_lo = lo + k as f64 * width;
            let b_hi = (b_lo + width).min(hi);
            ScoreBin {
                lo: b_lo,
                hi: b_hi,
                center: b_lo + width / 2.0,
                mean_emd: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
                count: counts[k],
            }
        })
        .collect())
}

pub fn score_bins_csv(bins: &[ScoreBin]) -> String {
    let mut s = String::from("bin_center,mean_emd,count\n");
    for b in bins {
        let m = b.mean_emd.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{}\n", b.center, m, b.count));
    }
    s
}

/// Predicted and ground-truth count histograms side by side, as CSV
/// `bin_lo,bin_hi,pred_count,gt_count`.
pub fn histogram_pair_csv(pred: &[f64], gt: &[f64], bins: usize, range: (f64, f64)) -> Result<String, MetricError> {
    let hp = ScoreHistogram::from_values(bins, range.0, range.1, pred)?;
    let hg = ScoreHistogram::from_values(bins, range.0, range.1, gt)?;
    let edges = hp.bin_edges();
    let mut s = String::from("bin_lo,bin_hi,pred_count,gt_count\n");
    for (k, (p, g)) in hp.counts().iter().zip(hg.counts()).enumerate() {
        s.push_str(&format!("{},{},{},{}\n", edges[k], edges[k + 1], p, g));
    }
    Ok(s)
}

/// Summary row for one evaluated model. Correlations are absent when either
/// side has zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc_at_5: f64,
    pub acc_at_mean: f64,
    pub baseline_at_5: f64,
    pub baseline_at_mean: f64,
    pub lcc_mean: Option<f64>,
    pub srcc_mean: Option<f64>,
    pub lcc_std: Option<f64>,
    pub srcc_std: Option<f64>,
    pub mean_emd: f64,
    pub histogram_emd_mean: f64,
    pub histogram_emd_std: f64,
}

impl MetricReport {
    /// `mean_threshold` is the dataset mean used for the second accuracy
    /// column ([`AVA_MEAN_SCORE`] for AVA).
    pub fn compute<R: ScoredRecord>(records: &[R], mean_threshold: f64) -> Result<Self, MetricError> {
        non_empty(records)?;
        let (pm, gm, ps, gs) = moment_columns(records);
        let optional = |r: Result<f64, MetricError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricError::DegenerateVariance | MetricError::InsufficientData(_)) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self {
            acc_at_5: two_class_accuracy(records, DEFAULT_THRESHOLD)?,
            acc_at_mean: two_class_accuracy(records, mean_threshold)?,
            baseline_at_5: baseline_accuracy(records, DEFAULT_THRESHOLD)?,
            baseline_at_mean: baseline_accuracy(records, mean_threshold)?,
            lcc_mean: optional(pearson(&pm, &gm))?,
            srcc_mean: optional(spearman(&pm, &gm))?,
            lcc_std: optional(pearson(&ps, &gs))?,
            srcc_std: optional(spearman(&ps, &gs))?,
            mean_emd: mean_emd(records)?,
            histogram_emd_mean: histogram_emd(&pm, &gm, HISTOGRAM_BINS, MEAN_RANGE)?,
            histogram_emd_std: histogram_emd(&ps, &gs, HISTOGRAM_BINS, STD_RANGE)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Header plus one row; absent correlations are empty cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self).expect("report serializes");
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}
