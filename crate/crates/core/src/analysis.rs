//! Cross-modality analyses: which modality predicts each image best, and how
//! per-image prediction quality co-varies with category labels.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::data::{CategoryKind, CategoryTable};
use crate::metrics::{score_bin_emd, MetricError, RecordSummary, ScoreBin, ScoredRecord};
use crate::modality::ModalityKind;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no image ids are shared by all inputs")]
    EmptyIntersection,
    #[error("need at least 2 runs, got {0}")]
    NotEnoughRuns(usize),
    #[error("{modality} run lists image {id:?} twice")]
    DuplicateId { modality: ModalityKind, id: String },
    #[error("modality {0} appears more than once")]
    DuplicateModality(ModalityKind),
    #[error("category labels differ between rows: {0}")]
    LabelMismatch(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("category filtering needs a one-hot table")]
    NotOneHot,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Evaluation records of the model trained on one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityRun {
    pub modality: ModalityKind,
    pub records: Vec<RecordSummary>,
}

impl ModalityRun {
    pub fn new(modality: ModalityKind, records: Vec<RecordSummary>) -> Result<Self, AnalysisError> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(AnalysisError::DuplicateId { modality, id: r.id.clone() });
            }
        }
        Ok(Self { modality, records })
    }

    fn by_id(&self) -> BTreeMap<&str, &RecordSummary> {
        self.records.iter().map(|r| (r.id.as_str(), r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceRow {
    pub image_id: String,
    pub preferred_modality: ModalityKind,
    /// Second-best EMD minus best EMD; 0 on ties.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preference {
    /// Rows sorted by image id.
    pub rows: Vec<PreferenceRow>,
    pub groups: BTreeMap<ModalityKind, Vec<String>>,
    /// Ids where two or more modalities share the minimum.
    pub ties: usize,
    /// Ids present in some runs but not all, sorted.
    pub unmatched: Vec<String>,
}

impl Preference {
    /// CSV `image_id,preferred_modality,margin`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("image_id,preferred_modality,margin\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", csv_field(&r.image_id), r.preferred_modality, r.margin));
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Assigns every id shared by all runs to the modality with the smallest
/// EMD. Ties go to the earlier modality in the order RGB, Depth, Blur,
/// Saliency.
pub fn modality_preference(runs: &[ModalityRun]) -> Result<Preference, AnalysisError> {
    if runs.len() < 2 {
        return Err(AnalysisError::NotEnoughRuns(runs.len()));
    }
    let mut ordered: Vec<&ModalityRun> = runs.iter().collect();
    ordered.sort_by_key(|r| r.modality);
    for pair in ordered.windows(2) {
        if pair[0].modality == pair[1].modality {
            return Err(AnalysisError::DuplicateModality(pair[0].modality));
        }
    }
    let maps: Vec<_> = ordered.iter().map(|r| r.by_id()).collect();
    let all: BTreeSet<&str> = maps.iter().flat_map(|m| m.keys().copied()).collect();
    let shared: Vec<&str> = all.iter().copied().filter(|id| maps.iter().all(|m| m.contains_key(id))).collect();
    if shared.is_empty() {
        return Err(AnalysisError::EmptyIntersection);
    }
    let unmatched = all.iter().filter(|id| !maps.iter().all(|m| m.contains_key(*id))).map(|s| s.to_string()).collect();

    let mut rows = Vec::with_capacity(shared.len());
    let mut groups: BTreeMap<ModalityKind, Vec<String>> = BTreeMap::new();
    let mut ties = 0;
    for id in shared {
        let emds: Vec<f64> = maps.iter().map(|m| m[id].emd2).collect();
        let mut best = 0;
        for (k, &e) in emds.iter().enumerate() {
            if e < emds[best] {
                best = k;
            }
        }
        let second = emds.iter().enumerate().filter(|&(k, _)| k != best).map(|(_, &e)| e).fold(f64::INFINITY, f64::min);
        if second == emds[best] {
            ties += 1;
        }
        let modality = ordered[best].modality;
        groups.entry(modality).or_default().push(id.to_string());
        rows.push(PreferenceRow {
            image_id: id.to_string(),
            preferred_modality: modality,
            margin: second - emds[best],
        });
    }
    Ok(Preference { rows, groups, ties, unmatched })
}

/// Sample covariance (n − 1 denominator). Absent with fewer than two points
/// or when either side is constant.
pub fn sample_covariance(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1) as f64)
}

fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let cov = sample_covariance(x, y)?;
    let sx = sample_covariance(x, x)?.sqrt();
    let sy = sample_covariance(y, y)?.sqrt();
    Some((cov / (sx * sy)).clamp(-1.0, 1.0))
}

/// One modality's covariances against every category column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceRow {
    pub modality: ModalityKind,
    pub categories: Vec<String>,
    pub covariance: Vec<Option<f64>>,
    pub correlation: Vec<Option<f64>>,
    /// Number of images in the overlap.
    pub n: usize,
}

fn covariance_row(
    run: &ModalityRun,
    table: &CategoryTable,
    x_of: impl Fn(&RecordSummary) -> Option<f64>,
) -> Result<CovarianceRow, AnalysisError> {
    let by_id = run.by_id();
    let mut ids: Vec<&str> = by_id.keys().copied().filter(|id| table.rows.contains_key(*id)).collect();
    ids.retain(|id| x_of(by_id[id]).is_some());
    if ids.is_empty() {
        return Err(AnalysisError::EmptyIntersection);
    }
    let x: Vec<f64> = ids.iter().map(|id| x_of(by_id[id]).unwrap()).collect();
    let mut covariance = Vec::with_capacity(table.category_names.len());
    let mut corr = Vec::with_capacity(table.category_names.len());
    for c in 0..table.category_names.len() {
        let y: Vec<f64> = ids.iter().map(|id| table.rows[*id][c]).collect();
        covariance.push(sample_covariance(&x, &y));
        corr.push(correlation(&x, &y));
    }
    Ok(CovarianceRow {
        modality: run.modality,
        categories: table.category_names.clone(),
        covariance,
        correlation: corr,
        n: ids.len(),
    })
}

/// Covariance of `−emd2` with each category value over the shared ids.
pub fn covariance_emd(run: &ModalityRun, table: &CategoryTable) -> Result<CovarianceRow, AnalysisError> {
    covariance_row(run, table, |r| Some(-r.emd2))
}

/// Covariance of `−|pred_mean − gt_mean|` with each category value, using
/// externally supplied ground-truth means.
pub fn covariance_mean_diff(
    run: &ModalityRun,
    table: &CategoryTable,
    gt_means: &BTreeMap<String, f64>,
) -> Result<CovarianceRow, AnalysisError> {
    covariance_row(run, table, |r| gt_means.get(&r.id).map(|g| -(r.pred_mean - g).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub row_labels: Vec<ModalityKind>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub correlation: Vec<Vec<Option<f64>>>,
}

/// Stacks rows in modality order. Every row must carry the same category
/// labels in the same order.
pub fn assemble_matrix(rows: &[CovarianceRow]) -> Result<CovarianceMatrix, AnalysisError> {
    let Some(first) = rows.first() else {
        return Err(AnalysisError::LabelMismatch("no rows".into()));
    };
    for r in rows {
        if r.categories != first.categories {
            return Err(AnalysisError::LabelMismatch(format!("{:?} vs {:?}", first.categories, r.categories)));
        }
    }
    let mut sorted: Vec<&CovarianceRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.modality);
    for pair in sorted.windows(2) {
        if pair[0].modality == pair[1].modality {
            return Err(AnalysisError::DuplicateModality(pair[0].modality));
        }
    }
    Ok(CovarianceMatrix {
        row_labels: sorted.iter().map(|r| r.modality).collect(),
        col_labels: first.categories.clone(),
        values: sorted.iter().map(|r| r.covariance.clone()).collect(),
        correlation: sorted.iter().map(|r| r.correlation.clone()).collect(),
    })
}

impl CovarianceMatrix {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes") + "\n"
    }

    /// `modality,<categories…>` header, one row per modality, empty cells for
    /// absent values. `correlation` selects the normalized matrix.
    pub fn to_csv(&self, correlation: bool) -> String {
        let mut s = String::from("modality");
        for c in &self.col_labels {
            s.push(',');
            s.push_str(&csv_field(c));
        }
        s.push('\n');
        let values = if correlation { &self.correlation } else { &self.values };
        for (label, row) in self.row_labels.iter().zip(values) {
            s.push_str(label.name());
            for v in row {
                s.push(',');
                if let Some(v) = v {
                    s.push_str(&v.to_string());
                }
            }
            s.push('\n');
        }
        s
    }
}

/// [`score_bin_emd`] restricted to images whose indicator for `category` is 1.
pub fn category_score_bins<R: ScoredRecord + Clone>(
    records: &[R],
    table: &CategoryTable,
    category: &str,
    width: f64,
    range: (f64, f64),
) -> Result<Vec<ScoreBin>, AnalysisError> {
    if table.kind != CategoryKind::OneHot {
        return Err(AnalysisError::NotOneHot);
    }
    let col = table.column(category).ok_or_else(|| AnalysisError::UnknownCategory(category.to_string()))?;
    let members: Vec<R> = records.iter().filter(|r| table.value(r.id(), col) == Some(1.0)).cloned().collect();
    Ok(score_bin_emd(&members, width, range)?)
}
