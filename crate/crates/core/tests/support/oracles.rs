//! Brute-force reference implementations. Written from the definitions with
//! no shared code paths, so agreement is meaningful.
#![allow(dead_code)]

use aesthete::metrics::ScoredRecord;

pub fn accuracy<R: ScoredRecord>(records: &[R], t: f64) -> f64 {
    let mut hits = 0usize;
    for r in records {
        let p = if r.pred_mean() > t { 1 } else { 0 };
        let g = if r.gt_mean() > t { 1 } else { 0 };
        if p == g {
            hits += 1;
        }
    }
    hits as f64 * 100.0 / records.len() as f64
}

pub fn baseline<R: ScoredRecord>(records: &[R], t: f64) -> f64 {
    let good = records.iter().map(|r| if r.gt_mean() > t { 1.0 } else { 0.0 }).sum::<f64>();
    good * 100.0 / records.len() as f64
}

fn centered(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (cx, cy) = (centered(x), centered(y));
    dot(&cx, &cy) / (dot(&cx, &cx) * dot(&cy, &cy)).sqrt()
}

/// Rank by counting: smaller values plus the midpoint of the tie block.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

pub fn sample_covariance(x: &[f64], y: &[f64]) -> f64 {
    dot(&centered(x), &centered(y)) / (x.len() - 1) as f64
}

/// Counts per bin by scanning edges, then the mean absolute difference of
/// running totals.
pub fn histogram_emd(a: &[f64], b: &[f64], bins: usize, lo: f64, hi: f64) -> f64 {
    let count = |vals: &[f64]| {
        let mut c = vec![0i64; bins];
        for &v in vals {
            let mut k = 0;
            while k + 1 < bins && v >= lo + (k + 1) as f64 * (hi - lo) / bins as f64 {
                k += 1;
            }
            c[k] += 1;
        }
        c
    };
    let (ca, cb) = (count(a), count(b));
    let mut total = 0.0;
    for k in 0..bins {
        let sa: i64 = ca[..=k].iter().sum();
        let sb: i64 = cb[..=k].iter().sum();
        total += (sa - sb).abs() as f64;
    }
    total / bins as f64
}

/// Per-bin (sum of emd2, count) with bin k covering [lo + k·w, lo + (k+1)·w);
/// values outside the range fall into the end bins.
pub fn score_bins<R: ScoredRecord>(records: &[R], w: f64, lo: f64, hi: f64) -> Vec<(f64, usize)> {
    let n = ((hi - lo) / w).round() as usize;
    let mut out = vec![(0.0, 0usize); n];
    for r in records {
        let m = r.gt_mean();
        let mut k = 0;
        while k + 1 < n && m >= lo + (k + 1) as f64 * w {
            k += 1;
        }
        out[k].0 += r.emd2();
        out[k].1 += 1;
    }
    out
}

/// CDF-difference EMD over ten unit bins.
pub fn emd(p: &[f64], q: &[f64], r: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..p.len() {
        let cp: f64 = p[..=k].iter().sum();
        let cq: f64 = q[..=k].iter().sum();
        total += (cp - cq).abs().powf(r);
    }
    (total / p.len() as f64).powf(1.0 / r)
}
