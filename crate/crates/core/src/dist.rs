//! Ten-bin score distributions and the distribution losses built on them.
//!
//! Scores are the integers 1..=10; bin `i` (zero based) carries the mass of
//! score `i + 1`. Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of score bins.
pub const BINS: usize = 10;

/// Tolerance on the total mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Average per-image mean score of the reference dataset.
pub const DATASET_MEAN: f64 = 5.3833;

/// Average per-image score variance of the reference dataset.
pub const DATASET_VAR: f64 = 2.084;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("every vote count is zero")]
    AllZeroCounts,
    #[error("bin {bin} holds a negative or non-finite value ({value})")]
    InvalidMass { bin: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("analytic gradient is only available for r = 2 (got r = {0})")]
    UnsupportedExponent(f64),
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
}

/// Score value of a zero-based bin index.
#[inline]
pub fn score_of(bin: usize) -> f64 {
    (bin + 1) as f64
}

/// A probability vector over the scores 1..=10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    probs: [f64; BINS],
}

impl ScoreDistribution {
    /// Wraps a probability vector after checking non-negativity and unit mass.
    pub fn new(probs: [f64; BINS]) -> Result<Self, DistError> {
        for (bin, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::InvalidMass { bin, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DistError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Normalizes raw (vote) counts into a distribution.
    pub fn normalize(counts: &[f64; BINS]) -> Result<Self, DistError> {
        for (bin, &value) in counts.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::InvalidMass { bin, value });
            }
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(DistError::AllZeroCounts);
        }
        let mut probs = [0.0; BINS];
        for (p, &c) in probs.iter_mut().zip(counts) {
            *p = c / total;
        }
        Ok(Self { probs })
    }

    /// Convenience wrapper over [`ScoreDistribution::normalize`] for integer votes.
    pub fn from_votes(votes: &[u64; BINS]) -> Result<Self, DistError> {
        let counts = votes.map(|v| v as f64);
        Self::normalize(&counts)
    }

    pub fn uniform() -> Self {
        Self { probs: [1.0 / BINS as f64; BINS] }
    }

    /// All mass on a single zero-based bin.
    pub fn point(bin: usize) -> Self {
        assert!(bin < BINS, "bin {bin} out of range");
        let mut probs = [0.0; BINS];
        probs[bin] = 1.0;
        Self { probs }
    }

    /// Exponential normalization of ten logits (max-shifted).
    pub fn softmax(logits: &[f64; BINS]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; BINS];
        let mut total = 0.0;
        for (p, &z) in probs.iter_mut().zip(logits) {
            *p = (z - max).exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64; BINS] {
        &self.probs
    }

    pub fn cdf(&self) -> [f64; BINS] {
        let mut out = [0.0; BINS];
        let mut acc = 0.0;
        for (o, &p) in out.iter_mut().zip(&self.probs) {
            acc += p;
            *o = acc;
        }
        out
    }

    /// Expected score, in [1, 10].
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, &p)| score_of(i) * p).sum()
    }

    /// Score variance around [`ScoreDistribution::mean`].
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let d = score_of(i) - mu;
                d * d * p
            })
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// Earth mover's distance between two score distributions:
/// `((1/N) Σ_k |CDF_p(k) − CDF_q(k)|^r)^(1/r)` with `N = 10`.
pub fn emd(p: &ScoreDistribution, q: &ScoreDistribution, r: f64) -> f64 {
    let cp = p.cdf();
    let cq = q.cdf();
    let n = BINS as f64;
    if r == 2.0 {
        let s: f64 = cp.iter().zip(&cq).map(|(a, b)| (a - b) * (a - b)).sum();
        return (s / n).sqrt();
    }
    let s: f64 = cp.iter().zip(&cq).map(|(a, b)| (a - b).abs().powf(r)).sum();
    (s / n).powf(1.0 / r)
}

/// Which distribution feeds the mean/variance weighting terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// Weights are constants per sample, derived from the ground truth.
    #[default]
    GroundTruth,
    /// Weights follow the prediction and contribute to the gradient.
    Prediction,
}

/// Switches for the two multiplicative weighting terms. Both on is the full
/// loss; both off is plain EMD scaled by `h_mu · h_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossTerms {
    pub mean: bool,
    pub variance: bool,
}

impl Default for LossTerms {
    fn default() -> Self {
        Self { mean: true, variance: true }
    }
}

impl LossTerms {
    pub const PURE_EMD: Self = Self { mean: false, variance: false };

    /// Short label used in sweep leaderboards.
    pub fn label(&self) -> &'static str {
        match (self.mean, self.variance) {
            (false, false) => "emd",
            (true, false) => "emd*dmu",
            (false, true) => "emd*dvar",
            (true, true) => "emd*dmu*dvar",
        }
    }
}

/// Hyperparameters of the weighted distribution loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossParams {
    pub h_mu: f64,
    pub h_v: f64,
    pub r: f64,
    pub dataset_mean: f64,
    pub dataset_var: f64,
    pub weight_source: WeightSource,
    pub terms: LossTerms,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            h_mu: 1.0,
            h_v: 1.0,
            r: 2.0,
            dataset_mean: DATASET_MEAN,
            dataset_var: DATASET_VAR,
            weight_source: WeightSource::GroundTruth,
            terms: LossTerms::default(),
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<(), DistError> {
        let bad = |msg: &str| Err(DistError::InvalidParams(msg.to_string()));
        if !(self.r >= 1.0) {
            return bad("r must be at least 1");
        }
        if !(self.h_mu > 0.0) || !(self.h_v > 0.0) {
            return bad("h_mu and h_v must be positive");
        }
        if !(1.0..=10.0).contains(&self.dataset_mean) {
            return bad("dataset_mean must lie in [1, 10]");
        }
        if !(self.dataset_var >= 0.0) {
            return bad("dataset_var must be non-negative");
        }
        Ok(())
    }

    fn weight_dist<'a>(&self, gt: &'a ScoreDistribution, pred: &'a ScoreDistribution) -> &'a ScoreDistribution {
        match self.weight_source {
            WeightSource::GroundTruth => gt,
            WeightSource::Prediction => pred,
        }
    }

    /// Product of the (enabled) weighting factors, `h_mu·Δμ · h_v·Δσ²`.
    fn weight(&self, w: &ScoreDistribution) -> f64 {
        let mu = if self.terms.mean { delta_mu(w, self) } else { 1.0 };
        let var = if self.terms.variance { delta_var(w, self) } else { 1.0 };
        self.h_mu * mu * self.h_v * var
    }
}

/// `1 + |dataset_mean − μ(d)|`
pub fn delta_mu(d: &ScoreDistribution, params: &LossParams) -> f64 {
    1.0 + (params.dataset_mean - d.mean()).abs()
}

/// `1 + |dataset_var − σ²(d)|`
pub fn delta_var(d: &ScoreDistribution, params: &LossParams) -> f64 {
    1.0 + (params.dataset_var - d.variance()).abs()
}

/// `EMD(gt, pred) · h_mu·Δμ(w) · h_v·Δσ²(w)` where `w` is chosen by
/// `params.weight_source`.
pub fn combined_loss(gt: &ScoreDistribution, pred: &ScoreDistribution, params: &LossParams) -> f64 {
    let w = params.weight_dist(gt, pred);
    emd(gt, pred, params.r) * params.weight(w)
}

#[inline]
fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of [`combined_loss`] with respect to the logits that produce the
/// prediction through [`ScoreDistribution::softmax`]. Only `r = 2` is
/// supported. Returns the gradient together with the loss value.
pub fn loss_gradient(
    gt: &ScoreDistribution,
    pred_logits: &[f64; BINS],
    params: &LossParams,
) -> Result<([f64; BINS], f64), DistError> {
    if params.r != 2.0 {
        return Err(DistError::UnsupportedExponent(params.r));
    }
    let pred = ScoreDistribution::softmax(pred_logits);
    let n = BINS as f64;

    // EMD and its gradient with respect to the prediction probabilities.
    let cg = gt.cdf();
    let cp = pred.cdf();
    let mut diff = [0.0; BINS];
    for k in 0..BINS {
        diff[k] = cg[k] - cp[k];
    }
    let e = (diff.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let mut d_emd = [0.0; BINS];
    if e > 0.0 {
        // dE/dp_i = -(1 / (N E)) Σ_{k ≥ i} D_k
        let mut tail = 0.0;
        for i in (0..BINS).rev() {
            tail += diff[i];
            d_emd[i] = -tail / (n * e);
        }
    }

    let w_dist = params.weight_dist(gt, &pred);
    let weight = params.weight(w_dist);
    let loss = e * weight;

    let mut d_prob = d_emd.map(|g| g * weight);
    if params.weight_source == WeightSource::Prediction {
        let mu = pred.mean();
        let var = pred.variance();
        let (f_mu, s_mu) = if params.terms.mean {
            (1.0 + (params.dataset_mean - mu).abs(), sign_or_zero(params.dataset_mean - mu))
        } else {
            (1.0, 0.0)
        };
        let (f_var, s_var) = if params.terms.variance {
            (1.0 + (params.dataset_var - var).abs(), sign_or_zero(params.dataset_var - var))
        } else {
            (1.0, 0.0)
        };
        let scale = e * params.h_mu * params.h_v;
        for (i, g) in d_prob.iter_mut().enumerate() {
            let s = score_of(i);
            let dmu = -s_mu * s;
            let dvar = -s_var * (s * s - 2.0 * mu * s);
            *g += scale * (dmu * f_var + f_mu * dvar);
        }
    }

    // Back through the softmax: dL/dz_j = p_j (g_j − Σ_i p_i g_i).
    let p = pred.probs();
    let dot: f64 = p.iter().zip(&d_prob).map(|(a, b)| a * b).sum();
    let mut grad = [0.0; BINS];
    for j in 0..BINS {
        grad[j] = p[j] * (d_prob[j] - dot);
    }
    Ok((grad, loss))
}

/// Count histogram over uniform bins. Out-of-range values land in the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl ScoreHistogram {
    pub fn uniform(bins: usize, lo: f64, hi: f64) -> Result<Self, DistError> {
        if bins == 0 {
            return Err(DistError::InvalidHistogram("need at least one bin".into()));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(DistError::InvalidHistogram(format!("range [{lo}, {hi}] is empty")));
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
        bin_edges.push(hi);
        Ok(Self { bin_edges, counts: vec![0; bins] })
    }

    pub fn from_values(bins: usize, lo: f64, hi: f64, values: &[f64]) -> Result<Self, DistError> {
        let mut h = Self::uniform(bins, lo, hi)?;
        for &v in values {
            h.add(v);
        }
        Ok(h)
    }

    pub fn bin_index(&self, value: f64) -> usize {
        let bins = self.counts.len();
        let lo = self.bin_edges[0];
        let hi = self.bin_edges[bins];
        if !(value > lo) {
            return 0;
        }
        if value >= hi {
            return bins - 1;
        }
        (((value - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1)
    }

    pub fn add(&mut self, value: f64) {
        let k = self.bin_index(value);
        self.counts[k] += 1;
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean absolute difference of cumulative counts, per bin.
    pub fn cumulative_distance(&self, other: &ScoreHistogram) -> Result<f64, DistError> {
        if self.bin_edges != other.bin_edges {
            return Err(DistError::InvalidHistogram("bin edges differ".into()));
        }
        let mut a = 0i64;
        let mut b = 0i64;
        let mut total = 0.0;
        for (&ca, &cb) in self.counts.iter().zip(&other.counts) {
            a += ca as i64;
            b += cb as i64;
            total += (a - b).abs() as f64;
        }
        Ok(total / self.counts.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(v: [f64; BINS]) -> ScoreDistribution {
        ScoreDistribution::new(v).unwrap()
    }

    fn two_point() -> ScoreDistribution {
        let mut v = [0.0; BINS];
        v[0] = 0.75;
        v[9] = 0.25;
        dist(v)
    }

    /// Mean 5.3833 and variance 2.084 supported on scores 3, 5 and 7.
    fn centroid() -> ScoreDistribution {
        let second = DATASET_VAR + DATASET_MEAN * DATASET_MEAN;
        // Solve p3 + p5 + p7 = 1, 3p3 + 5p5 + 7p7 = m, 9p3 + 25p5 + 49p7 = s.
        let p7 = (second - 8.0 * DATASET_MEAN + 15.0) / 8.0;
        let p3 = (35.0 - 12.0 * DATASET_MEAN + second) / 8.0;
        let p5 = 1.0 - p3 - p7;
        let mut v = [0.0; BINS];
        v[2] = p3;
        v[4] = p5;
        v[6] = p7;
        dist(v)
    }

    fn random_dist(rng: &mut impl Rng) -> ScoreDistribution {
        let mut c = [0.0; BINS];
        for x in c.iter_mut() {
            *x = rng.gen::<f64>();
        }
        ScoreDistribution::normalize(&c).unwrap()
    }

    fn random_logits(rng: &mut impl Rng) -> [f64; BINS] {
        let mut z = [0.0; BINS];
        for x in z.iter_mut() {
            *x = rng.gen_range(-3.0..3.0);
        }
        z
    }

    #[test]
    fn normalize_examples() {
        let mut c = [0.0; BINS];
        c[4] = 10.0;
        assert_eq!(ScoreDistribution::normalize(&c).unwrap(), ScoreDistribution::point(4));

        let u = ScoreDistribution::normalize(&[1.0; BINS]).unwrap();
        assert!(u.probs().iter().all(|&p| (p - 0.1).abs() < 1e-15));

        let mut c = [0.0; BINS];
        c[0] = 3.0;
        c[9] = 1.0;
        assert_eq!(ScoreDistribution::normalize(&c).unwrap(), two_point());

        assert_eq!(ScoreDistribution::normalize(&[0.0; BINS]), Err(DistError::AllZeroCounts));
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(matches!(ScoreDistribution::new([0.2; BINS]), Err(DistError::NotNormalized { .. })));
        let mut v = [0.1; BINS];
        v[0] = -0.1;
        v[1] = 0.3;
        assert!(matches!(ScoreDistribution::new(v), Err(DistError::InvalidMass { bin: 0, .. })));
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(ScoreDistribution::point(4).cdf(), [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let u = ScoreDistribution::uniform().cdf();
        for (k, c) in u.iter().enumerate() {
            assert!((c - 0.1 * (k + 1) as f64).abs() < 1e-12);
        }
        let t = two_point().cdf();
        assert!(t[..9].iter().all(|&c| c == 0.75));
        assert_eq!(t[9], 1.0);
    }

    #[test]
    fn moments() {
        assert_eq!(ScoreDistribution::point(4).mean(), 5.0);
        assert!((ScoreDistribution::uniform().mean() - 5.5).abs() < 1e-12);
        assert!((two_point().mean() - 3.25).abs() < 1e-12);

        assert_eq!(ScoreDistribution::point(7).variance(), 0.0);
        assert!((ScoreDistribution::uniform().variance() - 8.25).abs() < 1e-12);
        let mut v = [0.0; BINS];
        v[0] = 0.5;
        v[9] = 0.5;
        assert!((dist(v).variance() - 20.25).abs() < 1e-12);
    }

    #[test]
    fn emd_examples() {
        let u = ScoreDistribution::uniform();
        assert_eq!(emd(&u, &u, 2.0), 0.0);
        let a = ScoreDistribution::point(0);
        assert!((emd(&a, &ScoreDistribution::point(1), 2.0) - 0.1f64.sqrt()).abs() < 1e-12);
        assert!((emd(&a, &ScoreDistribution::point(9), 2.0) - 0.9f64.sqrt()).abs() < 1e-12);
        // r = 1 is the mean absolute CDF gap.
        assert!((emd(&a, &ScoreDistribution::point(9), 1.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        let p = LossParams::default();
        assert!((delta_mu(&ScoreDistribution::point(9), &p) - 5.6167).abs() < 1e-12);
        assert!((delta_mu(&ScoreDistribution::point(4), &p) - 1.3833).abs() < 1e-12);
        assert!((delta_mu(&centroid(), &p) - 1.0).abs() < 1e-12);
        assert!((delta_var(&ScoreDistribution::point(2), &p) - 3.084).abs() < 1e-12);
        assert!((delta_var(&centroid(), &p) - 1.0).abs() < 1e-12);
        assert!((delta_var(&ScoreDistribution::uniform(), &p) - 7.166).abs() < 1e-12);
    }

    #[test]
    fn combined_loss_examples() {
        let p = LossParams::default();
        let u = ScoreDistribution::uniform();
        assert_eq!(combined_loss(&u, &u, &p), 0.0);

        let gt = ScoreDistribution::point(0);
        let pred = ScoreDistribution::point(1);
        // √0.1 · (1 + |5.3833 − 1|) · (1 + |2.084 − 0|)
        let expected = 5.250_044_108_750_401;
        assert!((combined_loss(&gt, &pred, &p) - expected).abs() < 1e-12);

        let pure = LossParams { terms: LossTerms::PURE_EMD, ..p };
        assert!((combined_loss(&gt, &pred, &pure) - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn loss_is_neutral_at_dataset_centroid() {
        let gt = centroid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = LossParams { h_mu: 1.5, h_v: 0.5, ..LossParams::default() };
        for _ in 0..100 {
            let pred = random_dist(&mut rng);
            let plain = emd(&gt, &pred, 2.0);
            let unit = combined_loss(&gt, &pred, &LossParams::default());
            assert!((unit - plain).abs() < 1e-12);
            let scaled = combined_loss(&gt, &pred, &params);
            assert!((scaled - 0.75 * plain).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_rejects_other_exponents() {
        let p = LossParams { r: 1.0, ..LossParams::default() };
        assert_eq!(
            loss_gradient(&ScoreDistribution::uniform(), &[0.0; BINS], &p),
            Err(DistError::UnsupportedExponent(1.0))
        );
    }

    #[test]
    fn gradient_vanishes_at_minimum() {
        let (g, loss) = loss_gradient(&ScoreDistribution::uniform(), &[0.7; BINS], &LossParams::default()).unwrap();
        assert!(loss.abs() < 1e-15);
        assert!(g.iter().all(|&x| x.abs() < 1e-15));
    }

    fn finite_difference(gt: &ScoreDistribution, z: &[f64; BINS], p: &LossParams) -> [f64; BINS] {
        let h = 1e-6;
        let mut out = [0.0; BINS];
        for i in 0..BINS {
            let mut plus = *z;
            let mut minus = *z;
            plus[i] += h;
            minus[i] -= h;
            let fp = combined_loss(gt, &ScoreDistribution::softmax(&plus), p);
            let fm = combined_loss(gt, &ScoreDistribution::softmax(&minus), p);
            out[i] = (fp - fm) / (2.0 * h);
        }
        out
    }

    fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-8);
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for source in [WeightSource::GroundTruth, WeightSource::Prediction] {
            for terms in [LossTerms::default(), LossTerms::PURE_EMD] {
                let params = LossParams { h_mu: 0.8, h_v: 1.3, weight_source: source, terms, ..LossParams::default() };
                for _ in 0..50 {
                    let gt = random_dist(&mut rng);
                    let z = random_logits(&mut rng);
                    let (g, loss) = loss_gradient(&gt, &z, &params).unwrap();
                    let pred = ScoreDistribution::softmax(&z);
                    assert!((loss - combined_loss(&gt, &pred, &params)).abs() < 1e-12);
                    let fd = finite_difference(&gt, &z, &params);
                    assert!(relative_error(&g, &fd) < 1e-5, "{source:?} {g:?} vs {fd:?}");
                }
            }
        }
    }

    #[test]
    fn loss_monotone_in_mean_deviation() {
        // Shifting a (gt, pred) pair of point masses keeps the EMD fixed while
        // the gt mean moves away from the centroid.
        let params = LossParams::default();
        let mut last = 0.0;
        for shift in 0..4 {
            let gt = ScoreDistribution::point(5 + shift);
            let pred = ScoreDistribution::point(4 + shift);
            let loss = combined_loss(&gt, &pred, &params);
            assert!(loss >= last);
            last = loss;
        }
    }

    #[test]
    fn histogram_distance() {
        let a = ScoreHistogram::from_values(100, 1.0, 10.0, &[1.0]).unwrap();
        let b = ScoreHistogram::from_values(100, 1.0, 10.0, &[10.0]).unwrap();
        assert!((a.cumulative_distance(&b).unwrap() - 0.99).abs() < 1e-15);
        assert_eq!(a.bin_index(-4.0), 0);
        assert_eq!(a.bin_index(40.0), 99);
        assert!(ScoreHistogram::uniform(0, 0.0, 1.0).is_err());
        assert!(ScoreHistogram::uniform(3, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_scale_invariant(
            counts in proptest::array::uniform10(0u32..500),
            k in 1u32..1000,
        ) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let base = counts.map(|c| c as f64);
            let scaled = counts.map(|c| (c * k) as f64);
            let a = ScoreDistribution::normalize(&base).unwrap();
            let b = ScoreDistribution::normalize(&scaled).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }

        #[test]
        fn cdf_monotone_and_emd_bounded(
            a in proptest::array::uniform10(0.0f64..1.0),
            b in proptest::array::uniform10(0.0f64..1.0),
        ) {
            prop_assume!(a.iter().sum::<f64>() > 1e-6 && b.iter().sum::<f64>() > 1e-6);
            let p = ScoreDistribution::normalize(&a).unwrap();
            let q = ScoreDistribution::normalize(&b).unwrap();
            let c = p.cdf();
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!((c[9] - 1.0).abs() < 1e-9);
            let d = emd(&p, &q, 2.0);
            prop_assert!(d >= 0.0 && d <= 0.9f64.sqrt() + 1e-12);
            prop_assert!((d - emd(&q, &p, 2.0)).abs() < 1e-15);
        }
    }
}
