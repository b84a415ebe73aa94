//! Synthetic shapes dataset whose labels are a fixed function of simple image
//! statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DataError, LabeledImage};
use crate::dist::{score_of, ScoreDistribution, BINS};
use crate::modality::ImageBuffer;

/// Synthetic vote counts are `round(p · SYNTH_COUNT_SCALE)`.
pub const SYNTH_COUNT_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageStats {
    /// Mean gray intensity.
    pub brightness: f64,
    /// Mean central-difference gradient magnitude ×4, clipped to [0, 1].
    pub edge_density: f64,
    /// Gray standard deviation ×2, clipped to [0, 1].
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub record: LabeledImage,
    pub image: ImageBuffer,
    pub stats: ImageStats,
    pub mu: f64,
    pub sigma: f64,
}

pub fn image_stats(img: &ImageBuffer) -> ImageStats {
    let gray = img.to_gray();
    let (w, h) = (gray.width(), gray.height());
    let g = gray.data();
    let n = (w * h) as f64;
    let brightness = g.iter().sum::<f64>() / n;
    let var = g.iter().map(|v| (v - brightness).powi(2)).sum::<f64>() / n;

    let at = |x: usize, y: usize| g[y * w + x];
    let mut grad = 0.0;
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            grad += (gx * gx + gy * gy).sqrt();
        }
    }
    ImageStats { brightness, edge_density: (4.0 * grad / n).min(1.0), contrast: (2.0 * var.sqrt()).min(1.0) }
}

/// `(μ, σ)` of the label: `μ = 1 + 9·(0.5·brightness + 0.5·edge_density)`,
/// `σ = 0.5 + contrast`.
pub fn synthetic_label(stats: &ImageStats) -> (f64, f64) {
    (1.0 + 9.0 * (0.5 * stats.brightness + 0.5 * stats.edge_density), 0.5 + stats.contrast)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Normal mass over unit bins `[s − 0.5, s + 0.5]`, renormalized over
/// `[0.5, 10.5]`.
pub fn discretize_normal(mu: f64, sigma: f64) -> [f64; BINS] {
    let mut mass = [0.0; BINS];
    for (i, m) in mass.iter_mut().enumerate() {
        let s = score_of(i);
        *m = normal_cdf((s + 0.5 - mu) / sigma) - normal_cdf((s - 0.5 - mu) / sigma);
    }
    let total: f64 = mass.iter().sum();
    mass.map(|m| m / total)
}

/// Mean of the normal density truncated to `[0.5, 10.5]`.
pub fn truncated_normal_mean(mu: f64, sigma: f64) -> f64 {
    let a = (0.5 - mu) / sigma;
    let b = (10.5 - mu) / sigma;
    mu + sigma * (normal_pdf(a) - normal_pdf(b)) / (normal_cdf(b) - normal_cdf(a))
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Image `index` of the dataset generated from `seed`: shapes, some striped,
/// over a two-color linear gradient, quantized to 8-bit levels.
pub fn synth_image(index: u64, seed: u64, size: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index);
    let exposure: f64 = rng.gen_range(0.05..0.95);
    let color = |rng: &mut ChaCha8Rng, spread: f64| -> [f64; 3] {
        [(); 3].map(|_| (exposure + rng.gen_range(-spread..spread)).clamp(0.0, 1.0))
    };
    let c0 = color(&mut rng, 0.25);
    let c1 = color(&mut rng, 0.25);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());

    struct Shape {
        disc: bool,
        cx: f64,
        cy: f64,
        r: f64,
        color: [f64; 3],
        stripe: Option<usize>,
    }
    let s = size as f64;
    let count = rng.gen_range(0..=4);
    let shapes: Vec<Shape> = (0..count)
        .map(|_| Shape {
            disc: rng.gen_bool(0.5),
            cx: rng.gen_range(0.0..s),
            cy: rng.gen_range(0.0..s),
            r: rng.gen_range(0.08..0.3) * s,
            color: [(); 3].map(|_| rng.gen::<f64>()),
            stripe: rng.gen_bool(0.35).then(|| rng.gen_range(1..=3)),
        })
        .collect();

    let data = (0..size * size)
        .flat_map(|i| {
            let (x, y) = ((i % size) as f64 + 0.5, (i / size) as f64 + 0.5);
            let t = (((x / s - 0.5) * dx + (y / s - 0.5) * dy) / std::f64::consts::SQRT_2 + 0.5).clamp(0.0, 1.0);
            let mut px = [0, 1, 2].map(|c| lerp(c0[c], c1[c], t));
            for sh in &shapes {
                let inside = if sh.disc {
                    (x - sh.cx).powi(2) + (y - sh.cy).powi(2) <= sh.r * sh.r
                } else {
                    (x - sh.cx).abs() <= sh.r && (y - sh.cy).abs() <= sh.r
                };
                if !inside {
                    continue;
                }
                let dark = sh.stripe.is_some_and(|p| (x as usize / p) % 2 == 1);
                px = sh.color.map(|v| if dark { v * 0.15 } else { v });
            }
            px.map(|v| (v * 255.0).round() / 255.0)
        })
        .collect();
    ImageBuffer::new(size, size, 3, data).expect("generated values lie in [0, 1]")
}

/// Generates `n` labeled images. Image `i` uses the generator seeded with
/// `seed ^ i`, so any subset can be regenerated independently.
pub fn synth_dataset(n: usize, seed: u64, size: usize) -> Result<Vec<SynthImage>, DataError> {
    if n == 0 {
        return Err(DataError::InvalidInput("synthetic dataset size must be at least 1".into()));
    }
    if size < 4 {
        return Err(DataError::InvalidInput("synthetic image size must be at least 4".into()));
    }
    (0..n)
        .map(|i| {
            let image = synth_image(i as u64, seed, size);
            let stats = image_stats(&image);
            let (mu, sigma) = synthetic_label(&stats);
            let counts = discretize_normal(mu, sigma).map(|p| (p * SYNTH_COUNT_SCALE).round() as u64);
            let id = format!("synth_{i:05}");
            let record = LabeledImage::new(i as u64 + 1, &id, counts, [0, 0], 0)?;
            Ok(SynthImage { record, image, stats, mu, sigma })
        })
        .collect()
}

/// Distribution of the label before count rounding.
pub fn synthetic_distribution(stats: &ImageStats) -> ScoreDistribution {
    let (mu, sigma) = synthetic_label(stats);
    ScoreDistribution::new(discretize_normal(mu, sigma)).expect("normalized mass")
}
