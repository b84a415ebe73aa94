//! Pipeline outputs against vectors produced by the independent numpy
//! reference in `fixtures/reference.py`.

use std::path::PathBuf;

use aesthete::modality::{blur_modality, spectral_residual_saliency, ImageBuffer};
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    width: usize,
    height: usize,
    channels: usize,
    input: Vec<f64>,
    blur: Vec<f64>,
    saliency: Vec<f64>,
}

const FIXTURES: [&str; 4] = ["shapes_rgb", "noise_rgb", "checker_gray", "constant_rgb"];

fn load(name: &str) -> (ImageBuffer, Golden) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("golden_{name}.json"));
    let g: Golden = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let img = ImageBuffer::new(g.width, g.height, g.channels, g.input.clone()).unwrap();
    (img, g)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

#[test]
fn blur_matches_reference() {
    for name in FIXTURES {
        let (img, g) = load(name);
        let out = blur_modality(&img).unwrap();
        let diff = max_abs_diff(out.data(), &g.blur);
        assert!(diff <= 1e-6, "{name}: {diff}");
    }
}

#[test]
fn saliency_matches_reference() {
    for name in FIXTURES {
        let (img, g) = load(name);
        let out = spectral_residual_saliency(&img).unwrap();
        let diff = max_abs_diff(out.data(), &g.saliency);
        assert!(diff <= 1e-6, "{name}: {diff}");
    }
}

#[test]
fn constant_fixture_is_a_fixed_point() {
    let (img, _) = load("constant_rgb");
    assert_eq!(blur_modality(&img).unwrap(), img);
}

/// Naive separable DFT magnitude, independent of the FFT used by saliency.
/// Attenuation is judged on summed squared magnitude (spectral power).
fn dft_magnitude(data: &[f64], n: usize) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut rows = vec![(0.0, 0.0); n * n];
    for y in 0..n {
        for u in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for x in 0..n {
                let a = -tau * (u * x % n) as f64 / n as f64;
                re += data[y * n + x] * a.cos();
                im += data[y * n + x] * a.sin();
            }
            rows[y * n + u] = (re, im);
        }
    }
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..n {
                let a = -tau * (v * y % n) as f64 / n as f64;
                let (c, s) = (a.cos(), a.sin());
                let (r0, i0) = rows[y * n + u];
                re += r0 * c - i0 * s;
                im += r0 * s + i0 * c;
            }
            out[v * n + u] = (re * re + im * im).sqrt();
        }
    }
    out
}

fn high_frequency_power(mag: &[f64], n: usize, cutoff: usize) -> f64 {
    let mut total = 0.0;
    for v in 0..n {
        for u in 0..n {
            let fu = u.min(n - u);
            let fv = v.min(n - v);
            if fu > cutoff || fv > cutoff {
                total += mag[v * n + u] * mag[v * n + u];
            }
        }
    }
    total
}

#[test]
fn blur_removes_detail_beyond_thumbnail_nyquist() {
    let n = 256;
    let img = ImageBuffer::from_fn(n, n, 1, |x, y, _| ((x + y) % 2) as f64).unwrap();
    let out = blur_modality(&img).unwrap();
    let before = high_frequency_power(&dft_magnitude(img.data(), n), n, 16);
    let after = high_frequency_power(&dft_magnitude(out.data(), n), n, 16);
    assert!(after <= 0.1 * before, "{after} vs {before}");
}
