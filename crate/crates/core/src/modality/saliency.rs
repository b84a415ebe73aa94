//! Spectral-residual static saliency.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::filter::{box3_plane, gaussian_plane, resize_plane, Plane};
use super::{ImageBuffer, ModalityError};

/// Side of the square working image the spectrum is computed on.
pub const WORKING_SIZE: usize = 64;

/// Log amplitudes are clamped to this fraction of the peak magnitude (60 dB
/// of dynamic range). Without it, exact spectral zeros of sharp synthetic
/// shapes dominate the 3×3 average.
pub const LOG_AMPLITUDE_FLOOR: f64 = 1e-3;

/// Spectral coefficients below this fraction of the peak magnitude carry no
/// phase and are dropped from the reconstruction.
pub const PHASE_FLOOR: f64 = 1e-12;

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            column[y] = data[y * n + x];
        }
        fft.process(&mut column);
        for y in 0..n {
            data[y * n + x] = column[y];
        }
    }
}

/// Single-channel saliency map in [0, 1] at the input resolution.
///
/// Gray conversion, resize to 64×64, log-amplitude spectrum minus its 3×3 box
/// average, inverse transform with the original phase, squared magnitude,
/// 9×9 Gaussian, resize back, min-max normalization.
pub fn spectral_residual_saliency(img: &ImageBuffer) -> Result<ImageBuffer, ModalityError> {
    if img.width() < 3 || img.height() < 3 {
        return Err(ModalityError::ImageTooSmall { width: img.width(), height: img.height(), min: 3 });
    }
    let n = WORKING_SIZE;
    let gray = Plane::from_image(&img.to_gray());
    let small = resize_plane(&gray, n, n);
    let (lo, hi) = small.min_max();
    if lo == hi {
        return Ok(ImageBuffer::from_clamped(img.width(), img.height(), 1, vec![0.0; img.width() * img.height()]));
    }

    let mut spectrum: Vec<Complex<f64>> = small.data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut spectrum, n, false);

    let magnitude: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();
    let peak = magnitude.iter().copied().fold(0.0, f64::max);
    let log_floor = peak * LOG_AMPLITUDE_FLOOR;
    let phase_floor = peak * PHASE_FLOOR;
    let log_amp =
        Plane { width: n, height: n, channels: 1, data: magnitude.iter().map(|&m| m.max(log_floor).ln()).collect() };
    let smoothed = box3_plane(&log_amp);

    for (k, z) in spectrum.iter_mut().enumerate() {
        let m = magnitude[k];
        *z = if m > phase_floor {
            let residual = log_amp.data[k] - smoothed.data[k];
            *z / m * residual.exp()
        } else {
            Complex::new(0.0, 0.0)
        };
    }
    fft2(&mut spectrum, n, true);

    let energy = Plane { width: n, height: n, channels: 1, data: spectrum.iter().map(|z| z.norm_sqr()).collect() };
    // Bilinear resampling commutes with the affine min-max map, so normalizing
    // after the resize gives the same map while guaranteeing a peak of 1.
    let map = gaussian_plane(&energy, 9)?;
    Ok(resize_plane(&map, img.width(), img.height()).normalize_min_max().into_image())
}
