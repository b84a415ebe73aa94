//! Gaussian, bilateral, box and bilinear-resize kernels.
//!
//! All kernels replicate edge pixels past the border. Weighted averages are
//! accumulated as `center + Σ w (x − center)`, which keeps constant regions
//! exactly constant.

use super::{ImageBuffer, ModalityError};

/// Unconstrained multi-channel sample grid used between pipeline stages.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Plane {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn from_image(img: &ImageBuffer) -> Self {
        Self { width: img.width(), height: img.height(), channels: img.channels(), data: img.data().to_vec() }
    }

    pub fn into_image(self) -> ImageBuffer {
        ImageBuffer::from_clamped(self.width, self.height, self.channels, self.data)
    }

    #[inline]
    fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Maps values affinely onto [0, 1]; a constant plane becomes all zero.
    pub fn normalize_min_max(mut self) -> Self {
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        for v in self.data.iter_mut() {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
        self
    }
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Sigma derived from the kernel size: `0.3·((ksize − 1)·0.5 − 1) + 0.8`.
pub fn gaussian_sigma(ksize: usize) -> f64 {
    0.3 * ((ksize as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps for an odd kernel size.
pub fn gaussian_kernel(ksize: usize) -> Result<Vec<f64>, ModalityError> {
    if ksize == 0 || ksize % 2 == 0 {
        return Err(ModalityError::EvenKernel(ksize));
    }
    let sigma = gaussian_sigma(ksize);
    let r = (ksize / 2) as f64;
    let mut taps: Vec<f64> = (0..ksize)
        .map(|i| {
            let x = i as f64 - r;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    Ok(taps)
}

pub(crate) fn gaussian_plane(src: &Plane, ksize: usize) -> Result<Plane, ModalityError> {
    let taps = gaussian_kernel(ksize)?;
    if ksize == 1 {
        return Ok(src.clone());
    }
    let r = (ksize / 2) as isize;
    let (w, h, ch) = (src.width, src.height, src.channels);

    let mut tmp = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let center = src.at(x, y, c);
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let sx = clamp_index(x as isize + k as isize - r, w);
                    acc += t * (src.at(sx, y, c) - center);
                }
                tmp[(y * w + x) * ch + c] = center + acc;
            }
        }
    }
    let tmp = Plane { width: w, height: h, channels: ch, data: tmp };
    let mut out = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let center = tmp.at(x, y, c);
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let sy = clamp_index(y as isize + k as isize - r, h);
                    acc += t * (tmp.at(x, sy, c) - center);
                }
                out[(y * w + x) * ch + c] = center + acc;
            }
        }
    }
    Ok(Plane { width: w, height: h, channels: ch, data: out })
}

/// Separable Gaussian blur with an odd `ksize × ksize` kernel.
pub fn gaussian_blur(img: &ImageBuffer, ksize: usize) -> Result<ImageBuffer, ModalityError> {
    Ok(gaussian_plane(&Plane::from_image(img), ksize)?.into_image())
}

/// Edge-preserving bilateral filter over a `d × d` window.
///
/// Even diameters place the extra row and column on the high-index side.
/// Color distance is Euclidean over channels on the [0, 255] scale.
pub fn bilateral_filter(
    img: &ImageBuffer,
    d: usize,
    sigma_color: f64,
    sigma_space: f64,
) -> Result<ImageBuffer, ModalityError> {
    if !(sigma_color > 0.0) || !(sigma_space > 0.0) {
        return Err(ModalityError::NonPositiveSigma);
    }
    if d == 0 {
        return Err(ModalityError::InvalidDiameter(d));
    }
    let src = Plane::from_image(img);
    let (w, h, ch) = (src.width, src.height, src.channels);
    let before = ((d - 1) / 2) as isize;
    let after = (d / 2) as isize;

    let space_coeff = -0.5 / (sigma_space * sigma_space);
    let color_coeff = -0.5 / (sigma_color * sigma_color);
    let mut offsets = Vec::with_capacity(d * d);
    for dy in -before..=after {
        for dx in -before..=after {
            let w_space = (((dx * dx + dy * dy) as f64) * space_coeff).exp();
            offsets.push((dx, dy, w_space));
        }
    }

    let mut out = vec![0.0; src.data.len()];
    let mut acc = vec![0.0; ch];
    for y in 0..h {
        for x in 0..w {
            let base = (y * w + x) * ch;
            let center = &src.data[base..base + ch];
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut wsum = 0.0;
            for &(dx, dy, w_space) in &offsets {
                let sx = clamp_index(x as isize + dx, w);
                let sy = clamp_index(y as isize + dy, h);
                let nb = (sy * w + sx) * ch;
                let neighbor = &src.data[nb..nb + ch];
                let dist2: f64 = neighbor
                    .iter()
                    .zip(center)
                    .map(|(a, b)| {
                        let diff = 255.0 * (a - b);
                        diff * diff
                    })
                    .sum();
                let weight = w_space * (dist2 * color_coeff).exp();
                wsum += weight;
                for c in 0..ch {
                    acc[c] += weight * (neighbor[c] - center[c]);
                }
            }
            for c in 0..ch {
                out[base + c] = center[c] + acc[c] / wsum;
            }
        }
    }
    Ok(ImageBuffer::from_clamped(w, h, ch, out))
}

/// 3×3 mean filter.
pub(crate) fn box3_plane(src: &Plane) -> Plane {
    let (w, h, ch) = (src.width, src.height, src.channels);
    let mut out = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let center = src.at(x, y, c);
                let mut acc = 0.0;
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let sx = clamp_index(x as isize + dx, w);
                        let sy = clamp_index(y as isize + dy, h);
                        acc += src.at(sx, sy, c) - center;
                    }
                }
                out[(y * w + x) * ch + c] = center + acc / 9.0;
            }
        }
    }
    Plane { width: w, height: h, channels: ch, data: out }
}

/// Source coordinate and blend factor for half-pixel-centered sampling.
fn sample_axis(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let scale = src_len as f64 / dst_len as f64;
    let s = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
    let i0 = (s.floor() as usize).min(src_len - 1);
    let i1 = (i0 + 1).min(src_len - 1);
    let t = if i1 == i0 { 0.0 } else { s - i0 as f64 };
    (i0, i1, t)
}

pub(crate) fn resize_plane(src: &Plane, out_w: usize, out_h: usize) -> Plane {
    if out_w == src.width && out_h == src.height {
        return src.clone();
    }
    let ch = src.channels;
    let cols: Vec<_> = (0..out_w).map(|x| sample_axis(x, src.width, out_w)).collect();
    let mut out = Vec::with_capacity(out_w * out_h * ch);
    for y in 0..out_h {
        let (y0, y1, ty) = sample_axis(y, src.height, out_h);
        for &(x0, x1, tx) in &cols {
            for c in 0..ch {
                let a = src.at(x0, y0, c);
                let b = src.at(x1, y0, c);
                let top = a + tx * (b - a);
                let a = src.at(x0, y1, c);
                let b = src.at(x1, y1, c);
                let bottom = a + tx * (b - a);
                out.push(top + ty * (bottom - top));
            }
        }
    }
    Plane { width: out_w, height: out_h, channels: ch, data: out }
}

/// Bilinear resize with half-pixel-centered sampling.
pub fn resize(img: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer, ModalityError> {
    if out_w == 0 || out_h == 0 {
        return Err(ModalityError::InvalidImage(format!("target size {out_w}x{out_h} must be positive")));
    }
    Ok(resize_plane(&Plane::from_image(img), out_w, out_h).into_image())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: usize, h: usize, c: usize, seed: u64) -> ImageBuffer {
        let mut s = seed;
        ImageBuffer::from_fn(w, h, c, |_, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    #[test]
    fn kernel_sizes() {
        assert_eq!(gaussian_kernel(1).unwrap(), vec![1.0]);
        assert!(matches!(gaussian_kernel(4), Err(ModalityError::EvenKernel(4))));
        assert!((gaussian_sigma(9) - 1.7).abs() < 1e-12);
        let k = gaussian_kernel(3).unwrap();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((k[0] - k[2]).abs() < 1e-15);
    }

    #[test]
    fn gaussian_keeps_constants_exactly() {
        let img = ImageBuffer::filled(13, 7, 3, 0.37).unwrap();
        for k in [1, 3, 5, 9, 15] {
            assert_eq!(gaussian_blur(&img, k).unwrap(), img);
        }
    }

    #[test]
    fn gaussian_identity_at_size_one() {
        let img = noise(6, 5, 3, 1);
        assert_eq!(gaussian_blur(&img, 1).unwrap(), img);
    }

    #[test]
    fn gaussian_impulse_matches_direct_convolution() {
        let mut data = vec![0.0; 81];
        data[4 * 9 + 4] = 1.0;
        let img = ImageBuffer::new(9, 9, 1, data).unwrap();
        let out = gaussian_blur(&img, 3).unwrap();
        // Direct 2-D convolution with the outer-product kernel.
        let sigma: f64 = 0.8;
        let g = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp();
        let norm = g(-1.0) + g(0.0) + g(1.0);
        let center = (g(0.0) / norm).powi(2);
        assert!((out.get(4, 4, 0) - center).abs() < 1e-12);
        for y in 0..9 {
            for x in 0..9 {
                let dx = x as f64 - 4.0;
                let dy = y as f64 - 4.0;
                let expected = if dx.abs() <= 1.0 && dy.abs() <= 1.0 { g(dx) * g(dy) / (norm * norm) } else { 0.0 };
                assert!((out.get(x, y, 0) - expected).abs() < 1e-12);
            }
        }
        let mass: f64 = out.data().iter().sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bilateral_constant_and_errors() {
        let img = ImageBuffer::filled(10, 10, 3, 0.6).unwrap();
        assert_eq!(bilateral_filter(&img, 20, 50.0, 50.0).unwrap(), img);
        assert!(matches!(bilateral_filter(&img, 5, 0.0, 50.0), Err(ModalityError::NonPositiveSigma)));
        assert!(matches!(bilateral_filter(&img, 0, 1.0, 50.0), Err(ModalityError::InvalidDiameter(0))));
    }

    /// Brute-force bilateral filter written directly from the weight formula.
    fn bilateral_oracle(img: &ImageBuffer, d: usize, sc: f64, ss: f64) -> Vec<f64> {
        let (w, h, ch) = (img.width() as isize, img.height() as isize, img.channels());
        let lo = -(((d - 1) / 2) as isize);
        let hi = (d / 2) as isize;
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut num = vec![0.0; ch];
                let mut den = 0.0;
                for dy in lo..=hi {
                    for dx in lo..=hi {
                        let sx = (x + dx).clamp(0, w - 1) as usize;
                        let sy = (y + dy).clamp(0, h - 1) as usize;
                        let mut c2 = 0.0;
                        for c in 0..ch {
                            let diff = 255.0 * img.get(sx, sy, c) - 255.0 * img.get(x as usize, y as usize, c);
                            c2 += diff * diff;
                        }
                        let wt =
                            (-((dx * dx + dy * dy) as f64) / (2.0 * ss * ss)).exp() * (-c2 / (2.0 * sc * sc)).exp();
                        den += wt;
                        for c in 0..ch {
                            num[c] += wt * img.get(sx, sy, c);
                        }
                    }
                }
                out.extend(num.iter().map(|n| n / den));
            }
        }
        out
    }

    #[test]
    fn bilateral_matches_oracle_and_preserves_steps() {
        let step = ImageBuffer::from_fn(16, 16, 1, |x, _, _| if x < 8 { 0.1 } else { 0.9 }).unwrap();
        let out = bilateral_filter(&step, 20, 50.0, 50.0).unwrap();
        let oracle = bilateral_oracle(&step, 20, 50.0, 50.0);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        let contrast = out.get(8, 8, 0) - out.get(7, 8, 0);
        assert!((contrast - 0.8).abs() < 0.008, "contrast {contrast}");

        let img = noise(12, 9, 3, 5);
        let out = bilateral_filter(&img, 5, 30.0, 3.0).unwrap();
        for (a, b) in out.data().iter().zip(bilateral_oracle(&img, 5, 30.0, 3.0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bilateral_large_color_sigma_is_spatial_gaussian() {
        let img = noise(12, 12, 1, 9);
        let out = bilateral_filter(&img, 5, 1e6, 2.0).unwrap();
        // Pure spatial weighting with replicated borders.
        for y in 0..12isize {
            for x in 0..12isize {
                let mut num = 0.0;
                let mut den = 0.0;
                for dy in -2..=2isize {
                    for dx in -2..=2isize {
                        let w = (-((dx * dx + dy * dy) as f64) / 8.0).exp();
                        num += w * img.get((x + dx).clamp(0, 11) as usize, (y + dy).clamp(0, 11) as usize, 0);
                        den += w;
                    }
                }
                assert!((out.get(x as usize, y as usize, 0) - num / den).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bilateral_stays_within_neighborhood_range() {
        let img = noise(10, 10, 1, 2);
        let out = bilateral_filter(&img, 3, 20.0, 5.0).unwrap();
        for y in 0..10isize {
            for x in 0..10isize {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let v = img.get((x + dx).clamp(0, 9) as usize, (y + dy).clamp(0, 9) as usize, 0);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                let v = out.get(x as usize, y as usize, 0);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn resize_examples() {
        let img = noise(7, 5, 3, 4);
        assert_eq!(resize(&img, 7, 5).unwrap(), img);

        let checker = ImageBuffer::new(2, 2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(resize(&checker, 1, 1).unwrap().data(), &[0.5]);

        let flat = ImageBuffer::filled(5, 3, 1, 0.25).unwrap();
        let up = resize(&flat, 17, 11).unwrap();
        assert!(up.data().iter().all(|&v| v == 0.25));
        assert!(resize(&flat, 0, 3).is_err());
    }

    #[test]
    fn box_filter_averages() {
        let p = Plane { width: 3, height: 3, channels: 1, data: (0..9).map(|v| v as f64).collect() };
        assert!((box3_plane(&p).data[4] - 4.0).abs() < 1e-15);
    }
}
