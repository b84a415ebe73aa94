//! Deterministic image transforms producing the blur and saliency modalities,
//! plus ingestion of externally estimated depth maps.

mod buffer;
mod depth;
mod filter;
mod manifest;
mod saliency;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::buffer::ImageBuffer;
pub use self::depth::{validate_depth, validate_raw_depth, RawDepth};
pub use self::filter::{bilateral_filter, gaussian_blur, gaussian_kernel, gaussian_sigma, resize};
pub use self::manifest::{parse_manifest, read_manifest, ManifestEntry};
pub use self::saliency::{spectral_residual_saliency, LOG_AMPLITUDE_FLOOR, PHASE_FLOOR, WORKING_SIZE};

#[derive(Debug, Error)]
pub enum ModalityError {
    #[error("kernel size {0} must be odd and positive")]
    EvenKernel(usize),
    #[error("image is {width}x{height}; at least {min}x{min} is required")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("bilateral sigmas must be positive")]
    NonPositiveSigma,
    #[error("bilateral diameter must be at least 1 (got {0})")]
    InvalidDiameter(usize),
    #[error("depth map must be single-channel (got {0} channels)")]
    NotSingleChannel(usize),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("unknown modality {0:?}")]
    UnknownModality(String),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("{path}: {reason}")]
    Png { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Image modality. Declaration order is the fixed tie-breaking order used by
/// the analyses: RGB, Depth, Blur, Saliency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityKind {
    Rgb,
    Depth,
    Blur,
    Saliency,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 4] = [Self::Rgb, Self::Depth, Self::Blur, Self::Saliency];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rgb => "rgb",
            Self::Depth => "depth",
            Self::Blur => "blur",
            Self::Saliency => "saliency",
        }
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModalityKind {
    type Err = ModalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rgb" => Ok(Self::Rgb),
            "depth" => Ok(Self::Depth),
            "blur" => Ok(Self::Blur),
            "saliency" => Ok(Self::Saliency),
            _ => Err(ModalityError::UnknownModality(s.to_string())),
        }
    }
}

pub const BLUR_FIRST_KERNEL: usize = 9;
pub const BLUR_BILATERAL_DIAMETER: usize = 20;
pub const BLUR_BILATERAL_SIGMA: f64 = 50.0;
pub const BLUR_THUMBNAIL: usize = 32;
pub const BLUR_SECOND_KERNEL: usize = 3;

/// Color-only rendition of an image: 9×9 Gaussian, bilateral filter
/// (d = 20, σ = 50), down to 32×32, 3×3 Gaussian, back up to the input size.
/// Channels are processed independently except in the bilateral color distance.
pub fn blur_modality(img: &ImageBuffer) -> Result<ImageBuffer, ModalityError> {
    let min = BLUR_FIRST_KERNEL;
    if img.width() < min || img.height() < min {
        return Err(ModalityError::ImageTooSmall { width: img.width(), height: img.height(), min });
    }
    let x = gaussian_blur(img, BLUR_FIRST_KERNEL)?;
    let x = bilateral_filter(&x, BLUR_BILATERAL_DIAMETER, BLUR_BILATERAL_SIGMA, BLUR_BILATERAL_SIGMA)?;
    let x = resize(&x, BLUR_THUMBNAIL, BLUR_THUMBNAIL)?;
    let x = gaussian_blur(&x, BLUR_SECOND_KERNEL)?;
    resize(&x, img.width(), img.height())
}

/// Applies one modality transform. RGB passes through; depth inputs are
/// reduced to one channel and min-max normalized at their own resolution.
pub fn apply(kind: ModalityKind, img: &ImageBuffer) -> Result<ImageBuffer, ModalityError> {
    match kind {
        ModalityKind::Rgb => Ok(img.clone()),
        ModalityKind::Blur => blur_modality(img),
        ModalityKind::Saliency => spectral_residual_saliency(img),
        ModalityKind::Depth => {
            let gray = img.to_gray();
            validate_depth(&gray, &gray)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_keeps_constants_and_size() {
        let img = ImageBuffer::filled(40, 23, 3, 0.62).unwrap();
        let out = blur_modality(&img).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn blur_rejects_small_images() {
        let img = ImageBuffer::filled(8, 40, 3, 0.5).unwrap();
        assert!(matches!(blur_modality(&img), Err(ModalityError::ImageTooSmall { min: 9, .. })));
    }

    #[test]
    fn blur_is_deterministic() {
        let img = ImageBuffer::from_fn(24, 20, 3, |x, y, c| ((x * 3 + y * 5 + c) % 11) as f64 / 10.0).unwrap();
        let a = blur_modality(&img).unwrap();
        let b = blur_modality(&img).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!((a.width(), a.height()), (24, 20));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModalityKind::ALL {
            assert_eq!(k.name().parse::<ModalityKind>().unwrap(), k);
        }
        assert!("thermal".parse::<ModalityKind>().is_err());
        assert!(ModalityKind::Rgb < ModalityKind::Depth && ModalityKind::Blur < ModalityKind::Saliency);
    }
}
