use std::path::Path;

use super::ModalityError;

/// Row-major, channel-interleaved floating point image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self, ModalityError> {
        if width == 0 || height == 0 {
            return Err(ModalityError::InvalidImage(format!("dimensions {width}x{height} must be positive")));
        }
        if channels != 1 && channels != 3 {
            return Err(ModalityError::InvalidImage(format!("{channels} channels; expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(ModalityError::InvalidImage(format!(
                "{} values for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ModalityError::InvalidImage(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds an image from values that may have drifted out of [0, 1] by
    /// rounding; they are clamped.
    pub(crate) fn from_clamped(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        for v in data.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Self { width, height, channels, data }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, ModalityError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Evaluates `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, ModalityError> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Luma (0.299 R + 0.587 G + 0.114 B); single-channel images are returned as is.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self.data.chunks_exact(3).map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]).collect();
        Self::from_clamped(self.width, self.height, 1, data)
    }

    /// Replicates a gray image into three channels.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self::from_clamped(self.width, self.height, 3, data)
    }

    pub fn with_channels(&self, channels: usize) -> ImageBuffer {
        if channels == 1 {
            self.to_gray()
        } else {
            self.to_rgb()
        }
    }

    pub fn load_png(path: &Path) -> Result<Self, ModalityError> {
        let img = image::open(path)
            .map_err(|e| ModalityError::Png { path: path.display().to_string(), reason: e.to_string() })?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let (channels, bytes) =
            if img.color().has_color() { (3, img.to_rgb8().into_raw()) } else { (1, img.to_luma8().into_raw()) };
        let data = bytes.iter().map(|&b| b as f64 / 255.0).collect();
        Self::new(width, height, channels, data)
    }

    /// Encodes as 8-bit PNG using `round(v · 255)`.
    pub fn encode_png(&self) -> Result<Vec<u8>, ModalityError> {
        use image::{ExtendedColorType, ImageEncoder};
        let bytes: Vec<u8> = self.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        let color = if self.channels == 1 { ExtendedColorType::L8 } else { ExtendedColorType::Rgb8 };
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&bytes, self.width as u32, self.height as u32, color)
            .map_err(|e| ModalityError::Png { path: "<memory>".into(), reason: e.to_string() })?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ModalityError> {
        let bytes = self.encode_png()?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }
}
