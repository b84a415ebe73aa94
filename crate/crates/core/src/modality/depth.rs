use super::filter::{resize_plane, Plane};
use super::{ImageBuffer, ModalityError};

/// Single-channel depth samples in arbitrary units, as produced by an
/// external estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDepth {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RawDepth {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, ModalityError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(ModalityError::InvalidImage(format!("{} depth values for {width}x{height}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModalityError::InvalidImage("non-finite depth value".into()));
        }
        Ok(Self { width, height, values })
    }

    fn plane(&self) -> Plane {
        Plane { width: self.width, height: self.height, channels: 1, data: self.values.clone() }
    }
}

fn conform(plane: Plane, reference: &ImageBuffer) -> ImageBuffer {
    resize_plane(&plane, reference.width(), reference.height()).normalize_min_max().into_image()
}

/// Resizes a depth map to the reference image and rescales it to [0, 1].
/// Constant maps become all zero.
pub fn validate_depth(depth: &ImageBuffer, reference: &ImageBuffer) -> Result<ImageBuffer, ModalityError> {
    if depth.channels() != 1 {
        return Err(ModalityError::NotSingleChannel(depth.channels()));
    }
    Ok(conform(Plane::from_image(depth), reference))
}

/// [`validate_depth`] for depth values outside [0, 1].
pub fn validate_raw_depth(depth: &RawDepth, reference: &ImageBuffer) -> ImageBuffer {
    conform(depth.plane(), reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_range_depth_is_unchanged() {
        let reference = ImageBuffer::filled(4, 3, 3, 0.5).unwrap();
        let depth = ImageBuffer::from_fn(4, 3, 1, |x, y, _| (x + 4 * y) as f64 / 11.0).unwrap();
        let out = validate_depth(&depth, &reference).unwrap();
        for (a, b) in out.data().iter().zip(depth.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn half_resolution_is_resized() {
        let reference = ImageBuffer::filled(16, 10, 3, 0.5).unwrap();
        let depth = ImageBuffer::from_fn(8, 5, 1, |x, _, _| x as f64 / 7.0).unwrap();
        let out = validate_depth(&depth, &reference).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (16, 10, 1));
    }

    #[test]
    fn raw_range_is_normalized() {
        let reference = ImageBuffer::filled(3, 2, 1, 0.0).unwrap();
        let values = vec![2.0, 3.5, 8.0, 5.0, 2.0, 6.5];
        let raw = RawDepth::new(3, 2, values.clone()).unwrap();
        let out = validate_raw_depth(&raw, &reference);
        for (o, v) in out.data().iter().zip(values) {
            assert!((o - (v - 2.0) / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_and_multichannel() {
        let reference = ImageBuffer::filled(3, 3, 3, 0.2).unwrap();
        let flat = ImageBuffer::filled(3, 3, 1, 0.7).unwrap();
        assert!(validate_depth(&flat, &reference).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(matches!(validate_depth(&reference, &reference), Err(ModalityError::NotSingleChannel(3))));
    }
}
