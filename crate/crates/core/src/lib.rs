//! Modality-decomposed aesthetic assessment: ten-bin score distributions and
//! their weighted EMD loss, image modalities, a small trainable distribution
//! predictor, evaluation metrics and cross-modality analyses.

pub mod analysis;
pub mod data;
pub mod dist;
pub mod metrics;
pub mod modality;
pub mod model;
