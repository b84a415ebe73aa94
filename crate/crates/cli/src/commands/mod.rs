pub mod analyze;
pub mod eval;
pub mod modality;
pub mod sweep;
pub mod synth;
pub mod train;
