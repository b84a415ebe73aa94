use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{
    accumulate_gradient, check_input, logits, Architecture, ConvBlock, InputTensor, Layer, ModelConfig,
};
use super::{ModelError, OptimizerState};
use crate::dist::{LossParams, ScoreDistribution};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AESK";
pub const CHECKPOINT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8;

/// Complete training state: architecture, parameters, freezing mask,
/// optimizer memory, epoch counter and the shuffling generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub(crate) config: ModelConfig,
    pub(crate) arch: Architecture,
    pub(crate) params: Vec<f64>,
    pub(crate) frozen: Vec<bool>,
    pub(crate) optimizer: OptimizerState,
    pub(crate) epoch: u64,
    pub(crate) rng: ChaCha8Rng,
}

impl Checkpoint {
    /// He-uniform weights (bound `√(6/fan_in)`), zero biases, nothing frozen.
    pub fn build(config: &ModelConfig) -> Result<Self, ModelError> {
        let arch = Architecture::new(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = vec![0.0; arch.param_count];
        for l in &arch.layers {
            let bound = (6.0 / l.fan_in() as f64).sqrt();
            for p in &mut params[l.offset..l.offset + l.weights] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(Self {
            config: config.clone(),
            frozen: vec![false; arch.layers.len()],
            arch,
            params,
            optimizer: OptimizerState::None,
            epoch: 0,
            rng,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.arch.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), ModelError> {
        if params.len() != self.params.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "{} parameters given, model has {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn optimizer_state(&self) -> &OptimizerState {
        &self.optimizer
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Freezes the `⌈fraction·L⌉` layers nearest the output and unfreezes the
    /// rest. `fraction` is clamped to [0, 1].
    pub fn freeze(&mut self, fraction: f64) {
        let layers = self.frozen.len();
        let fraction = if fraction.is_nan() { 0.0 } else { fraction.clamp(0.0, 1.0) };
        // The epsilon keeps products such as 0.9·10 from rounding up a layer.
        let count = ((fraction * layers as f64) - 1e-9).ceil().max(0.0) as usize;
        let first_frozen = layers - count.min(layers);
        for (i, f) in self.frozen.iter_mut().enumerate() {
            *f = i >= first_frozen;
        }
    }

    pub fn forward(&self, batch: &[InputTensor]) -> Result<Vec<ScoreDistribution>, ModelError> {
        batch
            .iter()
            .map(|x| {
                check_input(&self.config, x)?;
                Ok(ScoreDistribution::softmax(&logits(&self.arch, &self.params, x)))
            })
            .collect()
    }

    /// Mean gradient and mean combined loss over the batch. Samples are
    /// accumulated in batch order.
    pub fn backward(
        &self,
        batch: &[InputTensor],
        gt: &[ScoreDistribution],
        loss: &LossParams,
    ) -> Result<(Vec<f64>, f64), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        if batch.len() != gt.len() {
            return Err(ModelError::ShapeMismatch(format!("{} inputs but {} targets", batch.len(), gt.len())));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        for (x, g) in batch.iter().zip(gt) {
            check_input(&self.config, x)?;
            total += accumulate_gradient(&self.arch, &self.params, &self.frozen, x, g, loss, &mut grad)?;
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|v| *v /= n);
        Ok((grad, total / n))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        let c = &self.config;
        w.u64(c.input_size as u64);
        w.u64(c.input_channels as u64);
        w.u64(c.conv_blocks.len() as u64);
        for b in &c.conv_blocks {
            w.u64(b.filters as u64);
            w.u64(b.kernel as u64);
            w.u8(b.pool as u8);
        }
        w.u64(c.dense_widths.len() as u64);
        for &d in &c.dense_widths {
            w.u64(d as u64);
        }
        w.u64(c.seed);
        w.u64(self.epoch);
        w.f64s(&self.params);
        w.u64(self.frozen.len() as u64);
        for &f in &self.frozen {
            w.u8(f as u8);
        }
        match &self.optimizer {
            OptimizerState::None => w.u8(0),
            OptimizerState::Sgd { velocity } => {
                w.u8(1);
                w.f64s(velocity);
            }
            OptimizerState::Adam { step, m, v } => {
                w.u8(2);
                w.u64(*step);
                w.f64s(m);
                w.f64s(v);
            }
        }
        w.0.extend_from_slice(&self.rng.get_seed());
        w.u64(self.rng.get_stream());
        w.0.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        let payload = w.0;

        let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let corrupt = |msg: String| ModelError::CorruptCheckpoint(msg);
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt(format!("file is only {} bytes", bytes.len())));
        }
        if &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(corrupt("bad magic bytes".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CHECKPOINT_VERSION {
            return Err(corrupt(format!("format version {version}, this build reads version {CHECKPOINT_VERSION}")));
        }
        let declared = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        let actual = (bytes.len() - HEADER_LEN - 4) as u64;
        if declared != actual {
            return Err(corrupt(format!("payload length {declared} declared, {actual} present")));
        }
        let body = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body..].try_into().unwrap());
        if crc32fast::hash(&bytes[..body]) != stored {
            return Err(corrupt("checksum mismatch".into()));
        }

        let mut r = Reader { buf: &bytes[HEADER_LEN..body], pos: 0 };
        let input_size = r.usize()?;
        let input_channels = r.usize()?;
        let blocks = r.len(17)?;
        let mut conv_blocks = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            conv_blocks.push(ConvBlock { filters: r.usize()?, kernel: r.usize()?, pool: r.flag()? });
        }
        let dense = r.len(8)?;
        let dense_widths = (0..dense).map(|_| r.usize()).collect::<Result<_, _>>()?;
        let config = ModelConfig { input_size, input_channels, conv_blocks, dense_widths, seed: r.u64()? };
        let arch = Architecture::new(&config).map_err(|e| corrupt(format!("stored config: {e}")))?;
        let epoch = r.u64()?;
        let params = r.f64s()?;
        if params.len() != arch.param_count {
            return Err(corrupt(format!(
                "{} parameters stored, architecture needs {}",
                params.len(),
                arch.param_count
            )));
        }
        let layers = r.len(1)?;
        if layers != arch.layers.len() {
            return Err(corrupt(format!("frozen mask has {layers} entries for {} layers", arch.layers.len())));
        }
        let frozen = (0..layers).map(|_| r.flag()).collect::<Result<_, _>>()?;
        let n = params.len();
        let optimizer = match r.u8()? {
            0 => OptimizerState::None,
            1 => OptimizerState::Sgd { velocity: r.f64s_exact(n)? },
            2 => OptimizerState::Adam { step: r.u64()?, m: r.f64s_exact(n)?, v: r.f64s_exact(n)? },
            t => return Err(corrupt(format!("unknown optimizer tag {t}"))),
        };
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        if r.pos != r.buf.len() {
            return Err(corrupt(format!("{} trailing bytes", r.buf.len() - r.pos)));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(Self { config, arch, params, frozen, optimizer, epoch, rng })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, values: &[f64]) {
        self.u64(values.len() as u64);
        for v in values {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.buf.len() - self.pos < n {
            return Err(ModelError::CorruptCheckpoint("payload ends early".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool, ModelError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(ModelError::CorruptCheckpoint(format!("invalid flag byte {b}"))),
        }
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, ModelError> {
        usize::try_from(self.u64()?).map_err(|_| ModelError::CorruptCheckpoint("size out of range".into()))
    }

    /// Element count whose elements occupy at least `unit` bytes each.
    fn len(&mut self, unit: usize) -> Result<usize, ModelError> {
        let n = self.usize()?;
        if n.saturating_mul(unit) > self.buf.len() - self.pos {
            return Err(ModelError::CorruptCheckpoint(format!("count {n} exceeds payload")));
        }
        Ok(n)
    }

    fn f64s(&mut self) -> Result<Vec<f64>, ModelError> {
        let n = self.len(8)?;
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn f64s_exact(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        let v = self.f64s()?;
        if v.len() != n {
            return Err(ModelError::CorruptCheckpoint(format!(
                "optimizer state has {} entries for {n} parameters",
                v.len()
            )));
        }
        Ok(v)
    }
}
