//! Layer geometry, forward pass and manual backpropagation.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dist::{loss_gradient, LossParams, ScoreDistribution, BINS};
use crate::modality::ImageBuffer;

/// One convolution block: same-padded conv, ReLU, optional 2×2 max pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel: usize,
    pub pool: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Side of the square input image.
    pub input_size: usize,
    pub input_channels: usize,
    pub conv_blocks: Vec<ConvBlock>,
    /// Hidden dense widths. The 10-way softmax output layer is implicit.
    pub dense_widths: Vec<usize>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_size: 64,
            input_channels: 3,
            conv_blocks: vec![
                ConvBlock { filters: 8, kernel: 3, pool: true },
                ConvBlock { filters: 16, kernel: 3, pool: true },
            ],
            dense_widths: vec![32],
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// 8×8 RGB input, four 3×3 filters with pooling, one 8-unit dense layer.
    pub fn micro() -> Self {
        Self {
            input_size: 8,
            input_channels: 3,
            conv_blocks: vec![ConvBlock { filters: 4, kernel: 3, pool: true }],
            dense_widths: vec![8],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Dense,
}

/// A parameterized layer and its slice of the flat parameter vector
/// (weights first, then biases).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    pub offset: usize,
    pub weights: usize,
    pub biases: usize,
    /// Input channels (conv) or input width (dense).
    pub inputs: usize,
    /// Filters (conv) or units (dense).
    pub outputs: usize,
    pub kernel: usize,
    /// Spatial side of the conv input; 1 for dense layers.
    pub size: usize,
    pub pool: bool,
    pub relu: bool,
}

impl Layer {
    pub fn len(&self) -> usize {
        self.weights + self.biases
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn fan_in(&self) -> usize {
        self.inputs * self.kernel * self.kernel
    }

    fn out_size(&self) -> usize {
        if self.pool {
            self.size / 2
        } else {
            self.size
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub layers: Vec<Layer>,
    pub param_count: usize,
}

impl Architecture {
    pub fn new(config: &ModelConfig) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidArchitecture(msg));
        if config.input_size == 0 {
            return bad("input_size must be positive".into());
        }
        if !matches!(config.input_channels, 1 | 3) {
            return bad(format!("input_channels must be 1 or 3, got {}", config.input_channels));
        }
        if config.conv_blocks.is_empty() {
            return bad("at least one conv block is required".into());
        }
        if config.dense_widths.is_empty() {
            return bad("at least one dense layer is required".into());
        }

        let mut layers = Vec::new();
        let mut offset = 0;
        let mut channels = config.input_channels;
        let mut size = config.input_size;
        for (i, block) in config.conv_blocks.iter().enumerate() {
            if block.filters == 0 {
                return bad(format!("conv block {i} has no filters"));
            }
            if block.kernel == 0 || block.kernel % 2 == 0 {
                return bad(format!("conv block {i} kernel {} must be odd", block.kernel));
            }
            if block.pool && size < 2 {
                return bad(format!("conv block {i} pools a {size}x{size} map below 1x1"));
            }
            let layer = Layer {
                kind: LayerKind::Conv,
                offset,
                weights: block.filters * channels * block.kernel * block.kernel,
                biases: block.filters,
                inputs: channels,
                outputs: block.filters,
                kernel: block.kernel,
                size,
                pool: block.pool,
                relu: true,
            };
            offset += layer.len();
            size = layer.out_size();
            channels = block.filters;
            layers.push(layer);
        }

        let mut width = channels * size * size;
        let widths = config.dense_widths.iter().copied().chain(std::iter::once(BINS));
        let last = config.dense_widths.len();
        for (i, units) in widths.enumerate() {
            if units == 0 {
                return bad(format!("dense layer {i} has no units"));
            }
            let layer = Layer {
                kind: LayerKind::Dense,
                offset,
                weights: units * width,
                biases: units,
                inputs: width,
                outputs: units,
                kernel: 1,
                size: 1,
                pool: false,
                relu: i < last,
            };
            offset += layer.len();
            width = units;
            layers.push(layer);
        }
        Ok(Self { layers, param_count: offset })
    }
}

/// Channel-major (C×H×W) network input.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl InputTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != channels * height * width {
            return Err(ModelError::ShapeMismatch(format!("{} values for {channels}x{height}x{width}", data.len())));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn from_image(img: &ImageBuffer) -> Self {
        let (w, h, c) = (img.width(), img.height(), img.channels());
        let src = img.data();
        let mut data = vec![0.0; w * h * c];
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    data[(ch * h + y) * w + x] = src[(y * w + x) * c + ch];
                }
            }
        }
        Self { channels: c, height: h, width: w, data }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub(crate) fn check_input(config: &ModelConfig, input: &InputTensor) -> Result<(), ModelError> {
    let n = config.input_size;
    if input.channels != config.input_channels || input.height != n || input.width != n {
        return Err(ModelError::ShapeMismatch(format!(
            "input is {}x{}x{}, model expects {}x{n}x{n}",
            input.channels, input.height, input.width, config.input_channels
        )));
    }
    Ok(())
}

/// Activations kept for the backward pass.
struct LayerTrace {
    input: Vec<f64>,
    pre: Vec<f64>,
    pool_from: Vec<usize>,
}

fn conv_forward(l: &Layer, p: &[f64], x: &[f64]) -> LayerTrace {
    let (cin, f_out, k, s) = (l.inputs, l.outputs, l.kernel, l.size);
    let pad = k / 2;
    let w = &p[l.offset..l.offset + l.weights];
    let b = &p[l.offset + l.weights..l.offset + l.len()];
    let mut pre = vec![0.0; f_out * s * s];
    for f in 0..f_out {
        let out = &mut pre[f * s * s..(f + 1) * s * s];
        out.iter_mut().for_each(|v| *v = b[f]);
        for c in 0..cin {
            let plane = &x[c * s * s..(c + 1) * s * s];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((f * cin + c) * k + ky) * k + kx];
                    let (y0, y1) = valid_span(ky, pad, s);
                    let (x0, x1) = valid_span(kx, pad, s);
                    for y in y0..y1 {
                        let iy = y + ky - pad;
                        let row_in = &plane[iy * s..(iy + 1) * s];
                        let row_out = &mut out[y * s..(y + 1) * s];
                        for xo in x0..x1 {
                            row_out[xo] += wv * row_in[xo + kx - pad];
                        }
                    }
                }
            }
        }
    }
    LayerTrace { input: x.to_vec(), pre, pool_from: Vec::new() }
}

/// Output positions `o` for which `o + tap - pad` lies inside `[0, s)`.
fn valid_span(tap: usize, pad: usize, s: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(tap);
    let hi = (s + pad).saturating_sub(tap).min(s);
    (lo, hi.max(lo))
}

/// ReLU then optional 2×2 max pool; records which pre-pool cell won.
fn conv_activate(l: &Layer, trace: &mut LayerTrace) -> Vec<f64> {
    let act: Vec<f64> = trace.pre.iter().map(|&v| v.max(0.0)).collect();
    if !l.pool {
        return act;
    }
    let (s, o) = (l.size, l.out_size());
    let mut out = vec![0.0; l.outputs * o * o];
    let mut from = vec![0; out.len()];
    for f in 0..l.outputs {
        for oy in 0..o {
            for ox in 0..o {
                let mut best_i = f * s * s + 2 * oy * s + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = f * s * s + (2 * oy + dy) * s + 2 * ox + dx;
                    if act[i] > act[best_i] {
                        best_i = i;
                    }
                }
                let j = (f * o + oy) * o + ox;
                out[j] = act[best_i];
                from[j] = best_i;
            }
        }
    }
    trace.pool_from = from;
    out
}

fn dense_forward(l: &Layer, p: &[f64], x: &[f64]) -> LayerTrace {
    let w = &p[l.offset..l.offset + l.weights];
    let b = &p[l.offset + l.weights..l.offset + l.len()];
    let pre = (0..l.outputs)
        .map(|o| {
            let row = &w[o * l.inputs..(o + 1) * l.inputs];
            b[o] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
        })
        .collect();
    LayerTrace { input: x.to_vec(), pre, pool_from: Vec::new() }
}

fn run(arch: &Architecture, params: &[f64], input: &InputTensor) -> (Vec<LayerTrace>, [f64; BINS]) {
    let mut traces = Vec::with_capacity(arch.layers.len());
    let mut x = input.data.clone();
    for l in &arch.layers {
        let mut t = match l.kind {
            LayerKind::Conv => conv_forward(l, params, &x),
            LayerKind::Dense => dense_forward(l, params, &x),
        };
        x = match l.kind {
            LayerKind::Conv => conv_activate(l, &mut t),
            LayerKind::Dense if l.relu => t.pre.iter().map(|&v| v.max(0.0)).collect(),
            LayerKind::Dense => t.pre.clone(),
        };
        traces.push(t);
    }
    let mut logits = [0.0; BINS];
    logits.copy_from_slice(&x);
    (traces, logits)
}

pub(crate) fn logits(arch: &Architecture, params: &[f64], input: &InputTensor) -> [f64; BINS] {
    run(arch, params, input).1
}

/// Adds this sample's parameter gradient into `grad` (frozen layers are
/// left untouched) and returns the sample loss.
pub(crate) fn accumulate_gradient(
    arch: &Architecture,
    params: &[f64],
    frozen: &[bool],
    input: &InputTensor,
    gt: &ScoreDistribution,
    loss: &LossParams,
    grad: &mut [f64],
) -> Result<f64, ModelError> {
    let (traces, logits) = run(arch, params, input);
    let (g_logits, value) = loss_gradient(gt, &logits, loss)?;
    let Some(lowest) = frozen.iter().position(|&f| !f) else {
        return Ok(value);
    };

    let mut g_out = g_logits.to_vec();
    for (idx, (l, t)) in arch.layers.iter().zip(&traces).enumerate().rev() {
        let trainable = !frozen[idx];
        let need_input = idx > lowest;
        if !trainable && !need_input {
            continue;
        }
        g_out = match l.kind {
            LayerKind::Dense => dense_backward(l, params, t, &g_out, trainable.then_some(&mut *grad), need_input),
            LayerKind::Conv => conv_backward(l, params, t, &g_out, trainable.then_some(&mut *grad), need_input),
        };
        if !need_input {
            break;
        }
    }
    Ok(value)
}

fn dense_backward(
    l: &Layer,
    p: &[f64],
    t: &LayerTrace,
    g_out: &[f64],
    grad: Option<&mut [f64]>,
    need_input: bool,
) -> Vec<f64> {
    let g_pre: Vec<f64> = if l.relu {
        g_out.iter().zip(&t.pre).map(|(g, &z)| if z > 0.0 { *g } else { 0.0 }).collect()
    } else {
        g_out.to_vec()
    };
    if let Some(grad) = grad {
        for o in 0..l.outputs {
            let row = &mut grad[l.offset + o * l.inputs..l.offset + (o + 1) * l.inputs];
            for (gw, x) in row.iter_mut().zip(&t.input) {
                *gw += g_pre[o] * x;
            }
            grad[l.offset + l.weights + o] += g_pre[o];
        }
    }
    if !need_input {
        return Vec::new();
    }
    let w = &p[l.offset..l.offset + l.weights];
    let mut g_in = vec![0.0; l.inputs];
    for o in 0..l.outputs {
        let row = &w[o * l.inputs..(o + 1) * l.inputs];
        for (gi, wv) in g_in.iter_mut().zip(row) {
            *gi += g_pre[o] * wv;
        }
    }
    g_in
}

fn conv_backward(
    l: &Layer,
    p: &[f64],
    t: &LayerTrace,
    g_out: &[f64],
    grad: Option<&mut [f64]>,
    need_input: bool,
) -> Vec<f64> {
    let (cin, f_out, k, s) = (l.inputs, l.outputs, l.kernel, l.size);
    let pad = k / 2;
    let mut g_pre = vec![0.0; f_out * s * s];
    if l.pool {
        for (g, &i) in g_out.iter().zip(&t.pool_from) {
            g_pre[i] += g;
        }
    } else {
        g_pre.copy_from_slice(g_out);
    }
    for (g, &z) in g_pre.iter_mut().zip(&t.pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }

    if let Some(grad) = grad {
        for f in 0..f_out {
            let gp = &g_pre[f * s * s..(f + 1) * s * s];
            for c in 0..cin {
                let plane = &t.input[c * s * s..(c + 1) * s * s];
                for ky in 0..k {
                    for kx in 0..k {
                        let (y0, y1) = valid_span(ky, pad, s);
                        let (x0, x1) = valid_span(kx, pad, s);
                        let mut acc = 0.0;
                        for y in y0..y1 {
                            let iy = y + ky - pad;
                            for x in x0..x1 {
                                acc += gp[y * s + x] * plane[iy * s + x + kx - pad];
                            }
                        }
                        grad[l.offset + ((f * cin + c) * k + ky) * k + kx] += acc;
                    }
                }
            }
            grad[l.offset + l.weights + f] += gp.iter().sum::<f64>();
        }
    }
    if !need_input {
        return Vec::new();
    }
    let w = &p[l.offset..l.offset + l.weights];
    let mut g_in = vec![0.0; cin * s * s];
    for f in 0..f_out {
        let gp = &g_pre[f * s * s..(f + 1) * s * s];
        for c in 0..cin {
            let plane = &mut g_in[c * s * s..(c + 1) * s * s];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((f * cin + c) * k + ky) * k + kx];
                    let (y0, y1) = valid_span(ky, pad, s);
                    let (x0, x1) = valid_span(kx, pad, s);
                    for y in y0..y1 {
                        let iy = y + ky - pad;
                        for x in x0..x1 {
                            plane[iy * s + x + kx - pad] += wv * gp[y * s + x];
                        }
                    }
                }
            }
        }
    }
    g_in
}
