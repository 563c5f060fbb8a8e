//! Feedforward networks treated as black boxes: a layer list, one flat
//! parameter vector, forward inference, MSE cost and accuracy.
//!
//! Parameter layout is layer order; within a layer all weights come first
//! (row-major, output index outermost) followed by the biases.
//!
//! * dense: `weights[out][in]`, then `bias[out]`
//! * conv3x3: `weights[out_ch][in_ch][ky][kx]`, then `bias[out_ch]`

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{MgdError, Result};

/// Tensor shape, channels first. Flat vectors are `(len, 1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn flat(len: usize) -> Self {
        Shape {
            channels: len,
            height: 1,
            width: 1,
        }
    }

    pub const fn image(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn is_flat(&self) -> bool {
        self.height == 1 && self.width == 1
    }
}

/// Per-neuron generalized logistic `alpha / (1 + exp(-beta (a - offset))) + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub alpha: f64,
    pub beta: f64,
    pub offset: f64,
    pub shift: f64,
}

impl LogisticParams {
    pub const IDEAL: LogisticParams = LogisticParams {
        alpha: 1.0,
        beta: 1.0,
        offset: 0.0,
        shift: 0.0,
    };

    #[inline]
    pub fn eval(&self, a: f64) -> f64 {
        self.alpha * sigmoid(self.beta * (a - self.offset)) + self.shift
    }

    /// Derivative with respect to the pre-activation.
    #[inline]
    pub fn derivative(&self, a: f64) -> f64 {
        let s = sigmoid(self.beta * (a - self.offset));
        self.alpha * self.beta * s * (1.0 - s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Sigmoid,
    Relu,
    Linear,
    /// One set of logistic parameters per output neuron of the layer.
    DefectLogistic(Vec<LogisticParams>),
}

impl Activation {
    #[inline]
    pub(crate) fn apply(&self, neuron: usize, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(a),
            Activation::Relu => a.max(0.0),
            Activation::Linear => a,
            Activation::DefectLogistic(p) => p[neuron].eval(a),
        }
    }

    /// Derivative at pre-activation `a`; relu uses 0 at the kink.
    #[inline]
    pub(crate) fn derivative(&self, neuron: usize, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(a);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::DefectLogistic(p) => p[neuron].derivative(a),
        }
    }

    pub(crate) fn is_sigmoid(&self) -> bool {
        matches!(self, Activation::Sigmoid)
    }
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    /// 3x3 valid convolution, stride 1, relu output.
    Conv3x3 {
        in_channels: usize,
        out_channels: usize,
    },
    /// Non-overlapping 2x2 max pooling; odd trailing rows/columns are dropped.
    MaxPool2x2,
    Flatten,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            inputs,
            outputs,
            activation,
        }
    }

    pub fn conv3x3(in_channels: usize, out_channels: usize) -> Self {
        LayerSpec::Conv3x3 {
            in_channels,
            out_channels,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => inputs * outputs + outputs,
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
            } => 9 * in_channels * out_channels + out_channels,
            LayerSpec::MaxPool2x2 | LayerSpec::Flatten => 0,
        }
    }

    fn output_shape(&self, input: Shape, index: usize) -> Result<Shape> {
        match *self {
            LayerSpec::Dense {
                inputs,
                outputs,
                ref activation,
            } => {
                if !input.is_flat() || input.channels != inputs {
                    return Err(MgdError::Shape(format!(
                        "layer {index}: dense expects flat input of {inputs}, got {input:?}"
                    )));
                }
                if let Activation::DefectLogistic(p) = activation {
                    if p.len() != outputs {
                        return Err(MgdError::Shape(format!(
                            "layer {index}: {} logistic parameter sets for {outputs} neurons",
                            p.len()
                        )));
                    }
                }
                Ok(Shape::flat(outputs))
            }
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
            } => {
                if input.channels != in_channels || input.height < 3 || input.width < 3 {
                    return Err(MgdError::Shape(format!(
                        "layer {index}: conv3x3 expects {in_channels} channels of at least 3x3, got {input:?}"
                    )));
                }
                Ok(Shape::image(out_channels, input.height - 2, input.width - 2))
            }
            LayerSpec::MaxPool2x2 => {
                if input.height < 2 || input.width < 2 {
                    return Err(MgdError::Shape(format!(
                        "layer {index}: maxpool2x2 on {input:?}"
                    )));
                }
                Ok(Shape::image(input.channels, input.height / 2, input.width / 2))
            }
            LayerSpec::Flatten => Ok(Shape::flat(input.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerPlan {
    pub input: Shape,
    pub output: Shape,
    pub param_offset: usize,
}

/// A validated layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
    input_shape: Shape,
    plan: Vec<LayerPlan>,
    param_count: usize,
}

impl NetworkSpec {
    pub fn new(input_shape: Shape, layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(MgdError::Shape("network has no layers".into()));
        }
        let mut plan = Vec::with_capacity(layers.len());
        let mut shape = input_shape;
        let mut offset = 0;
        for (i, layer) in layers.iter().enumerate() {
            let output = layer.output_shape(shape, i)?;
            plan.push(LayerPlan {
                input: shape,
                output,
                param_offset: offset,
            });
            offset += layer.param_count();
            shape = output;
        }
        if !shape.is_flat() {
            return Err(MgdError::Shape(format!(
                "network output must be flat, got {shape:?}"
            )));
        }
        Ok(NetworkSpec {
            layers,
            input_shape,
            plan,
            param_count: offset,
        })
    }

    /// Fully connected stack with one activation everywhere, e.g. `[2, 2, 1]`.
    pub fn dense(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(MgdError::Shape(
                "dense network needs at least input and output sizes".into(),
            ));
        }
        let layers = sizes
            .windows(2)
            .map(|w| LayerSpec::dense(w[0], w[1], activation.clone()))
            .collect();
        NetworkSpec::new(Shape::flat(sizes[0]), layers)
    }

    /// Two conv+pool stages (1→16→32 channels) and a linear readout, for 28x28 images.
    pub fn fashion_cnn() -> Self {
        NetworkSpec::new(
            Shape::image(1, 28, 28),
            vec![
                LayerSpec::conv3x3(1, 16),
                LayerSpec::MaxPool2x2,
                LayerSpec::conv3x3(16, 32),
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::dense(32 * 5 * 5, 10, Activation::Linear),
            ],
        )
        .expect("static architecture")
    }

    /// Three conv+pool stages (3→16→32→64 channels) and a 256→10 linear readout.
    pub fn cifar_cnn() -> Self {
        NetworkSpec::new(
            Shape::image(3, 32, 32),
            vec![
                LayerSpec::conv3x3(3, 16),
                LayerSpec::MaxPool2x2,
                LayerSpec::conv3x3(16, 32),
                LayerSpec::MaxPool2x2,
                LayerSpec::conv3x3(32, 64),
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::dense(256, 10, Activation::Linear),
            ],
        )
        .expect("static architecture")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub(crate) fn plan(&self) -> &[LayerPlan] {
        &self.plan
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn output_size(&self) -> usize {
        self.plan.last().map(|p| p.output.len()).unwrap_or(0)
    }

    /// Total parameter count P.
    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Number of neurons in sigmoid-activated dense layers, in layer order.
    pub fn sigmoid_neuron_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                LayerSpec::Dense {
                    outputs,
                    activation,
                    ..
                } if activation.is_sigmoid() => *outputs,
                _ => 0,
            })
            .sum()
    }

    /// Replaces every sigmoid dense layer's activation with per-neuron
    /// logistics taken in order from `params`.
    pub fn with_logistic_defects(&self, params: &[LogisticParams]) -> Result<Self> {
        if params.len() != self.sigmoid_neuron_count() {
            return Err(MgdError::Length {
                expected: self.sigmoid_neuron_count(),
                actual: params.len(),
            });
        }
        let mut next = 0;
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                LayerSpec::Dense {
                    inputs,
                    outputs,
                    activation,
                } if activation.is_sigmoid() => {
                    let p = params[next..next + outputs].to_vec();
                    next += outputs;
                    LayerSpec::dense(*inputs, *outputs, Activation::DefectLogistic(p))
                }
                other => other.clone(),
            })
            .collect();
        NetworkSpec::new(self.input_shape, layers)
    }

    fn check_io(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(MgdError::Length {
                expected: self.param_count,
                actual: params.len(),
            });
        }
        if x.len() != self.input_shape.len() {
            return Err(MgdError::Shape(format!(
                "input has {} values, network expects {:?}",
                x.len(),
                self.input_shape
            )));
        }
        Ok(())
    }

    /// Forward inference `f(x; θ)`.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Scratch::default();
        Ok(self.forward_with(params, x, &mut scratch)?.to_vec())
    }

    /// Forward inference reusing `scratch` buffers; returns the output slice.
    pub fn forward_with<'s>(
        &self,
        params: &[f64],
        x: &[f64],
        scratch: &'s mut Scratch,
    ) -> Result<&'s [f64]> {
        self.check_io(params, x)?;
        let Scratch { a, b } = scratch;
        a.clear();
        a.extend_from_slice(x);
        for (layer, plan) in self.layers.iter().zip(&self.plan) {
            let w = &params[plan.param_offset..plan.param_offset + layer.param_count()];
            b.clear();
            b.resize(plan.output.len(), 0.0);
            layer_forward(layer, plan, w, a, b, None);
            std::mem::swap(a, b);
        }
        Ok(&scratch.a[..])
    }

    /// Mean MSE over every sample of `data`.
    pub fn dataset_cost(&self, params: &[f64], data: &Dataset) -> Result<f64> {
        let mut scratch = Scratch::default();
        let mut total = 0.0;
        for i in 0..data.len() {
            let (x, t) = data.sample(i);
            let y = self.forward_with(params, x, &mut scratch)?;
            total += cost_mse(y, t)?;
        }
        Ok(total / data.len() as f64)
    }
}

/// Ping-pong activation buffers for allocation-free inference.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Evaluates one layer. When `pre` is given, pre-activations are stored there
/// (dense/conv) or, for max pooling, the flat index of each selected input.
pub(crate) fn layer_forward(
    layer: &LayerSpec,
    plan: &LayerPlan,
    w: &[f64],
    input: &[f64],
    out: &mut [f64],
    mut pre: Option<&mut Vec<f64>>,
) {
    if let Some(p) = pre.as_deref_mut() {
        p.clear();
    }
    match layer {
        LayerSpec::Dense {
            inputs,
            outputs,
            activation,
        } => {
            let (weights, bias) = w.split_at(inputs * outputs);
            for o in 0..*outputs {
                let row = &weights[o * inputs..(o + 1) * inputs];
                let z = bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                if let Some(p) = pre.as_deref_mut() {
                    p.push(z);
                }
                out[o] = activation.apply(o, z);
            }
        }
        LayerSpec::Conv3x3 {
            in_channels,
            out_channels,
        } => {
            let (weights, bias) = w.split_at(9 * in_channels * out_channels);
            let (ih, iw) = (plan.input.height, plan.input.width);
            let (oh, ow) = (plan.output.height, plan.output.width);
            for oc in 0..*out_channels {
                let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
                plane.fill(bias[oc]);
                for ic in 0..*in_channels {
                    let k = &weights[(oc * in_channels + ic) * 9..(oc * in_channels + ic) * 9 + 9];
                    let src = &input[ic * ih * iw..(ic + 1) * ih * iw];
                    for y in 0..oh {
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for ky in 0..3 {
                            let srow = &src[(y + ky) * iw..(y + ky) * iw + iw];
                            let (k0, k1, k2) = (k[ky * 3], k[ky * 3 + 1], k[ky * 3 + 2]);
                            for (x, d) in dst.iter_mut().enumerate() {
                                *d += k0 * srow[x] + k1 * srow[x + 1] + k2 * srow[x + 2];
                            }
                        }
                    }
                }
                if let Some(p) = pre.as_deref_mut() {
                    p.extend_from_slice(plane);
                }
                for v in plane.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        LayerSpec::MaxPool2x2 => {
            let (ih, iw) = (plan.input.height, plan.input.width);
            let (oh, ow) = (plan.output.height, plan.output.width);
            for c in 0..plan.input.channels {
                for y in 0..oh {
                    for x in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0;
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let idx = c * ih * iw + (2 * y + dy) * iw + 2 * x + dx;
                                if input[idx] > best {
                                    best = input[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out[c * oh * ow + y * ow + x] = best;
                        if let Some(p) = pre.as_deref_mut() {
                            p.push(best_idx as f64);
                        }
                    }
                }
            }
        }
        LayerSpec::Flatten => out.copy_from_slice(input),
    }
}

/// Mean squared error `(1/n) Σ (y - ŷ)²`.
pub fn cost_mse(y: &[f64], target: &[f64]) -> Result<f64> {
    if y.len() != target.len() {
        return Err(MgdError::Length {
            expected: target.len(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Whether a single prediction counts as correct: argmax match for vector
/// outputs, agreement about the 0.5 threshold for scalar outputs.
pub fn prediction_correct(y: &[f64], target: &[f64]) -> bool {
    if y.len() == 1 {
        (y[0] >= 0.5) == (target[0] >= 0.5)
    } else {
        argmax(y) == argmax(target)
    }
}

/// Fraction of samples classified correctly.
pub fn accuracy(spec: &NetworkSpec, params: &[f64], data: &Dataset) -> Result<f64> {
    let mut scratch = Scratch::default();
    let mut correct = 0usize;
    for i in 0..data.len() {
        let (x, t) = data.sample(i);
        let y = spec.forward_with(params, x, &mut scratch)?;
        if prediction_correct(y, t) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Flat parameter vector θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order-sensitive digest of the exact bit patterns, for trace rows.
    pub fn checksum(&self) -> u64 {
        self.0.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
            (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    /// 8-byte little-endian length header followed by little-endian f64s.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for v in &self.0 {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> std::io::Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let len = u64::from_le_bytes(header) as usize;
        let mut values = Vec::with_capacity(len.min(1 << 24));
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Ok(ParamVector(values))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| MgdError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| MgdError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| MgdError::io(path, e))?;
        ParamVector::read_from(std::io::BufReader::new(file)).map_err(|e| MgdError::io(path, e))
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Draws every parameter i.i.d. uniform on `[-scale, scale]`.
pub fn init_params(spec: &NetworkSpec, seed: u64, scale: f64) -> Result<ParamVector> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(MgdError::config(format!(
            "init scale must be positive, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ParamVector(
        (0..spec.param_count())
            .map(|_| rng.random_range(-scale..=scale))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_spec() -> NetworkSpec {
        NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(xor_spec().param_count(), 9);
        assert_eq!(
            NetworkSpec::dense(&[49, 4, 4], Activation::Sigmoid)
                .unwrap()
                .param_count(),
            220
        );
        assert_eq!(NetworkSpec::cifar_cnn().param_count(), 26154);
    }

    #[test]
    fn cifar_readout_sees_256_features() {
        let spec = NetworkSpec::cifar_cnn();
        let before_dense = &spec.plan()[spec.plan().len() - 1];
        assert_eq!(before_dense.input.len(), 256);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = xor_spec();
        let a = init_params(&spec, 7, 1.0).unwrap();
        let b = init_params(&spec, 7, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|v| v.abs() <= 1.0));
        assert_ne!(a, init_params(&spec, 8, 1.0).unwrap());
        assert!(init_params(&spec, 7, 0.0).is_err());
    }

    #[test]
    fn affine_and_sigmoid_identities() {
        let lin = NetworkSpec::dense(&[1, 1], Activation::Linear).unwrap();
        assert_eq!(lin.forward(&[2.0, 3.0], &[1.0]).unwrap(), vec![5.0]);
        let sig = NetworkSpec::dense(&[1, 1], Activation::Sigmoid).unwrap();
        assert_eq!(sig.forward(&[0.0, 0.0], &[123.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn forward_matches_hand_rolled_evaluation() {
        let spec = xor_spec();
        let p = init_params(&spec, 3, 1.0).unwrap();
        let x = [0.0, 1.0];
        // weights [w00 w01 w10 w11] b0 b1 | v0 v1 c
        let h0 = sigmoid(p[0] * x[0] + p[1] * x[1] + p[4]);
        let h1 = sigmoid(p[2] * x[0] + p[3] * x[1] + p[5]);
        let y = sigmoid(p[6] * h0 + p[7] * h1 + p[8]);
        let got = spec.forward(&p, &x).unwrap();
        assert!((got[0] - y).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let spec = xor_spec();
        assert!(matches!(
            spec.forward(&[0.0; 9], &[1.0]),
            Err(MgdError::Shape(_))
        ));
        assert!(matches!(
            spec.forward(&[0.0; 8], &[1.0, 0.0]),
            Err(MgdError::Length { .. })
        ));
    }

    #[test]
    fn incompatible_layers_rejected() {
        let r = NetworkSpec::new(
            Shape::flat(3),
            vec![
                LayerSpec::dense(3, 4, Activation::Sigmoid),
                LayerSpec::dense(5, 1, Activation::Sigmoid),
            ],
        );
        assert!(r.is_err());
        // spatial output without flatten
        let r = NetworkSpec::new(Shape::image(1, 5, 5), vec![LayerSpec::conv3x3(1, 2)]);
        assert!(r.is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(cost_mse(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(cost_mse(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cost_mse(&[0.5], &[0.0]).unwrap(), 0.25);
        assert!(cost_mse(&[0.5], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.9, 0.9]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn maxpool_picks_first_of_ties() {
        let spec = NetworkSpec::new(
            Shape::image(1, 2, 2),
            vec![LayerSpec::MaxPool2x2, LayerSpec::Flatten],
        )
        .unwrap();
        assert_eq!(spec.forward(&[], &[1.0, 3.0, 3.0, 2.0]).unwrap(), vec![3.0]);
        let mut idx = Vec::new();
        let mut out = [0.0];
        layer_forward(
            &spec.layers()[0],
            &spec.plan()[0],
            &[],
            &[1.0, 3.0, 3.0, 2.0],
            &mut out,
            Some(&mut idx),
        );
        assert_eq!(idx, vec![1.0]);
    }

    #[test]
    fn param_vector_file_round_trip() {
        let p = init_params(&xor_spec(), 11, 1.0).unwrap();
        let mut bytes = Vec::new();
        p.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 9 * 8);
        assert_eq!(&bytes[..8], &9u64.to_le_bytes());
        let q = ParamVector::read_from(&bytes[..]).unwrap();
        assert_eq!(p.checksum(), q.checksum());
        assert!(ParamVector::read_from(&bytes[..20]).is_err());
    }
}
