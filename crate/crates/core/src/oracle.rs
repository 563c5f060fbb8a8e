//! Ground-truth gradients used to validate the perturbative estimate:
//! reverse-mode backpropagation, finite differences, and the angle metric.
//!
//! These routines look inside the network; the trainer never does.

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::{
    accuracy, cost_mse, init_params, layer_forward, LayerSpec, NetworkSpec, ParamVector, Scratch,
};
use crate::trainer::{TraceRecord, TrainingTrace};

/// A gradient in the same layout as [`ParamVector`].
pub type GradientVector = Vec<f64>;

/// Summed per-sample MSE over `batch` (sample indices into `data`).
pub fn batch_cost(spec: &NetworkSpec, params: &[f64], data: &Dataset, batch: &[usize]) -> Result<f64> {
    let mut scratch = Scratch::default();
    let mut total = 0.0;
    for &i in batch {
        let (x, t) = data.sample(i);
        total += cost_mse(spec.forward_with(params, x, &mut scratch)?, t)?;
    }
    Ok(total)
}

/// Adds ∂C/∂θ of one sample's MSE into `grad`; returns that sample's cost.
fn accumulate_sample_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    x: &[f64],
    target: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    let layers = spec.layers();
    let plan = spec.plan();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
    let mut pres: Vec<Vec<f64>> = vec![Vec::new(); layers.len()];
    acts.push(x.to_vec());
    for (l, (layer, p)) in layers.iter().zip(plan).enumerate() {
        let w = &params[p.param_offset..p.param_offset + layer.param_count()];
        let mut out = vec![0.0; p.output.len()];
        layer_forward(layer, p, w, &acts[l], &mut out, Some(&mut pres[l]));
        acts.push(out);
    }
    let y = &acts[layers.len()];
    let cost = cost_mse(y, target)?;
    let n = y.len() as f64;
    let mut delta: Vec<f64> = y.iter().zip(target).map(|(a, b)| 2.0 * (a - b) / n).collect();

    for l in (0..layers.len()).rev() {
        let p = &plan[l];
        let input = &acts[l];
        let pre = &pres[l];
        let off = p.param_offset;
        let mut delta_in = vec![0.0; p.input.len()];
        match &layers[l] {
            LayerSpec::Dense {
                inputs,
                outputs,
                activation,
            } => {
                let nw = inputs * outputs;
                for o in 0..*outputs {
                    let dz = delta[o] * activation.derivative(o, pre[o]);
                    if dz == 0.0 {
                        continue;
                    }
                    let row = off + o * inputs;
                    for i in 0..*inputs {
                        grad[row + i] += dz * input[i];
                        delta_in[i] += params[row + i] * dz;
                    }
                    grad[off + nw + o] += dz;
                }
            }
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
            } => {
                let nw = 9 * in_channels * out_channels;
                let (ih, iw) = (p.input.height, p.input.width);
                let (oh, ow) = (p.output.height, p.output.width);
                for oc in 0..*out_channels {
                    for y in 0..oh {
                        for x in 0..ow {
                            let idx = oc * oh * ow + y * ow + x;
                            if pre[idx] <= 0.0 {
                                continue;
                            }
                            let dz = delta[idx];
                            grad[off + nw + oc] += dz;
                            for ic in 0..*in_channels {
                                let kbase = off + (oc * in_channels + ic) * 9;
                                for ky in 0..3 {
                                    for kx in 0..3 {
                                        let ii = ic * ih * iw + (y + ky) * iw + x + kx;
                                        grad[kbase + ky * 3 + kx] += dz * input[ii];
                                        delta_in[ii] += params[kbase + ky * 3 + kx] * dz;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            LayerSpec::MaxPool2x2 => {
                for (o, &src) in pre.iter().enumerate() {
                    delta_in[src as usize] += delta[o];
                }
            }
            LayerSpec::Flatten => delta_in.copy_from_slice(&delta),
        }
        delta = delta_in;
    }
    Ok(cost)
}

/// Exact gradient of the summed MSE over `batch`.
pub fn backprop_grad(
    spec: &NetworkSpec,
    params: &[f64],
    data: &Dataset,
    batch: &[usize],
) -> Result<GradientVector> {
    check_params(spec, params)?;
    let mut grad = vec![0.0; spec.param_count()];
    for &i in batch {
        let (x, t) = data.sample(i);
        accumulate_sample_gradient(spec, params, x, t, &mut grad)?;
    }
    Ok(grad)
}

/// Gradient over every sample of `data`.
pub fn full_batch_grad(spec: &NetworkSpec, params: &[f64], data: &Dataset) -> Result<GradientVector> {
    let all: Vec<usize> = (0..data.len()).collect();
    backprop_grad(spec, params, data, &all)
}

fn check_params(spec: &NetworkSpec, params: &[f64]) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(MgdError::Length {
            expected: spec.param_count(),
            actual: params.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMode {
    Forward,
    Central,
}

/// Finite-difference gradient of the summed MSE over `batch`, one parameter at a time.
pub fn finite_diff_grad(
    spec: &NetworkSpec,
    params: &[f64],
    data: &Dataset,
    batch: &[usize],
    delta_theta: f64,
    mode: FdMode,
) -> Result<GradientVector> {
    finite_diff_of(|p| batch_cost(spec, p, data, batch), params, delta_theta, mode)
}

/// Finite differences of an arbitrary scalar function.
pub fn finite_diff_of<F>(mut f: F, params: &[f64], delta_theta: f64, mode: FdMode) -> Result<GradientVector>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(delta_theta > 0.0) {
        return Err(MgdError::config("finite-difference step must be positive"));
    }
    let mut p = params.to_vec();
    let base = match mode {
        FdMode::Forward => f(&p)?,
        FdMode::Central => 0.0,
    };
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + delta_theta;
        let plus = f(&p)?;
        let g = match mode {
            FdMode::Forward => (plus - base) / delta_theta,
            FdMode::Central => {
                p[i] = orig - delta_theta;
                let minus = f(&p)?;
                (plus - minus) / (2.0 * delta_theta)
            }
        };
        p[i] = orig;
        grad.push(g);
    }
    Ok(grad)
}

/// Angle between two vectors in degrees.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MgdError::Length {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(MgdError::UndefinedAngle);
    }
    // 2·atan2(‖â − b̂‖, ‖â + b̂‖) stays accurate near 0° and 180°
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees())
}

/// Relative L2 error `‖a − b‖ / ‖b‖`.
pub fn relative_l2_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Plain SGD on summed-MSE minibatches taken cyclically, starting at `init`.
///
/// The returned trace has one record per epoch (record `step` is the epoch
/// count, starting with 0 for the initial parameters).
pub fn backprop_train_from(
    spec: &NetworkSpec,
    data: &Dataset,
    init: ParamVector,
    eta: f64,
    batch_size: usize,
    epochs: usize,
) -> Result<(TrainingTrace, ParamVector)> {
    if batch_size == 0 {
        return Err(MgdError::config("batch_size must be at least 1"));
    }
    check_params(spec, &init)?;
    let mut theta = init;
    let mut trace = TrainingTrace::new(1);
    let record = |trace: &mut TrainingTrace, epoch: u64, theta: &ParamVector, g_norm: f64| -> Result<()> {
        let cost = spec.dataset_cost(theta, data)?;
        if !cost.is_finite() {
            return Err(MgdError::NonFinite {
                step: epoch,
                what: "cost",
            });
        }
        trace.push(TraceRecord {
            step: epoch,
            cost,
            accuracy: accuracy(spec, theta, data)?,
            g_norm,
            checksum: theta.checksum(),
        });
        Ok(())
    };
    record(&mut trace, 0, &theta, 0.0)?;
    let n = data.len();
    let mut cursor = 0usize;
    let mut batch = Vec::with_capacity(batch_size);
    let steps_per_epoch = n.div_ceil(batch_size);
    for epoch in 1..=epochs as u64 {
        let mut g_norm = 0.0;
        for _ in 0..steps_per_epoch {
            batch.clear();
            for _ in 0..batch_size {
                batch.push(cursor % n);
                cursor += 1;
            }
            let g = backprop_grad(spec, &theta, data, &batch)?;
            g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (t, gi) in theta.iter_mut().zip(&g) {
                *t -= eta * gi;
            }
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(MgdError::NonFinite {
                step: epoch,
                what: "parameter",
            });
        }
        record(&mut trace, epoch, &theta, g_norm)?;
    }
    Ok((trace, theta))
}

/// [`backprop_train_from`] starting at `init_params(spec, seed, 1.0)`.
pub fn backprop_train(
    spec: &NetworkSpec,
    data: &Dataset,
    eta: f64,
    batch_size: usize,
    epochs: usize,
    seed: u64,
) -> Result<TrainingTrace> {
    let init = init_params(spec, seed, 1.0)?;
    Ok(backprop_train_from(spec, data, init, eta, batch_size, epochs)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parity_dataset;
    use crate::network::{Activation, Shape};

    #[test]
    fn single_linear_neuron_by_hand() {
        let spec = NetworkSpec::dense(&[1, 1], Activation::Linear).unwrap();
        let data = Dataset::new("d", Shape::flat(1), 1, vec![1.0], vec![0.0]).unwrap();
        let g = backprop_grad(&spec, &[1.0, 0.0], &data, &[0]).unwrap();
        assert_eq!(g, vec![2.0, 2.0]);
    }

    #[test]
    fn fd_on_quadratic() {
        let f = |p: &[f64]| Ok(p[0] * p[0]);
        let fwd = finite_diff_of(f, &[1.0], 0.01, FdMode::Forward).unwrap();
        assert!((fwd[0] - 2.01).abs() < 1e-12);
        let cen = finite_diff_of(f, &[1.0], 0.01, FdMode::Central).unwrap();
        assert!((cen[0] - 2.0).abs() < 1e-12);
        assert!(finite_diff_of(f, &[1.0], 0.0, FdMode::Forward).is_err());
    }

    #[test]
    fn angles() {
        assert!(angle_between(&[1.0, 2.0], &[1.0, 2.0]).unwrap().abs() < 1e-6);
        assert!((angle_between(&[1.0, 2.0], &[-1.0, -2.0]).unwrap() - 180.0).abs() < 1e-6);
        assert!((angle_between(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 45.0).abs() < 1e-12);
        assert!(matches!(
            angle_between(&[0.0, 0.0], &[1.0, 0.0]),
            Err(MgdError::UndefinedAngle)
        ));
        let a = angle_between(&[0.3, -1.2, 2.0], &[1.0, 0.5, 0.25]).unwrap();
        let b = angle_between(&[3.0, -12.0, 20.0], &[0.01, 0.005, 0.0025]).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn zero_weight_net_has_symmetric_hidden_bias_gradients() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let g = full_batch_grad(&spec, &[0.0; 9], &data).unwrap();
        assert_eq!(g[4], g[5]);
    }

    #[test]
    fn zero_learning_rate_gives_flat_trace() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let trace = backprop_train(&spec, &data, 0.0, 1, 5, 3).unwrap();
        assert_eq!(trace.records().len(), 6);
        let c0 = trace.records()[0].cost;
        assert!(trace.records().iter().all(|r| r.cost == c0));
    }

    #[test]
    fn full_batch_sgd_equals_gradient_descent() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let init = init_params(&spec, 4, 1.0).unwrap();
        let (_, got) = backprop_train_from(&spec, &data, init.clone(), 0.7, 4, 3).unwrap();
        let mut theta = init.into_inner();
        for _ in 0..3 {
            let g = full_batch_grad(&spec, &theta, &data).unwrap();
            for (t, gi) in theta.iter_mut().zip(g) {
                *t -= 0.7 * gi;
            }
        }
        assert_eq!(got.as_slice(), &theta[..]);
    }

    #[test]
    fn backprop_solves_xor_within_finite_epochs() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let solved = (0..10)
            .filter(|&seed| {
                let t = backprop_train(&spec, &data, 2.0, 1, 3000, seed).unwrap();
                t.records().iter().any(|r| r.cost < 0.04)
            })
            .count();
        assert!(solved >= 6, "{solved}/10");
    }
}
