//! Task and dataset providers.

mod cifar;
mod idx;
mod nist;
mod parity;
mod probe;

pub use cifar::{load_cifar10, CIFAR_RECORD_LEN};
pub use idx::{load_idx, load_idx_with_classes, write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use nist::{nist7x7_dataset, Nist7x7Config, GLYPHS, GLYPH_NAMES};
pub use parity::parity_dataset;
pub use probe::linear_probe_accuracy;

use crate::error::{MgdError, Result};
use crate::network::Shape;

/// Immutable set of `(x, ŷ)` pairs stored as two flat row-major arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    input_shape: Shape,
    output_len: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        input_shape: Shape,
        output_len: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let in_len = input_shape.len();
        if in_len == 0 || output_len == 0 {
            return Err(MgdError::Shape("empty sample dimensions".into()));
        }
        if inputs.is_empty() || inputs.len() % in_len != 0 {
            return Err(MgdError::Shape(format!(
                "{} input values do not divide into samples of {in_len}",
                inputs.len()
            )));
        }
        let n = inputs.len() / in_len;
        if targets.len() != n * output_len {
            return Err(MgdError::Length {
                expected: n * output_len,
                actual: targets.len(),
            });
        }
        Ok(Dataset {
            name: name.into(),
            input_shape,
            output_len,
            inputs,
            targets,
        })
    }

    /// Builds a dataset with one-hot targets from class labels.
    pub fn from_labels(
        name: impl Into<String>,
        input_shape: Shape,
        inputs: Vec<f64>,
        labels: &[usize],
        classes: usize,
    ) -> Result<Self> {
        let mut targets = vec![0.0; labels.len() * classes];
        for (i, &l) in labels.iter().enumerate() {
            if l >= classes {
                return Err(MgdError::config(format!(
                    "label {l} out of range for {classes} classes"
                )));
            }
            targets[i * classes + l] = 1.0;
        }
        Dataset::new(name, input_shape, classes, inputs, targets)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    #[inline]
    pub fn sample(&self, i: usize) -> (&[f64], &[f64]) {
        let d = self.input_shape.len();
        let o = self.output_len;
        (
            &self.inputs[i * d..(i + 1) * d],
            &self.targets[i * o..(i + 1) * o],
        )
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.sample(i).0
    }

    pub fn target(&self, i: usize) -> &[f64] {
        self.sample(i).1
    }

    /// Class index of sample `i` (argmax of a one-hot row, threshold for scalar targets).
    pub fn label(&self, i: usize) -> usize {
        let t = self.target(i);
        if t.len() == 1 {
            usize::from(t[0] >= 0.5)
        } else {
            crate::network::argmax(t)
        }
    }

    /// Same samples reinterpreted with a different input shape of equal size.
    pub fn reshaped(mut self, shape: Shape) -> Result<Self> {
        if shape.len() != self.input_shape.len() {
            return Err(MgdError::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.input_shape
            )));
        }
        self.input_shape = shape;
        Ok(self)
    }

    /// First `n` samples (or all of them if fewer).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.len());
        Dataset {
            name: self.name.clone(),
            input_shape: self.input_shape,
            output_len: self.output_len,
            inputs: self.inputs[..n * self.input_shape.len()].to_vec(),
            targets: self.targets[..n * self.output_len].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_data() {
        assert!(Dataset::new("x", Shape::flat(2), 1, vec![0.0; 3], vec![0.0]).is_err());
        assert!(Dataset::new("x", Shape::flat(2), 1, vec![0.0; 4], vec![0.0]).is_err());
        assert!(Dataset::new("x", Shape::flat(2), 1, vec![], vec![]).is_err());
    }

    #[test]
    fn one_hot_rows_sum_to_one() {
        let d = Dataset::from_labels("x", Shape::flat(1), vec![0.0, 1.0, 2.0], &[2, 0, 1], 3)
            .unwrap();
        for i in 0..d.len() {
            assert_eq!(d.target(i).iter().sum::<f64>(), 1.0);
        }
        assert_eq!(d.label(0), 2);
        assert!(Dataset::from_labels("x", Shape::flat(1), vec![0.0], &[3], 3).is_err());
    }
}
