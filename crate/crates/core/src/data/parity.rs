use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::Shape;

/// All `2^n` bit patterns with a scalar XOR-of-bits target.
///
/// Row `i` holds the binary expansion of `i`, most significant bit first.
pub fn parity_dataset(n_bits: usize) -> Result<Dataset> {
    if !(1..=16).contains(&n_bits) {
        return Err(MgdError::config(format!(
            "parity needs 1..=16 bits, got {n_bits}"
        )));
    }
    let count = 1usize << n_bits;
    let mut inputs = Vec::with_capacity(count * n_bits);
    let mut targets = Vec::with_capacity(count);
    for i in 0..count {
        for b in (0..n_bits).rev() {
            inputs.push(((i >> b) & 1) as f64);
        }
        targets.push((i.count_ones() % 2) as f64);
    }
    Dataset::new(
        format!("parity{n_bits}"),
        Shape::flat(n_bits),
        1,
        inputs,
        targets,
    )
}
