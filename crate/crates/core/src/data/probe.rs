use crate::data::Dataset;
use crate::network::prediction_correct;

/// Training accuracy of a ridge-regularized least-squares linear readout
/// (inputs plus a bias column mapped straight to the targets). Useful for
/// judging how far a generated task is from linearly separable.
pub fn linear_probe_accuracy(data: &Dataset, ridge: f64) -> f64 {
    let d = data.input_shape().len() + 1;
    let o = data.output_len();
    let mut gram = vec![0.0; d * d];
    let mut rhs = vec![0.0; d * o];
    let mut row = vec![0.0; d];
    for i in 0..data.len() {
        let (x, t) = data.sample(i);
        row[..d - 1].copy_from_slice(x);
        row[d - 1] = 1.0;
        for a in 0..d {
            for b in 0..d {
                gram[a * d + b] += row[a] * row[b];
            }
            for k in 0..o {
                rhs[a * o + k] += row[a] * t[k];
            }
        }
    }
    for a in 0..d {
        gram[a * d + a] += ridge;
    }
    let w = solve(&mut gram, &mut rhs, d, o);

    let mut correct = 0;
    let mut y = vec![0.0; o];
    for i in 0..data.len() {
        let (x, t) = data.sample(i);
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = w[(d - 1) * o + k]
                + x.iter()
                    .enumerate()
                    .map(|(a, xa)| xa * w[a * o + k])
                    .sum::<f64>();
        }
        if prediction_correct(&y, t) {
            correct += 1;
        }
    }
    correct as f64 / data.len() as f64
}

/// Gaussian elimination with partial pivoting; `a` is `n x n`, `b` is `n x m`.
fn solve(a: &mut [f64], b: &mut [f64], n: usize, m: usize) -> Vec<f64> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, pivot * m + k);
            }
        }
        let diag = a[col * n + col];
        if diag.abs() < 1e-300 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r * n + col] / diag;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            for k in 0..m {
                b[r * m + k] -= f * b[col * m + k];
            }
        }
    }
    let mut x = vec![0.0; n * m];
    for r in (0..n).rev() {
        let diag = a[r * n + r];
        for k in 0..m {
            let mut s = b[r * m + k];
            for c in r + 1..n {
                s -= a[r * n + c] * x[c * m + k];
            }
            x[r * m + k] = if diag.abs() < 1e-300 { 0.0 } else { s / diag };
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{nist7x7_dataset, parity_dataset, Nist7x7Config};

    #[test]
    fn clean_glyphs_are_linearly_separable() {
        let d = nist7x7_dataset(&Nist7x7Config {
            samples_per_class: 1,
            pixel_flip_prob: 0.0,
            shift_range: 0,
            seed: 0,
        })
        .unwrap();
        assert_eq!(linear_probe_accuracy(&d, 1e-6), 1.0);
    }

    #[test]
    fn xor_is_not() {
        let d = parity_dataset(2).unwrap();
        assert!(linear_probe_accuracy(&d, 1e-9) < 1.0);
    }
}
