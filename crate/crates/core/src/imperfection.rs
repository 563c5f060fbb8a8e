//! Hardware non-idealities: additive cost noise, stochastic parameter updates
//! and static per-neuron activation defects.
//!
//! Every model is a no-op at zero strength and then draws nothing from its
//! random stream, so an all-zero [`ImperfectionConfig`] reproduces ideal runs
//! bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MgdError, Result};
use crate::network::{LogisticParams, NetworkSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionConfig {
    /// Cost noise std, in units of the RMS cost modulation measured at run start.
    #[serde(default)]
    pub sigma_c: f64,
    /// Per-component std of the noise added at each parameter update.
    #[serde(default)]
    pub sigma_theta: f64,
    /// Std of the per-neuron logistic scale and offset parameters.
    #[serde(default)]
    pub sigma_a: f64,
    /// Seed of the defect table; defaults to the run seed.
    #[serde(default)]
    pub defect_seed: Option<u64>,
}

impl ImperfectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_c", self.sigma_c),
            ("sigma_theta", self.sigma_theta),
            ("sigma_a", self.sigma_a),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MgdError::config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.sigma_c == 0.0 && self.sigma_theta == 0.0 && self.sigma_a == 0.0
    }
}

/// Static per-neuron logistic parameters, drawn once.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectTable {
    neurons: Vec<LogisticParams>,
}

impl DefectTable {
    /// `alpha`, `beta` ~ N(1, σ_a²); `offset`, `shift` ~ N(0, σ_a²).
    pub fn sample(neurons: usize, sigma_a: f64, seed: u64) -> Result<Self> {
        if !(sigma_a >= 0.0 && sigma_a.is_finite()) {
            return Err(MgdError::config(format!("sigma_a must be >= 0, got {sigma_a}")));
        }
        if sigma_a == 0.0 {
            return Ok(DefectTable {
                neurons: vec![LogisticParams::IDEAL; neurons],
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let one = Normal::new(1.0, sigma_a).expect("finite sigma");
        let zero = Normal::new(0.0, sigma_a).expect("finite sigma");
        let neurons = (0..neurons)
            .map(|_| LogisticParams {
                alpha: one.sample(&mut rng),
                beta: one.sample(&mut rng),
                offset: zero.sample(&mut rng),
                shift: zero.sample(&mut rng),
            })
            .collect();
        Ok(DefectTable { neurons })
    }

    /// Table covering every sigmoid neuron of `spec`.
    pub fn for_network(spec: &NetworkSpec, sigma_a: f64, seed: u64) -> Result<Self> {
        Self::sample(spec.sigmoid_neuron_count(), sigma_a, seed)
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn neuron(&self, k: usize) -> Option<&LogisticParams> {
        self.neurons.get(k)
    }

    pub fn as_slice(&self) -> &[LogisticParams] {
        &self.neurons
    }

    /// Copy of `spec` whose sigmoid neurons use this table's logistics.
    pub fn apply(&self, spec: &NetworkSpec) -> Result<NetworkSpec> {
        spec.with_logistic_defects(&self.neurons)
    }
}

/// Activation of neuron `k`: `α_k / (1 + exp(-β_k (a - a_k))) + b_k`.
pub fn defect_logistic(table: &DefectTable, k: usize, a: f64) -> Result<f64> {
    table
        .neuron(k)
        .map(|p| p.eval(a))
        .ok_or(MgdError::Length {
            expected: table.len(),
            actual: k,
        })
}

/// Adds one Gaussian draw of standard deviation `std` to a measured cost.
pub fn apply_cost_noise<R: Rng + ?Sized>(c: f64, std: f64, rng: &mut R) -> f64 {
    if std == 0.0 {
        return c;
    }
    let z: f64 = StandardNormal.sample(rng);
    c + std * z
}

/// `θ ← θ − ηG + θ_noise` with i.i.d. N(0, σ_θ²) components, in parameter units.
pub fn noisy_param_update<R: Rng + ?Sized>(
    theta: &mut [f64],
    g: &[f64],
    eta: f64,
    std: f64,
    rng: &mut R,
) {
    if std == 0.0 {
        for (t, gi) in theta.iter_mut().zip(g) {
            *t -= eta * gi;
        }
    } else {
        for (t, gi) in theta.iter_mut().zip(g) {
            let z: f64 = StandardNormal.sample(rng);
            *t = *t - eta * gi + std * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn zero_cost_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let before = rng.clone();
        assert_eq!(apply_cost_noise(0.123, 0.0, &mut rng), 0.123);
        assert_eq!(rng, before);
    }

    #[test]
    fn cost_noise_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let std = 0.3;
        let xs: Vec<f64> = (0..n).map(|_| apply_cost_noise(2.0, std, &mut rng)).collect();
        let (mean, sd) = moments(&xs);
        assert!((mean - 2.0).abs() < 5.0 * std / (n as f64).sqrt(), "{mean}");
        assert!((sd / std - 1.0).abs() < 0.02, "{sd}");
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(apply_cost_noise(0.0, 1.0, &mut a), apply_cost_noise(0.0, 1.0, &mut b));
    }

    #[test]
    fn noiseless_update_is_plain_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut theta = vec![1.0, -2.0];
        noisy_param_update(&mut theta, &[0.5, 1.0], 0.1, 0.0, &mut rng);
        assert_eq!(theta, vec![1.0 - 0.05, -2.0 - 0.1]);
    }

    #[test]
    fn update_noise_random_walk_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = 0.03;
        let n = 200_000;
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            let mut theta = [0.0];
            noisy_param_update(&mut theta, &[7.0], 0.0, sigma, &mut rng);
            steps.push(theta[0]);
        }
        let (mean, sd) = moments(&steps);
        let target = sigma;
        assert!(mean.abs() < 5.0 * target / (n as f64).sqrt());
        assert!((sd / target - 1.0).abs() < 0.01, "{sd} vs {target}");
    }

    #[test]
    fn logistic_examples() {
        let ideal = DefectTable::sample(3, 0.0, 0).unwrap();
        assert_eq!(defect_logistic(&ideal, 1, 0.0).unwrap(), 0.5);
        assert!(defect_logistic(&ideal, 3, 0.0).is_err());
        let p = LogisticParams {
            alpha: 2.0,
            beta: 1.0,
            offset: 0.0,
            shift: -0.5,
        };
        assert_eq!(p.eval(0.0), 0.5);
        assert_eq!(p.eval(1e3), 1.5);
    }

    #[test]
    fn defect_table_statistics() {
        let t = DefectTable::sample(50_000, 0.25, 3).unwrap();
        let col = |f: fn(&LogisticParams) -> f64| -> Vec<f64> { t.as_slice().iter().map(f).collect() };
        for (xs, mu) in [
            (col(|p| p.alpha), 1.0),
            (col(|p| p.beta), 1.0),
            (col(|p| p.offset), 0.0),
            (col(|p| p.shift), 0.0),
        ] {
            let (m, s) = moments(&xs);
            assert!((m - mu).abs() < 0.01, "{m}");
            assert!((s - 0.25).abs() < 0.01, "{s}");
        }
        assert_eq!(t, DefectTable::sample(50_000, 0.25, 3).unwrap());
    }

    #[test]
    fn zero_defects_leave_outputs_unchanged() {
        let spec = NetworkSpec::dense(&[3, 4, 2], Activation::Sigmoid).unwrap();
        let table = DefectTable::for_network(&spec, 0.0, 1).unwrap();
        assert_eq!(table.len(), 6);
        let faulty = table.apply(&spec).unwrap();
        let theta: Vec<f64> = (0..spec.param_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = [0.2, -0.4, 0.9];
        assert_eq!(spec.forward(&theta, &x).unwrap(), faulty.forward(&theta, &x).unwrap());
    }

    #[test]
    fn rejects_negative_sigma() {
        let cfg = ImperfectionConfig {
            sigma_c: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(DefectTable::sample(1, -0.1, 0).is_err());
    }
}
