use serde::{Deserialize, Serialize};

use crate::error::{MgdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Discrete,
    Analog,
}

/// Order in which training samples are presented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Sweep the dataset in order, wrapping around.
    #[default]
    Cyclic,
    /// Uniform with replacement.
    Random,
}

/// Time constants and step sizes of a run. The perturbation period τp and
/// amplitude Δθ live on the [`PerturbationScheme`](crate::perturbation::PerturbationScheme).
///
/// In discrete mode every time constant is a whole number of steps. In analog
/// mode they are times, with `t = n · dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockConfig {
    pub mode: Mode,
    /// Gradient integration time; `None` accumulates forever without updating.
    pub tau_theta: Option<f64>,
    pub tau_x: f64,
    pub tau_hp: f64,
    pub dt: f64,
    pub eta: f64,
    /// Samples presented simultaneously under one shared perturbation.
    pub parallel_batch: usize,
    pub sampling: Sampling,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            mode: Mode::Discrete,
            tau_theta: Some(1.0),
            tau_x: 1.0,
            tau_hp: 10.0,
            dt: 1.0,
            eta: 1.0,
            parallel_batch: 1,
            sampling: Sampling::Cyclic,
        }
    }
}

fn whole_steps(name: &str, v: f64) -> Result<u64> {
    if !(v >= 1.0 && v.is_finite() && v.fract() == 0.0) {
        return Err(MgdError::config(format!(
            "{name} must be a whole number of steps >= 1, got {v}"
        )));
    }
    Ok(v as u64)
}

impl ClockConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(MgdError::config(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.parallel_batch == 0 {
            return Err(MgdError::config("parallel_batch must be at least 1"));
        }
        match self.mode {
            Mode::Discrete => {
                whole_steps("tau_x", self.tau_x)?;
                if let Some(t) = self.tau_theta {
                    whole_steps("tau_theta", t)?;
                }
            }
            Mode::Analog => {
                if !(self.dt > 0.0 && self.dt.is_finite()) {
                    return Err(MgdError::config("dt must be positive"));
                }
                if !(self.tau_hp > 0.0 && self.tau_hp.is_finite()) {
                    return Err(MgdError::config("tau_hp must be positive"));
                }
                match self.tau_theta {
                    Some(t) if t > 0.0 && t.is_finite() => {}
                    _ => {
                        return Err(MgdError::config(
                            "analog mode needs a finite positive tau_theta",
                        ))
                    }
                }
                if !(self.tau_x >= self.dt) {
                    return Err(MgdError::config("tau_x must be at least one timestep dt"));
                }
            }
        }
        Ok(())
    }

    /// Steps between sample changes.
    pub fn tau_x_steps(&self) -> u64 {
        match self.mode {
            Mode::Discrete => self.tau_x as u64,
            Mode::Analog => ((self.tau_x / self.dt).round() as u64).max(1),
        }
    }

    /// Steps between parameter updates in discrete mode.
    pub fn tau_theta_steps(&self) -> Option<u64> {
        self.tau_theta.map(|t| t as u64)
    }

    /// Training samples integrated into one parameter update: `(τθ/τx) · parallel_batch`.
    pub fn batch_size(&self) -> Option<f64> {
        self.tau_theta
            .map(|t| t / self.tau_x * self.parallel_batch as f64)
    }
}
