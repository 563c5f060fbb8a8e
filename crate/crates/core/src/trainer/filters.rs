//! First-order discrete filters used by the analog trainer.

/// `y(t) = τ/(τ+dt) · (y(t−dt) + x(t) − x(t−dt))`.
///
/// The first sample primes the input history, so a constant input yields
/// zero output from the start.
#[derive(Debug, Clone, PartialEq)]
pub struct HighPass {
    gain: f64,
    prev_input: Option<f64>,
    output: f64,
}

impl HighPass {
    pub fn new(tau: f64, dt: f64) -> Self {
        HighPass {
            gain: tau / (tau + dt),
            prev_input: None,
            output: 0.0,
        }
    }

    /// Filter with explicit history `x(t−dt)` and output `y(t−dt)`.
    pub fn with_history(tau: f64, dt: f64, prev_input: f64, prev_output: f64) -> Self {
        HighPass {
            gain: tau / (tau + dt),
            prev_input: Some(prev_input),
            output: prev_output,
        }
    }

    pub fn update(&mut self, x: f64) -> f64 {
        let prev = self.prev_input.unwrap_or(x);
        self.output = self.gain * (self.output + x - prev);
        self.prev_input = Some(x);
        self.output
    }

    pub fn output(&self) -> f64 {
        self.output
    }
}

/// `y(t) = dt/(τ+dt) · (x(t) + (τ/dt)·y(t−dt))`, applied element-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    tau: f64,
    dt: f64,
}

impl LowPass {
    pub fn new(tau: f64, dt: f64) -> Self {
        LowPass { tau, dt }
    }

    #[inline]
    pub fn update(&self, state: f64, x: f64) -> f64 {
        self.dt / (self.tau + self.dt) * (x + self.tau / self.dt * state)
    }
}
