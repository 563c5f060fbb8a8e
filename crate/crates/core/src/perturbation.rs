//! Orthogonal and statistically orthogonal parameter perturbations θ̃(t).
//!
//! Four generators share one stepping interface:
//!
//! * **sinusoidal**: `θ̃ᵢ(n) = Δθ · sin(2π fᵢ · n · dt)`, one distinct tone per parameter.
//! * **sequential**: a single `+Δθ` on parameter `⌊n/τp⌋ mod P`, zero elsewhere.
//! * **walsh**: rows `1..=P` of a Sylvester–Hadamard matrix of order
//!   `L = 2^k ≥ P + 1`, advancing one column every `τp` steps.
//! * **random**: i.i.d. ±Δθ signs redrawn every `τp` steps.
//!
//! All emitted values satisfy `|θ̃ᵢ| ≤ Δθ`.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MgdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationKind {
    /// Frequencies in cycles per unit time; `dt` is the simulation timestep.
    Sinusoidal { freqs: Vec<f64>, dt: f64 },
    Sequential,
    Walsh,
    Random { seed: u64 },
}

impl PerturbationKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::Sinusoidal { .. } => "sinusoidal",
            PerturbationKind::Sequential => "sequential",
            PerturbationKind::Walsh => "walsh",
            PerturbationKind::Random { .. } => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationScheme {
    pub kind: PerturbationKind,
    pub delta_theta: f64,
    /// Steps between refreshes of discrete perturbations.
    pub tau_p: u64,
}

impl PerturbationScheme {
    pub fn new(kind: PerturbationKind, delta_theta: f64, tau_p: u64) -> Result<Self> {
        if !(delta_theta > 0.0 && delta_theta.is_finite()) {
            return Err(MgdError::config(format!(
                "delta_theta must be positive, got {delta_theta}"
            )));
        }
        if tau_p == 0 {
            return Err(MgdError::config("tau_p must be at least 1 step"));
        }
        if let PerturbationKind::Sinusoidal { freqs, dt } = &kind {
            if !(*dt > 0.0) {
                return Err(MgdError::config("sinusoidal dt must be positive"));
            }
            let mut sorted = freqs.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(MgdError::config("sinusoidal frequencies must be distinct"));
            }
        }
        Ok(PerturbationScheme {
            kind,
            delta_theta,
            tau_p,
        })
    }

    pub fn sequential(delta_theta: f64, tau_p: u64) -> Result<Self> {
        Self::new(PerturbationKind::Sequential, delta_theta, tau_p)
    }

    pub fn walsh(delta_theta: f64, tau_p: u64) -> Result<Self> {
        Self::new(PerturbationKind::Walsh, delta_theta, tau_p)
    }

    pub fn random(seed: u64, delta_theta: f64, tau_p: u64) -> Result<Self> {
        Self::new(PerturbationKind::Random { seed }, delta_theta, tau_p)
    }

    /// Sinusoidal scheme with tones from [`assign_frequencies`].
    pub fn sinusoidal(p: usize, bandwidth: f64, dt: f64, delta_theta: f64) -> Result<Self> {
        let freqs = assign_frequencies(p, bandwidth, dt)?;
        Self::new(PerturbationKind::Sinusoidal { freqs, dt }, delta_theta, 1)
    }

    /// Fresh generator state for `p` parameters.
    pub fn start(&self, p: usize) -> Result<PerturbationState> {
        if p == 0 {
            return Err(MgdError::config("perturbation needs at least one parameter"));
        }
        let (rng, walsh_len) = match &self.kind {
            PerturbationKind::Sinusoidal { freqs, .. } if freqs.len() != p => {
                return Err(MgdError::Length {
                    expected: freqs.len(),
                    actual: p,
                })
            }
            PerturbationKind::Random { seed } => (Some(ChaCha8Rng::seed_from_u64(*seed)), 0),
            PerturbationKind::Walsh => (None, walsh_length(p)),
            _ => (None, 0),
        };
        Ok(PerturbationState {
            step: 0,
            params: p,
            held: vec![0.0; p],
            rng,
            walsh_len,
        })
    }

    /// Writes θ̃ for the state's current step into `out`, then advances one step.
    pub fn next_perturbation(&self, state: &mut PerturbationState, out: &mut [f64]) -> Result<()> {
        if out.len() != state.params {
            return Err(MgdError::Length {
                expected: state.params,
                actual: out.len(),
            });
        }
        let n = state.step;
        let dtheta = self.delta_theta;
        let refresh = n % self.tau_p == 0;
        match &self.kind {
            PerturbationKind::Sinusoidal { freqs, dt } => {
                if freqs.len() != out.len() {
                    return Err(MgdError::Length {
                        expected: freqs.len(),
                        actual: out.len(),
                    });
                }
                let t = n as f64 * dt;
                for (o, f) in out.iter_mut().zip(freqs) {
                    // clamp guards the |θ̃| ≤ Δθ bound against rounding in sin
                    *o = (dtheta * (TAU * f * t).sin()).clamp(-dtheta, dtheta);
                }
            }
            PerturbationKind::Sequential => {
                out.fill(0.0);
                out[((n / self.tau_p) % state.params as u64) as usize] = dtheta;
            }
            PerturbationKind::Walsh => {
                let col = (n / self.tau_p) % state.walsh_len as u64;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dtheta * walsh_sign(i + 1, col as usize) as f64;
                }
            }
            PerturbationKind::Random { .. } => {
                if refresh {
                    let rng = state.rng.as_mut().expect("random state carries an rng");
                    for chunk in state.held.chunks_mut(64) {
                        let bits = rng.next_u64();
                        for (j, h) in chunk.iter_mut().enumerate() {
                            *h = if (bits >> j) & 1 == 1 { dtheta } else { -dtheta };
                        }
                    }
                }
                out.copy_from_slice(&state.held);
            }
        }
        state.step += 1;
        Ok(())
    }
}

/// Generator position: step counter plus whatever the scheme needs to hold
/// between refreshes.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    step: u64,
    params: usize,
    held: Vec<f64>,
    rng: Option<ChaCha8Rng>,
    walsh_len: usize,
}

impl PerturbationState {
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn params(&self) -> usize {
        self.params
    }
}

/// Code length used for `p` Walsh-coded parameters: the smallest power of two
/// that is at least `p + 1` (the constant row is never assigned).
pub fn walsh_length(p: usize) -> usize {
    (p + 1).next_power_of_two()
}

/// Entry `(row, col)` of the Sylvester–Hadamard matrix: `(-1)^popcount(row & col)`.
#[inline]
pub fn walsh_sign(row: usize, col: usize) -> i8 {
    if (row & col).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `p` equally spaced tones `Δf·k/p`, `k = 1..=p`, all strictly below the
/// Nyquist limit `1/(2·dt)`.
pub fn assign_frequencies(p: usize, bandwidth: f64, dt: f64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(MgdError::config("need at least one frequency"));
    }
    if !(bandwidth > 0.0 && dt > 0.0) {
        return Err(MgdError::config("bandwidth and dt must be positive"));
    }
    let nyquist = 0.5 / dt;
    if bandwidth >= nyquist {
        return Err(MgdError::config(format!(
            "bandwidth {bandwidth} reaches the Nyquist limit {nyquist} for dt = {dt}"
        )));
    }
    let spacing = bandwidth / p as f64;
    Ok((1..=p).map(|k| spacing * k as f64).collect())
}

/// Largest absolute pairwise correlation and largest absolute mean (in units
/// of Δθ) of the perturbation streams over `window` steps.
///
/// Correlation is the normalized inner product
/// `Σ θ̃ᵢθ̃ⱼ / sqrt(Σθ̃ᵢ² Σθ̃ⱼ²)` (not mean-centred).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    pub max_abs_correlation: f64,
    pub max_abs_mean: f64,
}

pub fn orthogonality_report(
    scheme: &PerturbationScheme,
    p: usize,
    window: u64,
) -> Result<OrthogonalityReport> {
    if window == 0 {
        return Err(MgdError::config("window must be at least one step"));
    }
    let mut state = scheme.start(p)?;
    let mut v = vec![0.0; p];
    let mut gram = vec![0.0; p * p];
    let mut sums = vec![0.0; p];
    for _ in 0..window {
        scheme.next_perturbation(&mut state, &mut v)?;
        for i in 0..p {
            sums[i] += v[i];
            for j in i..p {
                gram[i * p + j] += v[i] * v[j];
            }
        }
    }
    let mut max_corr: f64 = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            let denom = (gram[i * p + i] * gram[j * p + j]).sqrt();
            if denom > 0.0 {
                max_corr = max_corr.max((gram[i * p + j] / denom).abs());
            }
        }
    }
    let max_mean = sums
        .iter()
        .map(|s| (s / window as f64 / scheme.delta_theta).abs())
        .fold(0.0, f64::max);
    Ok(OrthogonalityReport {
        max_abs_correlation: max_corr,
        max_abs_mean: max_mean,
    })
}
