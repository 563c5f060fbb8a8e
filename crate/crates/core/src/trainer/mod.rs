//! The multiplexed gradient descent trainer.
//!
//! The trainer only ever *runs* the network (at θ and at θ + θ̃) and reads a
//! scalar cost back, exactly like a chip-in-the-loop controller would. Each
//! parameter correlates the broadcast cost change with its own perturbation,
//! integrates that into `G`, and applies `θ ← θ − ηG`.
//!
//! **Discrete** steps (step `n`):
//!
//! 1. `n mod τx = 0`: present the next sample(s).
//! 2. `n mod τx = 0` or `n mod τθ = 0`: measure the baseline `C0` with θ̃ = 0.
//! 3. Take θ̃ for step `n` (refreshed every τp steps by the scheme).
//! 4. `C = C(θ + θ̃)`, `tc = C − C0`, `e = tc · θ̃ / Δθ²`, `G ← G + e`.
//! 5. At the last step of each τθ window (`(n + 1) mod τθ = 0`):
//!    `θ ← θ − ηG`, then `G ← 0`.
//!
//! The baseline measurement does not advance `n`.
//!
//! **Analog** steps run every `dt` with a highpass on the cost and a lowpass
//! per parameter, and update θ continuously:
//!
//! ```text
//! tc(t) = τhp/(τhp+dt) · (tc(t−dt) + C(t) − C(t−dt))
//! e(t)  = tc(t) · θ̃(t) · dt / Δθ²
//! G(t)  = dt/(τθ+dt) · (e(t) + (τθ/dt) · G(t−dt))
//! θ     ← θ − η G(t)
//! ```
//!
//! starting from `tc(0) = 0`, `C(−dt) = C(0)`, `G(0) = 0`.

mod clocks;
mod filters;
mod preset;
mod trace;

pub use clocks::{ClockConfig, Mode, Sampling};
pub use filters::{HighPass, LowPass};
pub use preset::{preset, Algorithm};
pub use trace::{TraceRecord, TrainingTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::imperfection::{apply_cost_noise, noisy_param_update, DefectTable, ImperfectionConfig};
use crate::network::{accuracy, cost_mse, init_params, NetworkSpec, ParamVector, Scratch};
use crate::perturbation::{PerturbationKind, PerturbationScheme, PerturbationState};

/// Number of probe steps used to measure the cost-modulation scale for cost noise.
pub const COST_NOISE_PROBE_STEPS: usize = 100;

// RNG stream ids, all keyed by the run seed.
const STREAM_SAMPLING: u64 = 2;
const STREAM_COST_NOISE: u64 = 3;
const STREAM_UPDATE_NOISE: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// When to stop and what counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCondition {
    pub max_steps: u64,
    /// Converged once the dataset-mean cost drops below this.
    pub cost_threshold: Option<f64>,
    /// Converged once dataset accuracy reaches this.
    pub accuracy_threshold: Option<f64>,
    /// Steps between evaluations (and trace records).
    pub eval_every: u64,
}

impl Default for StopCondition {
    fn default() -> Self {
        StopCondition {
            max_steps: 10_000,
            cost_threshold: Some(0.04),
            accuracy_threshold: None,
            eval_every: 10,
        }
    }
}

impl StopCondition {
    fn reached(&self, cost: f64, acc: f64) -> bool {
        self.cost_threshold.is_some_and(|t| cost < t)
            || self.accuracy_threshold.is_some_and(|t| acc >= t)
    }
}

/// Everything a run needs besides the network, the data, and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub clocks: ClockConfig,
    pub scheme: PerturbationScheme,
    pub imperfections: ImperfectionConfig,
    pub stop: StopCondition,
    /// Half-width of the uniform initialization.
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn new(clocks: ClockConfig, scheme: PerturbationScheme) -> Self {
        TrainConfig {
            clocks,
            scheme,
            imperfections: ImperfectionConfig::default(),
            stop: StopCondition::default(),
            init_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.clocks.validate()?;
        self.imperfections.validate()?;
        if self.stop.eval_every == 0 {
            return Err(MgdError::config("eval_every must be at least 1"));
        }
        if self.clocks.mode == Mode::Analog && self.scheme.kind == PerturbationKind::Sequential {
            return Err(MgdError::config(
                "analog mode needs zero-mean perturbations (sinusoidal or code)",
            ));
        }
        Ok(())
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub theta: ParamVector,
    /// Gradient approximation being integrated.
    pub g: Vec<f64>,
    /// Baseline cost (discrete mode).
    pub c0: f64,
    /// Highpassed cost modulation (analog mode).
    pub highpass: HighPass,
    pub step: u64,
    /// `G` as it was right before the most recent parameter update.
    pub last_update_g: Option<Vec<f64>>,
    pub updates: u64,
    perturbation: PerturbationState,
    theta_tilde: Vec<f64>,
    perturbed: Vec<f64>,
    batch: Vec<usize>,
    cursor: usize,
    sample_rng: ChaCha8Rng,
    cost_noise_rng: ChaCha8Rng,
    update_noise_rng: ChaCha8Rng,
    cost_noise_std: f64,
    scratch: Scratch,
}

impl TrainerState {
    /// Current perturbation vector θ̃.
    pub fn theta_tilde(&self) -> &[f64] {
        &self.theta_tilde
    }

    /// Sample indices currently presented.
    pub fn batch(&self) -> &[usize] {
        &self.batch
    }

    /// Standard deviation of the additive cost noise in cost units.
    pub fn cost_noise_std(&self) -> f64 {
        self.cost_noise_std
    }

    pub fn g_norm(&self) -> f64 {
        let g = self.last_update_g.as_ref().unwrap_or(&self.g);
        g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub cost: f64,
    pub tc: f64,
    pub updated: bool,
}

/// A training run: the (possibly defect-modified) network, its data, the
/// configuration and the evolving [`TrainerState`].
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    spec: NetworkSpec,
    data: &'a Dataset,
    cfg: TrainConfig,
    scheme: PerturbationScheme,
    state: TrainerState,
}

impl<'a> Trainer<'a> {
    /// New run with parameters from `init_params(spec, seed, init_scale)`.
    pub fn new(spec: &NetworkSpec, data: &'a Dataset, cfg: &TrainConfig, seed: u64) -> Result<Self> {
        let theta = init_params(spec, seed, cfg.init_scale)?;
        Self::with_params(spec, data, cfg, seed, theta)
    }

    pub fn with_params(
        spec: &NetworkSpec,
        data: &'a Dataset,
        cfg: &TrainConfig,
        seed: u64,
        theta: ParamVector,
    ) -> Result<Self> {
        cfg.validate()?;
        if theta.len() != spec.param_count() {
            return Err(MgdError::Length {
                expected: spec.param_count(),
                actual: theta.len(),
            });
        }
        if data.input_shape().len() != spec.input_shape().len()
            || data.output_len() != spec.output_size()
        {
            return Err(MgdError::Shape(format!(
                "dataset {} ({:?} -> {}) does not fit network ({:?} -> {})",
                data.name(),
                data.input_shape(),
                data.output_len(),
                spec.input_shape(),
                spec.output_size()
            )));
        }
        let spec = if cfg.imperfections.sigma_a > 0.0 {
            let defect_seed = cfg.imperfections.defect_seed.unwrap_or(seed);
            DefectTable::for_network(spec, cfg.imperfections.sigma_a, defect_seed)?.apply(spec)?
        } else {
            spec.clone()
        };
        // per-run code streams: distinct runs never share a random code sequence
        let mut scheme = cfg.scheme.clone();
        if let PerturbationKind::Random { seed: s } = &mut scheme.kind {
            *s = splitmix(*s ^ splitmix(seed));
        }
        let p = spec.param_count();
        let perturbation = scheme.start(p)?;
        let highpass = HighPass::new(cfg.clocks.tau_hp, cfg.clocks.dt);
        let mut trainer = Trainer {
            spec,
            data,
            cfg: cfg.clone(),
            scheme,
            state: TrainerState {
                theta,
                g: vec![0.0; p],
                c0: 0.0,
                highpass,
                step: 0,
                last_update_g: None,
                updates: 0,
                perturbation,
                theta_tilde: vec![0.0; p],
                perturbed: vec![0.0; p],
                batch: Vec::with_capacity(cfg.clocks.parallel_batch),
                cursor: 0,
                sample_rng: stream_rng(seed, STREAM_SAMPLING),
                cost_noise_rng: stream_rng(seed, STREAM_COST_NOISE),
                update_noise_rng: stream_rng(seed, STREAM_UPDATE_NOISE),
                cost_noise_std: 0.0,
                scratch: Scratch::default(),
            },
        };
        if cfg.imperfections.sigma_c > 0.0 {
            trainer.state.cost_noise_std =
                cfg.imperfections.sigma_c * trainer.cost_modulation_rms(COST_NOISE_PROBE_STEPS)?;
        }
        Ok(trainer)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn into_state(self) -> TrainerState {
        self.state
    }

    /// RMS of `C(θ + θ̃) − C(θ)` over `steps` probe steps at the current θ,
    /// using a fresh copy of the perturbation stream and cyclic samples
    /// starting from sample 0. Leaves the run state untouched.
    pub fn cost_modulation_rms(&self, steps: usize) -> Result<f64> {
        let p = self.spec.param_count();
        let mut pert = self.scheme.start(p)?;
        let mut tilde = vec![0.0; p];
        let mut perturbed = vec![0.0; p];
        let pb = self.cfg.clocks.parallel_batch;
        let n = self.data.len();
        let mut scratch = Scratch::default();
        let mut sum_sq = 0.0;
        for k in 0..steps {
            self.scheme.next_perturbation(&mut pert, &mut tilde)?;
            for ((q, t), d) in perturbed.iter_mut().zip(&self.state.theta[..]).zip(&tilde) {
                *q = t + d;
            }
            let mut tc = 0.0;
            for j in 0..pb {
                let (x, y) = self.data.sample((k * pb + j) % n);
                let c1 = cost_mse(self.spec.forward_with(&perturbed, x, &mut scratch)?, y)?;
                let c0 = cost_mse(self.spec.forward_with(&self.state.theta, x, &mut scratch)?, y)?;
                tc += c1 - c0;
            }
            sum_sq += tc * tc;
        }
        Ok((sum_sq / steps.max(1) as f64).sqrt())
    }

    fn load_samples(&mut self) {
        let st = &mut self.state;
        st.batch.clear();
        let n = self.data.len();
        for _ in 0..self.cfg.clocks.parallel_batch {
            let idx = match self.cfg.clocks.sampling {
                Sampling::Cyclic => {
                    let i = st.cursor % n;
                    st.cursor = (st.cursor + 1) % n;
                    i
                }
                Sampling::Random => st.sample_rng.random_range(0..n),
            };
            st.batch.push(idx);
        }
    }

    /// Summed cost of the presented samples at θ or θ + θ̃, plus cost noise.
    fn measure(&mut self, perturbed: bool) -> Result<f64> {
        let st = &mut self.state;
        let params: &[f64] = if perturbed { &st.perturbed } else { &st.theta };
        let mut c = 0.0;
        for &i in &st.batch {
            let (x, y) = self.data.sample(i);
            c += cost_mse(self.spec.forward_with(params, x, &mut st.scratch)?, y)?;
        }
        let c = apply_cost_noise(c, st.cost_noise_std, &mut st.cost_noise_rng);
        if !c.is_finite() {
            return Err(MgdError::NonFinite {
                step: st.step,
                what: "cost",
            });
        }
        Ok(c)
    }

    fn set_perturbation(&mut self, external: Option<&[f64]>) -> Result<()> {
        let st = &mut self.state;
        match external {
            Some(v) => {
                if v.len() != st.theta_tilde.len() {
                    return Err(MgdError::Length {
                        expected: st.theta_tilde.len(),
                        actual: v.len(),
                    });
                }
                st.theta_tilde.copy_from_slice(v);
            }
            None => self
                .scheme
                .next_perturbation(&mut st.perturbation, &mut st.theta_tilde)?,
        }
        for ((q, t), d) in st.perturbed.iter_mut().zip(&st.theta[..]).zip(&st.theta_tilde) {
            *q = t + d;
        }
        Ok(())
    }

    fn apply_update(&mut self) -> Result<()> {
        let st = &mut self.state;
        noisy_param_update(
            &mut st.theta,
            &st.g,
            self.cfg.clocks.eta,
            self.cfg.imperfections.sigma_theta,
            &mut st.update_noise_rng,
        );
        if st.theta.iter().any(|v| !v.is_finite()) {
            return Err(MgdError::NonFinite {
                step: st.step,
                what: "parameter",
            });
        }
        st.updates += 1;
        Ok(())
    }

    /// One step in the configured mode.
    pub fn step(&mut self) -> Result<StepReport> {
        match self.cfg.clocks.mode {
            Mode::Discrete => self.discrete_step(),
            Mode::Analog => self.analog_step(),
        }
    }

    pub fn discrete_step(&mut self) -> Result<StepReport> {
        self.discrete_step_inner(None)
    }

    /// Discrete step with an externally supplied perturbation vector in place
    /// of the scheme's (the scheme's stream is not advanced).
    pub fn discrete_step_with(&mut self, theta_tilde: &[f64]) -> Result<StepReport> {
        self.discrete_step_inner(Some(theta_tilde))
    }

    fn discrete_step_inner(&mut self, external: Option<&[f64]>) -> Result<StepReport> {
        let n = self.state.step;
        let tau_x = self.cfg.clocks.tau_x_steps();
        let tau_theta = self.cfg.clocks.tau_theta_steps();
        let new_sample = n % tau_x == 0;
        if new_sample {
            self.load_samples();
        }
        if new_sample || tau_theta.is_some_and(|t| n % t == 0) {
            self.state.c0 = self.measure(false)?;
        }
        self.set_perturbation(external)?;
        let cost = self.measure(true)?;
        let tc = cost - self.state.c0;
        let dth = self.scheme.delta_theta;
        let scale = tc / (dth * dth);
        for (g, d) in self.state.g.iter_mut().zip(&self.state.theta_tilde) {
            *g += scale * d;
        }
        let updated = tau_theta.is_some_and(|t| (n + 1) % t == 0);
        if updated {
            self.apply_update()?;
            let st = &mut self.state;
            match &mut st.last_update_g {
                Some(buf) => buf.copy_from_slice(&st.g),
                None => st.last_update_g = Some(st.g.clone()),
            }
            st.g.fill(0.0);
        }
        self.state.step += 1;
        Ok(StepReport { cost, tc, updated })
    }

    pub fn analog_step(&mut self) -> Result<StepReport> {
        let n = self.state.step;
        if n % self.cfg.clocks.tau_x_steps() == 0 {
            self.load_samples();
        }
        self.set_perturbation(None)?;
        let cost = self.measure(true)?;
        let tc = self.state.highpass.update(cost);
        let dt = self.cfg.clocks.dt;
        let dth = self.scheme.delta_theta;
        let lowpass = LowPass::new(self.cfg.clocks.tau_theta.unwrap_or(f64::INFINITY), dt);
        let scale = tc * dt / (dth * dth);
        for (g, d) in self.state.g.iter_mut().zip(&self.state.theta_tilde) {
            *g = lowpass.update(*g, scale * d);
        }
        self.apply_update()?;
        self.state.step += 1;
        Ok(StepReport {
            cost,
            tc,
            updated: true,
        })
    }

    /// Dataset-mean cost and accuracy at the current θ.
    pub fn evaluate(&self) -> Result<(f64, f64)> {
        let cost = self.spec.dataset_cost(&self.state.theta, self.data)?;
        let acc = accuracy(&self.spec, &self.state.theta, self.data)?;
        Ok((cost, acc))
    }

    fn record(&self, trace: &mut TrainingTrace) -> Result<TraceRecord> {
        let (cost, accuracy) = self.evaluate()?;
        let rec = TraceRecord {
            step: self.state.step,
            cost,
            accuracy,
            g_norm: self.state.g_norm(),
            checksum: self.state.theta.checksum(),
        };
        trace.push(rec);
        Ok(rec)
    }

    /// Steps until a stop condition, evaluating every `eval_every` steps.
    pub fn run(mut self) -> Result<TrainOutcome> {
        let stop = self.cfg.stop;
        let mut trace = TrainingTrace::new(stop.eval_every);
        let mut last = self.record(&mut trace)?;
        let mut reached = stop.reached(last.cost, last.accuracy).then_some(0);
        while reached.is_none() && self.state.step < stop.max_steps {
            self.step()?;
            let n = self.state.step;
            if n % stop.eval_every == 0 || n == stop.max_steps {
                last = self.record(&mut trace)?;
                if stop.reached(last.cost, last.accuracy) {
                    reached = Some(n);
                }
            }
        }
        let tau_p = self.scheme.tau_p as f64;
        Ok(TrainOutcome {
            converged: reached.is_some(),
            steps_to_threshold: reached,
            time_to_threshold: reached.map(|s| s as f64 / tau_p),
            final_cost: last.cost,
            final_accuracy: last.accuracy,
            trace,
            state: self.state,
        })
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub converged: bool,
    pub steps_to_threshold: Option<u64>,
    /// Steps to threshold in units of τp.
    pub time_to_threshold: Option<f64>,
    pub final_cost: f64,
    pub final_accuracy: f64,
    pub trace: TrainingTrace,
    pub state: TrainerState,
}

/// Initializes from `seed` and trains until a stop condition.
pub fn train(spec: &NetworkSpec, data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    Trainer::new(spec, data, cfg, seed)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parity_dataset;
    use crate::network::{Activation, Shape};
    use crate::oracle::{finite_diff_grad, FdMode};

    fn one_param_quadratic() -> (NetworkSpec, Dataset) {
        // y = w·x + b with x = 1, target 0 → C = (w + b)²
        let spec = NetworkSpec::new(
            Shape::flat(1),
            vec![crate::network::LayerSpec::dense(1, 1, Activation::Linear)],
        )
        .unwrap();
        let data = Dataset::new("q", Shape::flat(1), 1, vec![1.0], vec![0.0]).unwrap();
        (spec, data)
    }

    fn clocks(tau_theta: Option<f64>, tau_x: f64, eta: f64) -> ClockConfig {
        ClockConfig {
            tau_theta,
            tau_x,
            eta,
            ..Default::default()
        }
    }

    #[test]
    fn forward_difference_on_quadratic() {
        // (w, b); the first sequential step only touches w
        let (spec, data) = one_param_quadratic();
        let cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 0.1),
            PerturbationScheme::sequential(0.01, 1).unwrap(),
        );
        let mut t = Trainer::with_params(&spec, &data, &cfg, 0, ParamVector::new(vec![1.0, 0.0])).unwrap();
        let r = t.discrete_step().unwrap();
        assert!(r.updated);
        let g = t.state().last_update_g.as_ref().unwrap()[0];
        assert!((g - 2.01).abs() < 1e-9, "{g}");
        assert!((t.state().theta[0] - (1.0 - 0.1 * 2.01)).abs() < 1e-9);
        assert!(t.state().g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_perturbation_learns_nothing() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 5.0),
            PerturbationScheme::random(0, 0.01, 1).unwrap(),
        );
        let mut t = Trainer::new(&spec, &data, &cfg, 1).unwrap();
        let before = t.state().theta.clone();
        for _ in 0..10 {
            let r = t.discrete_step_with(&[0.0; 9]).unwrap();
            assert_eq!(r.tc, 0.0);
        }
        assert_eq!(t.state().theta, before);
    }

    #[test]
    fn sequential_sweep_is_forward_difference() {
        let spec = NetworkSpec::dense(&[1, 1, 1], Activation::Sigmoid).unwrap();
        assert_eq!(spec.param_count(), 4);
        let data = Dataset::new("s", Shape::flat(1), 1, vec![0.7], vec![0.2]).unwrap();
        let p = spec.param_count() as f64;
        let cfg = TrainConfig::new(
            clocks(Some(p), p, 0.0),
            PerturbationScheme::sequential(1e-3, 1).unwrap(),
        );
        let theta = init_params(&spec, 5, 1.0).unwrap();
        let fd = finite_diff_grad(&spec, &theta, &data, &[0], 1e-3, FdMode::Forward).unwrap();
        let mut t = Trainer::with_params(&spec, &data, &cfg, 0, theta).unwrap();
        for _ in 0..4 {
            t.discrete_step().unwrap();
        }
        let g = t.state().last_update_g.clone().unwrap();
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let mut cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 0.0),
            PerturbationScheme::random(3, 0.01, 1).unwrap(),
        );
        cfg.stop.max_steps = 500;
        let init = init_params(&spec, 2, 1.0).unwrap();
        let out = train(&spec, &data, &cfg, 2).unwrap();
        assert_eq!(out.state.theta, init);
        assert_eq!(out.state.step, 500);
    }

    #[test]
    fn update_moves_theta_by_exactly_minus_eta_g() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let cfg = TrainConfig::new(
            clocks(Some(3.0), 1.0, 0.7),
            PerturbationScheme::walsh(0.01, 1).unwrap(),
        );
        let mut t = Trainer::new(&spec, &data, &cfg, 4).unwrap();
        let before = t.state().theta.clone();
        for _ in 0..3 {
            t.discrete_step().unwrap();
        }
        let g = t.state().last_update_g.clone().unwrap();
        for i in 0..9 {
            assert_eq!(t.state().theta[i], before[i] - 0.7 * g[i]);
        }
    }

    #[test]
    fn infinite_tau_theta_never_updates() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let cfg = TrainConfig::new(
            clocks(None, 1.0, 10.0),
            PerturbationScheme::random(0, 0.01, 1).unwrap(),
        );
        let mut t = Trainer::new(&spec, &data, &cfg, 1).unwrap();
        let before = t.state().theta.clone();
        for _ in 0..200 {
            assert!(!t.discrete_step().unwrap().updated);
        }
        assert_eq!(t.state().theta, before);
        assert!(t.state().g_norm() > 0.0);
    }

    #[test]
    fn descent_on_convex_quadratic() {
        let (spec, data) = one_param_quadratic();
        let cfg = TrainConfig::new(
            clocks(Some(2.0), 2.0, 0.05),
            PerturbationScheme::sequential(1e-4, 1).unwrap(),
        );
        let mut t = Trainer::with_params(&spec, &data, &cfg, 0, ParamVector::new(vec![1.5, -0.5])).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let r = t.discrete_step().unwrap();
            if r.updated {
                let c = spec.dataset_cost(&t.state().theta, &data).unwrap();
                // monotone until the forward-difference bias floor (Δθ/2)²
                assert!(c <= last || c < 1e-8, "{c} > {last}");
                last = c;
            }
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn seeds_are_deterministic() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let mut cfg = TrainConfig::new(
            ClockConfig {
                eta: 2.0,
                sampling: Sampling::Random,
                ..Default::default()
            },
            PerturbationScheme::random(11, 0.01, 1).unwrap(),
        );
        cfg.imperfections.sigma_c = 0.5;
        cfg.imperfections.sigma_theta = 0.1;
        cfg.stop.max_steps = 2000;
        let a = train(&spec, &data, &cfg, 9).unwrap();
        let b = train(&spec, &data, &cfg, 9).unwrap();
        assert_eq!(a.trace, b.trace);
        let c = train(&spec, &data, &cfg, 10).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn zero_imperfections_match_ideal_bit_for_bit() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let mut cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 3.0),
            PerturbationScheme::random(1, 0.01, 1).unwrap(),
        );
        cfg.stop.max_steps = 3000;
        let ideal = train(&spec, &data, &cfg, 5).unwrap();
        cfg.imperfections = ImperfectionConfig {
            defect_seed: Some(77),
            ..Default::default()
        };
        let zeroed = train(&spec, &data, &cfg, 5).unwrap();
        assert_eq!(ideal.trace, zeroed.trace);
    }

    #[test]
    fn cost_noise_scale_comes_from_probe() {
        let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let mut cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 1.0),
            PerturbationScheme::random(1, 0.01, 1).unwrap(),
        );
        let ideal = Trainer::new(&spec, &data, &cfg, 3).unwrap();
        let rms = ideal.cost_modulation_rms(COST_NOISE_PROBE_STEPS).unwrap();
        assert!(rms > 0.0);
        cfg.imperfections.sigma_c = 2.0;
        let noisy = Trainer::new(&spec, &data, &cfg, 3).unwrap();
        assert!((noisy.state().cost_noise_std() - 2.0 * rms).abs() < 1e-15);
    }

    #[test]
    fn analog_constant_cost_gives_zero_modulation() {
        // first step: C(−dt) = C(0), so the highpass output starts at zero
        let spec = NetworkSpec::dense(&[1, 1], Activation::Linear).unwrap();
        let data = Dataset::new("c", Shape::flat(1), 1, vec![0.0], vec![0.0]).unwrap();
        let scheme = PerturbationScheme::sinusoidal(2, 0.3, 1.0, 0.01).unwrap();
        let cfg = TrainConfig::new(
            ClockConfig {
                mode: Mode::Analog,
                tau_theta: Some(5.0),
                tau_x: 1.0,
                eta: 0.0,
                ..Default::default()
            },
            scheme,
        );
        let mut t = Trainer::new(&spec, &data, &cfg, 0).unwrap();
        let r = t.analog_step().unwrap();
        assert_eq!(r.tc, 0.0);
        assert!(t.state().g.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn analog_homodyne_extracts_gradient_direction() {
        // C(w, b) = (w·1 + b)² around w=0.3, b=0.2 → ∂C/∂w = ∂C/∂b = 1.0
        let spec = NetworkSpec::dense(&[1, 1], Activation::Linear).unwrap();
        let data = Dataset::new("c", Shape::flat(1), 1, vec![1.0], vec![0.0]).unwrap();
        let scheme = PerturbationScheme::sinusoidal(2, 0.3, 1.0, 0.01).unwrap();
        let cfg = TrainConfig::new(
            ClockConfig {
                mode: Mode::Analog,
                tau_theta: Some(200.0),
                tau_x: 1.0,
                tau_hp: 10.0,
                eta: 0.0,
                ..Default::default()
            },
            scheme,
        );
        let mut t = Trainer::with_params(&spec, &data, &cfg, 0, ParamVector::new(vec![0.3, 0.2])).unwrap();
        for _ in 0..4000 {
            t.analog_step().unwrap();
        }
        let g = &t.state().g;
        let angle = crate::oracle::angle_between(g, &[1.0, 1.0]).unwrap();
        assert!(angle < 10.0, "{g:?} angle {angle}");
    }

    #[test]
    fn non_finite_cost_aborts() {
        let spec = NetworkSpec::dense(&[1, 1], Activation::Linear).unwrap();
        let data = Dataset::new("c", Shape::flat(1), 1, vec![1.0], vec![0.0]).unwrap();
        let cfg = TrainConfig::new(
            clocks(Some(1.0), 1.0, 1e300),
            PerturbationScheme::random(0, 0.01, 1).unwrap(),
        );
        let mut t = Trainer::with_params(&spec, &data, &cfg, 0, ParamVector::new(vec![1.0, 1.0])).unwrap();
        let err = (0..10).find_map(|_| t.discrete_step().err()).expect("should abort");
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn dataset_network_mismatch_rejected() {
        let spec = NetworkSpec::dense(&[3, 1], Activation::Sigmoid).unwrap();
        let data = parity_dataset(2).unwrap();
        let cfg = TrainConfig::new(ClockConfig::default(), PerturbationScheme::walsh(0.01, 1).unwrap());
        assert!(Trainer::new(&spec, &data, &cfg, 0).is_err());
    }
}
