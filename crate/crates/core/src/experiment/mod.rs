//! Seed ensembles, hyperparameter sweeps, the gradient-angle protocol and
//! the hardware wall-clock estimate, all driven by an [`ExperimentConfig`].
//!
//! Seeds run in parallel; every seed owns its trainer and RNG streams, so the
//! results do not depend on scheduling.

mod config;
mod stats;

pub use config::{
    ActivationName, AngleSection, ClocksSection, ExperimentConfig, NetworkConfig, PerturbationSection,
    SchemeName, Seeds, SweepAxis, SweepSection, TaskConfig, TaskData, SCHEMA_VERSION,
};
pub use stats::{max_eta, median, quantile_sorted, quartiles};

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::{accuracy, NetworkSpec};
use crate::oracle::{angle_between, full_batch_grad};
use crate::trainer::{TrainConfig, Trainer, TrainingTrace};

/// Inferences per step assumed by [`estimate_time`]: one baseline, one perturbed.
pub const DEFAULT_OVERHEAD: f64 = 2.0;

/// Wall-clock training time on hardware that takes `tau_p_seconds` per
/// perturbation: `overhead · steps · τp`.
pub fn estimate_time(steps: f64, tau_p_seconds: f64, overhead: f64) -> f64 {
    overhead * steps * tau_p_seconds
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub converged: bool,
    /// In units of τp.
    pub time_to_threshold: Option<f64>,
    pub final_accuracy: f64,
    pub final_cost: f64,
    pub test_accuracy: Option<f64>,
    /// The run hit a non-finite cost or parameter (sweeps only; runs abort).
    pub diverged: bool,
}

/// Ensemble statistics over seeds. Time quartiles use converged seeds only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub seeds: usize,
    pub converged_fraction: f64,
    pub median_time: Option<f64>,
    pub q1_time: Option<f64>,
    pub q3_time: Option<f64>,
    pub median_accuracy: f64,
    pub median_final_cost: f64,
}

impl EnsembleSummary {
    pub fn from_seeds(results: &[SeedResult]) -> Self {
        let times: Vec<f64> = results.iter().filter_map(|r| r.time_to_threshold).collect();
        let q = quartiles(&times);
        let acc: Vec<f64> = results.iter().map(|r| r.final_accuracy).collect();
        let cost: Vec<f64> = results.iter().map(|r| r.final_cost).collect();
        let n = results.len();
        EnsembleSummary {
            seeds: n,
            converged_fraction: if n == 0 {
                0.0
            } else {
                results.iter().filter(|r| r.converged).count() as f64 / n as f64
            },
            median_time: q.map(|q| q.1),
            q1_time: q.map(|q| q.0),
            q3_time: q.map(|q| q.2),
            median_accuracy: median(&acc).unwrap_or(f64::NAN),
            median_final_cost: median(&cost).unwrap_or(f64::NAN),
        }
    }

    pub const CSV_HEADER: &'static str =
        "seeds,converged_fraction,median_time,q1_time,q3_time,median_accuracy,median_final_cost";

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.seeds,
            self.converged_fraction,
            opt(self.median_time),
            opt(self.q1_time),
            opt(self.q3_time),
            self.median_accuracy,
            self.median_final_cost
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-seed results plus their ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub per_seed: Vec<SeedResult>,
    pub ensemble: EnsembleSummary,
}

impl ResultRecord {
    pub fn new(per_seed: Vec<SeedResult>) -> Self {
        let ensemble = EnsembleSummary::from_seeds(&per_seed);
        ResultRecord { per_seed, ensemble }
    }

    pub const SUMMARY_HEADER: &'static str =
        "seed,converged,time_to_threshold,final_accuracy,final_cost";

    /// `summary.csv` contents.
    pub fn summary_csv(&self) -> String {
        let mut s = format!("{}\n", Self::SUMMARY_HEADER);
        for r in &self.per_seed {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.seed,
                r.converged,
                opt(r.time_to_threshold),
                r.final_accuracy,
                r.final_cost
            );
        }
        s
    }

    /// `ensemble.csv` contents.
    pub fn ensemble_csv(&self) -> String {
        format!("{}\n{}\n", EnsembleSummary::CSV_HEADER, self.ensemble.csv_fields())
    }
}

/// Result of [`run`]: the record and each seed's trace.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub traces: Vec<(u64, TrainingTrace)>,
}

impl RunOutput {
    /// Writes `trace_<seed>.csv`, `summary.csv` and `ensemble.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| MgdError::io(dir, e))?;
        for (seed, trace) in &self.traces {
            let path = dir.join(format!("trace_{seed}.csv"));
            let mut buf = Vec::new();
            trace.write_csv(&mut buf).map_err(|e| MgdError::io(&path, e))?;
            write_file(&path, &buf)?;
        }
        write_file(&dir.join("summary.csv"), self.record.summary_csv().as_bytes())?;
        write_file(&dir.join("ensemble.csv"), self.record.ensemble_csv().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| MgdError::io(path, e))
}

/// Trains one seed. With `tolerate_divergence`, a numerical blow-up counts as
/// a failed seed instead of an error.
pub fn run_seed(
    spec: &NetworkSpec,
    data: &TaskData,
    cfg: &TrainConfig,
    seed: u64,
    tolerate_divergence: bool,
) -> Result<(SeedResult, TrainingTrace)> {
    let trainer = Trainer::new(spec, &data.train, cfg, seed)?;
    let trained_spec = trainer.spec().clone();
    match trainer.run() {
        Ok(out) => {
            let test_accuracy = match &data.test {
                Some(t) => Some(accuracy(&trained_spec, &out.state.theta, t)?),
                None => None,
            };
            Ok((
                SeedResult {
                    seed,
                    converged: out.converged,
                    time_to_threshold: out.time_to_threshold,
                    final_accuracy: out.final_accuracy,
                    final_cost: out.final_cost,
                    test_accuracy,
                    diverged: false,
                },
                out.trace,
            ))
        }
        Err(e) if tolerate_divergence && e.is_numerical() => Ok((
            SeedResult {
                seed,
                converged: false,
                time_to_threshold: None,
                final_accuracy: 0.0,
                final_cost: f64::INFINITY,
                test_accuracy: None,
                diverged: true,
            },
            TrainingTrace::new(cfg.stop.eval_every),
        )),
        Err(e) => Err(e),
    }
}

/// Runs every seed of a fully specified training setup in parallel.
pub fn run_ensemble(
    spec: &NetworkSpec,
    data: &TaskData,
    cfg: &TrainConfig,
    seeds: &[u64],
    tolerate_divergence: bool,
) -> Result<RunOutput> {
    let results: Vec<(SeedResult, TrainingTrace)> = seeds
        .par_iter()
        .map(|&s| run_seed(spec, data, cfg, s, tolerate_divergence))
        .collect::<Result<_>>()?;
    let (per_seed, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let traces = per_seed.iter().map(|r| r.seed).zip(traces).collect();
    Ok(RunOutput {
        record: ResultRecord::new(per_seed),
        traces,
    })
}

/// All seeds of `cfg`; a numerical abort in any seed is an error.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.network_spec()?;
    let data = cfg.load_data()?;
    let tc = cfg.train_config(spec.param_count())?;
    run_ensemble(&spec, &data, &tc, &cfg.seeds.to_vec(), false)
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub record: ResultRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Set when sweeping η: see [`max_eta`].
    pub max_eta: Option<f64>,
}

impl SweepReport {
    /// `sweep.csv` contents: `axis_value` followed by the ensemble columns.
    pub fn csv(&self) -> String {
        let mut s = format!("axis_value,{}\n", EnsembleSummary::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(s, "{},{}", r.value, r.record.ensemble.csv_fields());
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| MgdError::io(dir, e))?;
        write_file(&dir.join("sweep.csv"), self.csv().as_bytes())
    }
}

/// Applies one sweep value to a training setup.
pub fn apply_axis(cfg: &mut TrainConfig, axis: SweepAxis, value: f64) {
    match axis {
        SweepAxis::Eta => cfg.clocks.eta = value,
        SweepAxis::TauTheta => cfg.clocks.tau_theta = value.is_finite().then_some(value),
        SweepAxis::SigmaC => cfg.imperfections.sigma_c = value,
        SweepAxis::SigmaTheta => cfg.imperfections.sigma_theta = value,
        SweepAxis::SigmaA => cfg.imperfections.sigma_a = value,
    }
}

/// Ensemble per sweep value with a fully specified setup. Diverging seeds
/// count as not converged.
pub fn sweep_ensemble(
    spec: &NetworkSpec,
    data: &TaskData,
    base: &TrainConfig,
    seeds: &[u64],
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(MgdError::config("sweep needs at least one value"));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        apply_axis(&mut cfg, axis, v);
        cfg.validate()?;
        let out = run_ensemble(spec, data, &cfg, seeds, true)?;
        rows.push(SweepRow {
            value: v,
            record: out.record,
        });
    }
    let max_eta = (axis == SweepAxis::Eta).then(|| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.value, r.record.ensemble.converged_fraction))
            .collect();
        max_eta(&pts)
    });
    Ok(SweepReport {
        axis,
        rows,
        max_eta: max_eta.flatten(),
    })
}

/// Sweeps `axis` over `values` with everything else taken from `cfg`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepReport> {
    let spec = cfg.network_spec()?;
    let data = cfg.load_data()?;
    let tc = cfg.train_config(spec.param_count())?;
    sweep_ensemble(&spec, &data, &tc, &cfg.seeds.to_vec(), axis, values)
}

/// Angle statistics at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRow {
    pub step: u64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleReport {
    pub rows: Vec<AngleRow>,
    /// `(seed, angles at each checkpoint)`.
    pub per_seed: Vec<(u64, Vec<f64>)>,
}

impl AngleReport {
    /// `angle.csv` contents: `step,median,q1,q3`.
    pub fn csv(&self) -> String {
        let mut s = String::from("step,median,q1,q3\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.step, r.median, r.q1, r.q3);
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| MgdError::io(dir, e))?;
        write_file(&dir.join("angle.csv"), self.csv().as_bytes())
    }
}

/// Angle in degrees between the accumulated `G` and the full-dataset gradient
/// at the initial parameters, after each checkpoint step. The parameters are
/// never updated (`τθ = ∞` is forced).
pub fn angle_seed(
    spec: &NetworkSpec,
    data: &Dataset,
    cfg: &TrainConfig,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Vec<f64>> {
    let mut cfg = cfg.clone();
    cfg.clocks.tau_theta = None;
    let mut t = Trainer::new(spec, data, &cfg, seed)?;
    let truth = full_batch_grad(t.spec(), &t.state().theta, data)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while t.state().step < c {
            t.step()?;
        }
        out.push(angle_between(&t.state().g, &truth)?);
    }
    Ok(out)
}

pub fn angle_ensemble(
    spec: &NetworkSpec,
    data: &Dataset,
    cfg: &TrainConfig,
    seeds: &[u64],
    checkpoints: &[u64],
) -> Result<AngleReport> {
    let per_seed: Vec<(u64, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| Ok((s, angle_seed(spec, data, cfg, s, checkpoints)?)))
        .collect::<Result<_>>()?;
    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let v: Vec<f64> = per_seed.iter().map(|(_, a)| a[k]).collect();
            let (q1, median, q3) = quartiles(&v).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            AngleRow { step, median, q1, q3 }
        })
        .collect();
    Ok(AngleReport { rows, per_seed })
}

/// The angle protocol with checkpoints from `[angle]` (default 10, 100, 1000, 10000).
pub fn angle(cfg: &ExperimentConfig) -> Result<AngleReport> {
    let spec = cfg.network_spec()?;
    let data = cfg.load_data()?;
    let tc = cfg.train_config(spec.param_count())?;
    let checkpoints = cfg
        .angle
        .as_ref()
        .map(|a| a.checkpoints.clone())
        .unwrap_or_else(|| vec![10, 100, 1000, 10_000]);
    angle_ensemble(&spec, &data.train, &tc, &cfg.seeds.to_vec(), &checkpoints)
}
