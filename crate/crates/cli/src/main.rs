use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgd::experiment::{self, ExperimentConfig, Seeds, SweepAxis, DEFAULT_OVERHEAD};
use mgd::MgdError;

/// Multiplexed gradient descent experiment runner.
#[derive(Parser)]
#[command(name = "mgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write traces and summaries.
    Run(Common),
    /// Repeat the ensemble for each value of one hyperparameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// eta, tau_theta, sigma_c, sigma_theta or sigma_a; overrides [sweep].
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values; overrides [sweep].
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Log the angle between accumulated G and the true gradient (τθ = ∞).
    Angle {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step checkpoints; overrides [angle].
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
    },
    /// Hardware wall-clock estimate: overhead · steps · τp.
    EstimateTime {
        #[arg(long)]
        steps: f64,
        /// Seconds per perturbation step.
        #[arg(long)]
        tau_p: f64,
        #[arg(long, default_value_t = DEFAULT_OVERHEAD)]
        overhead: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output_dir` from the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace recording stride in steps.
    #[arg(long)]
    stride: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), MgdError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seeds = Seeds::List(vec![s]);
        }
        if let Some(s) = self.stride {
            cfg.stop.eval_every = s;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x}"))
}

fn execute(cli: Cli) -> Result<(), MgdError> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = common.load()?;
            let res = experiment::run(&cfg)?;
            res.write(&out)?;
            let e = &res.record.ensemble;
            println!(
                "seeds={} converged_fraction={} median_time={} median_accuracy={} -> {}",
                e.seeds,
                e.converged_fraction,
                fmt_opt(e.median_time),
                e.median_accuracy,
                out.display()
            );
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let (cfg, out) = common.load()?;
            let axis = match (axis, &cfg.sweep) {
                (Some(a), _) => a.parse::<SweepAxis>()?,
                (None, Some(s)) => s.axis,
                (None, None) => return Err(MgdError::Config("sweep: no axis given".into())),
            };
            let values = match (values, &cfg.sweep) {
                (Some(v), _) => v,
                (None, Some(s)) => s.values.clone(),
                (None, None) => return Err(MgdError::Config("sweep: no values given".into())),
            };
            let rep = experiment::sweep(&cfg, axis, &values)?;
            rep.write(&out)?;
            for r in &rep.rows {
                println!(
                    "{}={} converged_fraction={} median_time={}",
                    axis.name(),
                    r.value,
                    r.record.ensemble.converged_fraction,
                    fmt_opt(r.record.ensemble.median_time)
                );
            }
            if axis == SweepAxis::Eta {
                println!("max_eta={}", fmt_opt(rep.max_eta));
            }
        }
        Command::Angle {
            common,
            checkpoints,
        } => {
            let (mut cfg, out) = common.load()?;
            if let Some(c) = checkpoints {
                cfg.angle = Some(experiment::AngleSection { checkpoints: c });
                cfg.validate()?;
            }
            let rep = experiment::angle(&cfg)?;
            rep.write(&out)?;
            for r in &rep.rows {
                println!("step={} median={:.3} q1={:.3} q3={:.3}", r.step, r.median, r.q1, r.q3);
            }
        }
        Command::EstimateTime {
            steps,
            tau_p,
            overhead,
        } => {
            for (name, v) in [("steps", steps), ("tau-p", tau_p), ("overhead", overhead)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(MgdError::Config(format!("--{name} must be positive, got {v}")));
                }
            }
            println!("{}", experiment::estimate_time(steps, tau_p, overhead));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
