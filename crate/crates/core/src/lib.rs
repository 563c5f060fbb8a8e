//! Multiplexed gradient descent (MGD).
//!
//! Train a network the way a chip-in-the-loop controller would: perturb every
//! parameter at once with distinguishable signals, watch only the scalar cost,
//! and recover each parameter's gradient share by correlating the cost change
//! with its own perturbation. No backpropagation and no model of the hardware
//! are needed.
//!
//! ```
//! use mgd::{data::parity_dataset, network::{Activation, NetworkSpec}, trainer};
//!
//! let spec = NetworkSpec::dense(&[2, 2, 1], Activation::Sigmoid)?;
//! let data = parity_dataset(2)?;
//! let mut cfg = trainer::preset("spsa", spec.param_count())?;
//! cfg.clocks.eta = 0.5;
//! cfg.stop.max_steps = 20_000;
//! let out = trainer::train(&spec, &data, &cfg, 1)?;
//! let start = out.trace.records()[0].cost;
//! assert!(out.final_cost < start);
//! # Ok::<(), mgd::MgdError>(())
//! ```

pub mod data;
pub mod error;
pub mod experiment;
pub mod imperfection;
pub mod network;
pub mod oracle;
pub mod perturbation;
pub mod trainer;

pub use error::{MgdError, Result};
pub use network::{NetworkSpec, ParamVector};
pub use perturbation::PerturbationScheme;
pub use trainer::{train, TrainConfig, TrainOutcome, Trainer};
