use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{load_cifar10, load_idx_with_classes, nist7x7_dataset, parity_dataset, Dataset, Nist7x7Config};
use crate::error::{MgdError, Result};
use crate::imperfection::ImperfectionConfig;
use crate::network::{Activation, NetworkSpec};
use crate::perturbation::{PerturbationKind, PerturbationScheme};
use crate::trainer::{ClockConfig, Mode, Sampling, StopCondition, TrainConfig};

/// Version of the config schema this build reads.
pub const SCHEMA_VERSION: u32 = 1;

/// A complete experiment description, read from TOML.
///
/// ```toml
/// schema_version = 1
/// seeds = 20
///
/// [task]
/// name = "parity"
/// bits = 2
///
/// [network]
/// kind = "dense"
/// layers = [2, 2, 1]
///
/// [clocks]
/// eta = 5.0
///
/// [perturbation]
/// kind = "random"
///
/// [stop]
/// max_steps = 10000
/// accuracy_threshold = 1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub task: TaskConfig,
    pub network: NetworkConfig,
    #[serde(default)]
    pub clocks: ClocksSection,
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub imperfections: ImperfectionConfig,
    /// `eval_every` doubles as the trace recording stride.
    #[serde(default)]
    pub stop: StopCondition,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub angle: Option<AngleSection>,
}

fn default_init_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Parity {
        bits: usize,
    },
    Nist7x7 {
        samples_per_class: usize,
        #[serde(default)]
        pixel_flip_prob: f64,
        #[serde(default)]
        shift_range: usize,
        #[serde(default)]
        seed: u64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        #[serde(default)]
        test_images: Option<PathBuf>,
        #[serde(default)]
        test_labels: Option<PathBuf>,
        #[serde(default)]
        classes: Option<usize>,
        /// Keep only the first `limit` training samples.
        #[serde(default)]
        limit: Option<usize>,
    },
    Cifar10 {
        train: Vec<PathBuf>,
        #[serde(default)]
        test: Vec<PathBuf>,
        #[serde(default)]
        limit: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationName {
    #[default]
    Sigmoid,
    Relu,
    Linear,
}

impl From<ActivationName> for Activation {
    fn from(a: ActivationName) -> Self {
        match a {
            ActivationName::Sigmoid => Activation::Sigmoid,
            ActivationName::Relu => Activation::Relu,
            ActivationName::Linear => Activation::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkConfig {
    Dense {
        layers: Vec<usize>,
        #[serde(default)]
        activation: ActivationName,
    },
    FashionCnn,
    CifarCnn,
}

/// [`ClockConfig`] as written in a config file. `tau_theta` also accepts `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClocksSection {
    pub mode: Mode,
    #[serde(
        serialize_with = "ser_tau_theta",
        deserialize_with = "de_tau_theta"
    )]
    pub tau_theta: Option<f64>,
    pub tau_x: f64,
    pub tau_hp: f64,
    pub dt: f64,
    pub eta: f64,
    pub parallel_batch: usize,
    pub sampling: Sampling,
}

impl Default for ClocksSection {
    fn default() -> Self {
        ClockConfig::default().into()
    }
}

impl From<ClockConfig> for ClocksSection {
    fn from(c: ClockConfig) -> Self {
        ClocksSection {
            mode: c.mode,
            tau_theta: c.tau_theta,
            tau_x: c.tau_x,
            tau_hp: c.tau_hp,
            dt: c.dt,
            eta: c.eta,
            parallel_batch: c.parallel_batch,
            sampling: c.sampling,
        }
    }
}

impl From<ClocksSection> for ClockConfig {
    fn from(c: ClocksSection) -> Self {
        ClockConfig {
            mode: c.mode,
            tau_theta: c.tau_theta,
            tau_x: c.tau_x,
            tau_hp: c.tau_hp,
            dt: c.dt,
            eta: c.eta,
            parallel_batch: c.parallel_batch,
            sampling: c.sampling,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrInf {
    Int(i64),
    Float(f64),
    Text(String),
}

fn de_tau_theta<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    match NumberOrInf::deserialize(d)? {
        NumberOrInf::Int(i) => Ok(Some(i as f64)),
        NumberOrInf::Float(f) if f.is_infinite() && f > 0.0 => Ok(None),
        NumberOrInf::Float(f) => Ok(Some(f)),
        NumberOrInf::Text(s) if s == "inf" => Ok(None),
        NumberOrInf::Text(s) => Err(serde::de::Error::custom(format!(
            "tau_theta must be a number or \"inf\", got \"{s}\""
        ))),
    }
}

fn ser_tau_theta<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(t) => s.serialize_f64(*t),
        None => s.serialize_str("inf"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Sequential,
    Walsh,
    Random,
    Sinusoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub kind: SchemeName,
    #[serde(default = "default_delta_theta")]
    pub delta_theta: f64,
    #[serde(default = "default_tau_p")]
    pub tau_p: u64,
    /// Code seed for `random`; mixed with each run seed.
    #[serde(default)]
    pub seed: u64,
    /// Frequency band Δf for `sinusoidal`, in cycles per unit time.
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

fn default_delta_theta() -> f64 {
    0.01
}

fn default_tau_p() -> u64 {
    1
}

/// A seed count (seeds `0..n`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(1)
    }
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eta,
    TauTheta,
    SigmaC,
    SigmaTheta,
    SigmaA,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::TauTheta => "tau_theta",
            SweepAxis::SigmaC => "sigma_c",
            SweepAxis::SigmaTheta => "sigma_theta",
            SweepAxis::SigmaA => "sigma_a",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = MgdError;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::Eta,
            SweepAxis::TauTheta,
            SweepAxis::SigmaC,
            SweepAxis::SigmaTheta,
            SweepAxis::SigmaA,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| MgdError::config(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSection {
    /// Steps after which the angle to the true gradient is logged.
    pub checkpoints: Vec<u64>,
}

/// Training and optional test split.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| MgdError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative data paths are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MgdError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| MgdError::config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.task {
            TaskConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => {
                fix(train_images);
                fix(train_labels);
                test_images.iter_mut().for_each(fix);
                test_labels.iter_mut().for_each(fix);
            }
            TaskConfig::Cifar10 { train, test, .. } => {
                train.iter_mut().chain(test.iter_mut()).for_each(fix);
            }
            _ => {}
        }
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(MgdError::config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.seeds.to_vec().is_empty() {
            return Err(MgdError::config("seeds: at least one seed is required"));
        }
        if let TaskConfig::Idx {
            test_images,
            test_labels,
            ..
        } = &self.task
        {
            if test_images.is_some() != test_labels.is_some() {
                return Err(MgdError::config(
                    "task: test_images and test_labels must be given together",
                ));
            }
        }
        let spec = self.network_spec()?;
        self.train_config(spec.param_count())?.validate()?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(MgdError::config("sweep.values must not be empty"));
            }
        }
        if let Some(a) = &self.angle {
            if a.checkpoints.is_empty() || a.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MgdError::config(
                    "angle.checkpoints must be non-empty and strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        match &self.network {
            NetworkConfig::Dense { layers, activation } => {
                NetworkSpec::dense(layers, (*activation).into())
                    .map_err(|e| MgdError::config(format!("network: {e}")))
            }
            NetworkConfig::FashionCnn => Ok(NetworkSpec::fashion_cnn()),
            NetworkConfig::CifarCnn => Ok(NetworkSpec::cifar_cnn()),
        }
    }

    pub fn scheme(&self, p: usize) -> Result<PerturbationScheme> {
        let s = &self.perturbation;
        let wrap = |e: MgdError| MgdError::config(format!("perturbation: {e}"));
        match s.kind {
            SchemeName::Sequential => PerturbationScheme::sequential(s.delta_theta, s.tau_p),
            SchemeName::Walsh => PerturbationScheme::walsh(s.delta_theta, s.tau_p),
            SchemeName::Random => PerturbationScheme::random(s.seed, s.delta_theta, s.tau_p),
            SchemeName::Sinusoidal => {
                let bw = s.bandwidth.ok_or_else(|| {
                    MgdError::config("perturbation: sinusoidal needs `bandwidth`")
                })?;
                let scheme = PerturbationScheme::sinusoidal(p, bw, self.clocks.dt, s.delta_theta)?;
                PerturbationScheme::new(scheme.kind, s.delta_theta, s.tau_p)
            }
        }
        .map_err(wrap)
    }

    pub fn train_config(&self, p: usize) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            clocks: self.clocks.into(),
            scheme: self.scheme(p)?,
            imperfections: self.imperfections,
            stop: self.stop,
            init_scale: self.init_scale,
        };
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(MgdError::config("init_scale must be positive"));
        }
        if self.stop.max_steps == 0 {
            return Err(MgdError::config("stop.max_steps must be at least 1"));
        }
        cfg.validate()
            .map_err(|e| MgdError::config(e.to_string().replace("invalid configuration: ", "")))?;
        if matches!(cfg.scheme.kind, PerturbationKind::Sinusoidal { .. }) && cfg.clocks.mode == Mode::Discrete {
            return Err(MgdError::config(
                "perturbation: sinusoidal perturbations need mode = \"analog\"",
            ));
        }
        Ok(cfg)
    }

    pub fn load_data(&self) -> Result<TaskData> {
        match &self.task {
            TaskConfig::Parity { bits } => Ok(TaskData {
                train: parity_dataset(*bits)?,
                test: None,
            }),
            TaskConfig::Nist7x7 {
                samples_per_class,
                pixel_flip_prob,
                shift_range,
                seed,
            } => Ok(TaskData {
                train: nist7x7_dataset(&Nist7x7Config {
                    samples_per_class: *samples_per_class,
                    pixel_flip_prob: *pixel_flip_prob,
                    shift_range: *shift_range,
                    seed: *seed,
                })?,
                test: None,
            }),
            TaskConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                classes,
                limit,
            } => {
                let mut train = load_idx_with_classes(train_images, train_labels, *classes)?;
                if let Some(n) = limit {
                    train = train.truncated(*n);
                }
                let classes = Some(train.output_len());
                let test = match (test_images, test_labels) {
                    (Some(i), Some(l)) => Some(load_idx_with_classes(i, l, classes)?),
                    _ => None,
                };
                Ok(TaskData { train, test })
            }
            TaskConfig::Cifar10 { train, test, limit } => {
                let mut tr = load_cifar10(train)?;
                if let Some(n) = limit {
                    tr = tr.truncated(*n);
                }
                let te = if test.is_empty() {
                    None
                } else {
                    Some(load_cifar10(test)?)
                };
                Ok(TaskData { train: tr, test: te })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR: &str = r#"
schema_version = 1
seeds = 3

[task]
name = "parity"
bits = 2

[network]
kind = "dense"
layers = [2, 2, 1]

[clocks]
eta = 5
tau_theta = 1

[perturbation]
kind = "random"

[stop]
max_steps = 100
accuracy_threshold = 1.0
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(XOR).unwrap();
        assert_eq!(cfg.seeds.to_vec(), vec![0, 1, 2]);
        assert_eq!(cfg.clocks.eta, 5.0);
        let tc = cfg.train_config(9).unwrap();
        assert_eq!(tc.clocks.tau_theta, Some(1.0));
        assert_eq!(tc.scheme.delta_theta, 0.01);
        assert_eq!(tc.stop.max_steps, 100);
        assert_eq!(tc.stop.accuracy_threshold, Some(1.0));
    }

    #[test]
    fn infinite_tau_theta() {
        let s = XOR.replace("tau_theta = 1", "tau_theta = \"inf\"");
        let cfg = ExperimentConfig::from_toml_str(&s).unwrap();
        assert_eq!(cfg.clocks.tau_theta, None);
        let s = XOR.replace("tau_theta = 1", "tau_theta = \"forever\"");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s = XOR.replace("eta = 5", "eta = 5\nmomentum = 0.9");
        let err = ExperimentConfig::from_toml_str(&s).unwrap_err().to_string();
        assert!(err.contains("momentum"), "{err}");
        let s = XOR.replace("bits = 2", "bits = 2\ncolour = 1");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
    }

    #[test]
    fn fractional_tau_x_is_rejected() {
        let s = XOR.replace("tau_theta = 1", "tau_theta = 1\ntau_x = 0.5");
        let err = ExperimentConfig::from_toml_str(&s).unwrap_err().to_string();
        assert!(err.contains("tau_x"), "{err}");
    }

    #[test]
    fn schema_version_is_checked() {
        let s = XOR.replace("schema_version = 1", "schema_version = 7");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
    }

    #[test]
    fn sinusoidal_needs_bandwidth_and_analog_mode() {
        let s = XOR.replace("kind = \"random\"", "kind = \"sinusoidal\"");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
        let s = XOR.replace("kind = \"random\"", "kind = \"sinusoidal\"\nbandwidth = 0.3");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
        let s = s.replace("eta = 5", "eta = 5\nmode = \"analog\"");
        ExperimentConfig::from_toml_str(&s).unwrap();
    }

    #[test]
    fn seed_list_and_round_trip() {
        let s = XOR.replace("seeds = 3", "seeds = [4, 9]");
        let cfg = ExperimentConfig::from_toml_str(&s).unwrap();
        assert_eq!(cfg.seeds.to_vec(), vec![4, 9]);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fashion.toml");
        let s = XOR.replace(
            "name = \"parity\"\nbits = 2",
            "name = \"idx\"\ntrain_images = \"imgs.idx\"\ntrain_labels = \"lbls.idx\"",
        );
        std::fs::write(&path, s).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        match cfg.task {
            TaskConfig::Idx { train_images, .. } => assert_eq!(train_images, dir.path().join("imgs.idx")),
            _ => unreachable!(),
        }
    }
}
