use std::str::FromStr;

use crate::error::{MgdError, Result};
use crate::perturbation::PerturbationScheme;

use super::{ClockConfig, Mode, TrainConfig};

/// Classic optimizers expressed as MGD time-constant settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Sequential forward differences over all P parameters, then one update.
    FiniteDifference,
    /// Sequential perturbation with an update after every parameter.
    CoordinateDescent,
    /// Random ±Δθ codes, updating after every step.
    Spsa,
    /// Continuous sinusoidal perturbation with highpass/lowpass filtering.
    AnalogHomodyne,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::FiniteDifference,
        Algorithm::CoordinateDescent,
        Algorithm::Spsa,
        Algorithm::AnalogHomodyne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FiniteDifference => "finite_difference",
            Algorithm::CoordinateDescent => "coordinate_descent",
            Algorithm::Spsa => "spsa",
            Algorithm::AnalogHomodyne => "analog_homodyne",
        }
    }

    /// Configuration for a network with `p` parameters, with Δθ = 0.01,
    /// τp = 1 and η = 1.
    pub fn config(self, p: usize) -> Result<TrainConfig> {
        if p == 0 {
            return Err(MgdError::config("network has no parameters"));
        }
        let dtheta = 0.01;
        let pf = p as f64;
        let (clocks, scheme) = match self {
            Algorithm::FiniteDifference => (
                ClockConfig {
                    tau_theta: Some(pf),
                    tau_x: pf,
                    ..Default::default()
                },
                PerturbationScheme::sequential(dtheta, 1)?,
            ),
            Algorithm::CoordinateDescent => (
                ClockConfig::default(),
                PerturbationScheme::sequential(dtheta, 1)?,
            ),
            Algorithm::Spsa => (
                ClockConfig::default(),
                PerturbationScheme::random(0, dtheta, 1)?,
            ),
            Algorithm::AnalogHomodyne => (
                ClockConfig {
                    mode: Mode::Analog,
                    tau_theta: Some(1.0),
                    tau_x: 250.0,
                    tau_hp: 10.0,
                    dt: 1.0,
                    ..Default::default()
                },
                PerturbationScheme::sinusoidal(p, 0.3, 1.0, dtheta)?,
            ),
        };
        Ok(TrainConfig::new(clocks, scheme))
    }
}

impl FromStr for Algorithm {
    type Err = MgdError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| MgdError::UnknownPreset(s.to_string()))
    }
}

/// [`Algorithm::config`] looked up by name.
pub fn preset(name: &str, p: usize) -> Result<TrainConfig> {
    name.parse::<Algorithm>()?.config(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::PerturbationKind;

    #[test]
    fn finite_difference_settings() {
        let c = preset("finite_difference", 9).unwrap();
        assert_eq!(c.clocks.tau_theta, Some(9.0));
        assert_eq!(c.clocks.tau_x, 9.0);
        assert_eq!(c.scheme.kind, PerturbationKind::Sequential);
        assert_eq!(c.scheme.tau_p, 1);
    }

    #[test]
    fn coordinate_descent_is_fd_for_one_parameter() {
        assert_eq!(
            preset("coordinate_descent", 1).unwrap(),
            preset("finite_difference", 1).unwrap()
        );
    }

    #[test]
    fn spsa_uses_random_codes() {
        let c = preset("spsa", 5).unwrap();
        assert!(matches!(c.scheme.kind, PerturbationKind::Random { .. }));
        assert_eq!(c.clocks.tau_theta, Some(1.0));
    }

    #[test]
    fn unknown_name_is_an_error() {
        assert!(matches!(preset("adam", 3), Err(MgdError::UnknownPreset(_))));
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
    }
}
