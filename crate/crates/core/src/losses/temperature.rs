use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Temperature of the soft nearest neighbor loss as a function of the
/// zero-based training epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TemperatureSchedule {
    Fixed { temperature: f64 },
    /// `T = 1 / (eta + epoch)^gamma`.
    Annealing { eta: f64, gamma: f64 },
}

pub const DEFAULT_FIXED_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 0.55;

impl TemperatureSchedule {
    pub fn fixed() -> Self {
        TemperatureSchedule::Fixed {
            temperature: DEFAULT_FIXED_TEMPERATURE,
        }
    }

    pub fn annealing() -> Self {
        TemperatureSchedule::Annealing {
            eta: DEFAULT_ETA,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TemperatureSchedule::Fixed { temperature } if !(temperature > 0.0 && temperature.is_finite()) => {
                Err(Error::Argument(format!("fixed temperature must be positive, got {temperature}")))
            }
            TemperatureSchedule::Annealing { eta, gamma } if !(eta > 0.0 && gamma > 0.0) => {
                // eta = 0 would make epoch 0 divide by zero
                Err(Error::Argument(format!(
                    "annealing needs eta > 0 and gamma > 0, got eta={eta} gamma={gamma}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn temperature(&self, epoch: usize) -> f64 {
        match *self {
            TemperatureSchedule::Fixed { temperature } => temperature,
            TemperatureSchedule::Annealing { eta, gamma } => (eta + epoch as f64).powf(-gamma),
        }
    }

    pub fn is_annealing(&self) -> bool {
        matches!(self, TemperatureSchedule::Annealing { .. })
    }
}
