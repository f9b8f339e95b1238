//! Adiabatic time schedules that scale source strengths.
//!
//! Schedules multiply the whole current of a loop or solenoid uniformly, so
//! a closed current stays divergence-free at every instant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-C1 multiplier applied to a source strength.
///
/// The value is `amplitude_initial` for t <= t_start and `amplitude_final`
/// for t >= t_end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeSchedule {
    Constant {
        amplitude: f64,
    },
    LinearRamp {
        t_start: f64,
        t_end: f64,
        amplitude_initial: f64,
        amplitude_final: f64,
    },
    /// Cubic smoothstep between the amplitudes; C1 everywhere.
    SmoothstepRamp {
        t_start: f64,
        t_end: f64,
        amplitude_initial: f64,
        amplitude_final: f64,
    },
}

impl TimeSchedule {
    pub const ONE: TimeSchedule = TimeSchedule::Constant { amplitude: 1.0 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeSchedule::Constant { .. } => Ok(()),
            TimeSchedule::LinearRamp { t_start, t_end, .. }
            | TimeSchedule::SmoothstepRamp { t_start, t_end, .. } => {
                if t_end <= t_start {
                    Err(Error::InvalidInput(format!(
                        "schedule needs t_end > t_start, got [{t_start}, {t_end}]"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Multiplier at time t.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeSchedule::Constant { amplitude } => amplitude,
            TimeSchedule::LinearRamp {
                t_start,
                t_end,
                amplitude_initial,
                amplitude_final,
            } => {
                let u = ((t - t_start) / (t_end - t_start)).clamp(0.0, 1.0);
                amplitude_initial + (amplitude_final - amplitude_initial) * u
            }
            TimeSchedule::SmoothstepRamp {
                t_start,
                t_end,
                amplitude_initial,
                amplitude_final,
            } => {
                let u = ((t - t_start) / (t_end - t_start)).clamp(0.0, 1.0);
                let s = u * u * (3.0 - 2.0 * u);
                amplitude_initial + (amplitude_final - amplitude_initial) * s
            }
        }
    }

    /// Largest |value| the schedule can take.
    pub fn max_abs(&self) -> f64 {
        match *self {
            TimeSchedule::Constant { amplitude } => amplitude.abs(),
            TimeSchedule::LinearRamp {
                amplitude_initial,
                amplitude_final,
                ..
            }
            | TimeSchedule::SmoothstepRamp {
                amplitude_initial,
                amplitude_final,
                ..
            } => amplitude_initial.abs().max(amplitude_final.abs()),
        }
    }

    /// Ramp duration, if the schedule ramps at all.
    pub fn ramp_window(&self) -> Option<(f64, f64)> {
        match *self {
            TimeSchedule::Constant { .. } => None,
            TimeSchedule::LinearRamp { t_start, t_end, .. }
            | TimeSchedule::SmoothstepRamp { t_start, t_end, .. } => Some((t_start, t_end)),
        }
    }
}

impl Default for TimeSchedule {
    fn default() -> Self {
        TimeSchedule::ONE
    }
}
