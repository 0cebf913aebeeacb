//! Controllers evaluated on every new sensor sample.
//!
//! There is no force sensor: every mode is feedforward through the landscape,
//! turning a distance estimate into a coil-current command.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::landscape::{ForceLandscape, LandscapeError, ZeroForceCurve};

/// Highest vibrotactile frequency the magnet can render (Hz).
pub const MAX_VIBRO_HZ: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("vibro frequency {0} Hz exceeds {MAX_VIBRO_HZ} Hz")]
    VibroTooFast(f64),
    #[error("invalid trigger map: {0}")]
    InvalidTrigger(String),
    #[error("invalid profile {0:?}: expected `const V`, `step BEFORE AFTER AT_MS` or `sine OFFSET AMPLITUDE FREQ_HZ`")]
    InvalidProfile(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
}

/// Scalar function of time used for force targets and open-loop currents.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    Step { before: f64, after: f64, at_s: f64 },
    Sine { offset: f64, amplitude: f64, freq_hz: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant(v) => v,
            TimeProfile::Step { before, after, at_s } => {
                if t < at_s {
                    before
                } else {
                    after
                }
            }
            TimeProfile::Sine {
                offset,
                amplitude,
                freq_hz,
            } => offset + amplitude * (2.0 * PI * freq_hz * t).sin(),
        }
    }
}

impl FromStr for TimeProfile {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ControlError::InvalidProfile(s.to_string());
        let words: Vec<&str> = s.split_whitespace().collect();
        let nums = words
            .iter()
            .skip(1)
            .map(|w| w.parse::<f64>().map_err(|_| err()))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(err());
        }
        match (words.first().copied(), nums.as_slice()) {
            (Some("const"), &[v]) => Ok(TimeProfile::Constant(v)),
            (Some("step"), &[before, after, at_ms]) => Ok(TimeProfile::Step {
                before,
                after,
                at_s: at_ms * 1e-3,
            }),
            (Some("sine"), &[offset, amplitude, freq_hz]) => Ok(TimeProfile::Sine {
                offset,
                amplitude,
                freq_hz,
            }),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant(v) => write!(f, "const {v}"),
            TimeProfile::Step { before, after, at_s } => {
                write!(f, "step {before} {after} {}", at_s * 1e3)
            }
            TimeProfile::Sine {
                offset,
                amplitude,
                freq_hz,
            } => write!(f, "sine {offset} {amplitude} {freq_hz}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerMode {
    /// Cancel all magnetic force by following the zero-force curve.
    PassiveSurface,
    /// Render a force target in Newtons.
    ForceTrack(TimeProfile),
    /// `F_dc + amplitude·sin(2πft)` in Newtons.
    Vibro {
        f_dc: f64,
        amplitude: f64,
        freq_hz: f64,
    },
    /// Drive a current profile directly, ignoring distance.
    OpenLoop(TimeProfile),
}

impl ControllerMode {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerMode::PassiveSurface => "passive_surface",
            ControllerMode::ForceTrack(_) => "force_track",
            ControllerMode::Vibro { .. } => "vibro",
            ControllerMode::OpenLoop(_) => "open_loop",
        }
    }
}

/// Current command produced by one controller update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub i_cmd: f64,
    /// Force target was outside the achievable range at this distance.
    pub saturated: bool,
    /// Distance estimate was outside the landscape span and got clamped.
    pub distance_clamped: bool,
}

#[derive(Debug, Clone)]
pub struct Controller {
    mode: ControllerMode,
    zero_curve: Option<ZeroForceCurve>,
}

impl Controller {
    pub fn new(mode: ControllerMode, landscape: &ForceLandscape) -> Result<Self, ControlError> {
        if let ControllerMode::Vibro { freq_hz, .. } = mode {
            if !(0.0..=MAX_VIBRO_HZ).contains(&freq_hz) {
                return Err(ControlError::VibroTooFast(freq_hz));
            }
        }
        let zero_curve = match mode {
            ControllerMode::PassiveSurface => Some(landscape.zero_force_curve()?),
            _ => None,
        };
        Ok(Self { mode, zero_curve })
    }

    pub fn mode(&self) -> &ControllerMode {
        &self.mode
    }

    /// Force target at time `t`, if the mode renders one.
    pub fn force_target(&self, t: f64) -> Option<f64> {
        match &self.mode {
            ControllerMode::PassiveSurface => Some(0.0),
            ControllerMode::ForceTrack(p) => Some(p.value(t)),
            ControllerMode::Vibro {
                f_dc,
                amplitude,
                freq_hz,
            } => Some(f_dc + amplitude * (2.0 * PI * freq_hz * t).sin()),
            ControllerMode::OpenLoop(_) => None,
        }
    }

    /// One update from the distance estimate `d_est` at time `t`.
    pub fn update(&self, t: f64, d_est: f64, landscape: &ForceLandscape) -> Command {
        let (lo, hi) = landscape.distance_span();
        let d = d_est.clamp(lo, hi);
        let distance_clamped = d != d_est;
        let (i_cmd, saturated) = match (&self.mode, &self.zero_curve) {
            (ControllerMode::PassiveSurface, Some(curve)) => (curve.current_at(d), false),
            (ControllerMode::OpenLoop(p), _) => (p.value(t), false),
            _ => {
                let target = self.force_target(t).expect("force modes have a target");
                match landscape.invert_current(d, target) {
                    Ok(i) => (i, false),
                    Err(LandscapeError::Saturated { current_a, .. }) => (current_a, true),
                    Err(e) => unreachable!("distance clamped into span: {e}"),
                }
            }
        };
        Command {
            i_cmd,
            saturated,
            distance_clamped,
        }
    }
}

/// Maps approach speed at contact to a trigger amplitude in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerMap {
    pub v_min: f64,
    pub v_ref: f64,
    pub gamma: f64,
}

impl Default for TriggerMap {
    fn default() -> Self {
        Self {
            v_min: 50.0,
            v_ref: 1050.0,
            gamma: 1.0,
        }
    }
}

impl TriggerMap {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(0.0 < self.v_min && self.v_min < self.v_ref) {
            return Err(ControlError::InvalidTrigger("need 0 < v_min < v_ref".into()));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(ControlError::InvalidTrigger("gamma must be > 0".into()));
        }
        Ok(())
    }

    pub fn amplitude(&self, v_contact: f64) -> f64 {
        if !(v_contact >= self.v_min) {
            return 0.0;
        }
        ((v_contact - self.v_min) / (self.v_ref - self.v_min))
            .powf(self.gamma)
            .clamp(0.0, 1.0)
    }
}
