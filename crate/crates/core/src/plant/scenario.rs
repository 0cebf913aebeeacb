use crate::actuator::ActuatorModel;
use crate::control::{ControllerMode, TriggerMap};
use crate::landscape::ForceLandscape;
use crate::predictor::PredictorConfig;
use crate::sensing::SensorModel;

use super::physics::{ContactModel, FingerModel};

/// Traces print times with six significant digits; below 10 s that still
/// resolves a 96 kHz tick.
pub const MAX_DURATION_S: f64 = 9.999;

/// Everything one simulation run needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub landscape: ForceLandscape,
    pub sensor: SensorModel,
    pub actuator: ActuatorModel,
    pub finger: FingerModel,
    pub contact: ContactModel,
    pub controller: ControllerMode,
    pub trigger: TriggerMap,
    /// `None` disables touch events entirely.
    pub predictor: Option<PredictorConfig>,
    pub duration_s: f64,
    pub seed: u64,
    /// Record every n-th physics tick (event ticks are always recorded).
    pub trace_decimation: u64,
}

impl Scenario {
    /// Default devices around the given landscape: passive surface, finger
    /// holding at 20 mm, no predictor, 100 ms.
    pub fn new(landscape: ForceLandscape) -> Self {
        let (i_min, i_max) = landscape.current_span();
        Self {
            landscape,
            sensor: SensorModel::default(),
            actuator: ActuatorModel {
                i_min,
                i_max,
                ..Default::default()
            },
            finger: FingerModel::default(),
            contact: ContactModel::default(),
            controller: ControllerMode::PassiveSurface,
            trigger: TriggerMap::default(),
            predictor: None,
            duration_s: 0.1,
            seed: 0,
            trace_decimation: 1,
        }
    }

    /// Physics ticks per sensor sample.
    pub fn sensor_every(&self) -> u64 {
        (self.actuator.output_rate_hz / self.sensor.rate_hz).round() as u64
    }

    pub fn ticks(&self) -> u64 {
        (self.duration_s * self.actuator.output_rate_hz).round() as u64
    }

    /// Every problem found, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.duration_s > 0.0 && self.duration_s <= MAX_DURATION_S) {
            out.push(format!(
                "run.duration_s must be in (0, {MAX_DURATION_S}] s, got {}",
                self.duration_s
            ));
        }
        if self.trace_decimation == 0 {
            out.push("run.trace_decimation must be >= 1".into());
        }
        if let Err(e) = self.sensor.validate() {
            out.push(format!("sensor: {e}"));
        }
        if let Err(e) = self.actuator.validate() {
            out.push(format!("actuator: {e}"));
        }
        if let Err(e) = self.finger.validate() {
            out.push(format!("finger: {e}"));
        }
        if let Err(e) = self.contact.validate() {
            out.push(format!("finger: {e}"));
        }
        if let Err(e) = self.trigger.validate() {
            out.push(format!("controller: {e}"));
        }
        if let Some(p) = &self.predictor {
            if let Err(e) = p.validate() {
                out.push(format!("predictor: {e}"));
            }
        }
        if self.sensor.rate_hz > 0.0 && self.actuator.output_rate_hz > 0.0 {
            let ratio = self.actuator.output_rate_hz / self.sensor.rate_hz;
            if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 {
                out.push(format!(
                    "actuator.output_rate_hz ({}) must be an integer multiple of sensor.rate_hz ({})",
                    self.actuator.output_rate_hz, self.sensor.rate_hz
                ));
            }
        }
        let (lo, hi) = self.landscape.current_span();
        if self.actuator.i_min < lo || self.actuator.i_max > hi {
            out.push(format!(
                "actuator current range [{}, {}] A exceeds landscape current span [{lo}, {hi}] A",
                self.actuator.i_min, self.actuator.i_max
            ));
        }
        out
    }
}
