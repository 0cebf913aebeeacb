//! Haptic control engine and plant simulator for a finger-worn
//! electromagnetic tactile I/O device.
//!
//! The crate is organised bottom-up:
//!
//! - [`landscape`]: force over (distance, coil current), its inversion, the
//!   zero-force curve and the static rejection statistic.
//! - [`sensing`]: infrared proximity model, calibration and quantization.
//! - [`actuator`]: first-order coil-current dynamics at the output rate.
//! - [`control`]: passive surface, force tracking, vibrotactile rendering.
//! - [`predictor`]: velocity estimation, impact prediction, prescheduling.
//! - [`plant`]: the multirate closed-loop simulator and its trace format.

// `!(x > 0.0)` is the NaN-rejecting form used throughout validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod control;
pub mod landscape;
pub mod numfmt;
pub mod plant;
pub mod predictor;
pub mod sensing;

pub use actuator::{ActuatorModel, ActuatorState};
pub use control::{Command, Controller, ControllerMode, TimeProfile, TriggerMap};
pub use landscape::{
    ForceLandscape, LandscapeError, Mpsr, SyntheticLandscapeParams, ZeroForceCurve,
};
pub use plant::{
    simulate, Channel, ContactModel, FingerModel, Intent, Scenario, ScheduledEvent, SimError,
    Trace,
};
pub use predictor::{Predictor, PredictorConfig, TriggerMode};
pub use sensing::{CalibrationLut, Sensor, SensorModel};
