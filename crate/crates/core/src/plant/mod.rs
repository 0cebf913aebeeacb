//! Deterministic closed-loop plant simulator: finger and keystone dynamics,
//! delayed sensing, controller and predictor updates, actuator lag, and the
//! prescheduled event queue, all recorded into a [`Trace`].

pub mod engine;
pub mod physics;
pub mod queue;
pub mod scenario;
pub mod trace;

pub use engine::{channel_events, magnetic_force, simulate, SimError};
pub use physics::{step_physics, BodyState, ContactModel, FingerModel, Intent};
pub use queue::{Channel, DueEvent, EventId, EventQueue, ScheduledEvent};
pub use scenario::Scenario;
pub use trace::{EventRecord, Summary, Trace, TraceError, TraceRow};
