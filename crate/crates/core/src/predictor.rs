//! Impact prediction and output prescheduling.
//!
//! The approach velocity is estimated from the quantized proximity stream,
//! the measurement is extrapolated forward by the known input latency, and the
//! time of arrival at the threshold distance is predicted. Each output channel
//! is then issued early by exactly its own output latency so that the audio
//! and tactile onsets land on the predicted contact.

use std::collections::VecDeque;

use thiserror::Error;

use crate::control::TriggerMap;
use crate::plant::queue::{Channel, ScheduledEvent};

#[derive(Debug, Error, PartialEq)]
#[error("invalid predictor config: {0}")]
pub struct PredictorConfigError(pub String);

/// How touch events are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerMode {
    /// Predict contact and preschedule both channels.
    Predictive,
    /// Fire when the measured distance reaches the threshold (no lookahead).
    Reactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub mode: TriggerMode,
    pub d_threshold_mm: f64,
    pub input_latency_s: f64,
    pub tactile_latency_s: f64,
    pub audio_latency_s: f64,
    /// Minimum approach speed that arms a prediction (mm/s).
    pub v_min_mm_s: f64,
    pub ema_alpha: f64,
    /// Samples spanned by each raw velocity difference.
    pub velocity_window: usize,
    /// Samples averaged into the position estimate; 1 uses the raw reading.
    pub position_window: usize,
    /// Retreat above the threshold required before the next prediction (mm).
    pub rearm_distance_mm: f64,
    /// Extrapolate the measurement over the input latency.
    pub compensate_input_latency: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            mode: TriggerMode::Predictive,
            d_threshold_mm: 0.0,
            input_latency_s: 1.8e-3,
            tactile_latency_s: 2.6e-3,
            audio_latency_s: 5.0e-3,
            v_min_mm_s: 50.0,
            ema_alpha: 0.2,
            velocity_window: 48,
            position_window: 24,
            rearm_distance_mm: 2.0,
            compensate_input_latency: true,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), PredictorConfigError> {
        let bad = |m: &str| Err(PredictorConfigError(m.to_string()));
        let lat = [
            self.input_latency_s,
            self.tactile_latency_s,
            self.audio_latency_s,
        ];
        if lat.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return bad("latencies must be >= 0");
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            return bad("ema_alpha must be in (0, 1]");
        }
        if self.velocity_window == 0 || self.position_window == 0 {
            return bad("windows must be >= 1");
        }
        if !(self.v_min_mm_s > 0.0) {
            return bad("v_min must be > 0");
        }
        if !(self.rearm_distance_mm >= 0.0) {
            return bad("rearm distance must be >= 0");
        }
        if !self.d_threshold_mm.is_finite() {
            return bad("threshold must be finite");
        }
        Ok(())
    }

    pub fn latency(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Audio => self.audio_latency_s,
            Channel::Tactile => self.tactile_latency_s,
        }
    }
}

/// Velocity and position estimates from the quantized sample stream.
#[derive(Debug, Clone)]
pub struct MotionEstimator {
    alpha: f64,
    velocity_window: usize,
    position_window: usize,
    history: VecDeque<(f64, f64)>,
    v_est: f64,
}

impl MotionEstimator {
    pub fn new(ema_alpha: f64, velocity_window: usize, position_window: usize) -> Self {
        Self {
            alpha: ema_alpha,
            velocity_window,
            position_window,
            history: VecDeque::with_capacity(velocity_window.max(position_window) + 1),
            v_est: 0.0,
        }
    }

    pub fn from_config(config: &PredictorConfig) -> Self {
        Self::new(config.ema_alpha, config.velocity_window, config.position_window)
    }

    /// Smoothed approach velocity (mm/s, positive toward the surface).
    pub fn v_est(&self) -> f64 {
        self.v_est
    }

    /// A full velocity window of history has been seen.
    pub fn is_warm(&self) -> bool {
        self.history.len() > self.velocity_window
    }

    /// Feeds one sample and returns the updated velocity estimate. The first
    /// sample has no history and yields 0.
    pub fn estimate_velocity(&mut self, t: f64, d_meas: f64) -> f64 {
        self.history.push_back((t, d_meas));
        let cap = self.velocity_window.max(self.position_window) + 1;
        while self.history.len() > cap {
            self.history.pop_front();
        }
        let n = self.history.len() - 1;
        if n == 0 {
            return self.v_est;
        }
        let back = n.min(self.velocity_window);
        let (t_old, d_old) = self.history[n - back];
        let raw = (d_old - d_meas) / (t - t_old);
        self.v_est = self.alpha * raw + (1.0 - self.alpha) * self.v_est;
        self.v_est
    }

    /// Position at the latest sample time, averaging the last
    /// `position_window` readings and shifting the mean forward along the
    /// velocity estimate.
    pub fn position(&self) -> Option<f64> {
        let &(t_now, _) = self.history.back()?;
        let m = self.history.len().min(self.position_window);
        let (sum_t, sum_d) = self
            .history
            .iter()
            .rev()
            .take(m)
            .fold((0.0, 0.0), |(st, sd), &(t, d)| (st + t, sd + d));
        let (mean_t, mean_d) = (sum_t / m as f64, sum_d / m as f64);
        Some(mean_d - self.v_est * (t_now - mean_t))
    }
}

/// Outcome of [`predict_impact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    /// Predicted wall time of arrival at the threshold (s).
    Onset(f64),
    /// Latency-compensated position is already at or past the threshold.
    Immediate,
    /// Not approaching fast enough to predict.
    NotApproaching,
}

/// Predicts when the measured distance `d_meas` (observed `input_latency`
/// ago) reaches the threshold at constant velocity `v_est`.
pub fn predict_impact(config: &PredictorConfig, t_now: f64, d_meas: f64, v_est: f64) -> Prediction {
    if !(v_est >= config.v_min_mm_s) {
        return Prediction::NotApproaching;
    }
    let d_hat = if config.compensate_input_latency {
        d_meas - v_est * config.input_latency_s
    } else {
        d_meas
    };
    if d_hat <= config.d_threshold_mm {
        return Prediction::Immediate;
    }
    Prediction::Onset(t_now + (d_hat - config.d_threshold_mm) / v_est)
}

/// Audio and tactile events whose physical onsets both fall on
/// `intended_onset`.
pub fn preschedule(config: &PredictorConfig, intended_onset: f64, amplitude: f64) -> [ScheduledEvent; 2] {
    [Channel::Audio, Channel::Tactile].map(|channel| ScheduledEvent {
        channel,
        intended_onset,
        issue_time: intended_onset - config.latency(channel),
        amplitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Armed,
    /// Events for this approach have started firing; wait for retreat.
    Committed { onset: f64 },
}

/// What the engine should do with the predictor's pending events.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictorAction {
    Nothing,
    /// Replace any pending events with these.
    Schedule([ScheduledEvent; 2]),
    /// Drop pending events: the approach was abandoned.
    Cancel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorUpdate {
    pub v_est: f64,
    pub d_est: f64,
}

/// Arm / predict / commit / rearm state machine around the pure functions
/// above. One prediction per approach.
#[derive(Debug, Clone)]
pub struct Predictor {
    config: PredictorConfig,
    trigger: TriggerMap,
    estimator: MotionEstimator,
    phase: Phase,
    /// Onset of the events currently pending, if any.
    pending: Option<f64>,
}

impl Predictor {
    pub fn new(config: PredictorConfig, trigger: TriggerMap) -> Self {
        let estimator = MotionEstimator::from_config(&config);
        Self {
            config,
            trigger,
            estimator,
            phase: Phase::Armed,
            pending: None,
        }
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn is_armed(&self) -> bool {
        self.phase == Phase::Armed
    }

    pub fn v_est(&self) -> f64 {
        self.estimator.v_est()
    }

    /// Called by the engine when one of the pending events is issued: the
    /// prediction freezes and no further refinement happens.
    pub fn commit(&mut self) {
        if let Some(onset) = self.pending.take() {
            self.phase = Phase::Committed { onset };
        }
    }

    /// Processes a new sensor sample.
    pub fn on_sample(&mut self, t: f64, d_meas: f64) -> (PredictorUpdate, PredictorAction) {
        let v_est = self.estimator.estimate_velocity(t, d_meas);
        let d_est = self.estimator.position().unwrap_or(d_meas);
        let update = PredictorUpdate { v_est, d_est };

        if let Phase::Committed { onset } = self.phase {
            if t >= onset && d_meas > self.config.d_threshold_mm + self.config.rearm_distance_mm {
                self.phase = Phase::Armed;
            }
            return (update, PredictorAction::Nothing);
        }

        let amplitude = self.trigger.amplitude(v_est.max(0.0));
        match self.config.mode {
            TriggerMode::Reactive => {
                if d_meas <= self.config.d_threshold_mm {
                    self.pending = Some(t);
                    self.commit();
                    return (update, PredictorAction::Schedule(preschedule(&self.config, t, amplitude)));
                }
                (update, PredictorAction::Nothing)
            }
            // an estimate from a partial window is biased low and would push
            // the first onsets far out; don't let one of those get frozen
            TriggerMode::Predictive if !self.estimator.is_warm() => (update, PredictorAction::Nothing),
            TriggerMode::Predictive => match predict_impact(&self.config, t, d_est, v_est) {
                Prediction::Onset(onset) => {
                    // a refinement may not pull an issue time into the past;
                    // the pending pair is still on time, so keep it
                    let earliest = onset - self.config.audio_latency_s.max(self.config.tactile_latency_s);
                    if self.pending.is_some() && earliest < t {
                        return (update, PredictorAction::Nothing);
                    }
                    self.pending = Some(onset);
                    (update, PredictorAction::Schedule(preschedule(&self.config, onset, amplitude)))
                }
                Prediction::Immediate => {
                    self.pending = Some(t);
                    self.commit();
                    (update, PredictorAction::Schedule(preschedule(&self.config, t, amplitude)))
                }
                Prediction::NotApproaching => {
                    if self.pending.take().is_some() {
                        (update, PredictorAction::Cancel)
                    } else {
                        (update, PredictorAction::Nothing)
                    }
                }
            },
        }
    }
}
