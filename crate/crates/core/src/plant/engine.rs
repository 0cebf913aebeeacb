//! The multirate loop. One clock at the actuator output rate drives
//! everything; the sensor publishes every `output_rate / sensor_rate` ticks and
//! the controller and predictor run on each publication.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actuator::ActuatorState;
use crate::control::{ControlError, Controller};
use crate::landscape::ForceLandscape;
use crate::predictor::{MotionEstimator, Predictor, PredictorAction, PredictorConfig};
use crate::sensing::{Sensor, SensorError};

use super::physics::step_physics;
use super::queue::{Channel, EventId, EventQueue};
use super::scenario::Scenario;
use super::trace::{EventRecord, Summary, Trace, TraceRow};

/// Heights beyond this are treated as numeric blow-up (mm).
pub const DIVERGENCE_LIMIT_MM: f64 = 1000.0;

/// Width over which the force fades to zero above the calibrated span (mm).
pub const FADE_OUT_MM: f64 = 1.0;

// absorbs rounding when an issue time lands exactly on a tick
const TICK_EPS_S: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    InvalidScenario(Vec<String>),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error("simulation diverged at t = {t_ms} ms: height {d_mm} mm")]
    Diverged { t_ms: f64, d_mm: f64 },
}

/// Magnetic force on the keystone at height `d` with coil current `current`.
///
/// Below the calibrated span (penetration) the lowest row is used; above it
/// the top row fades linearly to zero over [`FADE_OUT_MM`]. Currents are
/// clamped to the grid.
pub fn magnetic_force(landscape: &ForceLandscape, d: f64, current: f64) -> f64 {
    let (d_lo, d_hi) = landscape.distance_span();
    let (i_lo, i_hi) = landscape.current_span();
    let i = current.clamp(i_lo, i_hi);
    let at = |d: f64| landscape.force_at(d, i).expect("clamped into span");
    if d > d_hi {
        let fade = (1.0 - (d - d_hi) / FADE_OUT_MM).max(0.0);
        at(d_hi) * fade
    } else {
        at(d.max(d_lo))
    }
}

/// Runs `scenario` to completion. Deterministic for a given scenario and seed.
pub fn simulate(scenario: &Scenario) -> Result<Trace, SimError> {
    let problems = scenario.problems();
    if !problems.is_empty() {
        return Err(SimError::InvalidScenario(problems));
    }

    let landscape = &scenario.landscape;
    let actuator = &scenario.actuator;
    let finger = &scenario.finger;
    let contact = &scenario.contact;
    let sensor = Sensor::new(scenario.sensor.clone())?;
    let controller = Controller::new(scenario.controller.clone(), landscape)?;
    let mut predictor = scenario
        .predictor
        .clone()
        .map(|cfg| Predictor::new(cfg, scenario.trigger.clone()));
    // velocity column when no predictor is configured
    let mut estimator = MotionEstimator::from_config(&PredictorConfig::default());
    let latencies = scenario.predictor.clone().unwrap_or_default();

    let rate = actuator.output_rate_hz;
    let dt = 1.0 / rate;
    let ticks = scenario.ticks();
    let sensor_every = scenario.sensor_every();
    let latency_ticks = scenario.sensor.latency_s * rate;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut body = finger.initial_state();
    let mut history = Vec::with_capacity(ticks as usize + 1);
    history.push(body.d_mm);

    // start from the steady state the controller would hold at the initial height
    let d0_reading = sensor.lut().distance_of(
        sensor
            .model()
            .intensity_of(body.d_mm.clamp(0.0, sensor.model().range_mm))
            .expect("clamped into range"),
    );
    let mut i_cmd = controller.update(0.0, d0_reading.distance_mm, landscape).i_cmd;
    let mut act = ActuatorState {
        i_act: actuator.clamp(i_cmd).0,
        t: 0.0,
    };

    let mut queue = EventQueue::new();
    let mut pending: HashSet<EventId> = HashSet::new();
    let mut d_meas = d0_reading.distance_mm;
    let mut v_est = 0.0;

    let mut rows = Vec::new();
    let mut summary = Summary {
        duration_ms: ticks as f64 * dt * 1e3,
        ticks: ticks + 1,
        min_d_true_mm: body.d_mm,
        ..Default::default()
    };

    for n in 0..=ticks {
        let t = n as f64 * dt;

        if n > 0 {
            let t_prev = t - dt;
            let stepped = actuator.step(act, i_cmd, dt);
            act = stepped.state;
            let force = magnetic_force(landscape, body.d_mm, act.i_act)
                + contact.force(body)
                + finger.force(body, t_prev);
            let prev_d = body.d_mm;
            body = step_physics(body, force, finger.mass_kg, dt);
            if !body.d_mm.is_finite() || body.d_mm.abs() > DIVERGENCE_LIMIT_MM {
                return Err(SimError::Diverged {
                    t_ms: t * 1e3,
                    d_mm: body.d_mm,
                });
            }
            history.push(body.d_mm);
            if prev_d > 0.0 && body.d_mm <= 0.0 {
                let crossing = t_prev + dt * prev_d / (prev_d - body.d_mm);
                summary.contacts_ms.push(crossing * 1e3);
            }
        }

        // prescheduled outputs due on this tick
        let mut fired = Vec::new();
        for due in queue.due_events(t + TICK_EPS_S) {
            if pending.remove(&due.id) {
                if let Some(p) = predictor.as_mut() {
                    p.commit();
                }
                // the sibling event stays queued; the prediction is frozen
                pending.clear();
            }
            let e = due.event;
            let latency = latencies.latency(e.channel);
            let record = EventRecord {
                channel: e.channel,
                intended_onset_ms: e.intended_onset * 1e3,
                issue_ms: e.issue_time * 1e3,
                fired_ms: t * 1e3,
                physical_onset_ms: (t + latency) * 1e3,
                amplitude: e.amplitude,
                late: due.late,
                lateness_ms: if due.late {
                    (t - e.issue_time) * 1e3
                } else {
                    0.0
                },
            };
            fired.push(record.column_text());
            summary.events.push(record);
        }

        if n % sensor_every == 0 {
            let observed = n as f64 - latency_ticks;
            let d_delayed = if observed <= 0.0 {
                history[0]
            } else {
                let k = observed.floor() as usize;
                let frac = observed - k as f64;
                match history.get(k + 1) {
                    Some(&next) => history[k] + frac * (next - history[k]),
                    None => history[k],
                }
            };
            let reading = sensor.measure(d_delayed, &mut rng);
            d_meas = reading.distance_mm;
            summary.sensor_samples += 1;
            if reading.saturated {
                summary.sensor_saturations += 1;
            }

            if let Some(p) = predictor.as_mut() {
                let (update, action) = p.on_sample(t, d_meas);
                v_est = update.v_est;
                match action {
                    PredictorAction::Nothing => {}
                    PredictorAction::Cancel => {
                        for id in pending.drain() {
                            queue.cancel(id);
                        }
                    }
                    PredictorAction::Schedule(events) => {
                        for id in pending.drain() {
                            queue.cancel(id);
                        }
                        for e in events {
                            pending.insert(queue.schedule(e, t));
                        }
                    }
                }
            } else {
                v_est = estimator.estimate_velocity(t, d_meas);
            }

            let cmd = controller.update(t, d_meas, landscape);
            i_cmd = cmd.i_cmd;
            if cmd.saturated || actuator.clamp(i_cmd).1 {
                summary.command_saturations += 1;
            }
        }

        let f_mag = magnetic_force(landscape, body.d_mm, act.i_act);
        let f_contact = contact.force(body);
        summary.max_abs_f_mag_n = summary.max_abs_f_mag_n.max(f_mag.abs());
        if summary.contacts_ms.is_empty() {
            summary.max_abs_f_mag_during_approach_n =
                summary.max_abs_f_mag_during_approach_n.max(f_mag.abs());
        }
        summary.min_d_true_mm = summary.min_d_true_mm.min(body.d_mm);
        summary.peak_f_contact_n = summary.peak_f_contact_n.max(f_contact);

        if n % scenario.trace_decimation == 0 || !fired.is_empty() {
            rows.push(TraceRow {
                t_ms: t * 1e3,
                d_true_mm: body.d_mm,
                d_meas_mm: d_meas,
                v_est_mm_s: v_est,
                i_cmd_a: i_cmd,
                i_act_a: act.i_act,
                f_mag_n: f_mag,
                f_contact_n: f_contact,
                event: fired.join(";"),
            });
        }
    }

    summary.onset_error_ms = match (summary.events.first(), summary.contacts_ms.first()) {
        (Some(e), Some(&c)) => Some(e.intended_onset_ms - c),
        _ => None,
    };
    Ok(Trace { rows, summary })
}

/// Events of one channel from a finished trace.
pub fn channel_events(trace: &Trace, channel: Channel) -> Vec<&EventRecord> {
    trace
        .summary
        .events
        .iter()
        .filter(|e| e.channel == channel)
        .collect()
}
