//! Electromagnet response to coil-current commands, modeled as a first-order
//! lag discretized exactly at the output rate.

use std::f64::consts::{LN_10, PI};

/// ln(100): a first-order lag reaches 99 % of a step after `τ·ln 100`.
pub const LN_100: f64 = 2.0 * LN_10;

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorModel {
    /// Time constant (s).
    pub tau_s: f64,
    pub i_min: f64,
    pub i_max: f64,
    pub output_rate_hz: f64,
    /// Fixed transport delay on top of the lag so that the total tactile
    /// output latency comes to 2.6 ms (s).
    pub output_latency_extra_s: f64,
}

impl Default for ActuatorModel {
    fn default() -> Self {
        Self {
            tau_s: 1.0e-3 / LN_100,
            i_min: -2.0,
            i_max: 2.0,
            output_rate_hz: 96_000.0,
            output_latency_extra_s: 1.6e-3,
        }
    }
}

impl ActuatorModel {
    /// Model with the time constant that settles to 99 % in `settle_s`.
    pub fn with_settle_time(settle_s: f64) -> Self {
        Self {
            tau_s: settle_s / LN_100,
            ..Self::default()
        }
    }

    /// The previous-generation magnet: 33 ms to 99 %.
    ///
    /// τ comes from the settle time. That puts the 100 Hz gain near 0.22, a
    /// ~78 % drop rather than the 67 % usually quoted for the old hardware; a
    /// single pole cannot match both figures.
    pub fn legacy() -> Self {
        Self::with_settle_time(33.0e-3)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau_s > 0.0) || !self.tau_s.is_finite() {
            return Err("tau must be > 0".into());
        }
        if !(self.i_min < self.i_max) {
            return Err("i_min must be < i_max".into());
        }
        if !(self.output_rate_hz > 0.0) || !self.output_rate_hz.is_finite() {
            return Err("output rate must be > 0".into());
        }
        if !(self.output_latency_extra_s >= 0.0) {
            return Err("extra output latency must be >= 0".into());
        }
        Ok(())
    }

    pub fn output_period(&self) -> f64 {
        1.0 / self.output_rate_hz
    }

    pub fn settle_time_99(&self) -> f64 {
        self.tau_s * LN_100
    }

    /// Total tactile output latency: 99 % settle plus transport delay.
    pub fn output_latency(&self) -> f64 {
        self.settle_time_99() + self.output_latency_extra_s
    }

    /// Magnitude of `1/(1 + sτ)` at frequency `f`.
    pub fn freq_response(&self, f_hz: f64) -> f64 {
        let w = 2.0 * PI * f_hz * self.tau_s;
        1.0 / (1.0 + w * w).sqrt()
    }

    /// Clamp a command into the drivable range; the flag reports clamping.
    pub fn clamp(&self, i_cmd: f64) -> (f64, bool) {
        let c = i_cmd.clamp(self.i_min, self.i_max);
        (c, c != i_cmd)
    }

    /// Advances the achieved current by `dt` toward `i_cmd`.
    pub fn step(&self, state: ActuatorState, i_cmd: f64, dt: f64) -> StepOutcome {
        let (target, saturated) = self.clamp(i_cmd);
        let alpha = -(-dt / self.tau_s).exp_m1();
        let i_act = state.i_act + (target - state.i_act) * alpha;
        StepOutcome {
            state: ActuatorState {
                i_act: i_act.clamp(self.i_min, self.i_max),
                t: state.t + dt,
            },
            saturated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorState {
    /// Achieved coil current (A).
    pub i_act: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: ActuatorState,
    /// The command was outside `[i_min, i_max]`.
    pub saturated: bool,
}
