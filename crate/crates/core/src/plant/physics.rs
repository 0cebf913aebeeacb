//! Vertical fingertip/keystone dynamics.
//!
//! Positions are in mm and velocities in mm/s to match the sensor and the
//! landscape; forces are in N and mass in kg, so accelerations pick up a
//! factor of 1000 on the way into the integrator.

use std::f64::consts::PI;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    /// Height above the device surface (mm); negative is penetration.
    pub d_mm: f64,
    /// Vertical velocity (mm/s), positive away from the surface.
    pub v_mm_s: f64,
}

/// Semi-implicit Euler: velocity first, then position with the new velocity.
pub fn step_physics(state: BodyState, force_n: f64, mass_kg: f64, dt: f64) -> BodyState {
    let accel_mm_s2 = force_n / mass_kg * 1000.0;
    let v_mm_s = state.v_mm_s + accel_mm_s2 * dt;
    BodyState {
        d_mm: state.d_mm + v_mm_s * dt,
        v_mm_s,
    }
}

/// Where the finger is trying to be.
#[derive(Debug, Clone, PartialEq)]
pub enum Intent {
    /// No voluntary motion; the impedance pull is off.
    None,
    Hold { at_mm: f64 },
    /// Constant velocity from `start_mm` until `end_mm`, then hold. A tap is a
    /// ramp toward (and slightly into) the surface.
    Ramp {
        start_mm: f64,
        velocity_mm_s: f64,
        end_mm: f64,
    },
    Sinusoid {
        center_mm: f64,
        amplitude_mm: f64,
        freq_hz: f64,
    },
}

impl Intent {
    /// Intended (position mm, velocity mm/s) at time `t`.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        match *self {
            Intent::None => None,
            Intent::Hold { at_mm } => Some((at_mm, 0.0)),
            Intent::Ramp {
                start_mm,
                velocity_mm_s,
                end_mm,
            } => {
                let d = start_mm + velocity_mm_s * t;
                let reached = if velocity_mm_s < 0.0 {
                    d <= end_mm
                } else {
                    d >= end_mm
                };
                if reached {
                    Some((end_mm, 0.0))
                } else {
                    Some((d, velocity_mm_s))
                }
            }
            Intent::Sinusoid {
                center_mm,
                amplitude_mm,
                freq_hz,
            } => {
                let w = 2.0 * PI * freq_hz;
                Some((
                    center_mm + amplitude_mm * (w * t).sin(),
                    amplitude_mm * w * (w * t).cos(),
                ))
            }
        }
    }
}

/// Impedance model of voluntary finger motion.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerModel {
    pub mass_kg: f64,
    /// Pull toward the intent position (N/mm).
    pub stiffness_n_mm: f64,
    /// Pull toward the intent velocity (N·s/mm).
    pub damping_ns_mm: f64,
    pub gravity_m_s2: f64,
    /// The finger actively carries its own weight.
    pub gravity_compensation: bool,
    pub intent: Intent,
    /// Initial height; defaults to the intent position at t = 0.
    pub initial_mm: Option<f64>,
    /// Initial velocity; defaults to the intent velocity at t = 0.
    pub initial_velocity_mm_s: Option<f64>,
}

impl Default for FingerModel {
    fn default() -> Self {
        Self {
            mass_kg: 0.03,
            stiffness_n_mm: 0.5,
            damping_ns_mm: 0.01,
            gravity_m_s2: STANDARD_GRAVITY,
            gravity_compensation: true,
            intent: Intent::Hold { at_mm: 20.0 },
            initial_mm: None,
            initial_velocity_mm_s: None,
        }
    }
}

impl FingerModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass_kg > 0.0) {
            return Err("finger mass must be > 0".into());
        }
        if !(self.stiffness_n_mm >= 0.0) || !(self.damping_ns_mm >= 0.0) {
            return Err("finger stiffness and damping must be >= 0".into());
        }
        if !self.gravity_m_s2.is_finite() {
            return Err("gravity must be finite".into());
        }
        if let Intent::Sinusoid { freq_hz, .. } = self.intent {
            if !(freq_hz >= 0.0) {
                return Err("intent frequency must be >= 0".into());
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> BodyState {
        let intent = self.intent.at(0.0);
        BodyState {
            d_mm: self
                .initial_mm
                .or(intent.map(|i| i.0))
                .unwrap_or(0.0),
            v_mm_s: self
                .initial_velocity_mm_s
                .or(intent.map(|i| i.1))
                .unwrap_or(0.0),
        }
    }

    /// Voluntary force plus gravity (N, positive up).
    pub fn force(&self, state: BodyState, t: f64) -> f64 {
        let weight = self.mass_kg * self.gravity_m_s2;
        let pull = self.intent.at(t).map_or(0.0, |(x, v)| {
            self.stiffness_n_mm * (x - state.d_mm) + self.damping_ns_mm * (v - state.v_mm_s)
        });
        let support = if self.gravity_compensation { weight } else { 0.0 };
        pull + support - weight
    }
}

/// Penalty contact with the device surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel {
    pub stiffness_n_mm: f64,
    pub damping_ns_mm: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self {
            stiffness_n_mm: 10.0,
            damping_ns_mm: 0.05,
        }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.stiffness_n_mm > 0.0) {
            return Err("contact stiffness must be > 0".into());
        }
        if !(self.damping_ns_mm >= 0.0) {
            return Err("contact damping must be >= 0".into());
        }
        Ok(())
    }

    /// Surface reaction (N, positive up). Only pushes, never pulls.
    pub fn force(&self, state: BodyState) -> f64 {
        if state.d_mm >= 0.0 {
            return 0.0;
        }
        (-self.stiffness_n_mm * state.d_mm - self.damping_ns_mm * state.v_mm_s).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 96000.0;

    #[test]
    fn free_fall_ten_ms() {
        let finger = FingerModel {
            gravity_compensation: false,
            intent: Intent::None,
            initial_mm: Some(20.0),
            ..Default::default()
        };
        let mut s = finger.initial_state();
        for n in 0..960 {
            s = step_physics(s, finger.force(s, n as f64 * DT), finger.mass_kg, DT);
        }
        let t: f64 = 0.010;
        let analytic = -0.5 * 9810.0 * t * t;
        assert!((analytic + 0.4905).abs() < 1e-12);
        // semi-implicit Euler overshoots the closed form by g·t·dt/2
        assert!(((s.d_mm - 20.0) - analytic).abs() <= 9810.0 * t * DT);
    }

    #[test]
    fn equilibrium_is_kept() {
        let s = BodyState { d_mm: 3.0, v_mm_s: 0.0 };
        assert_eq!(step_physics(s, 0.0, 0.03, DT), s);
    }

    #[test]
    fn supporting_force_cancels_gravity() {
        let weight: f64 = 0.03 * 9.81;
        assert!((weight - 0.2943).abs() < 1e-12);
        let mut s = BodyState { d_mm: 10.0, v_mm_s: -100.0 };
        for _ in 0..1000 {
            s = step_physics(s, 0.2943 - weight, 0.03, DT);
        }
        assert_eq!(s.v_mm_s, -100.0);
    }

    #[test]
    fn one_newton_on_thirty_grams() {
        let s = step_physics(BodyState::default(), 1.0, 0.03, 1.0);
        assert!((s.v_mm_s - 33_333.333_333).abs() < 1e-3);
    }

    #[test]
    fn ramp_intent_stops_at_end() {
        let i = Intent::Ramp { start_mm: 20.0, velocity_mm_s: -500.0, end_mm: -1.0 };
        assert_eq!(i.at(0.0), Some((20.0, -500.0)));
        assert_eq!(i.at(0.02), Some((10.0, -500.0)));
        assert_eq!(i.at(0.1), Some((-1.0, 0.0)));
        let up = Intent::Ramp { start_mm: 0.0, velocity_mm_s: 50.0, end_mm: 35.0 };
        assert_eq!(up.at(1.0), Some((35.0, 0.0)));
    }

    #[test]
    fn on_intent_start_tracks_constant_velocity_exactly() {
        let finger = FingerModel {
            intent: Intent::Ramp { start_mm: 20.0, velocity_mm_s: -500.0, end_mm: -5.0 },
            ..Default::default()
        };
        let mut s = finger.initial_state();
        for n in 0..1920 {
            s = step_physics(s, finger.force(s, n as f64 * DT), finger.mass_kg, DT);
        }
        assert!((s.v_mm_s + 500.0).abs() < 1e-9);
        assert!((s.d_mm - 10.0).abs() < 1e-9);
    }

    #[test]
    fn contact_only_pushes() {
        let c = ContactModel::default();
        assert_eq!(c.force(BodyState { d_mm: 0.5, v_mm_s: -100.0 }), 0.0);
        assert!((c.force(BodyState { d_mm: -0.1, v_mm_s: 0.0 }) - 1.0).abs() < 1e-12);
        assert_eq!(c.force(BodyState { d_mm: -0.01, v_mm_s: 500.0 }), 0.0);
    }

    #[test]
    fn contact_rebound_dissipates() {
        let finger = FingerModel {
            stiffness_n_mm: 0.0,
            damping_ns_mm: 0.0,
            gravity_m_s2: 0.0,
            intent: Intent::None,
            initial_mm: Some(1.0),
            initial_velocity_mm_s: Some(-300.0),
            ..Default::default()
        };
        let contact = ContactModel::default();
        let mut s = finger.initial_state();
        let mut min_d: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for n in 0..20_000 {
            let fc = contact.force(s);
            peak = peak.max(fc);
            s = step_physics(s, finger.force(s, n as f64 * DT) + fc, finger.mass_kg, DT);
            min_d = min_d.min(s.d_mm);
        }
        assert!(s.v_mm_s > 0.0 && s.v_mm_s <= 300.0, "{}", s.v_mm_s);
        assert!(-min_d <= peak / contact.stiffness_n_mm + 0.05);
    }
}
