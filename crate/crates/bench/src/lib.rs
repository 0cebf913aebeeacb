//! Fixtures shared by the benchmarks in `benches/`.

use haptic_core::{ForceLandscape, Intent, PredictorConfig, Scenario, SyntheticLandscapeParams};

pub fn default_grid() -> ForceLandscape {
    ForceLandscape::generate_synthetic(&SyntheticLandscapeParams::default())
        .expect("default parameters are valid")
}

/// Predictive tap from 20 mm at `speed` mm/s over the default grid, run
/// until just past contact.
pub fn tap_scenario(speed: f64) -> Scenario {
    let mut s = Scenario::new(default_grid());
    s.finger.intent = Intent::Ramp {
        start_mm: 20.0,
        velocity_mm_s: -speed,
        end_mm: -5.0,
    };
    s.predictor = Some(PredictorConfig::default());
    s.duration_s = 20.0 / speed + 0.005;
    s
}
