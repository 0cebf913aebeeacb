//! Infrared proximity sensing: reflected intensity over distance, the
//! calibration table that inverts it, 0.2 mm quantization, and the sampled,
//! delayed measurement stream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("distance {0} mm outside sensor range [0, {1}] mm")]
    OutOfRange(f64, f64),
    #[error("invalid sensor model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// Intensity at zero distance (normalized).
    pub s_max: f64,
    /// Falloff scale (mm).
    pub falloff_mm: f64,
    pub range_mm: f64,
    pub resolution_mm: f64,
    pub rate_hz: f64,
    /// Input latency, modeled as a pure transport delay (s).
    pub latency_s: f64,
    /// Additive intensity noise (normalized units).
    pub noise_sigma: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            s_max: 1.0,
            falloff_mm: 10.0,
            range_mm: 35.0,
            resolution_mm: 0.2,
            rate_hz: 4800.0,
            latency_s: 1.8e-3,
            noise_sigma: 0.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        let bad = |m: &str| Err(SensorError::InvalidModel(m.to_string()));
        if !(self.s_max > 0.0) {
            return bad("s_max must be > 0");
        }
        if !(self.falloff_mm > 0.0) {
            return bad("falloff must be > 0");
        }
        if !(self.range_mm > 0.0) {
            return bad("range must be > 0");
        }
        if !(self.resolution_mm > 0.0) {
            return bad("resolution must be > 0");
        }
        if !(self.rate_hz > 0.0) {
            return bad("rate must be > 0");
        }
        if !(self.latency_s >= 0.0) || !self.latency_s.is_finite() {
            return bad("latency must be >= 0");
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise sigma must be >= 0");
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.rate_hz
    }

    /// Noise-free reflected intensity, `s_max / (1 + d/falloff)²`.
    pub fn intensity_of(&self, d: f64) -> Result<f64, SensorError> {
        if !(0.0..=self.range_mm).contains(&d) {
            return Err(SensorError::OutOfRange(d, self.range_mm));
        }
        Ok(self.intensity_unchecked(d))
    }

    fn intensity_unchecked(&self, d: f64) -> f64 {
        let r = 1.0 + d / self.falloff_mm;
        self.s_max / (r * r)
    }

    /// Intensity with the model's noise drawn from `rng`.
    pub fn noisy_intensity<R: Rng>(&self, d: f64, rng: &mut R) -> Result<f64, SensorError> {
        let s = self.intensity_of(d)?;
        if self.noise_sigma > 0.0 {
            let n = Normal::new(0.0, self.noise_sigma).expect("sigma validated");
            Ok(s + n.sample(rng))
        } else {
            Ok(s)
        }
    }

    /// Builds the intensity → distance table from the noise-free curve.
    pub fn calibrate(&self) -> CalibrationLut {
        // fine enough that interpolation error is negligible next to quantization
        let step = self.resolution_mm / 40.0;
        let n = (self.range_mm / step).ceil() as usize;
        let distances: Vec<f64> = (0..=n)
            .map(|k| if k == n { self.range_mm } else { k as f64 * step })
            .collect();
        let intensities = distances.iter().map(|&d| self.intensity_unchecked(d)).collect();
        CalibrationLut {
            intensities,
            distances,
            resolution_mm: self.resolution_mm,
        }
    }
}

/// Round to the nearest multiple of `step`, ties away from zero.
///
/// Decimal ties such as 0.3 / 0.2 are not exact in binary, so ratios within
/// 1e-9 of a half step count as ties.
pub fn quantize(x: f64, step: f64) -> f64 {
    let r = x / step;
    (r + 1e-9_f64.copysign(r)).round() * step
}

/// A calibrated distance reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub distance_mm: f64,
    /// Input fell outside the table and was clamped to an endpoint.
    pub saturated: bool,
}

/// Monotone intensity → distance table. Intensities strictly decrease along
/// the table while distances increase.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationLut {
    intensities: Vec<f64>,
    distances: Vec<f64>,
    resolution_mm: f64,
}

impl CalibrationLut {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// (lowest, highest) intensity covered.
    pub fn intensity_span(&self) -> (f64, f64) {
        (self.intensities[self.len() - 1], self.intensities[0])
    }

    /// Inverse lookup, interpolating linearly in `s^-1/2`, then quantization
    /// to the sensor resolution.
    pub fn distance_of(&self, s: f64) -> Reading {
        let (lo, hi) = self.intensity_span();
        let last = self.len() - 1;
        let (raw, saturated) = if s.is_nan() {
            (self.distances[last], true)
        } else if s >= hi {
            (self.distances[0], s > hi)
        } else if s <= lo {
            (self.distances[last], s < lo)
        } else {
            // first index whose intensity is below s
            let k = self.intensities.partition_point(|&v| v >= s);
            let (s0, s1) = (self.intensities[k - 1], self.intensities[k]);
            let (d0, d1) = (self.distances[k - 1], self.distances[k]);
            // s^-1/2 is linear in distance for the inverse-square falloff,
            // which makes the lookup exact between table nodes
            let g = |v: f64| v.sqrt().recip();
            (d0 + (g(s) - g(s0)) / (g(s1) - g(s0)) * (d1 - d0), false)
        };
        let q = quantize(raw, self.resolution_mm);
        // quantizing must not step past the calibrated span
        let distance_mm = q.clamp(self.distances[0], self.distances[last]);
        Reading {
            distance_mm,
            saturated,
        }
    }
}

/// One published sensor sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    pub t: f64,
    pub d_meas: f64,
    pub saturated: bool,
}

/// Sensor model plus its calibration.
#[derive(Debug, Clone)]
pub struct Sensor {
    model: SensorModel,
    lut: CalibrationLut,
}

impl Sensor {
    pub fn new(model: SensorModel) -> Result<Self, SensorError> {
        model.validate()?;
        let lut = model.calibrate();
        Ok(Self { model, lut })
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }

    pub fn lut(&self) -> &CalibrationLut {
        &self.lut
    }

    /// Measures a (already delayed) true distance. Distances outside the
    /// physical range are clamped to it and flagged.
    pub fn measure<R: Rng>(&self, d_true: f64, rng: &mut R) -> Reading {
        let clamped = d_true.clamp(0.0, self.model.range_mm);
        let s = self
            .model
            .noisy_intensity(clamped, rng)
            .expect("clamped into range");
        let mut r = self.lut.distance_of(s);
        r.saturated |= clamped != d_true;
        r
    }

    /// Samples `true_distance` at the sensor rate for `duration` seconds. The
    /// sample published at `t` observes the trajectory at `t − latency`.
    pub fn sample_stream<F: Fn(f64) -> f64>(
        &self,
        true_distance: F,
        duration: f64,
        seed: u64,
    ) -> Vec<SensorSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = (duration * self.model.rate_hz + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let t = k as f64 / self.model.rate_hz;
                let r = self.measure(true_distance(t - self.model.latency_s), &mut rng);
                SensorSample {
                    t,
                    d_meas: r.distance_mm,
                    saturated: r.saturated,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sensor() -> Sensor {
        Sensor::new(SensorModel::default()).unwrap()
    }

    #[test]
    fn intensity_hand_values() {
        let m = SensorModel::default();
        assert_eq!(m.intensity_of(0.0).unwrap(), 1.0);
        assert!((m.intensity_of(10.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((m.intensity_of(35.0).unwrap() - 1.0 / 20.25).abs() < 1e-15);
        assert!((m.intensity_of(35.0).unwrap() - 0.049383).abs() < 1e-6);
        assert_eq!(m.intensity_of(35.5), Err(SensorError::OutOfRange(35.5, 35.0)));
        assert!(m.intensity_of(-0.1).is_err());
    }

    #[test]
    fn lut_endpoints_and_inverse() {
        let s = sensor();
        let lut = s.lut();
        assert_eq!(lut.distance_of(1.0), Reading { distance_mm: 0.0, saturated: false });
        assert!((lut.distance_of(0.25).distance_mm - 10.0).abs() < 1e-9);
        let top = s.model().intensity_of(35.0).unwrap();
        assert_eq!(lut.distance_of(top).distance_mm, 35.0);
        assert_eq!(lut.distance_of(2.0), Reading { distance_mm: 0.0, saturated: true });
        let far = lut.distance_of(0.01);
        assert!(far.saturated);
        assert_eq!(far.distance_mm, 35.0);
    }

    #[test]
    fn round_trip_at_17_3() {
        let s = sensor();
        let d = s.lut().distance_of(s.model().intensity_of(17.3).unwrap()).distance_mm;
        assert!((17.2 - 1e-9..=17.4 + 1e-9).contains(&d), "{d}");
    }

    #[test]
    fn quantize_ties_go_away_from_zero() {
        assert_eq!(quantize(0.1, 0.2), 0.2);
        assert_eq!(quantize(0.3, 0.2), 0.4);
        assert_eq!(quantize(-0.1, 0.2), -0.2);
        assert_eq!(quantize(0.09, 0.2), 0.0);
    }

    #[test]
    fn stream_constant_distance() {
        let samples = sensor().sample_stream(|_| 10.0, 0.05, 0);
        assert!(samples.iter().all(|s| (s.d_meas - 10.0).abs() < 1e-9));
    }

    #[test]
    fn stream_count_and_spacing() {
        let samples = sensor().sample_stream(|_| 20.0, 1.0, 0);
        assert_eq!(samples.len(), 4801);
        for (k, s) in samples.iter().enumerate() {
            assert_eq!(s.t, k as f64 / 4800.0);
        }
        assert_eq!(sensor().sample_stream(|_| 20.0, 0.5, 0).len(), 2401);
    }

    #[test]
    fn stream_applies_pure_delay() {
        let samples = sensor().sample_stream(|t| 20.0 - 500.0 * t, 0.02, 0);
        let s = samples[48]; // t = 10 ms, observes t = 8.2 ms → 15.9 mm
        assert!((s.t - 0.01).abs() < 1e-15);
        assert!(
            (s.d_meas - 15.8).abs() < 1e-9 || (s.d_meas - 16.0).abs() < 1e-9,
            "{}",
            s.d_meas
        );
    }

    #[test]
    fn noisy_stream_is_seeded() {
        let model = SensorModel { noise_sigma: 2e-3, ..Default::default() };
        let s = Sensor::new(model).unwrap();
        let a = s.sample_stream(|_| 12.0, 0.1, 3);
        let b = s.sample_stream(|_| 12.0, 0.1, 3);
        let c = s.sample_stream(|_| 12.0, 0.1, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_models_rejected() {
        for m in [
            SensorModel { falloff_mm: 0.0, ..Default::default() },
            SensorModel { resolution_mm: 0.0, ..Default::default() },
            SensorModel { rate_hz: -1.0, ..Default::default() },
            SensorModel { latency_s: -1e-3, ..Default::default() },
        ] {
            assert!(Sensor::new(m).is_err());
        }
    }

    proptest! {
        #[test]
        fn intensity_strictly_decreasing(d in 0.0f64..34.99, dd in 1e-6f64..0.01) {
            let m = SensorModel::default();
            prop_assert!(m.intensity_of(d + dd).unwrap() < m.intensity_of(d).unwrap());
        }

        #[test]
        fn calibration_round_trip_within_half_resolution(d in 0.0f64..=35.0) {
            let s = sensor();
            let back = s.lut().distance_of(s.model().intensity_of(d).unwrap()).distance_mm;
            prop_assert!((back - d).abs() <= 0.1 + 1e-6);
        }
    }
}
