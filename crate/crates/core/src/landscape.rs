//! Tactile output force landscape.
//!
//! A [`ForceLandscape`] is a calibration grid of vertical force on the keystone
//! over (vertical distance, coil current). Everything downstream of it (force
//! commands in Newtons, the passive-surface current curve, the rejection
//! statistic) is derived from bilinear interpolation over that grid.
//!
//! Sign convention: positive force is repulsive (pushes the keystone away from
//! the device surface), negative force is attractive.

use std::fmt;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::numfmt;

/// Largest vertical distance a landscape may cover (mm).
pub const MAX_DISTANCE_MM: f64 = 35.0;

/// Residual tolerated by [`ForceLandscape::invert_current`] (N).
pub const INVERSION_TOLERANCE_N: f64 = 1e-6;

/// Literal first cell of a landscape file.
pub const FILE_CORNER: &str = "d_mm\\I_a";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Distance,
    Current,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Distance => f.write_str("distance"),
            Axis::Current => f.write_str("current"),
        }
    }
}

/// Which end of the achievable force range a request ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaturationSide {
    Above,
    Below,
}

#[derive(Debug, Error, PartialEq)]
pub enum LandscapeError {
    #[error("invalid landscape parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("force not strictly increasing in current at d = {distance_mm} mm (between I = {current_a} A and the next column)")]
    NotMonotone { distance_mm: f64, current_a: f64 },
    #[error("{axis} {value} out of range [{min}, {max}]")]
    OutOfRange {
        axis: Axis,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("force saturation: target {target_n} N is {} the achievable range at d = {distance_mm} mm; clamped to I = {current_a} A giving {achievable_n} N", if *.side == SaturationSide::Above { "above" } else { "below" })]
    Saturated {
        side: SaturationSide,
        distance_mm: f64,
        target_n: f64,
        current_a: f64,
        achievable_n: f64,
    },
    #[error("zero force unreachable at d = {distance_mm} mm")]
    ZeroUnreachable { distance_mm: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LandscapeError {
    fn from(e: std::io::Error) -> Self {
        LandscapeError::Io(e.to_string())
    }
}

/// Parameters of the desk-scale landscape generator.
///
/// `F(d, I) = a·I·u − b·u²` with `u = 1/(d + d0)²`, plus optional Gaussian
/// noise per cell. The numbers are synthetic placeholders, not measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLandscapeParams {
    /// Coil coupling (N·mm²/A).
    pub a: f64,
    /// Residual magnetization (N·mm⁴).
    pub b: f64,
    /// Geometric offset (mm).
    pub d0: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub i_min: f64,
    pub i_max: f64,
    pub i_step: f64,
    /// Additive per-cell noise (N).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticLandscapeParams {
    fn default() -> Self {
        Self {
            a: 100.0,
            b: 5000.0,
            d0: 5.0,
            d_min: 0.0,
            d_max: 35.0,
            d_step: 0.5,
            i_min: -2.0,
            i_max: 2.0,
            i_step: 0.05,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticLandscapeParams {
    /// Noise-free generator value at an arbitrary point.
    pub fn model_force(&self, d: f64, current: f64) -> f64 {
        let u = 1.0 / ((d + self.d0) * (d + self.d0));
        self.a * current * u - self.b * u * u
    }

    pub fn validate(&self) -> Result<(), LandscapeError> {
        let bad = |m: &str| Err(LandscapeError::InvalidParams(m.to_string()));
        let all = [
            self.a,
            self.b,
            self.d0,
            self.d_min,
            self.d_max,
            self.d_step,
            self.i_min,
            self.i_max,
            self.i_step,
            self.noise_sigma,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.a <= 0.0 {
            return bad("a must be > 0");
        }
        if self.b < 0.0 {
            return bad("b must be >= 0");
        }
        if self.d0 <= 0.0 {
            return bad("d0 must be > 0");
        }
        if self.noise_sigma < 0.0 {
            return bad("noise sigma must be >= 0");
        }
        if self.d_step <= 0.0 || self.i_step <= 0.0 {
            return bad("steps must be > 0");
        }
        if self.d_min < 0.0 || self.d_max > MAX_DISTANCE_MM || self.d_min >= self.d_max {
            return bad("distance range must be non-empty within [0, 35] mm");
        }
        if self.i_min >= self.i_max {
            return bad("current range must be non-empty");
        }
        Ok(())
    }
}

fn axis_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step).round().max(1.0) as usize;
    // snap away accumulated binary error (-1.2999999999999998 → -1.3) when
    // that moves the node by a negligible fraction of a step
    let snap = |v: f64| {
        let s = (v * 1e9).round() / 1e9;
        if (s - v).abs() <= step * 1e-6 {
            s
        } else {
            v
        }
    };
    (0..=n)
        .map(|k| if k == n { max } else { snap(min + k as f64 * step) })
        .collect()
}

/// Measured or synthetic force grid, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceLandscape {
    distances: Vec<f64>,
    currents: Vec<f64>,
    /// Row-major: one row per distance, one column per current.
    forces: Vec<f64>,
}

/// Result of [`ForceLandscape::mpsr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpsr {
    pub force_n: f64,
    /// Distance at which the minimum is attained.
    pub binding_distance_mm: f64,
}

impl ForceLandscape {
    /// Builds and validates a grid. `forces[i][j]` is the force at
    /// `distances[i]`, `currents[j]`.
    pub fn new(
        distances: Vec<f64>,
        currents: Vec<f64>,
        forces: Vec<Vec<f64>>,
    ) -> Result<Self, LandscapeError> {
        let invalid = |m: String| Err(LandscapeError::InvalidGrid(m));
        if distances.len() < 2 || currents.len() < 2 {
            return invalid("need at least two distances and two currents".into());
        }
        if distances.iter().chain(&currents).any(|v| !v.is_finite()) {
            return invalid("axis values must be finite".into());
        }
        if distances.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("distances must be strictly ascending".into());
        }
        if currents.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("currents must be strictly ascending".into());
        }
        if distances[0] < 0.0 || distances[distances.len() - 1] > MAX_DISTANCE_MM {
            return invalid(format!(
                "distances must lie within [0, {MAX_DISTANCE_MM}] mm"
            ));
        }
        if forces.len() != distances.len() {
            return invalid(format!(
                "{} force rows for {} distances",
                forces.len(),
                distances.len()
            ));
        }
        let mut flat = Vec::with_capacity(distances.len() * currents.len());
        for (row, &d) in forces.iter().zip(&distances) {
            if row.len() != currents.len() {
                return invalid(format!(
                    "row at d = {d} has {} values for {} currents",
                    row.len(),
                    currents.len()
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return invalid(format!("non-finite force at d = {d}"));
            }
            if let Some(j) = row.windows(2).position(|w| w[1] <= w[0]) {
                return Err(LandscapeError::NotMonotone {
                    distance_mm: d,
                    current_a: currents[j],
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            distances,
            currents,
            forces: flat,
        })
    }

    /// Samples the generator on the parameter grid.
    pub fn generate_synthetic(params: &SyntheticLandscapeParams) -> Result<Self, LandscapeError> {
        params.validate()?;
        let distances = axis_values(params.d_min, params.d_max, params.d_step);
        let currents = axis_values(params.i_min, params.i_max, params.i_step);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let noise = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| LandscapeError::InvalidParams(e.to_string()))?;
        let forces = distances
            .iter()
            .map(|&d| {
                currents
                    .iter()
                    .map(|&i| {
                        let f = params.model_force(d, i);
                        if params.noise_sigma > 0.0 {
                            f + noise.sample(&mut rng)
                        } else {
                            f
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(distances, currents, forces)
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn distance_span(&self) -> (f64, f64) {
        (self.distances[0], self.distances[self.distances.len() - 1])
    }

    pub fn current_span(&self) -> (f64, f64) {
        (self.currents[0], self.currents[self.currents.len() - 1])
    }

    /// Stored value at grid node `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.forces[i * self.currents.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.currents.len();
        &self.forces[i * n..(i + 1) * n]
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64) {
        let i = axis
            .partition_point(|&v| v <= x)
            .saturating_sub(1)
            .min(axis.len() - 2);
        let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
        (i, t)
    }

    fn check(axis: Axis, values: &[f64], x: f64) -> Result<(), LandscapeError> {
        let (min, max) = (values[0], values[values.len() - 1]);
        if !(min..=max).contains(&x) {
            return Err(LandscapeError::OutOfRange {
                axis,
                value: x,
                min,
                max,
            });
        }
        Ok(())
    }

    /// Bilinear interpolation of the force at `(d, current)`.
    pub fn force_at(&self, d: f64, current: f64) -> Result<f64, LandscapeError> {
        Self::check(Axis::Distance, &self.distances, d)?;
        Self::check(Axis::Current, &self.currents, current)?;
        Ok(self.interpolate(d, current))
    }

    fn interpolate(&self, d: f64, current: f64) -> f64 {
        let (i, t) = Self::locate(&self.distances, d);
        let (j, s) = Self::locate(&self.currents, current);
        let f00 = self.cell(i, j);
        let f01 = self.cell(i, j + 1);
        let f10 = self.cell(i + 1, j);
        let f11 = self.cell(i + 1, j + 1);
        (1.0 - t) * ((1.0 - s) * f00 + s * f01) + t * ((1.0 - s) * f10 + s * f11)
    }

    /// Coil current producing `target_n` at distance `d`, by bisection on the
    /// current axis.
    ///
    /// Targets outside the achievable range return [`LandscapeError::Saturated`]
    /// carrying the clamped boundary current so callers can degrade to it.
    pub fn invert_current(&self, d: f64, target_n: f64) -> Result<f64, LandscapeError> {
        Self::check(Axis::Distance, &self.distances, d)?;
        let (mut lo, mut hi) = self.current_span();
        let f_lo = self.interpolate(d, lo);
        let f_hi = self.interpolate(d, hi);
        if target_n > f_hi + INVERSION_TOLERANCE_N || target_n < f_lo - INVERSION_TOLERANCE_N {
            let (side, current_a, achievable_n) = if target_n > f_hi {
                (SaturationSide::Above, hi, f_hi)
            } else {
                (SaturationSide::Below, lo, f_lo)
            };
            return Err(LandscapeError::Saturated {
                side,
                distance_mm: d,
                target_n,
                current_a,
                achievable_n,
            });
        }
        if target_n >= f_hi {
            return Ok(hi);
        }
        if target_n <= f_lo {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = self.interpolate(d, mid);
            if f == target_n {
                return Ok(mid);
            }
            if f < target_n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// One zero-force current per grid distance.
    pub fn zero_force_curve(&self) -> Result<ZeroForceCurve, LandscapeError> {
        let points = self
            .distances
            .iter()
            .map(|&d| match self.invert_current(d, 0.0) {
                Ok(i0) => Ok((d, i0)),
                Err(LandscapeError::Saturated { .. }) => {
                    Err(LandscapeError::ZeroUnreachable { distance_mm: d })
                }
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ZeroForceCurve { points })
    }

    /// Maximum practicable static rejection, reduced to the vertical axis:
    /// the largest repulsive force available at every distance in
    /// `[d_min, d_max]`.
    pub fn mpsr(&self, d_min: f64, d_max: f64) -> Result<Mpsr, LandscapeError> {
        if !(d_min < d_max) {
            return Err(LandscapeError::InvalidParams(format!(
                "empty or inverted distance range [{d_min}, {d_max}]"
            )));
        }
        Self::check(Axis::Distance, &self.distances, d_min)?;
        Self::check(Axis::Distance, &self.distances, d_max)?;
        // bilinear surface: max over current sits on a current node, min over
        // distance on a distance node or range endpoint
        let candidates = std::iter::once(d_min)
            .chain(
                self.distances
                    .iter()
                    .copied()
                    .filter(|&d| d > d_min && d < d_max),
            )
            .chain(std::iter::once(d_max));
        let mut best = Mpsr {
            force_n: f64::INFINITY,
            binding_distance_mm: d_min,
        };
        for d in candidates {
            let rejection = self
                .currents
                .iter()
                .map(|&i| self.interpolate(d, i).max(0.0))
                .fold(0.0, f64::max);
            if rejection < best.force_n {
                best = Mpsr {
                    force_n: rejection,
                    binding_distance_mm: d,
                };
            }
        }
        Ok(best)
    }

    /// Writes the comma-separated landscape file. Values are printed in
    /// shortest round-trip form so that loading reproduces the grid exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), LandscapeError> {
        let mut header = String::from(FILE_CORNER);
        for &i in &self.currents {
            header.push(',');
            header.push_str(&numfmt::exact(i));
        }
        writeln!(out, "{header}")?;
        for (k, &d) in self.distances.iter().enumerate() {
            let mut line = numfmt::exact(d);
            for &f in self.row(k) {
                line.push(',');
                line.push_str(&numfmt::exact(f));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, LandscapeError> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, message: String| LandscapeError::Parse { line, message };
        let parse_num = |line: usize, s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("not a number: {:?}", s.trim())))
        };

        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty landscape file".into()))?;
        let header = header?;
        let mut cells = header.trim_end().split(',');
        if cells.next().map(str::trim) != Some(FILE_CORNER) {
            return Err(parse_err(1, format!("first cell must be {FILE_CORNER:?}")));
        }
        let currents = cells.map(|c| parse_num(1, c)).collect::<Result<Vec<_>, _>>()?;

        let mut distances = Vec::new();
        let mut forces = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.trim_end().split(',');
            let d = parse_num(lineno, cells.next().unwrap_or(""))?;
            let row = cells
                .map(|c| parse_num(lineno, c))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != currents.len() {
                return Err(parse_err(
                    lineno,
                    format!("{} force values, expected {}", row.len(), currents.len()),
                ));
            }
            distances.push(d);
            forces.push(row);
        }
        Self::new(distances, currents, forces)
    }
}

/// The passive-surface characteristic: current that cancels the magnetic
/// force, tabulated at the landscape's distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForceCurve {
    points: Vec<(f64, f64)>,
}

impl ZeroForceCurve {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation of the zero-force current, clamped to the
    /// tabulated distance span.
    pub fn current_at(&self, d: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if d <= first.0 {
            return first.1;
        }
        if d >= last.0 {
            return last.1;
        }
        let k = self.points.partition_point(|p| p.0 <= d) - 1;
        let (d0, i0) = self.points[k];
        let (d1, i1) = self.points[k + 1];
        let t = (d - d0) / (d1 - d0);
        i0 + t * (i1 - i0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), LandscapeError> {
        writeln!(out, "d_mm,I0_a")?;
        for &(d, i) in &self.points {
            writeln!(out, "{},{}", numfmt::exact(d), numfmt::exact(i))?;
        }
        Ok(())
    }
}
