//! Compound-cycloid reference trajectory.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::Vec2;
use crate::trajectory::Trajectory;

/// Compound cycloid with step length `L`, step height `H` and period `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycloidSpec {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "H")]
    pub height: f64,
    #[serde(rename = "T")]
    pub period: f64,
    /// Mirror the swing above the stance line (`y → -y`).
    #[serde(default)]
    pub flip: bool,
}

impl Default for CycloidSpec {
    fn default() -> Self {
        Self {
            length: 300.0,
            height: 100.0,
            period: 2.0,
            flip: false,
        }
    }
}

impl CycloidSpec {
    pub fn new(length: f64, height: f64, period: f64) -> Result<Self> {
        let spec = Self {
            length,
            height,
            period,
            flip: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length > 0.0 && self.height > 0.0 && self.period > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "cycloid needs positive L, H, T (got {}, {}, {})",
                self.length, self.height, self.period
            )))
        }
    }
}

/// `x(t) = L(t/T − sin(2πt/T)/2π)`, `y(t) = −H(1 − cos(2πt/T))/2` for `0 ≤ t ≤ T`.
pub fn cycloid_point(spec: &CycloidSpec, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=spec.period).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            period: spec.period,
        });
    }
    let w = TAU * t / spec.period;
    let x = spec.length * (t / spec.period - w.sin() / TAU);
    let y = -spec.height * (0.5 - 0.5 * w.cos());
    Ok((x, y))
}

/// Analytic time derivative of [`cycloid_point`].
pub fn cycloid_velocity(spec: &CycloidSpec, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=spec.period).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            period: spec.period,
        });
    }
    let w = TAU * t / spec.period;
    let vx = spec.length / spec.period * (1.0 - w.cos());
    let vy = -spec.height * PI / spec.period * w.sin();
    Ok((vx, vy))
}

/// Closed bench-trajectory target over one period `T`.
///
/// Samples `0..n/2` walk the straight stance from `(0, 0)` to `(L, 0)` at
/// constant speed; samples `n/2..n` return along the cycloid, so sample 0 is
/// the landing point and sample `n/2` the take-off point. Both halves take
/// `T/2`. The cycloid is symmetric in time, so the return leg is the curve
/// evaluated at `T − t`.
pub fn cycloid_bt_target(spec: &CycloidSpec, n: usize) -> Result<Trajectory> {
    spec.validate()?;
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "target needs an even sample count, got {n}"
        )));
    }
    let half = n / 2;
    let sign = if spec.flip { -1.0 } else { 1.0 };
    let mut points = Vec::with_capacity(n);
    for k in 0..half {
        points.push(Vec2::new(spec.length * k as f64 / half as f64, 0.0));
    }
    for k in 0..half {
        let t = spec.period * (half - k) as f64 / half as f64;
        let (x, y) = cycloid_point(spec, t)?;
        points.push(Vec2::new(x, sign * y));
    }
    Trajectory::closed(points, spec.period)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = CycloidSpec::new(300.0, 100.0, 2.0).unwrap();
        assert_eq!(cycloid_point(&s, 0.0).unwrap(), (0.0, 0.0));
        let (x, y) = cycloid_point(&s, 1.0).unwrap();
        assert!((x - 150.0).abs() < 1e-12 && (y + 100.0).abs() < 1e-12);
        assert!(cycloid_point(&s, 2.5).is_err());
    }

    #[test]
    fn target_layout() {
        let s = CycloidSpec::default();
        let bt = cycloid_bt_target(&s, 360).unwrap();
        assert_eq!(bt.points[0], Vec2::new(0.0, 0.0));
        assert!((bt.points[180] - Vec2::new(300.0, 0.0)).norm() < 1e-12);
        assert!((bt.points[270].y + 100.0).abs() < 1e-12);
    }
}
