//! Walking-performance measures computed from bench and walking trajectories.

mod crossing;
mod fourier;

pub use crossing::{crossing_probability, CrossingProbability, Gait};
pub use fourier::{fourier_descriptors, fourier_distance, DEFAULT_HARMONICS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{
    bt_to_wt, find_feature_points, multi_wt_layout, step_length, FeaturePoints, LegLayout,
    Trajectory,
};

/// Obstacle used for the reported crossing probabilities, `(a, b)` in mm.
pub const DEFAULT_OBSTACLE: (f64, f64) = (25.0, 25.0);

/// Every scalar performance measure of one mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub h_s: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(rename = "I")]
    pub i: f64,
    pub h_m: f64,
    pub h_bar: f64,
    pub psi2: f64,
    pub psi4: f64,
    pub mse: Option<f64>,
    pub l_s: f64,
    pub l_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_distance: Option<f64>,
}

impl PerformanceReport {
    pub const CSV_HEADER: &'static str =
        "h_s,S,theta1,theta2,I,h_m,h_bar,psi2,psi4,mse,l_s,l_w,fourier_distance";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.h_s,
            self.s,
            self.theta1,
            self.theta2,
            self.i,
            self.h_m,
            self.h_bar,
            self.psi2,
            self.psi4,
            opt(self.mse),
            self.l_s,
            self.l_w,
            opt(self.fourier_distance)
        )
    }
}

/// Straightness `S = 100·h_s/l_s` in percent.
pub fn straightness(h_s: f64, l_s: f64) -> f64 {
    100.0 * h_s / l_s
}

/// Stance fluctuation and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceMetrics {
    pub h_s: f64,
    pub l_s: f64,
    pub s: f64,
}

/// `h_s = y(t1) − min y` over the stance arc, `l_s = |x(t2) − x(t1)|`, `S = 100·h_s/l_s`.
pub fn stance_metrics(bt: &Trajectory, fp: &FeaturePoints) -> Result<StanceMetrics> {
    let p = &bt.points;
    let l_s = (p[fp.t2].x - p[fp.t1].x).abs();
    if l_s < 1e-9 {
        return Err(Error::ZeroStanceLength);
    }
    let low = fp
        .stance_indices()
        .map(|k| p[k].y)
        .fold(f64::INFINITY, f64::min);
    let h_s = p[fp.t1].y - low;
    Ok(StanceMetrics {
        h_s,
        l_s,
        s: straightness(h_s, l_s),
    })
}

/// Landing and take-off angles (degrees) and the landing impact speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impact {
    pub i: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Tangent angle to the x-axis from central differences, in degrees within `[0, 90]`.
pub fn tangent_angle(bt: &Trajectory, t: usize) -> f64 {
    let d = bt.at(t as isize + 1) - bt.at(t as isize - 1);
    d.y.abs().atan2(d.x.abs()).to_degrees()
}

/// `I = |v(t1)|·sin θ1` with central-difference velocity.
pub fn impact(bt: &Trajectory, fp: &FeaturePoints) -> Impact {
    let theta1 = tangent_angle(bt, fp.t1);
    let theta2 = tangent_angle(bt, fp.t2);
    let speed = bt.velocity(fp.t1).norm();
    Impact {
        i: speed * theta1.to_radians().sin(),
        theta1,
        theta2,
    }
}

/// Maximum and mean crossing heights of one swing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingStats {
    pub h_m: f64,
    pub h_bar: f64,
}

/// `h_m = max y_m`, `h̄ = (2/T)∫y_m dt − min y_m` (trapezoidal), heights measured from the lowest swing point.
pub fn crossing_stats(wt: &Trajectory) -> CrossingStats {
    let ys: Vec<f64> = wt.points.iter().map(|p| p.y).collect();
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = wt.dt * (ys.len() - 1) as f64;
    let integral: f64 = ys.windows(2).map(|w| 0.5 * (w[0] + w[1]) * wt.dt).sum();
    let mean = if span > 0.0 { integral / span } else { ys[0] };
    CrossingStats {
        h_m: max - min,
        h_bar: mean - min,
    }
}

/// Mean per-sample Euclidean distance between two equally sampled curves.
pub fn mse(candidate: &Trajectory, target: &Trajectory) -> Result<f64> {
    if candidate.len() != target.len() {
        return Err(Error::LengthMismatch(candidate.len(), target.len()));
    }
    let sum: f64 = candidate
        .points
        .iter()
        .zip(&target.points)
        .map(|(a, b)| (a - b).norm())
        .sum();
    Ok(sum / candidate.len() as f64)
}

/// [`mse`] after shifting the candidate so its landing sample lines up with the target's.
pub fn mse_aligned(
    candidate: &Trajectory,
    cand_fp: &FeaturePoints,
    target: &Trajectory,
    target_fp: &FeaturePoints,
) -> Result<f64> {
    if candidate.len() != target.len() {
        return Err(Error::LengthMismatch(candidate.len(), target.len()));
    }
    let n = candidate.len();
    let shift = (cand_fp.t1 + n - target_fp.t1) % n;
    mse(&candidate.shifted(shift), target)
}

/// Everything derived from one bench trajectory.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub features: FeaturePoints,
    pub wt: Trajectory,
    pub report: PerformanceReport,
}

/// Full report for `bt`, optionally against a target of equal sample count.
pub fn evaluate_bt(
    bt: &Trajectory,
    target: Option<&Trajectory>,
    layout: &LegLayout,
) -> Result<Evaluation> {
    let fp = find_feature_points(bt)?;
    let stance = stance_metrics(bt, &fp)?;
    let imp = impact(bt, &fp);
    let wt = bt_to_wt(bt, &fp)?.rebased();
    let cs = crossing_stats(&wt);
    let positioned = multi_wt_layout(bt, &fp, layout)?;
    let (a, b) = DEFAULT_OBSTACLE;
    let psi2 = crossing_probability(&positioned, a, b, Gait::Biped).psi;
    let psi4 = crossing_probability(&positioned, a, b, Gait::Quad).psi;
    let (mse, fourier_distance) = match target {
        Some(t) => {
            let tfp = find_feature_points(t)?;
            (
                Some(mse_aligned(bt, &fp, t, &tfp)?),
                Some(fourier_distance(bt, t, DEFAULT_HARMONICS)),
            )
        }
        None => (None, None),
    };
    let report = PerformanceReport {
        h_s: stance.h_s,
        s: stance.s,
        theta1: imp.theta1,
        theta2: imp.theta2,
        i: imp.i,
        h_m: cs.h_m,
        h_bar: cs.h_bar,
        psi2,
        psi4,
        mse,
        l_s: stance.l_s,
        l_w: step_length(&wt).abs(),
        fourier_distance,
    };
    Ok(Evaluation {
        features: fp,
        wt,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straightness_spot_value() {
        assert!((straightness(12.5, 300.0) - 4.1666666).abs() < 1e-6);
    }
}
