//! Bench and walking trajectories: feature points, BT→WT conversion and multi-leg layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::Vec2;

/// Uniformly sampled planar curve.
///
/// Closed trajectories (bench trajectories) wrap around; open ones (walking
/// trajectories) are a single swing window.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    /// Gait period `T` in seconds.
    pub period: f64,
    /// Time between consecutive samples in seconds.
    pub dt: f64,
    pub closed: bool,
    /// Index of the sample that was at position 0 before any start shift.
    pub phase_origin: usize,
}

impl Trajectory {
    pub fn closed(points: Vec<Vec2>, period: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidTrajectory(format!(
                "{} samples is too few",
                points.len()
            )));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidTrajectory(format!(
                "period must be positive, got {period}"
            )));
        }
        let dt = period / points.len() as f64;
        Ok(Self {
            points,
            period,
            dt,
            closed: true,
            phase_origin: 0,
        })
    }

    pub fn open(points: Vec<Vec2>, dt: f64, period: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "{} samples is too few",
                points.len()
            )));
        }
        Ok(Self {
            points,
            period,
            dt,
            closed: false,
            phase_origin: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample `i`, wrapping for closed curves.
    pub fn at(&self, i: isize) -> Vec2 {
        let n = self.len() as isize;
        if self.closed {
            self.points[i.rem_euclid(n) as usize]
        } else {
            self.points[i.clamp(0, n - 1) as usize]
        }
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Central-difference velocity at sample `i` (one-sided at the ends of open curves).
    pub fn velocity(&self, i: usize) -> Vec2 {
        let n = self.len();
        let i = i as isize;
        if self.closed || (i > 0 && (i as usize) < n - 1) {
            (self.at(i + 1) - self.at(i - 1)) / (2.0 * self.dt)
        } else if i == 0 {
            (self.at(1) - self.at(0)) / self.dt
        } else {
            (self.at(i) - self.at(i - 1)) / self.dt
        }
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.points.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }

    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        Self {
            points: self.points.iter().map(|p| f(*p)).collect(),
            ..self.clone()
        }
    }

    pub fn translated(&self, d: Vec2) -> Self {
        self.map_points(|p| p + d)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_points(|p| p * s)
    }

    /// Mirror image `x → -x`.
    pub fn mirrored_x(&self) -> Self {
        self.map_points(|p| Vec2::new(-p.x, p.y))
    }

    /// Same curve whose first sample is the old sample `k`.
    pub fn shifted(&self, k: usize) -> Self {
        let n = self.len();
        let k = k % n;
        let mut points = self.points[k..].to_vec();
        points.extend_from_slice(&self.points[..k]);
        Self {
            points,
            phase_origin: (self.phase_origin + k) % n,
            ..self.clone()
        }
    }

    /// Same curve traversed backwards in time, keeping sample 0 in place.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        let points = (0..n).map(|i| self.points[(n - i) % n]).collect();
        Self {
            points,
            ..self.clone()
        }
    }

    /// Translation that puts the first sample at the origin.
    pub fn rebased(&self) -> Self {
        let p0 = self.points[0];
        self.translated(-p0)
    }
}

/// Indices of the eight characteristic points of a bench trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePoints {
    pub n: usize,
    /// Landing.
    pub t1: usize,
    /// Take-off.
    pub t2: usize,
    /// Lowest point.
    pub t3: usize,
    /// Left-most point.
    pub t4: usize,
    /// Right-most point.
    pub t5: usize,
    /// Local lowest point of the swing.
    pub t6: Option<usize>,
    /// Highest swing peak.
    pub t7: Option<usize>,
    /// Second swing peak.
    pub t8: Option<usize>,
}

impl FeaturePoints {
    /// `(label, index)` for every feature that exists.
    pub fn labelled(&self) -> Vec<(&'static str, usize)> {
        let mut out = vec![
            ("t1", self.t1),
            ("t2", self.t2),
            ("t3", self.t3),
            ("t4", self.t4),
            ("t5", self.t5),
        ];
        for (label, t) in [("t6", self.t6), ("t7", self.t7), ("t8", self.t8)] {
            if let Some(t) = t {
                out.push((label, t));
            }
        }
        out
    }

    /// Indices of the stance arc, walking forward from landing to take-off inclusive.
    pub fn stance_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let len = (self.t2 + self.n - self.t1) % self.n;
        (0..=len).map(move |k| (self.t1 + k) % self.n)
    }

    /// Indices of the swing arc, from take-off to landing inclusive.
    pub fn swing_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let len = (self.t1 + self.n - self.t2) % self.n;
        (0..=len).map(move |k| (self.t2 + k) % self.n)
    }
}

/// Landing/take-off pair plus extrema of a closed bench trajectory.
pub fn find_feature_points(bt: &Trajectory) -> Result<FeaturePoints> {
    let n = bt.len();
    if !bt.closed || n % 2 != 0 {
        return Err(Error::InvalidTrajectory(
            "feature points need a closed curve with an even sample count".into(),
        ));
    }
    let half = n / 2;
    let p = &bt.points;
    let (min_x, _, max_x, _) = bt.bbox();
    let x_tol = 1e-12 * (1.0 + min_x.abs().max(max_x.abs()));
    let mut best: Option<(f64, usize)> = None;
    for i in 0..half {
        let j = i + half;
        if (p[i].x - p[j].x).abs() <= x_tol {
            continue;
        }
        let dy = (p[i].y - p[j].y).abs();
        if best.map_or(true, |(b, _)| dy < b) {
            best = Some((dy, i));
        }
    }
    let (_, i) = best.ok_or(Error::NoValidPair)?;
    let j = i + half;
    let (t1, t2) = if p[i].x < p[j].x { (i, j) } else { (j, i) };

    let argmin = |f: &dyn Fn(&Vec2) -> f64| {
        (0..n).fold(0, |best, k| if f(&p[k]) < f(&p[best]) { k } else { best })
    };
    let t3 = argmin(&|q| q.y);
    let t4 = argmin(&|q| q.x);
    let t5 = argmin(&|q| -q.x);

    let mut fp = FeaturePoints {
        n,
        t1,
        t2,
        t3,
        t4,
        t5,
        t6: None,
        t7: None,
        t8: None,
    };
    let swing: Vec<usize> = fp.swing_indices().collect();
    let vy: Vec<f64> = swing.iter().map(|&k| bt.velocity(k).y).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for w in 1..swing.len().saturating_sub(1) {
        let (a, b) = (vy[w - 1], vy[w]);
        if a > 0.0 && b <= 0.0 {
            maxima.push(pick(p, swing[w - 1], swing[w], true));
        } else if a < 0.0 && b >= 0.0 {
            minima.push(pick(p, swing[w - 1], swing[w], false));
        }
    }
    maxima.sort_by(|a, b| p[*b].y.total_cmp(&p[*a].y).then(a.cmp(b)));
    fp.t7 = maxima.first().copied();
    fp.t8 = maxima.get(1).copied();
    fp.t6 = minima
        .into_iter()
        .min_by(|a, b| p[*a].y.total_cmp(&p[*b].y).then(a.cmp(b)));
    Ok(fp)
}

fn pick(p: &[Vec2], a: usize, b: usize, high: bool) -> usize {
    if (p[a].y > p[b].y) == high {
        a
    } else {
        b
    }
}

/// Walking trajectory of one swing: `C_m(t2+Δt) = C_b(t2) − ΔC_b(t1, Δt) + ΔC_b(t2, Δt)`.
///
/// Returns `N/2 + 1` samples for `Δt ∈ [0, T/2]` in the bench frame; the first
/// sample is the take-off point.
pub fn bt_to_wt(bt: &Trajectory, fp: &FeaturePoints) -> Result<Trajectory> {
    let n = bt.len();
    if fp.n != n {
        return Err(Error::LengthMismatch(fp.n, n));
    }
    let half = n / 2;
    let (t1, t2) = (fp.t1 as isize, fp.t2 as isize);
    let c1 = bt.at(t1);
    let points = (0..=half as isize)
        .map(|k| bt.at(t2 + k) + c1 - bt.at(t1 + k))
        .collect();
    Trajectory::open(points, bt.dt, bt.period)
}

/// Signed horizontal displacement of an open trajectory from first to last sample.
pub fn step_length(wt: &Trajectory) -> f64 {
    wt.points[wt.len() - 1].x - wt.points[0].x
}

/// One leg of a multi-leg module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSpec {
    pub id: String,
    /// Hip (frame) origin in the body frame, mm.
    pub origin: [f64; 2],
    /// Phase lag as a fraction of the gait period.
    pub phase: f64,
}

/// Arrangement of legs on the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegLayout {
    #[serde(default = "schema_one")]
    pub schema: u32,
    pub legs: Vec<LegSpec>,
}

fn schema_one() -> u32 {
    1
}

impl LegLayout {
    /// Two legs in antiphase sharing one hip position.
    pub fn biped() -> Self {
        Self::from_origins(&[("A", [0.0, 0.0], 0.0), ("B", [0.0, 0.0], 0.5)])
    }

    /// Trot: diagonal pairs A/C and B/D in phase, pairs in antiphase, coincident hips.
    pub fn quad_trot() -> Self {
        Self::from_origins(&[
            ("A", [0.0, 0.0], 0.0),
            ("B", [0.0, 0.0], 0.5),
            ("C", [0.0, 0.0], 0.0),
            ("D", [0.0, 0.0], 0.5),
        ])
    }

    pub fn from_origins(legs: &[(&str, [f64; 2], f64)]) -> Self {
        Self {
            schema: 1,
            legs: legs
                .iter()
                .map(|(id, origin, phase)| LegSpec {
                    id: id.to_string(),
                    origin: *origin,
                    phase: *phase,
                })
                .collect(),
        }
    }

    fn origin(&self, id: &str) -> Option<[f64; 2]> {
        self.legs.iter().find(|l| l.id == id).map(|l| l.origin)
    }
}

/// One leg's swing arch placed in the common ground frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionedWt {
    pub id: String,
    pub phase: f64,
    /// Ground-frame samples; ground contact is at `y = 0`.
    pub points: Vec<Vec2>,
}

/// Result of [`multi_wt_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct WtLayout {
    pub legs: Vec<PositionedWt>,
    /// Horizontal distance between consecutive footholds of one leg (`2·l_s`).
    pub stride: f64,
    pub dx_ab: Option<f64>,
    pub dx_bc: Option<f64>,
    pub dx_cd: Option<f64>,
}

/// Places every leg's WT in a shared ground frame and evaluates the foot offsets Δx.
///
/// Each arch starts at the leg's take-off foothold, shifted by its hip origin
/// and by the body travel accumulated over its phase lag.
pub fn multi_wt_layout(
    bt: &Trajectory,
    fp: &FeaturePoints,
    layout: &LegLayout,
) -> Result<WtLayout> {
    let wt = bt_to_wt(bt, fp)?.rebased();
    let signed_stride = step_length(&wt);
    // C_b(t1) relative to C_b(t2): the re-based landing point is 2·c1.
    let c1 = bt.points[fp.t1] - bt.points[fp.t2];
    let landing = 2.0 * c1.x;
    let ox = |id: &str| layout.origin(id).map(|o| o[0]);
    let dx_ab = match (ox("A"), ox("B")) {
        (Some(a), Some(b)) => Some(landing + b - a),
        _ => None,
    };
    let dx_bc = match (ox("B"), ox("C")) {
        (Some(b), Some(c)) => Some(c - b - landing),
        _ => None,
    };
    let dx_cd = match (ox("C"), ox("D")) {
        (Some(c), Some(d)) => Some(landing + d - c),
        _ => None,
    };
    let legs = layout
        .legs
        .iter()
        .map(|leg| {
            let shift = Vec2::new(leg.origin[0] + signed_stride * leg.phase, 0.0);
            PositionedWt {
                id: leg.id.clone(),
                phase: leg.phase,
                points: wt.points.iter().map(|p| p + shift).collect(),
            }
        })
        .collect();
    Ok(WtLayout {
        legs,
        stride: signed_stride.abs(),
        dx_ab,
        dx_bc,
        dx_cd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(n: usize) -> Trajectory {
        let pts = (0..n).map(|k| {
            let a = TAU * k as f64 / n as f64;
            Vec2::new(a.cos(), a.sin())
        });
        Trajectory::closed(pts.collect(), 1.0).unwrap()
    }

    #[test]
    fn circle_features() {
        let bt = circle(360);
        let fp = find_feature_points(&bt).unwrap();
        assert_eq!(fp.t3, 270);
        assert_eq!(fp.t4, 180);
        assert_eq!(fp.t5, 0);
        assert_eq!((fp.t1, fp.t2), (180, 0));
        assert_eq!((fp.t1 + 180) % 360, fp.t2);
    }

    #[test]
    fn mirrored_features_swap() {
        let bt = circle(360).shifted(17);
        let fp = find_feature_points(&bt).unwrap();
        let fm = find_feature_points(&bt.mirrored_x()).unwrap();
        assert_eq!((fp.t4, fp.t5), (fm.t5, fm.t4));
        assert_eq!((fp.t1, fp.t2), (fm.t2, fm.t1));
    }

    #[test]
    fn stance_and_swing_arcs_share_endpoints() {
        let fp = find_feature_points(&circle(64)).unwrap();
        let stance: Vec<_> = fp.stance_indices().collect();
        let swing: Vec<_> = fp.swing_indices().collect();
        assert_eq!(stance.len(), 33);
        assert_eq!(swing.len(), 33);
        assert_eq!((stance[0], *stance.last().unwrap()), (fp.t1, fp.t2));
        assert_eq!((swing[0], *swing.last().unwrap()), (fp.t2, fp.t1));
    }

    #[test]
    fn reversal_keeps_start() {
        let bt = circle(64);
        let r = bt.reversed();
        assert_eq!(r.points[0], bt.points[0]);
        assert_eq!(r.points[1], bt.points[63]);
    }
}
