use super::{Branch, Vec2};
use crate::error::{Error, Result};

/// Relative slack accepted when two circles are (numerically) tangent.
const TANGENT_TOL: f64 = 1e-12;

/// Solves the RRR dyad: the point `q` with `|q - p1| = l1` and `|q - p2| = l2`.
///
/// `branch` picks the apex on the positive (left) or negative side of the
/// directed line `p1 → p2`.
pub fn solve_dyad_rrr(p1: Vec2, p2: Vec2, l1: f64, l2: f64, branch: Branch) -> Result<Vec2> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "dyad link lengths must be positive ({l1}, {l2})"
        )));
    }
    let d = p2 - p1;
    let dist = d.norm();
    if dist <= f64::EPSILON * (l1 + l2) {
        return Err(Error::DegenerateDyad);
    }
    let a = (l1 * l1 - l2 * l2 + dist * dist) / (2.0 * dist);
    let mut h2 = l1 * l1 - a * a;
    if h2 < 0.0 {
        if h2 < -TANGENT_TOL * l1.max(l2).powi(2) {
            return Err(Error::LoopDefect { angle: None });
        }
        h2 = 0.0;
    }
    let e = d / dist;
    let n = Vec2::new(-e.y, e.x);
    Ok(p1 + e * a + n * (branch.sign() * h2.sqrt()))
}
