//! Planar linkage topologies and their position kinematics.
//!
//! Every mechanism is solved by chaining RRR dyads (circle intersections)
//! from the driven crank outwards. See the crate README for the joint
//! diagram behind each [`Topology`].

mod dyad;
mod kinematics;
mod topology;
pub mod trace;

pub use dyad::solve_dyad_rrr;
pub use kinematics::{forward_kinematics, Linkage, Pose};
pub use topology::{wrap_angle, ParamKind, ParamVector, Topology};
pub use trace::{
    check_branch_continuity, check_crank_defect, crank_condition, sweep_defects, trace_bt,
    trace_points, DefectReport,
};

use serde::{Deserialize, Serialize};

/// 2-D point or vector in millimetres.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Unit vector at angle `a`.
#[inline]
pub fn unit(a: f64) -> Vec2 {
    Vec2::new(a.cos(), a.sin())
}

/// Point on the line `j1 → j2`: `u` along the link axis, `v` along its left normal.
#[inline]
pub fn local_point(j1: Vec2, j2: Vec2, u: f64, v: f64) -> Vec2 {
    let e = (j2 - j1).normalize();
    j1 + e * u + Vec2::new(-e.y, e.x) * v
}

/// Coordinates of `p` in the frame attached to `j1 → j2` (inverse of [`local_point`]).
#[inline]
pub fn local_coords(j1: Vec2, j2: Vec2, p: Vec2) -> (f64, f64) {
    let e = (j2 - j1).normalize();
    let d = p - j1;
    (d.dot(&e), e.x * d.y - e.y * d.x)
}

/// Assembly branch of a dyad: which side of the directed base line the apex lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Branch::Positive => Branch::Negative,
            Branch::Negative => Branch::Positive,
        }
    }
}

impl TryFrom<i8> for Branch {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Branch::Positive),
            -1 => Ok(Branch::Negative),
            _ => Err(format!("branch flag must be +1 or -1, got {v}")),
        }
    }
}

impl From<Branch> for i8 {
    fn from(b: Branch) -> i8 {
        match b {
            Branch::Positive => 1,
            Branch::Negative => -1,
        }
    }
}
