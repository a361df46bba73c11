//! Reconfigurable seven-bar leg (RTCLM).
//!
//! Joints: crank `A`–`B` driven about the origin, coupler `B C` (`r2`)
//! carrying `E` at `a1` along and `b1` to the right of `B → C`, rocker
//! `D`–`C` (`r3`) pivoting at `(x_d, y_d)`, auxiliary crank `H`–`F` (`r6`),
//! dyad `F`–`G`–`E` (`r4`, `r5`) and the foot `P` at `a3` along and `b3` to
//! the right of `G → F`.
//!
//! * Primary mode: joint `H` is locked, so `D C F H` move as one rigid rocker
//!   and the leg is a Watt six-bar driven by `A B`.
//! * Auxiliary mode: motor `A` is locked at the switching angle `Φ_A`, the
//!   frame `A B E C H D` is fixed and crank `H F` drives the four-bar
//!   `H F G E` whose ground link is `EH`.
//!
//! The left and right legs of a module share one design and run half a crank
//! turn apart. [`RtclmDesign::solve`] finds the switching angles and the
//! free offset `Δy_EH` that make both legs congruent in both modes.

mod coupling;
mod optimize;

pub use coupling::{coupling_equations, coupling_solve, CouplingSolution};
pub use optimize::{
    audit_design, build_design, evaluate_design, order_ok, order_shortfall, order_violation,
    orient, stepwise_optimize, DesignAudit, RtclmEvaluation, RtclmObjective, RtclmProblem,
    RtclmRun, StepwiseConfig, Targets,
};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{local_point, solve_dyad_rrr, unit, Branch, ParamVector, Topology, Vec2};
use crate::trajectory::Trajectory;

/// Joint order used by [`RtclmDesign::joints`]; the foot comes last.
pub const JOINTS: [&str; 9] = ["A", "B", "C", "D", "E", "H", "F", "G", "P"];

/// Operating mode of the seven-bar leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Six-bar, crank `AB`, joint `H` locked.
    Primary,
    /// Four-bar, crank `HF`, motor `A` locked.
    Auxiliary,
}

/// Quantities fixed by the coupling constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    /// Crank angle `Φ_A` of the left leg at the switching state.
    pub phi_a: f64,
    /// Auxiliary crank angles `Φ_H` of the left and right legs.
    pub phi_h_l: f64,
    pub phi_h_r: f64,
    pub dy_eh: f64,
    /// `F` in the rocker frame `D → C`: along and across.
    pub a2: f64,
    pub b2: f64,
    pub df: f64,
    pub cf: f64,
    pub ch: f64,
    pub dh: f64,
    /// `H` in the rocker frame `D → C`, left leg.
    pub h_along: f64,
    pub h_across: f64,
    /// `H` in the rocker frame of the right leg.
    pub h_along_r: f64,
    pub h_across_r: f64,
}

/// Named view of the 13 free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dims {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
    pub r6: f64,
    pub d: Vec2,
    pub a1: f64,
    pub b1: f64,
    pub a3: f64,
    pub b3: f64,
    pub dx_eh: f64,
}

impl Dims {
    pub fn from_params(p: &ParamVector) -> Result<Self> {
        if p.topology != Topology::RtclmSevenBar {
            return Err(Error::InvalidParams(format!(
                "expected rtclm7 parameters, got {}",
                p.topology
            )));
        }
        let v = &p.values;
        Ok(Self {
            r1: v[0],
            r2: v[1],
            r3: v[2],
            r4: v[3],
            r5: v[4],
            r6: v[5],
            d: Vec2::new(v[6], v[7]),
            a1: v[8],
            b1: v[9],
            a3: v[10],
            b3: v[11],
            dx_eh: v[12],
        })
    }

    /// Crank `B`, rocker tip `C` and coupler point `E` at crank angle `phi`.
    pub fn loop1(&self, phi: f64, branch: Branch) -> Result<(Vec2, Vec2, Vec2)> {
        let b = unit(phi) * self.r1;
        let c = solve_dyad_rrr(b, self.d, self.r2, self.r3, branch)?;
        let e = local_point(b, c, self.a1, -self.b1);
        Ok((b, c, e))
    }
}

/// A seven-bar design with its coupling solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RtclmDesign {
    pub params: ParamVector,
    pub branches: [Branch; 2],
    pub derived: Derived,
    dims: Dims,
    /// Frozen frame of the left leg at `Φ_A`: `B`, `C`, `E`.
    frame: (Vec2, Vec2, Vec2),
}

impl RtclmDesign {
    /// Runs the coupling solve for `params` with dyad branches `[loop 1, G]`.
    pub fn solve(params: &ParamVector, branches: &[Branch]) -> Result<Self> {
        let dims = Dims::from_params(params)?;
        let branches: [Branch; 2] = branches
            .try_into()
            .map_err(|_| Error::InvalidParams("the seven-bar takes two branch flags".into()))?;
        let sol = coupling::solve_dims(&dims, branches[0])?;
        let frame = dims.loop1(sol.phi_a, branches[0])?;
        let (_, c, _) = frame;
        let h = sol.h_l;
        let f = sol.f_l;
        let (a2, b2) = crate::linkage::local_coords(dims.d, c, f);
        let (h_along, h_across) = crate::linkage::local_coords(dims.d, c, h);
        let (_, c_r, _) = dims.loop1(sol.phi_a + PI, branches[0])?;
        let (h_along_r, h_across_r) = crate::linkage::local_coords(dims.d, c_r, sol.h_r);
        let derived = Derived {
            phi_a: sol.phi_a,
            phi_h_l: sol.phi_h_l,
            phi_h_r: sol.phi_h_r,
            dy_eh: sol.dy_eh,
            a2,
            b2,
            df: (f - dims.d).norm(),
            cf: (f - c).norm(),
            ch: (h - c).norm(),
            dh: (h - dims.d).norm(),
            h_along,
            h_across,
            h_along_r,
            h_across_r,
        };
        Ok(Self {
            params: params.clone(),
            branches,
            derived,
            dims,
            frame,
        })
    }

    pub fn eh(&self) -> Vec2 {
        Vec2::new(self.dims.dx_eh, self.derived.dy_eh)
    }

    pub fn eh_length(&self) -> f64 {
        self.eh().norm()
    }

    /// Joint positions in [`JOINTS`] order for the active mode's crank angle.
    pub fn joints(&self, mode: Mode, angle: f64) -> Result<Vec<Vec2>> {
        let dm = &self.dims;
        let (b, c, e, h, f) = match mode {
            Mode::Primary => {
                let (b, c, e) = dm.loop1(angle, self.branches[0])?;
                let f = local_point(dm.d, c, self.derived.a2, self.derived.b2);
                let h = local_point(dm.d, c, self.derived.h_along, self.derived.h_across);
                (b, c, e, h, f)
            }
            Mode::Auxiliary => {
                let (b, c, e) = self.frame;
                let h = e + self.eh();
                (b, c, e, h, h + unit(angle) * dm.r6)
            }
        };
        let g = solve_dyad_rrr(f, e, dm.r4, dm.r5, self.branches[1])?;
        let p = local_point(g, f, dm.a3, -dm.b3);
        Ok(vec![Vec2::zeros(), b, c, dm.d, e, h, f, g, p])
    }

    pub fn foot(&self, mode: Mode, angle: f64) -> Result<Vec2> {
        Ok(self.joints(mode, angle)?[8])
    }

    /// Crank angle of the active mode at the switching state (left leg).
    pub fn switch_angle(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Primary => self.derived.phi_a,
            Mode::Auxiliary => self.derived.phi_h_l,
        }
    }

    /// Rigid-link constraints over [`JOINTS`] for the given mode.
    pub fn constraints(&self, mode: Mode) -> Vec<(usize, usize, f64)> {
        let dm = &self.dims;
        let dv = &self.derived;
        let mut out = vec![
            (5, 6, dm.r6),
            (6, 7, dm.r4),
            (7, 4, dm.r5),
            (7, 8, dm.a3),
            (6, 8, dm.b3),
        ];
        match mode {
            Mode::Primary => out.extend([
                (0, 1, dm.r1),
                (1, 2, dm.r2),
                (2, 3, dm.r3),
                (1, 4, dm.a1),
                (2, 4, dm.b1),
                (3, 6, dv.df),
                (2, 6, dv.cf),
                (3, 5, dv.dh),
                (2, 5, dv.ch),
            ]),
            Mode::Auxiliary => out.push((4, 5, self.eh_length())),
        }
        out
    }

    /// Bench trajectory of the foot in `mode` over one turn of the active crank.
    pub fn trace(&self, mode: Mode, n: usize, period: f64) -> Result<Trajectory> {
        let points = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                self.foot(mode, a).map_err(|e| match e {
                    Error::LoopDefect { .. } => Error::LoopDefect { angle: Some(a) },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        crate::linkage::check_branch_continuity(
            &points,
            crate::linkage::trace::BRANCH_JUMP_FRACTION * self.params.scale(),
        )?;
        Trajectory::closed(points, period)
    }

    /// Residuals (mm) of the three coupling equations at the stored solution.
    pub fn coupling_residuals(&self) -> [f64; 3] {
        let dm = &self.dims;
        let dv = &self.derived;
        let left = dm.loop1(dv.phi_a, self.branches[0]);
        let right = dm.loop1(dv.phi_a + PI, self.branches[0]);
        match (left, right) {
            (Ok((_, cl, el)), Ok((_, cr, er))) => coupling_equations(
                el, cl, er, cr, dm.d, dm.r6, dm.dx_eh, dv.phi_h_l, dv.phi_h_r, dv.dy_eh,
            ),
            _ => [f64::INFINITY; 3],
        }
    }
}
