use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Dims;
use crate::error::{Error, Result};
use crate::linkage::{unit, Branch, ParamVector, Vec2};

const ROOT_SCAN: usize = 720;
const NEWTON_STARTS: usize = 8;
const NEWTON_ITERS: usize = 100;
const RESIDUAL_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-7;

/// Roots of the coupling equations for one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSolution {
    pub phi_a: f64,
    pub phi_h_l: f64,
    pub phi_h_r: f64,
    pub dy_eh: f64,
    pub h_l: Vec2,
    pub f_l: Vec2,
    pub h_r: Vec2,
    pub f_r: Vec2,
    pub residual: f64,
}

/// Residuals (mm) of the three leg-congruence equations.
///
/// `el, cl` / `er, cr` are `E` and `C` of the left and right legs, `d` the
/// rocker pivot. Returns `|F^r D| − |F^l D|`, `|F^r C^r| − |F^l C^l|` and
/// `|H^r C^r| − |H^l C^l|` with `H = E + (dx, dy)`, `F = H + r6·u(θ)`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_equations(
    el: Vec2,
    cl: Vec2,
    er: Vec2,
    cr: Vec2,
    d: Vec2,
    r6: f64,
    dx: f64,
    theta_l: f64,
    theta_r: f64,
    dy: f64,
) -> [f64; 3] {
    let off = Vec2::new(dx, dy);
    let (hl, hr) = (el + off, er + off);
    let (fl, fr) = (hl + unit(theta_l) * r6, hr + unit(theta_r) * r6);
    [
        (fr - d).norm() - (fl - d).norm(),
        (fr - cr).norm() - (fl - cl).norm(),
        (hr - cr).norm() - (hl - cl).norm(),
    ]
}

struct Frames {
    el: Vec2,
    cl: Vec2,
    er: Vec2,
    cr: Vec2,
    d: Vec2,
    r6: f64,
    dx: f64,
}

impl Frames {
    fn points(&self, x: &Vector3<f64>) -> (Vec2, Vec2, Vec2, Vec2) {
        let off = Vec2::new(self.dx, x[2]);
        let (hl, hr) = (self.el + off, self.er + off);
        (hl, hr, hl + unit(x[0]) * self.r6, hr + unit(x[1]) * self.r6)
    }

    /// Squared-distance form, which is polynomial and so well suited to Newton.
    fn squared(&self, x: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let (hl, hr, fl, fr) = self.points(x);
        let tl = Vec2::new(-x[0].sin(), x[0].cos()) * self.r6;
        let tr = Vec2::new(-x[1].sin(), x[1].cos()) * self.r6;
        let (fdl, fdr) = (fl - self.d, fr - self.d);
        let (fcl, fcr) = (fl - self.cl, fr - self.cr);
        let (hcl, hcr) = (hl - self.cl, hr - self.cr);
        let r = Vector3::new(
            fdr.norm_squared() - fdl.norm_squared(),
            fcr.norm_squared() - fcl.norm_squared(),
            hcr.norm_squared() - hcl.norm_squared(),
        );
        let j = Matrix3::new(
            -2.0 * fdl.dot(&tl),
            2.0 * fdr.dot(&tr),
            2.0 * (fdr.y - fdl.y),
            -2.0 * fcl.dot(&tl),
            2.0 * fcr.dot(&tr),
            2.0 * (fcr.y - fcl.y),
            0.0,
            0.0,
            2.0 * (hcr.y - hcl.y),
        );
        (r, j)
    }

    fn residual(&self, x: &Vector3<f64>) -> f64 {
        coupling_equations(
            self.el, self.cl, self.er, self.cr, self.d, self.r6, self.dx, x[0], x[1], x[2],
        )
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn newton(&self, mut x: Vector3<f64>) -> Option<Vector3<f64>> {
        let (mut r, mut j) = self.squared(&x);
        for _ in 0..NEWTON_ITERS {
            if self.residual(&x) < 1e-3 * RESIDUAL_TOL {
                break;
            }
            let step = j.lu().solve(&(-r))?;
            if !step.iter().all(|v| v.is_finite()) {
                return None;
            }
            let norm0 = r.norm();
            let mut lambda = 1.0;
            loop {
                let trial = x + step * lambda;
                let (rt, jt) = self.squared(&trial);
                if rt.norm() < norm0 || lambda < 1e-6 {
                    x = trial;
                    r = rt;
                    j = jt;
                    break;
                }
                lambda *= 0.5;
            }
        }
        (self.residual(&x) < RESIDUAL_TOL).then_some(x)
    }
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Switching crank angle `Φ_A`: first root in `[0, π)` of
/// `y_E(φ) − y_E(φ + π)`, found by a scan plus bisection.
pub(crate) fn switching_angle(dims: &Dims, branch: Branch) -> Result<f64> {
    let h = |phi: f64| -> Result<f64> {
        let (_, _, e1) = dims
            .loop1(phi, branch)
            .map_err(|_| Error::ImaginaryBranch)?;
        let (_, _, e2) = dims
            .loop1(phi + PI, branch)
            .map_err(|_| Error::ImaginaryBranch)?;
        Ok(e1.y - e2.y)
    };
    let step = PI / ROOT_SCAN as f64;
    let mut a = 0.0;
    let mut ha = h(a)?;
    if ha == 0.0 {
        return Ok(0.0);
    }
    for k in 1..=ROOT_SCAN {
        let b = step * k as f64;
        let hb = h(b)?;
        if hb == 0.0 {
            return Ok(if k == ROOT_SCAN { 0.0 } else { b });
        }
        if ha.signum() != hb.signum() {
            let (mut lo, mut hi, mut hlo) = (a, b, ha);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let hm = h(mid)?;
                if hm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if hm.signum() == hlo.signum() {
                    lo = mid;
                    hlo = hm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            return Ok(if root >= PI { 0.0 } else { root });
        }
        a = b;
        ha = hb;
    }
    // h(π) = −h(0), so a sign change always exists.
    Err(Error::NoRoot)
}

/// Solves the coupling equations for `Φ_H^l`, `Φ_H^r` and `Δy_EH`.
///
/// Damped Newton from eight starting angles; among converged roots whose
/// `D C F` triangles keep their orientation across the legs and whose
/// derived lengths are positive, the one with the smallest `|Δy_EH|` wins
/// (ties by `Φ_H^l`). `H` may sit mirrored about `C F` on the right leg:
/// both legs still trace the same curves in both modes.
pub fn coupling_solve(params: &ParamVector, branch: Branch) -> Result<CouplingSolution> {
    solve_dims(&Dims::from_params(params)?, branch)
}

pub(crate) fn solve_dims(dims: &Dims, branch: Branch) -> Result<CouplingSolution> {
    let phi_a = switching_angle(dims, branch)?;
    let (_, cl, el) = dims
        .loop1(phi_a, branch)
        .map_err(|_| Error::ImaginaryBranch)?;
    let (_, cr, er) = dims
        .loop1(phi_a + PI, branch)
        .map_err(|_| Error::ImaginaryBranch)?;
    let fr = Frames {
        el,
        cl,
        er,
        cr,
        d: dims.d,
        r6: dims.r6,
        dx: dims.dx_eh,
    };
    let mut roots: Vec<Vector3<f64>> = Vec::new();
    for k in 0..NEWTON_STARTS {
        let a = TAU * k as f64 / NEWTON_STARTS as f64;
        let Some(mut x) = fr.newton(Vector3::new(a, a, 0.0)) else {
            continue;
        };
        x[0] = x[0].rem_euclid(TAU);
        x[1] = x[1].rem_euclid(TAU);
        let dup = roots.iter().any(|r| {
            let da = (r[0] - x[0]).abs();
            let db = (r[1] - x[1]).abs();
            da.min(TAU - da) < DEDUP_TOL
                && db.min(TAU - db) < DEDUP_TOL
                && (r[2] - x[2]).abs() < DEDUP_TOL
        });
        if !dup {
            roots.push(x);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoRoot);
    }
    let eps = 1e-6;
    let mut valid: Vec<CouplingSolution> = roots
        .iter()
        .filter_map(|x| {
            let (hl, hr, f_l, f_r) = fr.points(x);
            let o = (
                cross(cl - dims.d, f_l - dims.d),
                cross(cr - dims.d, f_r - dims.d),
            );
            let same = o.0.abs() > eps && o.1.abs() > eps && o.0.signum() == o.1.signum();
            let lengths = [
                (f_l - dims.d).norm(),
                (f_l - cl).norm(),
                (hl - cl).norm(),
                (hl - dims.d).norm(),
                (hr - dims.d).norm(),
            ];
            (same && lengths.iter().all(|&l| l > eps)).then(|| CouplingSolution {
                phi_a,
                phi_h_l: x[0],
                phi_h_r: x[1],
                dy_eh: x[2],
                h_l: hl,
                f_l,
                h_r: hr,
                f_r,
                residual: fr.residual(x),
            })
        })
        .collect();
    valid.sort_by(|a, b| {
        a.dy_eh
            .abs()
            .total_cmp(&b.dy_eh.abs())
            .then(a.phi_h_l.total_cmp(&b.phi_h_l))
    });
    valid.into_iter().next().ok_or(Error::NoRoot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::Topology;

    fn case1() -> Dims {
        let p = ParamVector::new(
            Topology::RtclmSevenBar,
            vec![
                40.15, 106.06, 75.76, 99.02, 36.52, 26.52, 90.91, 98.72, 155.31, 128.79, 87.12,
                102.28, 113.64,
            ],
        )
        .unwrap();
        Dims::from_params(&p).unwrap()
    }

    #[test]
    fn switching_angle_balances_legs() {
        let d = case1();
        let phi = switching_angle(&d, Branch::Positive).unwrap();
        assert!((0.0..PI).contains(&phi));
        let (_, _, e1) = d.loop1(phi, Branch::Positive).unwrap();
        let (_, _, e2) = d.loop1(phi + PI, Branch::Positive).unwrap();
        assert!((e1.y - e2.y).abs() < 1e-9);
    }

    #[test]
    fn mirrored_equations_have_equal_residuals() {
        let m = |v: Vec2| Vec2::new(-v.x, v.y);
        let (el, cl, er, cr, d) = (
            Vec2::new(10.0, -80.0),
            Vec2::new(60.0, 20.0),
            Vec2::new(-20.0, -70.0),
            Vec2::new(50.0, 40.0),
            Vec2::new(-90.0, 40.0),
        );
        let a = coupling_equations(el, cl, er, cr, d, 60.0, 200.0, 0.3, 1.2, 7.0);
        let b = coupling_equations(
            m(el),
            m(cl),
            m(er),
            m(cr),
            m(d),
            60.0,
            -200.0,
            PI - 0.3,
            PI - 1.2,
            7.0,
        );
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
