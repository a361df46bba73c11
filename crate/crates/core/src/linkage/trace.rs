use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Linkage, ParamVector, Topology, Vec2};
use crate::error::{Error, Result};
use crate::rtclm::Mode;
use crate::trajectory::Trajectory;

/// Jump between consecutive foot samples, relative to mechanism scale, that counts as a branch flip.
pub const BRANCH_JUMP_FRACTION: f64 = 0.2;

/// Crank angles sampled by the dense defect sweep.
pub const DEFECT_SWEEP_SAMPLES: usize = 3600;

/// Outcome of the crank, loop and branch defect checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub has_crank_defect: bool,
    pub has_loop_defect: bool,
    pub has_branch_defect: bool,
    pub first_failing_angle: Option<f64>,
}

impl DefectReport {
    pub fn is_clean(&self) -> bool {
        !(self.has_crank_defect || self.has_loop_defect || self.has_branch_defect)
    }
}

/// Full-rotatability test of a driven four-bar loop:
/// `crank + 2·max(others) < sum(others)`.
pub fn crank_condition(crank: f64, others: [f64; 3]) -> bool {
    let max = others.iter().copied().fold(f64::MIN, f64::max);
    crank + 2.0 * max < others.iter().sum::<f64>()
}

/// Foot positions at `n` uniformly spaced crank angles over `[0, 2π)`.
pub fn trace_points(linkage: &Linkage, n: usize) -> Result<Vec<Vec2>> {
    (0..n)
        .map(|k| linkage.foot(TAU * k as f64 / n as f64))
        .collect()
}

/// Bench trajectory of the foot over one crank revolution.
pub fn trace_bt(linkage: &Linkage, n: usize, period: f64) -> Result<Trajectory> {
    if n < 64 {
        return Err(Error::InvalidParams(format!(
            "trace needs at least 64 samples, got {n}"
        )));
    }
    let points = trace_points(linkage, n)?;
    check_branch_continuity(&points, BRANCH_JUMP_FRACTION * linkage.params().scale())?;
    Trajectory::closed(points, period)
}

/// Fails with [`Error::BranchDiscontinuity`] at the first step (wrapping around) longer than `threshold`.
pub fn check_branch_continuity(points: &[Vec2], threshold: f64) -> Result<()> {
    let n = points.len();
    for i in 0..n {
        let next = (i + 1) % n;
        let jump = (points[next] - points[i]).norm();
        if jump > threshold {
            return Err(Error::BranchDiscontinuity {
                index: i,
                next,
                jump,
            });
        }
    }
    Ok(())
}

/// Crank check plus a dense sweep with the default (+1) branch flags.
pub fn check_crank_defect(params: &ParamVector) -> DefectReport {
    match Linkage::with_default_branches(params) {
        Ok(linkage) => sweep_defects(&linkage, DEFECT_SWEEP_SAMPLES),
        Err(_) => {
            let v = &params.values;
            let loop1 = crank_loop(params.topology, v);
            DefectReport {
                has_crank_defect: params.topology == Topology::RtclmSevenBar
                    || !crank_condition(loop1.0, loop1.1),
                has_loop_defect: true,
                has_branch_defect: false,
                first_failing_angle: None,
            }
        }
    }
}

fn crank_loop(topology: Topology, v: &[f64]) -> (f64, [f64; 3]) {
    match topology {
        Topology::RtclmSevenBar => (v[0], [v[1], v[2], v[6].hypot(v[7])]),
        Topology::FourBar => (v[4], [v[5], v[6], v[7]]),
        _ => (v[4], [v[5], v[6], v[7]]),
    }
}

/// Crank condition on every driven loop plus an `n`-angle sweep of every mode.
pub fn sweep_defects(linkage: &Linkage, n: usize) -> DefectReport {
    let params = linkage.params();
    let loop1 = crank_loop(params.topology, &params.values);
    let mut has_crank_defect = !crank_condition(loop1.0, loop1.1);
    let mut modes: Vec<Box<dyn Fn(f64) -> Result<Vec2> + '_>> = vec![Box::new(|a| linkage.foot(a))];
    if let Some(design) = linkage.rtclm() {
        let v = &params.values;
        has_crank_defect |= !crank_condition(v[5], [v[3], v[4], design.eh_length()]);
        modes.push(Box::new(move |a| design.foot(Mode::Auxiliary, a)));
    }
    let threshold = BRANCH_JUMP_FRACTION * params.scale();
    let mut first_failing_angle = None;
    let mut has_branch_defect = false;
    for foot in &modes {
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            let a = TAU * k as f64 / n as f64;
            match foot(a) {
                Ok(p) => pts.push(p),
                Err(_) => {
                    first_failing_angle.get_or_insert(a);
                    break;
                }
            }
        }
        if pts.len() == n && check_branch_continuity(&pts, threshold).is_err() {
            has_branch_defect = true;
        }
    }
    DefectReport {
        has_crank_defect,
        has_loop_defect: first_failing_angle.is_some(),
        has_branch_defect,
        first_failing_angle,
    }
}
