use super::{local_point, solve_dyad_rrr, unit, Branch, ParamVector, Topology, Vec2};
use crate::error::{Error, Result};
use crate::rtclm::{Mode, RtclmDesign};

/// Positions of every joint for one crank angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub crank_angle: f64,
    pub joints: Vec<(&'static str, Vec2)>,
    pub foot: Vec2,
    pub branch_flags: Vec<Branch>,
}

impl Pose {
    pub fn joint(&self, name: &str) -> Option<Vec2> {
        self.joints
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| *p)
    }
}

const FOUR_BAR_JOINTS: [&str; 5] = ["A", "B", "C", "D", "P"];
const SIX_BAR_JOINTS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "P", "Q"];

/// A mechanism prepared for repeated pose evaluation with fixed branch flags.
#[derive(Debug, Clone)]
pub struct Linkage {
    params: ParamVector,
    branches: Vec<Branch>,
    rtclm: Option<RtclmDesign>,
}

impl Linkage {
    pub fn new(params: &ParamVector, branches: &[Branch]) -> Result<Self> {
        let topology = params.topology;
        if branches.len() != topology.dyad_count() {
            return Err(Error::InvalidParams(format!(
                "{topology} needs {} branch flags, got {}",
                topology.dyad_count(),
                branches.len()
            )));
        }
        let rtclm = if topology == Topology::RtclmSevenBar {
            Some(RtclmDesign::solve(params, branches)?)
        } else {
            None
        };
        Ok(Self {
            params: params.clone(),
            branches: branches.to_vec(),
            rtclm,
        })
    }

    /// Linkage with the default branch assignment (+1 for every dyad).
    pub fn with_default_branches(params: &ParamVector) -> Result<Self> {
        Self::new(
            params,
            &vec![Branch::Positive; params.topology.dyad_count()],
        )
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn rtclm(&self) -> Option<&RtclmDesign> {
        self.rtclm.as_ref()
    }

    pub fn joint_names(&self) -> &'static [&'static str] {
        match self.params.topology {
            Topology::FourBar => &FOUR_BAR_JOINTS,
            Topology::RtclmSevenBar => &crate::rtclm::JOINTS,
            _ => &SIX_BAR_JOINTS,
        }
    }

    /// Joint positions in [`Self::joint_names`] order; the last entry is the foot.
    pub fn joints(&self, crank_angle: f64) -> Result<Vec<Vec2>> {
        let v = &self.params.values;
        let at = |e: Error| match e {
            Error::LoopDefect { .. } => Error::LoopDefect {
                angle: Some(crank_angle),
            },
            other => other,
        };
        match self.params.topology {
            Topology::RtclmSevenBar => {
                let design = self
                    .rtclm
                    .as_ref()
                    .expect("seven-bar linkage carries its coupling solution");
                design.joints(Mode::Primary, crank_angle).map_err(at)
            }
            Topology::FourBar => {
                let (b, g, a) = (v[0], v[1], Vec2::new(v[2], v[3]));
                let d = a + unit(g) * v[7];
                let bj = a + unit(b + crank_angle) * v[4];
                let c = solve_dyad_rrr(bj, d, v[5], v[6], self.branches[0]).map_err(at)?;
                let p = local_point(bj, c, v[8], v[9]);
                Ok(vec![a, bj, c, d, p])
            }
            topology => {
                let (b, g, a) = (v[0], v[1], Vec2::new(v[2], v[3]));
                let r = |i: usize| v[3 + i];
                let d = a + unit(g) * r(4);
                let bj = a + unit(b + crank_angle) * r(1);
                let c = solve_dyad_rrr(bj, d, r(2), r(3), self.branches[0]).map_err(at)?;
                let (e, f) = match topology {
                    Topology::StephensonI => (
                        local_point(a, bj, r(5), r(6)),
                        local_point(d, c, r(7), r(8)),
                    ),
                    Topology::WattI => (
                        local_point(bj, c, r(5), r(6)),
                        local_point(d, c, r(7), r(8)),
                    ),
                    _ => (
                        local_point(bj, c, r(5), r(6)),
                        local_point(a, d, r(7), r(8)),
                    ),
                };
                let p = solve_dyad_rrr(e, f, r(9), r(10), self.branches[1]).map_err(at)?;
                let q = local_point(e, p, r(12), r(11));
                Ok(vec![a, bj, c, d, e, f, p, q])
            }
        }
    }

    pub fn foot(&self, crank_angle: f64) -> Result<Vec2> {
        Ok(*self
            .joints(crank_angle)?
            .last()
            .expect("at least one joint"))
    }

    pub fn pose(&self, crank_angle: f64) -> Result<Pose> {
        let pts = self.joints(crank_angle)?;
        let foot = *pts.last().expect("at least one joint");
        Ok(Pose {
            crank_angle,
            joints: self.joint_names().iter().copied().zip(pts).collect(),
            foot,
            branch_flags: self.branches.clone(),
        })
    }

    /// Rigid-link constraints as `(joint i, joint j, length)` triples over [`Self::joint_names`].
    pub fn constraints(&self) -> Vec<(usize, usize, f64)> {
        let v = &self.params.values;
        match self.params.topology {
            Topology::RtclmSevenBar => self
                .rtclm
                .as_ref()
                .map(|d| d.constraints(Mode::Primary))
                .unwrap_or_default(),
            Topology::FourBar => {
                let (r1, r2, r3, r4, u, w) = (v[4], v[5], v[6], v[7], v[8], v[9]);
                vec![
                    (0, 1, r1),
                    (1, 2, r2),
                    (2, 3, r3),
                    (0, 3, r4),
                    (1, 4, u.hypot(w)),
                    (2, 4, (r2 - u).hypot(w)),
                ]
            }
            topology => {
                let r = |i: usize| v[3 + i];
                let (e_base, e_len) = match topology {
                    Topology::StephensonI => ((0, 1), r(1)),
                    _ => ((1, 2), r(2)),
                };
                let (f_base, f_len) = match topology {
                    Topology::StephensonIII => ((0, 3), r(4)),
                    _ => ((3, 2), r(3)),
                };
                vec![
                    (0, 1, r(1)),
                    (1, 2, r(2)),
                    (2, 3, r(3)),
                    (0, 3, r(4)),
                    (e_base.0, 4, r(5).hypot(r(6))),
                    (e_base.1, 4, (e_len - r(5)).hypot(r(6))),
                    (f_base.0, 5, r(7).hypot(r(8))),
                    (f_base.1, 5, (f_len - r(7)).hypot(r(8))),
                    (4, 6, r(9)),
                    (5, 6, r(10)),
                    (4, 7, r(12).hypot(r(11))),
                    (6, 7, (r(9) - r(12)).hypot(r(11))),
                ]
            }
        }
    }

    /// Largest violation of any rigid-link length in `pose`, in mm.
    pub fn closure_residual(&self, pose: &Pose) -> f64 {
        self.constraints()
            .into_iter()
            .map(|(i, j, l)| ((pose.joints[i].1 - pose.joints[j].1).norm() - l).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves every joint of `params` at `crank_angle` with the given branch flags.
pub fn forward_kinematics(
    params: &ParamVector,
    crank_angle: f64,
    branches: &[Branch],
) -> Result<Pose> {
    Linkage::new(params, branches)?.pose(crank_angle)
}
