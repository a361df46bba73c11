//! Shape-constrained design flow: Fourier-descriptor predesign, three
//! subtasks with shrinking search boxes, knee-point decisions, and a
//! single-level baseline.

mod decide;
mod run;

pub use decide::{decide, Criteria};
pub use run::{
    measure_design, predesign, run_hierarchical, run_hierarchical_partial, run_single_level,
    subtask1, subtask2, subtask3, DesignRun, Incumbent, SingleLevelRun,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{trace_bt, Branch, Linkage, ParamKind, ParamVector, Topology};
use crate::metrics::{fourier_distance, impact, mse_aligned, stance_metrics, DEFAULT_HARMONICS};
use crate::moo::{AlgoConfig, Evaluated, PENALTY};
use crate::target::CycloidSpec;
use crate::trajectory::{find_feature_points, FeaturePoints, Trajectory};

/// Scalar measures the subtasks optimise or constrain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Normalised Fourier-descriptor distance to the target.
    Fourier,
    /// `f1`: mean point distance to the target after landing alignment.
    Mse,
    /// `f2`: piecewise step-length deviation.
    StepLength,
    /// `f3`: squared offset of the lowest point from the target's.
    LowestPoint,
    /// `f4`: stance fluctuation `h_s`.
    Fluctuation,
    /// `f5`: landing impact `I`.
    Impact,
}

impl Objective {
    pub fn id(self) -> &'static str {
        match self {
            Objective::Fourier => "fd",
            Objective::Mse => "f1",
            Objective::StepLength => "f2",
            Objective::LowestPoint => "f3",
            Objective::Fluctuation => "f4",
            Objective::Impact => "f5",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// `f2` as a function of the stance length `l`: quadratic about 300 inside
/// `(290, 310)`, five-fold quadratic from the nearer edge outside.
pub fn step_length_objective(l: f64) -> f64 {
    if l > 290.0 && l < 310.0 {
        (l - 300.0).powi(2)
    } else if l <= 290.0 {
        5.0 * (l - 290.0).powi(2)
    } else {
        5.0 * (l - 310.0).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskId {
    Predesign,
    S1,
    S2,
    S3,
    SingleLevel,
}

impl SubtaskId {
    pub fn name(self) -> &'static str {
        match self {
            SubtaskId::Predesign => "predesign",
            SubtaskId::S1 => "s1",
            SubtaskId::S2 => "s2",
            SubtaskId::S3 => "s3",
            SubtaskId::SingleLevel => "single_level",
        }
    }
}

/// Search box around an incumbent: `± max(fraction·|x|, additive)` per
/// length-like gene, `± fraction·|x|` per angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub fraction: f64,
    pub additive: f64,
}

impl SearchBox {
    /// Box around `x`, clipped to `full` and always containing `x`.
    pub fn bounds(&self, topology: Topology, x: &[f64], full: &[(f64, f64)]) -> Vec<(f64, f64)> {
        x.iter()
            .zip(full)
            .enumerate()
            .map(|(i, (&v, &(lo, hi)))| {
                let half = match topology.param_kind(i) {
                    ParamKind::Angle => self.fraction * v.abs(),
                    _ => (self.fraction * v.abs()).max(self.additive),
                };
                ((v - half).max(lo).min(v), (v + half).min(hi).max(v))
            })
            .collect()
    }
}

/// One optimisation stage of the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskSpec {
    pub id: SubtaskId,
    pub objectives: Vec<Objective>,
    /// `(measure, bound)`: satisfied when the measure is strictly below the bound.
    pub constraints: Vec<(Objective, f64)>,
    /// `None` searches the topology's full box.
    pub search_box: Option<SearchBox>,
    /// Objective preferred when several knee candidates remain.
    pub priority: Objective,
    /// Soft filter tiers applied before the knee pool, see [`Criteria`].
    pub preferred: Vec<Vec<(Objective, f64)>>,
}

impl SubtaskSpec {
    pub fn predesign() -> Self {
        Self {
            id: SubtaskId::Predesign,
            objectives: vec![Objective::Fourier],
            constraints: Vec::new(),
            search_box: None,
            priority: Objective::Fourier,
            preferred: Vec::new(),
        }
    }

    pub fn s1() -> Self {
        Self {
            id: SubtaskId::S1,
            objectives: vec![
                Objective::Mse,
                Objective::StepLength,
                Objective::LowestPoint,
            ],
            constraints: Vec::new(),
            search_box: Some(SearchBox {
                fraction: 0.2,
                additive: 20.0,
            }),
            priority: Objective::Mse,
            preferred: vec![
                vec![
                    (Objective::Mse, 6.0),
                    (Objective::StepLength, 0.01),
                    (Objective::LowestPoint, 0.01),
                ],
                vec![
                    (Objective::Mse, 6.0),
                    (Objective::StepLength, 5.0),
                    (Objective::LowestPoint, 5.0),
                ],
                vec![
                    (Objective::StepLength, 0.01),
                    (Objective::LowestPoint, 0.01),
                ],
            ],
        }
    }

    pub fn s2() -> Self {
        Self {
            id: SubtaskId::S2,
            objectives: vec![Objective::Fluctuation, Objective::Impact],
            constraints: vec![
                (Objective::Mse, 6.0),
                (Objective::StepLength, 5.0),
                (Objective::LowestPoint, 5.0),
            ],
            search_box: Some(SearchBox {
                fraction: 0.1,
                additive: 10.0,
            }),
            priority: Objective::Fluctuation,
            preferred: vec![vec![
                (Objective::Fluctuation, 6.5),
                (Objective::Impact, 20.0),
            ]],
        }
    }

    pub fn s3() -> Self {
        let mut constraints = Self::s2().constraints;
        constraints.extend([(Objective::Fluctuation, 6.5), (Objective::Impact, 20.0)]);
        Self {
            id: SubtaskId::S3,
            objectives: vec![Objective::Fluctuation, Objective::Impact],
            constraints,
            search_box: Some(SearchBox {
                fraction: 0.05,
                additive: 5.0,
            }),
            priority: Objective::Impact,
            preferred: Vec::new(),
        }
    }

    pub fn single_level() -> Self {
        Self {
            id: SubtaskId::SingleLevel,
            objectives: vec![
                Objective::Mse,
                Objective::StepLength,
                Objective::LowestPoint,
                Objective::Fluctuation,
                Objective::Impact,
            ],
            constraints: Vec::new(),
            search_box: None,
            priority: Objective::Mse,
            preferred: Vec::new(),
        }
    }

    /// Constraint slacks `measure − bound` (satisfied when negative).
    pub fn violations(&self, m: &Measures) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|(o, b)| m.get(*o) - b)
            .collect()
    }

    pub fn satisfied_by(&self, m: &Measures) -> bool {
        self.constraints.iter().all(|(o, b)| m.get(*o) < *b)
    }
}

/// Every scalar a subtask may need for one design, plus the branch it was traced on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub fourier: f64,
    pub mse: f64,
    pub step_length: f64,
    pub lowest_point: f64,
    pub h_s: f64,
    pub impact: f64,
    pub l_s: f64,
    pub s: f64,
    pub branches: [Branch; 2],
}

impl Measures {
    pub fn get(&self, o: Objective) -> f64 {
        match o {
            Objective::Fourier => self.fourier,
            Objective::Mse => self.mse,
            Objective::StepLength => self.step_length,
            Objective::LowestPoint => self.lowest_point,
            Objective::Fluctuation => self.h_s,
            Objective::Impact => self.impact,
        }
    }
}

/// Reference curve with its feature points precomputed.
#[derive(Debug, Clone)]
pub struct Target {
    pub bt: Trajectory,
    pub features: FeaturePoints,
}

impl Target {
    pub fn new(bt: Trajectory) -> Result<Self> {
        let features = find_feature_points(&bt)?;
        Ok(Self { bt, features })
    }

    pub fn lowest_y(&self) -> f64 {
        self.bt.points[self.features.t3].y
    }
}

/// Measures of `genome` traced with fixed branches.
pub fn measure_with(
    topology: Topology,
    genome: &[f64],
    branches: [Branch; 2],
    target: &Target,
) -> Result<Measures> {
    let params = ParamVector::new(topology, genome.to_vec())?;
    let linkage = Linkage::new(&params, &branches[..topology.dyad_count()])?;
    let bt = trace_bt(&linkage, target.bt.len(), target.bt.period)?;
    let fp = find_feature_points(&bt)?;
    let stance = stance_metrics(&bt, &fp)?;
    let imp = impact(&bt, &fp);
    Ok(Measures {
        fourier: fourier_distance(&bt, &target.bt, DEFAULT_HARMONICS),
        mse: mse_aligned(&bt, &fp, &target.bt, &target.features)?,
        step_length: step_length_objective(stance.l_s),
        lowest_point: (bt.points[fp.t3].y - target.lowest_y()).powi(2),
        h_s: stance.h_s,
        impact: imp.i,
        l_s: stance.l_s,
        s: stance.s,
        branches,
    })
}

/// Tries both assemblies of the first dyad and keeps the feasible one that
/// scores lower on `key`; the second dyad stays on `+1`.
pub fn measure(
    topology: Topology,
    genome: &[f64],
    target: &Target,
    key: Objective,
) -> Result<Measures> {
    let mut best: Option<Measures> = None;
    let mut first_err = None;
    for b0 in [Branch::Positive, Branch::Negative] {
        match measure_with(topology, genome, [b0, Branch::Positive], target) {
            Ok(m) => {
                if best.map_or(true, |b| m.get(key) < b.get(key)) {
                    best = Some(m);
                }
            }
            Err(e) => {
                if !e.is_kinematic() {
                    return Err(e);
                }
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one branch tried"))
}

/// Similarity map `p ↦ s·R(θ)·p + (dx, dy)` that best lays one closed curve onto another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFit {
    pub scale: f64,
    pub angle: f64,
    pub dx: f64,
    pub dy: f64,
    /// Sample offset: candidate sample `j + shift` lands on target sample `j`.
    pub shift: usize,
    /// Root-mean-square point distance after the map.
    pub rms: f64,
}

/// Least-squares similarity fit over every cyclic shift of `candidate`.
pub fn similarity_fit(candidate: &Trajectory, target: &Trajectory) -> Result<SimilarityFit> {
    use num_complex::Complex64 as C;
    let n = candidate.len();
    if n != target.len() {
        return Err(Error::LengthMismatch(n, target.len()));
    }
    let z = |p: &crate::linkage::Vec2| C::new(p.x, p.y);
    let c: Vec<C> = candidate.points.iter().map(z).collect();
    let t: Vec<C> = target.points.iter().map(z).collect();
    let cm = c.iter().sum::<C>() / n as f64;
    let tm = t.iter().sum::<C>() / n as f64;
    let cc: Vec<C> = c.iter().map(|v| v - cm).collect();
    let tc: Vec<C> = t.iter().map(|v| v - tm).collect();
    let cn: f64 = cc.iter().map(|v| v.norm_sqr()).sum();
    let tn: f64 = tc.iter().map(|v| v.norm_sqr()).sum();
    if cn <= 0.0 {
        return Err(Error::InvalidTrajectory(
            "candidate curve collapses to a point".into(),
        ));
    }
    let mut best: Option<(f64, usize, C)> = None;
    for k in 0..n {
        let cross: C = (0..n).map(|j| cc[(j + k) % n].conj() * tc[j]).sum();
        // Residual of the optimal map: |t|² − |Σ conj(c)·t|²/|c|².
        let res = tn - cross.norm_sqr() / cn;
        if best.map_or(true, |(r, _, _)| res < r - 1e-12 * tn.max(1.0)) {
            best = Some((res, k, cross / cn));
        }
    }
    let (res, shift, a) = best.expect("non-empty curve");
    let b = tm - a * cm;
    Ok(SimilarityFit {
        scale: a.norm(),
        angle: a.arg(),
        dx: b.re,
        dy: b.im,
        shift,
        rms: (res.max(0.0) / n as f64).sqrt(),
    })
}

/// `genome` re-posed so its traced curve best overlays the target.
pub fn align_to_target(
    topology: Topology,
    genome: &[f64],
    branches: [Branch; 2],
    target: &Target,
) -> Result<Vec<f64>> {
    let params = ParamVector::new(topology, genome.to_vec())?;
    let linkage = Linkage::new(&params, &branches[..topology.dyad_count()])?;
    let bt = trace_bt(&linkage, target.bt.len(), target.bt.period)?;
    let fit = similarity_fit(&bt, &target.bt)?;
    let mut placed = params.similarity(fit.scale, fit.angle, fit.dx, fit.dy)?;
    // Then stretch about the target centroid until the stance lengths agree.
    let want = stance_metrics(&target.bt, &target.features)?.l_s;
    let n = target.bt.len() as f64;
    let cx = target.bt.points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = target.bt.points.iter().map(|p| p.y).sum::<f64>() / n;
    for _ in 0..3 {
        let linkage = Linkage::new(&placed, &branches[..topology.dyad_count()])?;
        let bt = trace_bt(&linkage, target.bt.len(), target.bt.period)?;
        let have = stance_metrics(&bt, &find_feature_points(&bt)?)?.l_s;
        let k = want / have;
        if (k - 1.0).abs() < 1e-6 {
            break;
        }
        placed = placed.similarity(k, 0.0, (1.0 - k) * cx, (1.0 - k) * cy)?;
    }
    Ok(placed.values)
}

/// Run settings shared by every subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub topology: Topology,
    pub cycloid: CycloidSpec,
    /// Samples per traced curve inside the optimisation loop.
    pub samples: usize,
    /// Samples per traced curve in the written reports.
    pub report_samples: usize,
    pub population: usize,
    pub generations: usize,
    pub crossover_fraction: f64,
    pub mutation_fraction: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    pub init_oversample: usize,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            topology: Topology::StephensonI,
            cycloid: CycloidSpec::default(),
            samples: 360,
            report_samples: 3600,
            population: 60,
            generations: 150,
            crossover_fraction: 0.125,
            mutation_fraction: 0.125,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            init_oversample: 20,
            seed: 0,
            jobs: None,
        }
    }
}

impl PipelineConfig {
    /// Population 200, as used for the published designs.
    pub fn full_budget() -> Self {
        Self {
            population: 200,
            ..Self::default()
        }
    }

    pub fn algo(&self, seed: u64) -> AlgoConfig {
        AlgoConfig {
            population: self.population,
            generations: self.generations,
            crossover_fraction: self.crossover_fraction,
            mutation_fraction: self.mutation_fraction,
            seed,
            stop_thresholds: None,
            eta_crossover: self.eta_crossover,
            eta_mutation: self.eta_mutation,
            init_oversample: self.init_oversample,
        }
    }

    pub fn target(&self) -> Result<Target> {
        Target::new(crate::target::cycloid_bt_target(
            &self.cycloid,
            self.samples,
        )?)
    }
}

/// One subtask posed as an optimisation problem.
pub struct SubtaskProblem<'a> {
    pub spec: SubtaskSpec,
    pub topology: Topology,
    pub bounds: Vec<(f64, f64)>,
    pub target: &'a Target,
}

impl<'a> SubtaskProblem<'a> {
    /// Full box for `None`, otherwise the spec's box around `incumbent`.
    pub fn new(
        spec: SubtaskSpec,
        topology: Topology,
        target: &'a Target,
        incumbent: Option<&[f64]>,
    ) -> Result<Self> {
        let full = topology.default_bounds();
        let bounds = match (spec.search_box, incumbent) {
            (Some(b), Some(x)) => b.bounds(topology, x, &full),
            (None, _) => full,
            (Some(_), None) => {
                return Err(Error::InvalidParams(format!(
                    "{} needs an incumbent",
                    spec.id.name()
                )))
            }
        };
        Ok(Self {
            spec,
            topology,
            bounds,
            target,
        })
    }

    pub fn measure(&self, genome: &[f64]) -> Result<Measures> {
        measure(self.topology, genome, self.target, self.spec.objectives[0])
    }
}

impl crate::moo::Problem for SubtaskProblem<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        self.spec.objectives.len()
    }

    fn evaluate(&self, genome: &[f64]) -> Evaluated {
        match self.measure(genome) {
            Ok(m) => Evaluated::new(
                self.spec.objectives.iter().map(|o| m.get(*o)).collect(),
                self.spec.violations(&m),
            ),
            Err(_) => {
                let mut e = Evaluated::penalized(self.n_objectives());
                e.violations = vec![PENALTY; self.spec.constraints.len().max(1)];
                e
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_length_branches_as_written() {
        assert_eq!(step_length_objective(300.0), 0.0);
        assert_eq!(step_length_objective(295.0), 25.0);
        // Jump at the edges: inside-formula limit is 100, outside value is 0.
        assert_eq!(step_length_objective(290.0), 0.0);
        assert!((step_length_objective(290.0 + 1e-9) - 100.0).abs() < 1e-6);
        assert_eq!(step_length_objective(280.0), 500.0);
        assert_eq!(step_length_objective(320.0), 500.0);
    }

    #[test]
    fn similarity_fit_recovers_map() {
        let t = crate::target::cycloid_bt_target(&CycloidSpec::default(), 120).unwrap();
        let (s, a, dx, dy) = (0.4, 0.7_f64, -30.0, 12.0);
        let moved = t.shifted(17).map_points(|p| {
            let (sn, cs) = a.sin_cos();
            crate::linkage::Vec2::new(
                s * (cs * p.x - sn * p.y) + dx,
                s * (sn * p.x + cs * p.y) + dy,
            )
        });
        let fit = similarity_fit(&moved, &t).unwrap();
        assert!(fit.rms < 1e-9, "{fit:?}");
        assert!((fit.scale - 1.0 / s).abs() < 1e-9 && (fit.angle + a).abs() < 1e-9);
    }

    #[test]
    fn boxes_nest() {
        let x = vec![
            0.5, 2.4, 150.0, 66.0, 56.0, 88.0, 99.0, 128.0, 51.0, -4.0, 96.0, -25.0, 127.0, 83.0,
            8.0, 115.0,
        ];
        let full = Topology::StephensonI.default_bounds();
        let b: Vec<_> = [SubtaskSpec::s1(), SubtaskSpec::s2(), SubtaskSpec::s3()]
            .iter()
            .map(|s| {
                s.search_box
                    .unwrap()
                    .bounds(Topology::StephensonI, &x, &full)
            })
            .collect();
        for g in 0..x.len() {
            assert!(b[0][g].0 < b[1][g].0 && b[1][g].0 < b[2][g].0, "gene {g}");
            assert!(b[0][g].1 > b[1][g].1 && b[1][g].1 > b[2][g].1, "gene {g}");
        }
        assert!((b[0][4].0 - 36.0).abs() < 1e-12 && (b[0][7].1 - 153.6).abs() < 1e-12);
        assert!((b[0][0].0 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn constraint_sets_inherit() {
        let (s1, s2, s3) = (SubtaskSpec::s1(), SubtaskSpec::s2(), SubtaskSpec::s3());
        let s2c: Vec<Objective> = s2.constraints.iter().map(|c| c.0).collect();
        assert_eq!(s2c, s1.objectives);
        for c in &s2.constraints {
            assert!(s3.constraints.contains(c));
        }
        for o in &s2.objectives {
            assert!(s3.constraints.iter().any(|c| c.0 == *o));
        }
    }
}
