use serde::{Deserialize, Serialize};

use super::{Mode, RtclmDesign};
use crate::error::{Error, Result};
use crate::linkage::trace::DEFECT_SWEEP_SAMPLES;
use crate::linkage::{crank_condition, sweep_defects, Linkage, ParamVector, Topology};
use crate::metrics::{evaluate_bt, Evaluation, PerformanceReport};
use crate::moo::{evolve_with, AlgoConfig, Evaluated, ParetoArchive, Problem, RunOptions};
use crate::trajectory::{find_feature_points, FeaturePoints, LegLayout, Trajectory};

/// Violation assigned when the feature times run out of order.
pub const ORDER_VIOLATION: f64 = 100.0;
/// Minimum landing and take-off angle, degrees.
pub const MIN_CONTACT_ANGLE: f64 = 15.0;
/// Minimum brick-obstacle crossing probability in auxiliary mode, percent.
pub const MIN_PSI2: f64 = 20.0;

/// Target crossing heights of the two modes, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub h6: f64,
    pub h4: f64,
}

impl Targets {
    /// Outside the demonstrated range `h6 = 50`, `h4 ∈ [220, 300]`.
    pub fn is_extrapolation(&self) -> bool {
        (self.h6 - 50.0).abs() > 1e-9 || !(220.0..=300.0).contains(&self.h4)
    }
}

/// Which objectives and constraints a run sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RtclmObjective {
    /// Minimise `f2` under the crank conditions, the feature order of both
    /// modes and the primary-mode contact angles.
    Stage1,
    /// Both modes: minimise `[f1, f2]` with `f2 ≤ cap` and the auxiliary crossing constraints.
    Stage2 { f2_cap: f64 },
}

/// Objectives, violations and reports of one seven-bar design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtclmEvaluation {
    /// `[f1, f2]`: squared deviation of the auxiliary and primary crossing heights.
    pub objectives: [f64; 2],
    /// Named violations, satisfied when `≤ 0`.
    pub violations: Vec<(String, f64)>,
    pub h6: Option<f64>,
    pub h4: Option<f64>,
    pub primary: Option<PerformanceReport>,
    pub auxiliary: Option<PerformanceReport>,
    /// Motor `A` turns clockwise in primary mode.
    #[serde(default)]
    pub primary_clockwise: bool,
    /// Motor `H` turns clockwise in auxiliary mode.
    #[serde(default)]
    pub aux_clockwise: bool,
    pub failure: Option<String>,
}

impl RtclmEvaluation {
    pub fn is_penalized(&self) -> bool {
        self.failure.is_some()
    }

    pub fn violation(&self, name: &str) -> Option<f64> {
        self.violations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn feasible(&self) -> bool {
        !self.is_penalized() && self.violations.iter().all(|(_, v)| *v <= 0.0)
    }
}

/// `(t2 < t5 < t4 < t1)` up to cyclic rotation. An extreme that falls on
/// the same sample as the neighbouring contact point counts as ordered.
pub fn order_ok(fp: &FeaturePoints) -> bool {
    order_shortfall(fp) == 0
}

/// Samples by which `t5` and `t4` miss their slots in the order.
pub fn order_shortfall(fp: &FeaturePoints) -> usize {
    let d = |t: usize| (t + fp.n - fp.t2) % fp.n;
    (d(fp.t5) + 1).saturating_sub(d(fp.t4)) + d(fp.t4).saturating_sub(d(fp.t1))
}

/// `0` when ordered, otherwise [`ORDER_VIOLATION`] grown by the relative shortfall.
pub fn order_violation(fp: &FeaturePoints) -> f64 {
    match order_shortfall(fp) {
        0 => 0.0,
        s => ORDER_VIOLATION * (1.0 + s as f64 / fp.n as f64),
    }
}

/// Evaluates `bt` in the crank sense that puts the stance on the lower arc;
/// returns the evaluation and whether the sense is clockwise.
pub fn orient(bt: &Trajectory, layout: &LegLayout) -> Result<(Evaluation, bool)> {
    let fp = find_feature_points(bt)?;
    let mean = |it: &mut dyn Iterator<Item = usize>| {
        let (s, c) = it.fold((0.0, 0usize), |(s, c), k| (s + bt.points[k].y, c + 1));
        s / c.max(1) as f64
    };
    let stance = mean(&mut fp.stance_indices());
    let swing = mean(&mut fp.swing_indices());
    if stance <= swing {
        Ok((evaluate_bt(bt, None, layout)?, false))
    } else {
        Ok((evaluate_bt(&bt.reversed(), None, layout)?, true))
    }
}

fn grashof_violation(crank: f64, others: [f64; 3]) -> f64 {
    let max = others.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    crank + 2.0 * max - others.iter().sum::<f64>()
}

/// Builds the design with default branches.
pub fn build_design(x: &[f64]) -> Result<RtclmDesign> {
    let params = ParamVector::new(Topology::RtclmSevenBar, x.to_vec())?;
    let linkage = Linkage::with_default_branches(&params)?;
    Ok(linkage.rtclm().expect("seven-bar linkage").clone())
}

/// Evaluates `x` against `targets` sampling each mode's bench trajectory at `n` angles.
///
/// Kinematic failures give objectives of `1e10` and `failure` set.
pub fn evaluate_design(x: &[f64], targets: Targets, n: usize) -> RtclmEvaluation {
    let failed = |e: Error| RtclmEvaluation {
        objectives: [crate::moo::PENALTY; 2],
        violations: vec![("kinematics".into(), crate::moo::PENALTY)],
        h6: None,
        h4: None,
        primary: None,
        auxiliary: None,
        primary_clockwise: false,
        aux_clockwise: false,
        failure: Some(e.to_string()),
    };
    let design = match build_design(x) {
        Ok(d) => d,
        Err(e) => return failed(e),
    };
    let layout = LegLayout::quad_trot();
    let mut oriented = Vec::with_capacity(2);
    for mode in [Mode::Primary, Mode::Auxiliary] {
        match design
            .trace(mode, n, 2.0)
            .and_then(|bt| orient(&bt, &layout))
        {
            Ok(o) => oriented.push(o),
            Err(e) => return failed(e),
        }
    }
    let (aux, aux_clockwise) = oriented.pop().expect("two modes");
    let (prim, primary_clockwise) = oriented.pop().expect("two modes");
    let (prim, aux) = (&prim, &aux);
    let (h6, h4) = (prim.report.h_m, aux.report.h_m);
    let v = &x[..];
    let mut violations = vec![
        (
            "crank_loop1".to_string(),
            grashof_violation(v[0], [v[1], v[2], v[6].hypot(v[7])]),
        ),
        (
            "crank_loop2".to_string(),
            grashof_violation(v[5], [v[3], v[4], design.eh_length()]),
        ),
    ];
    for (tag, e) in [("primary", prim), ("auxiliary", aux)] {
        violations.push((format!("order_{tag}"), order_violation(&e.features)));
        violations.push((format!("theta1_{tag}"), MIN_CONTACT_ANGLE - e.report.theta1));
        violations.push((format!("theta2_{tag}"), MIN_CONTACT_ANGLE - e.report.theta2));
    }
    violations.push((
        "mean_height".into(),
        aux.report.h_m / 4.0 - aux.report.h_bar,
    ));
    violations.push(("psi2".into(), MIN_PSI2 - aux.report.psi2));
    RtclmEvaluation {
        objectives: [(h4 - targets.h4).powi(2), (h6 - targets.h6).powi(2)],
        violations,
        h6: Some(h6),
        h4: Some(h4),
        primary: Some(prim.report.clone()),
        auxiliary: Some(aux.report.clone()),
        primary_clockwise,
        aux_clockwise,
        failure: None,
    }
}

const STAGE1_CONSTRAINTS: [&str; 6] = [
    "crank_loop1",
    "crank_loop2",
    "order_primary",
    "theta1_primary",
    "theta2_primary",
    "order_auxiliary",
];

/// Optimisation problem for one stage of the stepwise strategy.
pub struct RtclmProblem {
    pub targets: Targets,
    pub stage: RtclmObjective,
    pub samples: usize,
    bounds: Vec<(f64, f64)>,
}

impl RtclmProblem {
    pub fn new(targets: Targets, stage: RtclmObjective, samples: usize) -> Self {
        Self {
            targets,
            stage,
            samples,
            bounds: Topology::RtclmSevenBar.default_bounds(),
        }
    }
}

impl Problem for RtclmProblem {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        match self.stage {
            RtclmObjective::Stage1 => 1,
            RtclmObjective::Stage2 { .. } => 2,
        }
    }

    fn evaluate(&self, genome: &[f64]) -> Evaluated {
        let e = evaluate_design(genome, self.targets, self.samples);
        if e.is_penalized() {
            let g = genome;
            return Evaluated::penalized_by(
                self.n_objectives(),
                grashof_violation(g[0], [g[1], g[2], g[6].hypot(g[7])]),
            );
        }
        match self.stage {
            RtclmObjective::Stage1 => Evaluated::new(
                vec![e.objectives[1]],
                e.violations
                    .iter()
                    .filter(|(n, _)| STAGE1_CONSTRAINTS.contains(&n.as_str()))
                    .map(|(_, v)| *v)
                    .collect(),
            ),
            RtclmObjective::Stage2 { f2_cap } => {
                let mut g: Vec<f64> = e.violations.iter().map(|(_, v)| *v).collect();
                g.push(e.objectives[1] - f2_cap);
                Evaluated::new(e.objectives.to_vec(), g)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepwiseConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_fraction: f64,
    pub mutation_fraction: f64,
    pub seed: u64,
    /// Bench-trajectory samples per mode.
    pub samples: usize,
    /// Allowed growth of the stage-1 best `f2` during stage 2.
    pub f2_allowance: f64,
    pub stop_thresholds: [f64; 2],
    /// See [`AlgoConfig::init_oversample`].
    pub init_oversample: usize,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 50,
            crossover_fraction: 2.0 / 13.0,
            mutation_fraction: 2.0 / 13.0,
            seed: 0,
            samples: 360,
            f2_allowance: 0.5,
            stop_thresholds: [0.5, 0.5],
            init_oversample: 40,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            jobs: None,
        }
    }
}

/// Checks every accepted design must pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignAudit {
    /// Largest coupling residual, mm.
    pub coupling_residual: f64,
    /// Largest joint distance between the two modes at the switching state, mm.
    pub switching_gap: f64,
    pub crank_ok: bool,
    pub sweep_clean: bool,
    pub constraints_ok: bool,
}

impl DesignAudit {
    pub fn passed(&self) -> bool {
        self.coupling_residual < 1e-9
            && self.switching_gap < 1e-9
            && self.crank_ok
            && self.sweep_clean
            && self.constraints_ok
    }
}

/// Coupling residuals, switching-state pose coincidence, crank conditions,
/// a fine sweep of both modes and the constraint audit.
pub fn audit_design(x: &[f64], targets: Targets, samples: usize) -> Result<DesignAudit> {
    let params = ParamVector::new(Topology::RtclmSevenBar, x.to_vec())?;
    let linkage = Linkage::with_default_branches(&params)?;
    let design = linkage.rtclm().expect("seven-bar linkage");
    let coupling_residual = design
        .coupling_residuals()
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()));
    let jp = design.joints(Mode::Primary, design.switch_angle(Mode::Primary))?;
    let ja = design.joints(Mode::Auxiliary, design.switch_angle(Mode::Auxiliary))?;
    let switching_gap = jp
        .iter()
        .zip(&ja)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let v = &params.values;
    let crank_ok = crank_condition(v[0], [v[1], v[2], v[6].hypot(v[7])])
        && crank_condition(v[5], [v[3], v[4], design.eh_length()]);
    let sweep = sweep_defects(&linkage, DEFECT_SWEEP_SAMPLES);
    let e = evaluate_design(x, targets, samples);
    Ok(DesignAudit {
        coupling_residual,
        switching_gap,
        crank_ok,
        sweep_clean: sweep.is_clean(),
        constraints_ok: e.feasible(),
    })
}

/// Outcome of [`stepwise_optimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtclmRun {
    pub targets: Targets,
    pub genome: Vec<f64>,
    pub evaluation: RtclmEvaluation,
    pub audit: Option<DesignAudit>,
    pub stage1: ParetoArchive,
    pub stage2: ParetoArchive,
    /// Both deviations are below 0.5 mm.
    pub reached: bool,
    pub extrapolation: bool,
}

impl RtclmRun {
    pub fn deviations(&self) -> Option<(f64, f64)> {
        Some((
            self.evaluation.h6? - self.targets.h6,
            self.evaluation.h4? - self.targets.h4,
        ))
    }
}

/// Two-stage design: primary-mode height first, then the auxiliary-mode
/// height with the stage-1 result held as a constraint.
pub fn stepwise_optimize(targets: Targets, cfg: &StepwiseConfig) -> Result<RtclmRun> {
    let algo = |seed: u64, stop: Vec<f64>| AlgoConfig {
        population: cfg.population,
        generations: cfg.generations,
        crossover_fraction: cfg.crossover_fraction,
        mutation_fraction: cfg.mutation_fraction,
        seed,
        stop_thresholds: Some(stop),
        init_oversample: cfg.init_oversample,
        eta_crossover: cfg.eta_crossover,
        eta_mutation: cfg.eta_mutation,
    };
    let opts = |name: &str| RunOptions {
        jobs: cfg.jobs,
        subtask: name.into(),
    };

    let p1 = RtclmProblem::new(targets, RtclmObjective::Stage1, cfg.samples);
    let stage1 = evolve_with(
        &p1,
        &algo(cfg.seed, vec![cfg.stop_thresholds[1]]),
        Vec::new(),
        &opts("rtclm_stage1"),
    )?;
    let best1 = stage1
        .population
        .iter()
        .filter(|i| i.feasible)
        .map(|i| i.objectives[0])
        .fold(f64::INFINITY, f64::min);
    if !best1.is_finite() {
        return Err(Error::NoFeasibleIndividual {
            generations: stage1.provenance.generation,
        });
    }

    let p2 = RtclmProblem::new(
        targets,
        RtclmObjective::Stage2 {
            f2_cap: best1 + cfg.f2_allowance,
        },
        cfg.samples,
    );
    let seeds = stage1.population.iter().map(|i| i.genome.clone()).collect();
    let stage2 = evolve_with(
        &p2,
        &algo(cfg.seed.wrapping_add(1), cfg.stop_thresholds.to_vec()),
        seeds,
        &opts("rtclm_stage2"),
    )?;

    // Both deviations under 0.5 mm first, then under the stop thresholds, then the rest.
    let tier = |o: &[f64]| {
        if o.iter().all(|v| *v < 0.25) {
            0
        } else if o.iter().zip(&cfg.stop_thresholds).all(|(v, t)| v < t) {
            1
        } else {
            2
        }
    };
    let mut pool: Vec<_> = stage2.population.iter().filter(|i| i.feasible).collect();
    pool.sort_by(|a, b| {
        tier(&a.objectives)
            .cmp(&tier(&b.objectives))
            .then(a.objectives[0].total_cmp(&b.objectives[0]))
            .then(a.objectives[1].total_cmp(&b.objectives[1]))
            .then(
                a.genome
                    .partial_cmp(&b.genome)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    pool.dedup_by(|a, b| a.genome == b.genome);
    let mut chosen = None;
    for ind in &pool {
        let audit = audit_design(&ind.genome, targets, cfg.samples)?;
        if audit.passed() {
            chosen = Some((ind.genome.clone(), Some(audit)));
            break;
        }
    }
    let (genome, audit) = match chosen {
        Some(c) => c,
        None => {
            // Best-so-far: the stage-2 member with the smallest total violation, then f1.
            let best = stage2
                .population
                .iter()
                .min_by(|a, b| {
                    a.total_violation()
                        .total_cmp(&b.total_violation())
                        .then(a.objectives[0].total_cmp(&b.objectives[0]))
                })
                .ok_or(Error::EmptyArchive)?;
            (
                best.genome.clone(),
                audit_design(&best.genome, targets, cfg.samples).ok(),
            )
        }
    };
    let evaluation = evaluate_design(&genome, targets, cfg.samples);
    let reached = audit.as_ref().is_some_and(|a| a.passed())
        && matches!((evaluation.h6, evaluation.h4), (Some(h6), Some(h4)) if (h6 - targets.h6).abs() < 0.5 && (h4 - targets.h4).abs() < 0.5);
    Ok(RtclmRun {
        targets,
        genome,
        evaluation,
        audit,
        stage1,
        stage2,
        reached,
        extrapolation: targets.is_extrapolation(),
    })
}
