use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    align_to_target, decide, measure_with, Criteria, Measures, Objective, PipelineConfig,
    SubtaskId, SubtaskProblem, SubtaskSpec, Target,
};
use crate::error::{Error, Result};
use crate::io::{to_json_pretty, trajectory_to_csv, write_atomic, MechanismFile, SCHEMA};
use crate::linkage::{trace_bt, Branch, Linkage, ParamVector, Topology};
use crate::metrics::{evaluate_bt, PerformanceReport};
use crate::moo::{evolve_with, Individual, ParetoArchive, RunOptions};
use crate::target::cycloid_bt_target;
use crate::trajectory::{LegLayout, Trajectory};

/// A decided design with its optimisation measures and a dense report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub label: String,
    pub genome: Vec<f64>,
    pub branches: [Branch; 2],
    pub measures: Measures,
    pub report: PerformanceReport,
}

impl Incumbent {
    fn new(
        label: &str,
        topology: Topology,
        genome: Vec<f64>,
        measures: Measures,
        cfg: &PipelineConfig,
    ) -> Result<Self> {
        let bt = trace(
            topology,
            &genome,
            measures.branches,
            cfg.report_samples,
            cfg.cycloid.period,
        )?;
        let target = cycloid_bt_target(&cfg.cycloid, cfg.report_samples)?;
        let report = evaluate_bt(&bt, Some(&target), &LegLayout::biped())?.report;
        Ok(Self {
            label: label.into(),
            genome,
            branches: measures.branches,
            measures,
            report,
        })
    }

    pub fn params(&self, topology: Topology) -> Result<ParamVector> {
        ParamVector::new(topology, self.genome.clone())
    }

    pub fn mechanism_file(&self, topology: Topology) -> Result<MechanismFile> {
        Ok(MechanismFile::new(
            &self.params(topology)?,
            Some(&self.branches[..topology.dyad_count()]),
        ))
    }
}

fn trace(
    topology: Topology,
    genome: &[f64],
    branches: [Branch; 2],
    n: usize,
    period: f64,
) -> Result<Trajectory> {
    let p = ParamVector::new(topology, genome.to_vec())?;
    let linkage = Linkage::new(&p, &branches[..topology.dyad_count()])?;
    trace_bt(&linkage, n, period)
}

/// Predesign plus the three subtasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRun {
    pub config: PipelineConfig,
    /// `x0` … `x3`.
    pub incumbents: Vec<Incumbent>,
    pub archives: Vec<(SubtaskId, ParetoArchive)>,
}

fn run_stage(
    spec: SubtaskSpec,
    cfg: &PipelineConfig,
    target: &Target,
    incumbent: Option<&Incumbent>,
    seed: u64,
    extra: Vec<(Objective, f64)>,
) -> Result<(ParetoArchive, Individual, Measures)> {
    if let Some(x) = incumbent {
        let m = &x.measures;
        if !spec.satisfied_by(m) {
            let failed: Vec<String> = spec
                .constraints
                .iter()
                .filter(|(o, b)| m.get(*o) >= *b)
                .map(|(o, b)| format!("{o} = {:.4} ≥ {b}", m.get(*o)))
                .collect();
            return Err(Error::InfeasibleIncumbent(format!(
                "{} for {}",
                failed.join(", "),
                spec.id.name()
            )));
        }
    }
    let problem = SubtaskProblem::new(
        spec.clone(),
        cfg.topology,
        target,
        incumbent.map(|x| x.genome.as_slice()),
    )?;
    let seeds = incumbent
        .map(|x| vec![x.genome.clone()])
        .unwrap_or_default();
    let opts = RunOptions {
        jobs: cfg.jobs,
        subtask: spec.id.name().into(),
    };
    let archive = evolve_with(&problem, &cfg.algo(seed), seeds, &opts)?;
    if !archive
        .population
        .iter()
        .any(|i| i.feasible && !i.is_penalized())
    {
        return Err(Error::NoFeasibleIndividual {
            generations: archive.provenance.generation,
        });
    }
    // Hand-off caps join every tier: never worse than the incumbent on these.
    let mut criteria = Criteria::for_spec(&spec);
    let caps: Vec<(usize, f64)> = extra
        .iter()
        .filter_map(|(o, b)| Some((spec.objectives.iter().position(|x| x == o)?, *b)))
        .collect();
    if !caps.is_empty() {
        for tier in criteria.preferred.iter_mut() {
            tier.extend(caps.iter().copied());
        }
        criteria.preferred.push(caps);
    }
    let chosen = decide(&archive.individuals, &criteria)?;
    let m = problem.measure(&chosen.genome)?;
    Ok((archive, chosen, m))
}

/// Minimises the shape distance over the full box, then re-poses the decided
/// design onto the target; returns the archive and `x0`.
pub fn predesign(cfg: &PipelineConfig, target: &Target) -> Result<(ParetoArchive, Incumbent)> {
    let (archive, x0, m0) = run_stage(
        SubtaskSpec::predesign(),
        cfg,
        target,
        None,
        cfg.seed,
        Vec::new(),
    )?;
    // The shape distance ignores size, orientation and position; recover them in closed form.
    let placed = align_to_target(cfg.topology, &x0.genome, m0.branches, target)?;
    let m0 = measure_with(cfg.topology, &placed, m0.branches, target)?;
    Ok((
        archive,
        Incumbent::new("x0", cfg.topology, placed, m0, cfg)?,
    ))
}

/// Shape and position: `[f1, f2, f3]` in a 20 % / 20 mm box around `x0`.
pub fn subtask1(
    x0: &Incumbent,
    cfg: &PipelineConfig,
    target: &Target,
) -> Result<(ParetoArchive, Incumbent)> {
    subtask(
        SubtaskSpec::s1(),
        "x1",
        x0,
        vec![(Objective::Mse, x0.measures.mse + 1e-12)],
        cfg,
        target,
        1,
    )
}

/// Local features: `[f4, f5]` under `f1 < 6, f2 < 5, f3 < 5` in a 10 % / 10 mm box around `x1`.
pub fn subtask2(
    x1: &Incumbent,
    cfg: &PipelineConfig,
    target: &Target,
) -> Result<(ParetoArchive, Incumbent)> {
    subtask(SubtaskSpec::s2(), "x2", x1, Vec::new(), cfg, target, 2)
}

/// Fine tuning: `[f4, f5]` under the subtask-2 bounds plus `f4 < 6.5, f5 < 20`
/// in a 5 % / 5 mm box around `x2`. `i_cap` keeps the impact at or below an earlier design's.
pub fn subtask3(
    x2: &Incumbent,
    i_cap: Option<f64>,
    cfg: &PipelineConfig,
    target: &Target,
) -> Result<(ParetoArchive, Incumbent)> {
    let caps = i_cap
        .map(|c| vec![(Objective::Impact, c + 1e-12)])
        .unwrap_or_default();
    subtask(SubtaskSpec::s3(), "x3", x2, caps, cfg, target, 3)
}

fn subtask(
    spec: SubtaskSpec,
    label: &str,
    prev: &Incumbent,
    caps: Vec<(Objective, f64)>,
    cfg: &PipelineConfig,
    target: &Target,
    offset: u64,
) -> Result<(ParetoArchive, Incumbent)> {
    let (archive, x, m) = run_stage(
        spec,
        cfg,
        target,
        Some(prev),
        cfg.seed.wrapping_add(offset),
        caps,
    )?;
    Ok((
        archive,
        Incumbent::new(label, cfg.topology, x.genome, m, cfg)?,
    ))
}

/// Runs predesign and subtasks 1–3, each seeded with the previous incumbent.
pub fn run_hierarchical(cfg: &PipelineConfig) -> Result<DesignRun> {
    match run_hierarchical_partial(cfg)? {
        (run, None) => Ok(run),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`run_hierarchical`], but keeps the incumbents decided before a
/// failing subtask; the error names the stage that stopped the flow.
pub fn run_hierarchical_partial(cfg: &PipelineConfig) -> Result<(DesignRun, Option<Error>)> {
    let target = cfg.target()?;
    let (a0, x0) = predesign(cfg, &target)?;
    let mut run = DesignRun {
        config: cfg.clone(),
        incumbents: vec![x0],
        archives: vec![(SubtaskId::Predesign, a0)],
    };
    let stage = |run: &mut DesignRun, r: Result<(ParetoArchive, Incumbent)>, id: SubtaskId| match r
    {
        Ok((a, x)) => {
            run.incumbents.push(x);
            run.archives.push((id, a));
            None
        }
        Err(e) => Some(e),
    };
    if let Some(e) = {
        let r = subtask1(&run.incumbents[0], cfg, &target);
        stage(&mut run, r, SubtaskId::S1)
    } {
        return Ok((run, Some(e)));
    }
    if let Some(e) = {
        let r = subtask2(&run.incumbents[1], cfg, &target);
        stage(&mut run, r, SubtaskId::S2)
    } {
        return Ok((run, Some(e)));
    }
    let i_cap = run.incumbents[1].measures.impact;
    let r = subtask3(&run.incumbents[2], Some(i_cap), cfg, &target);
    let e = stage(&mut run, r, SubtaskId::S3);
    Ok((run, e))
}

#[derive(Serialize)]
struct ReportEntry<'a> {
    label: &'a str,
    objectives: Vec<(&'static str, f64)>,
    branches: &'a [Branch],
    report: &'a PerformanceReport,
}

fn objective_list(m: &Measures) -> Vec<(&'static str, f64)> {
    [
        Objective::Fourier,
        Objective::Mse,
        Objective::StepLength,
        Objective::LowestPoint,
        Objective::Fluctuation,
        Objective::Impact,
    ]
    .into_iter()
    .map(|o| (o.id(), m.get(o)))
    .collect()
}

fn report_json(topology: Topology, incumbents: &[Incumbent]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema: u32,
        topology: Topology,
        designs: Vec<ReportEntry<'a>>,
    }
    let designs = incumbents
        .iter()
        .map(|x| ReportEntry {
            label: &x.label,
            objectives: objective_list(&x.measures),
            branches: &x.branches[..topology.dyad_count()],
            report: &x.report,
        })
        .collect();
    to_json_pretty(&Doc {
        schema: SCHEMA,
        topology,
        designs,
    })
}

fn write_designs(
    dir: &Path,
    cfg: &PipelineConfig,
    incumbents: &[Incumbent],
    archives: &[(SubtaskId, ParetoArchive)],
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        write_atomic(&dir.join(&name), body.as_bytes())?;
        written.push(name);
        Ok(())
    };
    put("config.json".into(), to_json_pretty(cfg))?;
    for x in incumbents {
        put(
            format!("{}.json", x.label),
            x.mechanism_file(cfg.topology)?.to_json(),
        )?;
        let bt = trace(
            cfg.topology,
            &x.genome,
            x.branches,
            cfg.report_samples,
            cfg.cycloid.period,
        )?;
        put(format!("trace_{}.csv", x.label), trajectory_to_csv(&bt))?;
    }
    put(
        "trace_target.csv".into(),
        trajectory_to_csv(&cycloid_bt_target(&cfg.cycloid, cfg.report_samples)?),
    )?;
    for (id, a) in archives {
        put(format!("archive_{}.jsonl", id.name()), a.to_jsonl())?;
        if a.individuals
            .first()
            .is_some_and(|i| i.objectives.len() >= 2)
        {
            put(
                format!("front_{}.svg", id.name()),
                crate::plot::front_svg(a, &format!("{} front", id.name())),
            )?;
        }
    }
    put("report.json".into(), report_json(cfg.topology, incumbents))?;
    Ok(written)
}

impl DesignRun {
    pub fn incumbent(&self, label: &str) -> Option<&Incumbent> {
        self.incumbents.iter().find(|x| x.label == label)
    }

    pub fn archive(&self, id: SubtaskId) -> Option<&ParetoArchive> {
        self.archives.iter().find(|(i, _)| *i == id).map(|(_, a)| a)
    }

    /// Writes config, designs, traces, archives, fronts and the report into `dir`;
    /// returns the file names written.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<String>> {
        write_designs(dir, &self.config, &self.incumbents, &self.archives)
    }
}

/// Five-objective baseline with the three members that minimise `f1`, `f4` and `f5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLevelRun {
    pub config: PipelineConfig,
    pub archive: ParetoArchive,
    /// `min_f1`, `min_f4`, `min_f5`.
    pub selected: Vec<Incumbent>,
}

impl SingleLevelRun {
    pub fn member(&self, label: &str) -> Option<&Incumbent> {
        self.selected.iter().find(|x| x.label == label)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<Vec<String>> {
        write_designs(
            dir,
            &self.config,
            &self.selected,
            &[(SubtaskId::SingleLevel, self.archive.clone())],
        )
    }
}

/// Minimises `f1 … f5` at once over the full box.
pub fn run_single_level(cfg: &PipelineConfig) -> Result<SingleLevelRun> {
    let target = cfg.target()?;
    let spec = SubtaskSpec::single_level();
    let problem = SubtaskProblem::new(spec.clone(), cfg.topology, &target, None)?;
    let opts = RunOptions {
        jobs: cfg.jobs,
        subtask: spec.id.name().into(),
    };
    let archive = evolve_with(&problem, &cfg.algo(cfg.seed), Vec::new(), &opts)?;
    let front: Vec<&Individual> = archive
        .individuals
        .iter()
        .filter(|i| i.feasible && !i.is_penalized())
        .collect();
    if front.is_empty() {
        return Err(Error::NoFeasibleIndividual {
            generations: archive.provenance.generation,
        });
    }
    let mut selected = Vec::new();
    for (label, k) in [("min_f1", 0), ("min_f4", 3), ("min_f5", 4)] {
        let best = front
            .iter()
            .min_by(|a, b| {
                a.objectives[k].total_cmp(&b.objectives[k]).then_with(|| {
                    a.genome
                        .iter()
                        .zip(&b.genome)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
            })
            .expect("non-empty front");
        let m = problem.measure(&best.genome)?;
        selected.push(Incumbent::new(
            label,
            cfg.topology,
            best.genome.clone(),
            m,
            cfg,
        )?);
    }
    Ok(SingleLevelRun {
        config: cfg.clone(),
        archive,
        selected,
    })
}

/// Measures of an arbitrary design against the configured target, with fixed branches.
pub fn measure_design(
    cfg: &PipelineConfig,
    genome: &[f64],
    branches: [Branch; 2],
) -> Result<Measures> {
    measure_with(cfg.topology, genome, branches, &cfg.target()?)
}
