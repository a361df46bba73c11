//! Constrained NSGA-II with penalty handling, non-dominated sorting,
//! crowding distance and knee-point selection.

mod knee;
mod operators;
mod sort;

pub use knee::{knee_distances, knee_points};
pub use operators::{polynomial_mutation, sbx_crossover};
pub use sort::{constraint_dominates, crowding_distance, nondominated_sort, pareto_dominates};

use std::io::{BufRead, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective value given to individuals whose kinematics fail.
pub const PENALTY: f64 = 1e10;

/// Penalty contribution for one evaluation outcome.
pub fn penalty(kinematics_ok: bool) -> f64 {
    if kinematics_ok {
        0.0
    } else {
        PENALTY
    }
}

/// Result of evaluating one genome. Constraints are satisfied when `≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub objectives: Vec<f64>,
    pub violations: Vec<f64>,
}

impl Evaluated {
    pub fn new(objectives: Vec<f64>, violations: Vec<f64>) -> Self {
        Self {
            objectives,
            violations,
        }
    }

    /// Outcome for a genome without a kinematic solution.
    pub fn penalized(n_objectives: usize) -> Self {
        Self::penalized_by(n_objectives, 0.0)
    }

    /// Penalised outcome whose violation also carries `shortfall ≥ 0`, so
    /// failing genomes closer to assembly rank ahead of the rest.
    pub fn penalized_by(n_objectives: usize, shortfall: f64) -> Self {
        Self {
            objectives: vec![PENALTY; n_objectives],
            violations: vec![PENALTY + shortfall.max(0.0)],
        }
    }
}

/// An optimisation problem over a box.
pub trait Problem: Sync {
    fn bounds(&self) -> &[(f64, f64)];
    fn n_objectives(&self) -> usize;
    fn evaluate(&self, genome: &[f64]) -> Evaluated;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub violations: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
    pub feasible: bool,
}

impl Individual {
    pub fn new(genome: Vec<f64>, eval: Evaluated) -> Self {
        let mut ind = Self {
            genome,
            objectives: eval.objectives,
            violations: eval.violations,
            rank: 0,
            crowding: 0.0,
            feasible: true,
        };
        if ind.objectives.iter().any(|v| !v.is_finite()) {
            ind.objectives
                .iter_mut()
                .for_each(|v| *v = if v.is_finite() { *v } else { PENALTY });
            ind.violations.push(PENALTY);
        }
        ind.feasible = ind.total_violation() <= 0.0;
        ind
    }

    /// `Σ max(0, gᵢ)`.
    pub fn total_violation(&self) -> f64 {
        self.violations.iter().map(|g| g.max(0.0)).sum()
    }

    pub fn is_penalized(&self) -> bool {
        self.objectives.iter().any(|&v| v >= PENALTY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_fraction: f64,
    pub mutation_fraction: f64,
    pub seed: u64,
    #[serde(default)]
    pub stop_thresholds: Option<Vec<f64>>,
    #[serde(default = "default_eta_c")]
    pub eta_crossover: f64,
    #[serde(default = "default_eta_m")]
    pub eta_mutation: f64,
    /// Random draws allowed per initial slot while looking for genomes that
    /// escape the kinematic penalty; `1` keeps the first draw.
    #[serde(default = "default_oversample")]
    pub init_oversample: usize,
}

fn default_oversample() -> usize {
    1
}

fn default_eta_c() -> f64 {
    15.0
}

fn default_eta_m() -> f64 {
    20.0
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            population: 60,
            generations: 150,
            crossover_fraction: 0.125,
            mutation_fraction: 0.125,
            seed: 0,
            stop_thresholds: None,
            eta_crossover: default_eta_c(),
            eta_mutation: default_eta_m(),
            init_oversample: default_oversample(),
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |f: f64| (0.0..=1.0).contains(&f);
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "population must be even and ≥ 4, got {}",
                self.population
            )));
        }
        if !frac(self.crossover_fraction) || !frac(self.mutation_fraction) {
            return Err(Error::InvalidParams("fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub subtask: String,
    pub generation: usize,
    pub seed: u64,
}

/// Outcome of one run: the final rank-0 set plus the whole last population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub individuals: Vec<Individual>,
    pub population: Vec<Individual>,
    pub provenance: Provenance,
    /// True when the stop thresholds ended the run before the generation cap.
    pub stopped_early: bool,
    /// Best feasible value of each objective after every generation.
    pub best_history: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ArchiveLine {
    genome: Vec<f64>,
    objectives: Vec<f64>,
    violations: Vec<f64>,
    rank: usize,
    generation: usize,
}

impl ParetoArchive {
    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn feasible(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.iter().filter(|i| i.feasible)
    }

    /// One JSON object per line: genome, objectives, violations, rank, generation.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for ind in &self.individuals {
            let line = ArchiveLine {
                genome: ind.genome.clone(),
                objectives: ind.objectives.clone(),
                violations: ind.violations.clone(),
                rank: ind.rank,
                generation: self.provenance.generation,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads archive lines; the provenance subtask is left empty.
    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut individuals = Vec::new();
        let mut generation = 0;
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidParams(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let l: ArchiveLine = serde_json::from_str(&line)
                .map_err(|e| Error::InvalidParams(format!("line {}: {e}", n + 1)))?;
            generation = generation.max(l.generation);
            let mut ind = Individual::new(l.genome, Evaluated::new(l.objectives, l.violations));
            ind.rank = l.rank;
            individuals.push(ind);
        }
        Ok(Self {
            population: individuals.clone(),
            individuals,
            provenance: Provenance {
                subtask: String::new(),
                generation,
                seed: 0,
            },
            stopped_early: false,
            best_history: Vec::new(),
        })
    }
}

/// Evaluates genomes on `jobs` threads; results keep genome order.
fn evaluate_all<P: Problem + ?Sized>(
    problem: &P,
    genomes: Vec<Vec<f64>>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<Individual>> {
    let run = |g: &Vec<f64>| -> Result<Individual> {
        catch_unwind(AssertUnwindSafe(|| problem.evaluate(g)))
            .map(|e| Individual::new(g.clone(), e))
            .map_err(|p| Error::EvaluationPanic {
                genome: g.clone(),
                message: p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_default(),
            })
    };
    match pool {
        Some(pool) => pool.install(|| genomes.par_iter().map(run).collect()),
        None => genomes.iter().map(run).collect(),
    }
}

fn assign_rank_and_crowding(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let fronts = nondominated_sort(pop);
    for (r, front) in fronts.iter().enumerate() {
        let objs: Vec<&[f64]> = front
            .iter()
            .map(|&i| pop[i].objectives.as_slice())
            .collect();
        let cd = crowding_distance(&objs);
        for (&i, c) in front.iter().zip(cd) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

fn crowded_better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn best_per_objective(pop: &[Individual], m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            pop.iter()
                .filter(|i| i.feasible)
                .map(|i| i.objectives[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn reached(pop: &[Individual], thresholds: &Option<Vec<f64>>) -> bool {
    let Some(t) = thresholds else { return false };
    pop.iter()
        .any(|i| i.feasible && i.objectives.iter().zip(t).all(|(v, t)| v < t))
}

/// Options that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for evaluation; `None` uses the global rayon pool, `Some(1)` runs inline.
    pub jobs: Option<usize>,
    pub subtask: String,
}

/// Runs NSGA-II from a uniformly random population.
pub fn evolve<P: Problem + ?Sized>(problem: &P, cfg: &AlgoConfig) -> Result<ParetoArchive> {
    evolve_with(problem, cfg, Vec::new(), &RunOptions::default())
}

/// Runs NSGA-II with `seeds` as the first members of the initial population
/// (clamped to the bounds, truncated to the population size).
pub fn evolve_with<P: Problem + ?Sized>(
    problem: &P,
    cfg: &AlgoConfig,
    seeds: Vec<Vec<f64>>,
    opts: &RunOptions,
) -> Result<ParetoArchive> {
    cfg.validate()?;
    let bounds = problem.bounds().to_vec();
    let m = problem.n_objectives();
    let n = cfg.population;
    let pool = match opts.jobs {
        Some(1) => None,
        Some(j) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidParams(e.to_string()))?,
        ),
        None => Some(
            rayon::ThreadPoolBuilder::new()
                .build()
                .map_err(|e| Error::InvalidParams(e.to_string()))?,
        ),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let genomes: Vec<Vec<f64>> = seeds
        .into_iter()
        .take(n)
        .map(|g| {
            g.iter()
                .zip(&bounds)
                .map(|(v, &(lo, hi))| v.clamp(lo, hi))
                .collect()
        })
        .collect();
    let mut pop = evaluate_all(problem, genomes, pool.as_ref())?;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    };
    let mut rounds = cfg.init_oversample.max(1);
    let mut rejected = Vec::new();
    while pop.len() < n && rounds > 0 {
        rounds -= 1;
        let batch: Vec<Vec<f64>> = (pop.len()..n).map(|_| draw(&mut rng)).collect();
        for ind in evaluate_all(problem, batch, pool.as_ref())? {
            if ind.is_penalized() && rounds > 0 {
                rejected.push(ind);
            } else {
                pop.push(ind);
            }
        }
    }
    pop.extend(rejected.into_iter().take(n - pop.len()));
    assign_rank_and_crowding(&mut pop);
    let mut history = vec![best_per_objective(&pop, m)];
    let mut generation = 0;
    let mut stopped_early = reached(&pop, &cfg.stop_thresholds);

    while !stopped_early && generation < cfg.generations {
        generation += 1;
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if crowded_better(&pop[b], &pop[a]) {
                b
            } else {
                a
            }
        };
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (mut c1, mut c2) = sbx_crossover(
                &pop[p1].genome,
                &pop[p2].genome,
                &bounds,
                cfg.crossover_fraction,
                cfg.eta_crossover,
                &mut rng,
            );
            polynomial_mutation(
                &mut c1,
                &bounds,
                cfg.mutation_fraction,
                cfg.eta_mutation,
                &mut rng,
            );
            polynomial_mutation(
                &mut c2,
                &bounds,
                cfg.mutation_fraction,
                cfg.eta_mutation,
                &mut rng,
            );
            children.push(c1);
            children.push(c2);
        }
        let offspring = evaluate_all(problem, children, pool.as_ref())?;
        let mut merged: Vec<Individual> = pop.drain(..).chain(offspring).collect();
        let fronts = assign_rank_and_crowding(&mut merged);
        let mut chosen = Vec::with_capacity(n);
        for front in fronts {
            if chosen.len() + front.len() <= n {
                chosen.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&a, &b| {
                    merged[b]
                        .crowding
                        .total_cmp(&merged[a].crowding)
                        .then(a.cmp(&b))
                });
                chosen.extend(rest.into_iter().take(n - chosen.len()));
            }
            if chosen.len() == n {
                break;
            }
        }
        chosen.sort_unstable();
        let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
        pop = chosen
            .into_iter()
            .map(|i| slots[i].take().expect("each index chosen once"))
            .collect();
        assign_rank_and_crowding(&mut pop);
        history.push(best_per_objective(&pop, m));
        stopped_early = reached(&pop, &cfg.stop_thresholds);
    }

    let individuals = pop.iter().filter(|i| i.rank == 0).cloned().collect();
    Ok(ParetoArchive {
        individuals,
        population: pop,
        provenance: Provenance {
            subtask: opts.subtask.clone(),
            generation,
            seed: cfg.seed,
        },
        stopped_early,
        best_history: history,
    })
}
