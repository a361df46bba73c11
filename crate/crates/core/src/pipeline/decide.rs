use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::SubtaskSpec;
use crate::error::{Error, Result};
use crate::moo::{knee_points, Individual};

/// Deterministic replacement for hand-picking one member of a front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    /// Objective index ranked first inside the knee pool.
    pub priority: usize,
    /// Filter tiers of `(objective index, bound)`, met strictly; the first tier
    /// that anybody meets is applied, and none when nobody meets any.
    pub preferred: Vec<Vec<(usize, f64)>>,
    /// Knee candidates kept before ranking.
    pub pool: usize,
}

impl Criteria {
    pub fn for_spec(spec: &SubtaskSpec) -> Self {
        let index = |o| spec.objectives.iter().position(|x| *x == o);
        Self {
            priority: index(spec.priority).unwrap_or(0),
            preferred: spec
                .preferred
                .iter()
                .map(|tier| {
                    tier.iter()
                        .filter_map(|(o, b)| Some((index(*o)?, *b)))
                        .collect()
                })
                .collect(),
            pool: 10,
        }
    }
}

fn genome_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.genome
        .iter()
        .zip(&b.genome)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Feasible members, then the preferred filter, then the knee pool, then
/// `(total violation, priority objective, genome)`. Input order does not matter.
pub fn decide(members: &[Individual], c: &Criteria) -> Result<Individual> {
    if members.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let mut all: Vec<&Individual> = members.iter().collect();
    all.sort_by(|a, b| genome_cmp(a, b));
    all.dedup_by(|a, b| a.genome == b.genome);

    let feasible: Vec<&Individual> = all.iter().copied().filter(|i| i.feasible).collect();
    let mut cands = if feasible.is_empty() { all } else { feasible };
    for tier in &c.preferred {
        let kept: Vec<&Individual> = cands
            .iter()
            .copied()
            .filter(|i| tier.iter().all(|&(k, b)| i.objectives[k] < b))
            .collect();
        if !kept.is_empty() {
            cands = kept;
            break;
        }
    }
    let objs: Vec<Vec<f64>> = cands.iter().map(|i| i.objectives.clone()).collect();
    let pool: Vec<&Individual> = match knee_points(&objs, c.pool) {
        Ok(idx) => idx.into_iter().map(|k| cands[k]).collect(),
        Err(Error::DegenerateFront) => cands,
        Err(e) => return Err(e),
    };
    pool.into_iter()
        .min_by(|a, b| {
            a.total_violation()
                .total_cmp(&b.total_violation())
                .then(a.objectives[c.priority].total_cmp(&b.objectives[c.priority]))
                .then_with(|| genome_cmp(a, b))
        })
        .cloned()
        .ok_or(Error::EmptyArchive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moo::Evaluated;

    fn ind(g: f64, objs: Vec<f64>, viol: f64) -> Individual {
        Individual::new(vec![g], Evaluated::new(objs, vec![viol]))
    }

    #[test]
    fn single_member() {
        let a = ind(1.0, vec![3.0, 4.0], 0.0);
        assert_eq!(
            decide(
                &[a.clone()],
                &Criteria {
                    priority: 0,
                    preferred: vec![],
                    pool: 10
                }
            )
            .unwrap(),
            a
        );
    }

    #[test]
    fn priority_objective_wins_inside_pool() {
        let m = vec![
            ind(1.0, vec![0.0, 1.0], 0.0),
            ind(2.0, vec![0.3, 0.3], 0.0),
            ind(3.0, vec![1.0, 0.0], 0.0),
        ];
        let c = Criteria {
            priority: 1,
            preferred: vec![],
            pool: 10,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![3.0]);
        let c = Criteria {
            priority: 1,
            preferred: vec![],
            pool: 1,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![2.0]);
    }

    #[test]
    fn feasible_and_preferred_filters() {
        let m = vec![
            ind(1.0, vec![0.0, 0.0], 1.0),
            ind(2.0, vec![2.0, 0.5], 0.0),
            ind(3.0, vec![1.0, 0.005], 0.0),
        ];
        let c = Criteria {
            priority: 0,
            preferred: vec![vec![(1, 0.01)]],
            pool: 10,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![3.0]);
        let c = Criteria {
            priority: 0,
            preferred: vec![vec![(1, 0.0)]],
            pool: 10,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![3.0]);
        let c = Criteria {
            priority: 0,
            preferred: vec![vec![(1, 0.0)], vec![(0, 1.5)]],
            pool: 10,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![3.0]);
        let c = Criteria {
            priority: 0,
            preferred: vec![vec![(1, 0.0)], vec![(1, 0.6), (0, 3.0)]],
            pool: 10,
        };
        assert_eq!(decide(&m, &c).unwrap().genome, vec![3.0]);
    }

    #[test]
    fn empty_archive() {
        assert_eq!(
            decide(
                &[],
                &Criteria {
                    priority: 0,
                    preferred: vec![],
                    pool: 10
                }
            ),
            Err(Error::EmptyArchive)
        );
    }
}
