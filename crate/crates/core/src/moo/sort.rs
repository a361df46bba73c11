use super::Individual;

/// Plain Pareto dominance for minimisation.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Feasible beats infeasible, lower total violation beats higher, and
/// feasible pairs compare by Pareto dominance.
pub fn constraint_dominates(a: &Individual, b: &Individual) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.total_violation() < b.total_violation(),
        (true, true) => pareto_dominates(&a.objectives, &b.objectives),
    }
}

/// Fronts of indices under constraint-domination; each front is sorted.
pub fn nondominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constraint_dominates(&pop[i], &pop[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if constraint_dominates(&pop[j], &pop[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(objs: &[&[f64]]) -> Vec<f64> {
    let n = objs.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = objs[0].len();
    let mut dist = vec![0.0; n];
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..m {
        idx.sort_by(|&a, &b| objs[a][k].total_cmp(&objs[b][k]).then(a.cmp(&b)));
        let (lo, hi) = (objs[idx[0]][k], objs[idx[n - 1]][k]);
        dist[idx[0]] = f64::INFINITY;
        dist[idx[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            dist[idx[w]] += (objs[idx[w + 1]][k] - objs[idx[w - 1]][k]) / range;
        }
    }
    dist
}
