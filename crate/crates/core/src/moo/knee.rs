use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Signed distance of each point to the chord (or hyperplane) through the
/// front's extreme points after min-max normalisation; positive values lie
/// on the side of the ideal point.
pub fn knee_distances(objs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = objs.len();
    if n == 0 {
        return Err(Error::EmptyArchive);
    }
    let m = objs[0].len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for o in objs {
        for k in 0..m {
            lo[k] = lo[k].min(o[k]);
            hi[k] = hi[k].max(o[k]);
        }
    }
    let ranges: Vec<f64> = (0..m).map(|k| hi[k] - lo[k]).collect();
    if ranges.iter().all(|&r| r <= 0.0) {
        return Err(Error::DegenerateFront);
    }
    let norm: Vec<DVector<f64>> = objs
        .iter()
        .map(|o| {
            DVector::from_iterator(
                m,
                (0..m).map(|k| {
                    if ranges[k] > 0.0 {
                        (o[k] - lo[k]) / ranges[k]
                    } else {
                        0.0
                    }
                }),
            )
        })
        .collect();
    if m == 1 {
        return Ok(norm.iter().map(|v| -v[0]).collect());
    }
    // Extreme point of axis k: the member minimising objective k (ties by the other axes' sum, then index).
    let extremes: Vec<usize> = (0..m)
        .map(|k| {
            (0..n)
                .min_by(|&a, &b| {
                    norm[a][k]
                        .total_cmp(&norm[b][k])
                        .then(norm[a].sum().total_cmp(&norm[b].sum()))
                        .then(a.cmp(&b))
                })
                .expect("non-empty front")
        })
        .collect();
    // Hyperplane w·x = 1 through the extremes; falls back to Σx = 1 when singular.
    let a = DMatrix::from_fn(m, m, |r, c| norm[extremes[r]][c]);
    let w = a
        .clone()
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .filter(|w| w.iter().all(|v| v.is_finite()) && w.norm() > 1e-12)
        .unwrap_or_else(|| DVector::from_element(m, 1.0));
    let wn = w.norm();
    Ok(norm.iter().map(|x| (1.0 - w.dot(x)) / wn).collect())
}

/// Indices of the `k` members farthest from the extreme chord/hyperplane,
/// best first; ties keep index order.
pub fn knee_points(objs: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    let d = knee_distances(objs)?;
    let mut idx: Vec<usize> = (0..objs.len()).collect();
    idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    idx.truncate(k.max(1));
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_knee() {
        let f = vec![vec![0.0, 1.0], vec![0.2, 0.2], vec![1.0, 0.0]];
        assert_eq!(knee_points(&f, 1).unwrap(), vec![1]);
        let scaled: Vec<Vec<f64>> = f.iter().map(|v| vec![v[0] * 10.0, v[1]]).collect();
        assert_eq!(knee_points(&scaled, 1).unwrap(), vec![1]);
    }

    #[test]
    fn three_objective_knee() {
        let f = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.1, 0.1, 0.1],
            vec![0.4, 0.4, 0.3],
        ];
        assert_eq!(knee_points(&f, 1).unwrap(), vec![3]);
    }

    #[test]
    fn degenerate_front() {
        assert_eq!(
            knee_points(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1),
            Err(Error::DegenerateFront)
        );
    }

    #[test]
    fn single_objective_sorts_by_value() {
        assert_eq!(
            knee_points(&[vec![3.0], vec![1.0], vec![2.0]], 3).unwrap(),
            vec![1, 2, 0]
        );
    }
}
