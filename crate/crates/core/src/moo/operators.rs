use rand::Rng;

/// Bounded simulated binary crossover, applied to each gene pair with
/// probability `p`.
pub fn sbx_crossover(
    a: &[f64],
    b: &[f64],
    bounds: &[(f64, f64)],
    p: f64,
    eta: f64,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if rng.gen::<f64>() >= p {
            continue;
        }
        let (x1, x2) = (a[i].min(b[i]), a[i].max(b[i]));
        if x2 - x1 < 1e-14 || hi <= lo {
            continue;
        }
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (x1 - lo) / (x2 - x1));
        let bq2 = spread(1.0 + 2.0 * (hi - x2) / (x2 - x1));
        let y1 = (0.5 * ((x1 + x2) - bq1 * (x2 - x1))).clamp(lo, hi);
        let y2 = (0.5 * ((x1 + x2) + bq2 * (x2 - x1))).clamp(lo, hi);
        if rng.gen::<bool>() {
            c1[i] = y2;
            c2[i] = y1;
        } else {
            c1[i] = y1;
            c2[i] = y2;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation, applied to each gene with probability `p`.
pub fn polynomial_mutation(
    x: &mut [f64],
    bounds: &[(f64, f64)],
    p: f64,
    eta: f64,
    rng: &mut impl Rng,
) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if rng.gen::<f64>() >= p || hi <= lo {
            continue;
        }
        let span = hi - lo;
        let (d1, d2) = ((*v - lo) / span, (hi - *v) / span);
        let u: f64 = rng.gen();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (*v + dq * span).clamp(lo, hi);
    }
}
