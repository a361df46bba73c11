use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::trajectory::Trajectory;

pub const DEFAULT_HARMONICS: usize = 7;

/// Complex Fourier coefficients `Z_k`, `k = ±1..=±K`, of `x + iy`, ordered `[1, -1, 2, -2, …]`.
pub fn fourier_descriptors(curve: &Trajectory, harmonics: usize) -> Vec<(i32, Complex64)> {
    let n = curve.len() as f64;
    let mut out = Vec::with_capacity(2 * harmonics);
    for h in 1..=harmonics as i32 {
        for k in [h, -h] {
            let sum =
                curve
                    .points
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, p)| {
                        acc + Complex64::new(p.x, p.y)
                            * Complex64::from_polar(1.0, -TAU * k as f64 * j as f64 / n)
                    });
            out.push((k, sum / n));
        }
    }
    out
}

fn normalized(d: Vec<(i32, Complex64)>) -> Vec<(i32, Complex64)> {
    let norm = d.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return d;
    }
    d.into_iter().map(|(k, z)| (k, z / norm)).collect()
}

/// Shape distance between two closed curves, invariant to translation,
/// scale, rotation and start point.
///
/// Both descriptor sets are scaled to unit energy; the candidate is then
/// rotated and phase-shifted to best fit the target, and the Euclidean gap
/// between descriptor vectors is returned (0 for similar curves, at most 2).
pub fn fourier_distance(candidate: &Trajectory, target: &Trajectory, harmonics: usize) -> f64 {
    let a = normalized(fourier_descriptors(candidate, harmonics));
    let b = normalized(fourier_descriptors(target, harmonics));
    // S(τ) = Σ conj(b_k)·a_k·e^{ikτ}; the best rotation makes S real, so maximise |S|.
    let c: Vec<(f64, Complex64)> = a
        .iter()
        .zip(&b)
        .map(|((k, za), (_, zb))| (*k as f64, zb.conj() * za))
        .collect();
    let s = |tau: f64| {
        c.iter().fold(Complex64::new(0.0, 0.0), |acc, (k, ck)| {
            acc + ck * Complex64::from_polar(1.0, k * tau)
        })
    };
    let ds = |tau: f64| {
        c.iter().fold(Complex64::new(0.0, 0.0), |acc, (k, ck)| {
            acc + ck * Complex64::new(0.0, *k) * Complex64::from_polar(1.0, k * tau)
        })
    };
    // Derivative of |S|² up to a factor 2.
    let slope = |tau: f64| (s(tau).conj() * ds(tau)).re;

    let grid = 64 * harmonics.max(1);
    let step = TAU / grid as f64;
    let mut best_tau = 0.0;
    let mut best = f64::NEG_INFINITY;
    for g in 0..grid {
        let tau = g as f64 * step;
        let v = s(tau).norm_sqr();
        if v > best {
            best = v;
            best_tau = tau;
        }
    }
    // Bisect the slope inside the bracketing cells around the best grid node.
    let mut candidates = vec![best_tau];
    for (lo, hi) in [(best_tau - step, best_tau), (best_tau, best_tau + step)] {
        let (mut lo, mut hi) = (lo, hi);
        let (flo, fhi) = (slope(lo), slope(hi));
        if flo > 0.0 && fhi < 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            candidates.push(0.5 * (lo + hi));
        }
    }
    candidates
        .into_iter()
        .map(|tau| {
            let st = s(tau);
            let rot = if st.norm() > 0.0 {
                st.conj() / st.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            a.iter()
                .zip(&b)
                .map(|((k, za), (_, zb))| {
                    (za * Complex64::from_polar(1.0, *k as f64 * tau) * rot - zb).norm_sqr()
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}
