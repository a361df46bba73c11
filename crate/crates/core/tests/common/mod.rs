#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use clm_core::io::load_fixture;
use clm_core::linkage::{crank_condition, trace_bt, Branch, Linkage, ParamVector, Topology, Vec2};
use clm_core::metrics::{crossing_probability, evaluate_bt, Gait};
use clm_core::moo::{constraint_dominates, evolve, AlgoConfig, Evaluated, Problem};
use clm_core::pipeline::SubtaskSpec;
use clm_core::target::{cycloid_bt_target, CycloidSpec};
use clm_core::trajectory::{find_feature_points, multi_wt_layout, LegLayout, Trajectory, WtLayout};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::Rng;

pub const PERIOD: f64 = 2.0;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Runs `test` over `strategy`, turning a counterexample into a message.
pub fn check<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

/// Stephenson-I fixtures that trace with their declared branches.
pub fn six_bar_fixtures() -> Vec<(String, Linkage)> {
    let mut out = Vec::new();
    for name in [
        "stephenson1_x0",
        "stephenson1_x1",
        "stephenson1_x2",
        "stephenson1_x3",
        "stephenson1_hierarchical",
    ] {
        let Ok(file) = load_fixture(name) else {
            continue;
        };
        let Ok(p) = file.param_vector() else { continue };
        for b in branch_sets(&file.branches(), 2) {
            if let Ok(l) = Linkage::new(&p, &b) {
                if trace_bt(&l, 360, PERIOD)
                    .and_then(|bt| find_feature_points(&bt))
                    .is_ok()
                {
                    out.push((name.to_string(), l));
                    break;
                }
            }
        }
    }
    out
}

/// The declared flags first, then every other combination.
pub fn branch_sets(declared: &[Branch], n: usize) -> Vec<Vec<Branch>> {
    let flags = [Branch::Positive, Branch::Negative];
    let mut sets: Vec<Vec<Branch>> = Vec::new();
    if declared.len() == n {
        sets.push(declared.to_vec());
    }
    for b0 in flags {
        if n == 1 {
            sets.push(vec![b0]);
            continue;
        }
        for b1 in flags {
            sets.push(vec![b0, b1]);
        }
    }
    sets.dedup();
    let first = sets[0].clone();
    let mut rest: Vec<_> = sets.into_iter().skip(1).filter(|s| *s != first).collect();
    rest.insert(0, first);
    rest
}

pub fn four_bar_params(v: [f64; 10]) -> ParamVector {
    ParamVector::new(Topology::FourBar, v.to_vec()).unwrap()
}

pub const FOUR_BAR: [f64; 10] = [0.1, 3.0, 0.0, 0.0, 30.0, 90.0, 80.0, 100.0, 40.0, -5.0];

/// A random four-bar whose crank turns fully and whose curve has feature points.
pub fn random_four_bar(rng: &mut impl Rng) -> Option<(Linkage, Trajectory)> {
    let r1 = rng.gen_range(10.0..40.0);
    let r2 = rng.gen_range(60.0..150.0);
    let r3 = rng.gen_range(60.0..150.0);
    let r4 = rng.gen_range(60.0..150.0);
    if !crank_condition(r1, [r2, r3, r4]) {
        return None;
    }
    let v = [
        rng.gen_range(-PI..PI),
        rng.gen_range(-PI..PI),
        rng.gen_range(-100.0..100.0),
        rng.gen_range(-100.0..100.0),
        r1,
        r2,
        r3,
        r4,
        rng.gen_range(-50.0..150.0),
        rng.gen_range(-100.0..100.0),
    ];
    let branch = if rng.gen_bool(0.5) {
        Branch::Positive
    } else {
        Branch::Negative
    };
    let l = Linkage::new(&four_bar_params(v), &[branch]).ok()?;
    let bt = trace_bt(&l, 360, PERIOD).ok()?;
    find_feature_points(&bt).ok()?;
    Some((l, bt))
}

/// A fixture six-bar with every gene nudged by up to `rel` (angles by `rel` rad).
pub fn perturbed_six_bar(
    rng: &mut impl Rng,
    base: &Linkage,
    rel: f64,
) -> Option<(Linkage, Trajectory)> {
    let p = base.params();
    let v: Vec<f64> = p
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if i < 2 {
                x + rng.gen_range(-rel..rel)
            } else {
                x * (1.0 + rng.gen_range(-rel..rel))
            }
        })
        .collect();
    let pv = ParamVector::new(p.topology, v).ok()?;
    let l = Linkage::new(&pv, base.branches()).ok()?;
    let bt = trace_bt(&l, 360, PERIOD).ok()?;
    find_feature_points(&bt).ok()?;
    Some((l, bt))
}

/// Closed-form circle intersection, written independently of the solver.
pub fn circle_intersection(p1: Vec2, p2: Vec2, l1: f64, l2: f64, left: bool) -> Option<Vec2> {
    let (dx, dy) = (p2.x - p1.x, p2.y - p1.y);
    let d2 = dx * dx + dy * dy;
    let d = d2.sqrt();
    if d > l1 + l2 || d < (l1 - l2).abs() || d == 0.0 {
        return None;
    }
    // Law of cosines for the angle at p1 between p1→p2 and p1→q.
    let cos_a = ((l1 * l1 + d2 - l2 * l2) / (2.0 * l1 * d)).clamp(-1.0, 1.0);
    let base = dy.atan2(dx);
    let ang = if left {
        base + cos_a.acos()
    } else {
        base - cos_a.acos()
    };
    Some(Vec2::new(p1.x + l1 * ang.cos(), p1.y + l1 * ang.sin()))
}

/// Whether the driven loop assembles at every one of `n` crank angles:
/// the crank tip must stay within the dyad's reach of the far ground pivot.
pub fn loop_sweep_assembles(crank: f64, ground: f64, l2: f64, l3: f64, n: usize) -> bool {
    (0..n).all(|k| {
        let phi = TAU * k as f64 / n as f64;
        let dist = (crank * crank + ground * ground - 2.0 * crank * ground * phi.cos()).sqrt();
        dist <= l2 + l3 && dist >= (l2 - l3).abs()
    })
}

fn segment_hits_box(p: Vec2, q: Vec2, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    // Liang–Barsky clipping.
    let d = q - p;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (den, num) in [
        (-d.x, p.x - x0),
        (d.x, x1 - p.x),
        (-d.y, p.y - y0),
        (d.y, y1 - p.y),
    ] {
        if den == 0.0 {
            if num < 0.0 {
                return false;
            }
        } else {
            let t = num / den;
            if den < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Percentage of box positions, stepped by `step` over one stride, where an
/// `a × b` box standing on the ground touches no leg's swing arch or foothold
/// (anything dipping below ground counts as a touch).
pub fn psi_sweep_oracle(layout: &WtLayout, legs: &[&str], a: f64, b: f64, step: f64) -> f64 {
    let l = layout.stride;
    let arches: Vec<&Vec<Vec2>> = layout
        .legs
        .iter()
        .filter(|w| legs.contains(&w.id.as_str()))
        .map(|w| &w.points)
        .collect();
    let n = (l / step).round() as usize;
    let mut clear = 0usize;
    for k in 0..n {
        let x0 = k as f64 * step;
        let x1 = x0 + a;
        let hit = arches.iter().any(|pts| {
            (-3..=3).any(|copy| {
                let shift = Vec2::new(copy as f64 * l, 0.0);
                pts.windows(2)
                    .any(|w| segment_hits_box(w[0] + shift, w[1] + shift, x0, x1, -1e6, b))
            })
        });
        if !hit {
            clear += 1;
        }
    }
    100.0 * clear as f64 / n as f64
}

/// Walking trajectories of the cycloid with its swing lifted above the stance line.
pub fn cycloid_layout(layout: &LegLayout) -> WtLayout {
    let spec = CycloidSpec {
        flip: true,
        ..CycloidSpec::new(300.0, 100.0, PERIOD).unwrap()
    };
    let target = cycloid_bt_target(&spec, 720).unwrap();
    let fp = find_feature_points(&target).unwrap();
    multi_wt_layout(&target, &fp, layout).unwrap()
}

pub fn assert_close(what: &str, a: f64, b: f64, tol: f64) -> Result<(), TestCaseError> {
    if (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!("{what}: {a} vs {b}")))
    }
}

fn traced(l: &Linkage, n: usize) -> Trajectory {
    trace_bt(l, n, PERIOD).unwrap()
}

fn base_designs() -> Vec<Linkage> {
    let mut v = vec![Linkage::new(&four_bar_params(FOUR_BAR), &[Branch::Positive]).unwrap()];
    v.extend(six_bar_fixtures().into_iter().map(|(_, l)| l));
    v
}

/// Scaling the mechanism scales its curve and length measures and leaves
/// ratios, angles and shape distance unchanged.
pub fn prop_scale() -> Result<(), String> {
    let designs = base_designs();
    let target = cycloid_bt_target(&CycloidSpec::new(300.0, 100.0, PERIOD).unwrap(), 360).unwrap();
    check("scale", 24, (0..designs.len(), 0.2f64..5.0), |(k, s)| {
        let l = &designs[k];
        let scaled = Linkage::new(&l.params().scaled(s).unwrap(), l.branches()).unwrap();
        let (a, b) = (traced(l, 360), traced(&scaled, 360));
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_close("point", (p * s - q).norm(), 0.0, 1e-9 * s.max(1.0))?;
        }
        let layout = LegLayout::biped();
        let ra = evaluate_bt(&a, Some(&target), &layout).unwrap().report;
        let rb = evaluate_bt(&b, Some(&target.scaled(s)), &layout)
            .unwrap()
            .report;
        assert_close("l_s", rb.l_s, s * ra.l_s, 1e-9)?;
        assert_close("h_s", rb.h_s, s * ra.h_s, 1e-9)?;
        assert_close("I", rb.i, s * ra.i, 1e-9)?;
        assert_close("h_m", rb.h_m, s * ra.h_m, 1e-9)?;
        assert_close("S", rb.s, ra.s, 1e-9)?;
        assert_close("theta1", rb.theta1, ra.theta1, 1e-9)?;
        assert_close("mse", rb.mse.unwrap(), s * ra.mse.unwrap(), 1e-9)?;
        assert_close(
            "fourier",
            rb.fourier_distance.unwrap(),
            ra.fourier_distance.unwrap(),
            1e-6,
        )?;
        Ok(())
    })
}

/// Moving the frame moves the curve and leaves every report value unchanged.
pub fn prop_translation() -> Result<(), String> {
    let designs = base_designs();
    check(
        "translation",
        24,
        (0..designs.len(), -500.0f64..500.0, -500.0f64..500.0),
        |(k, dx, dy)| {
            let l = &designs[k];
            let moved =
                Linkage::new(&l.params().translated(dx, dy).unwrap(), l.branches()).unwrap();
            let (a, b) = (traced(l, 360), traced(&moved, 360));
            for (p, q) in a.points.iter().zip(&b.points) {
                assert_close("point", (p + Vec2::new(dx, dy) - q).norm(), 0.0, 1e-9)?;
            }
            let layout = LegLayout::quad_trot();
            let ra = evaluate_bt(&a, None, &layout).unwrap().report;
            let rb = evaluate_bt(&b, None, &layout).unwrap().report;
            for (what, x, y) in [
                ("l_s", ra.l_s, rb.l_s),
                ("h_s", ra.h_s, rb.h_s),
                ("S", ra.s, rb.s),
                ("I", ra.i, rb.i),
                ("h_m", ra.h_m, rb.h_m),
                ("h_bar", ra.h_bar, rb.h_bar),
                ("psi2", ra.psi2, rb.psi2),
                ("psi4", ra.psi4, rb.psi4),
            ] {
                assert_close(what, x, y, 1e-7)?;
            }
            Ok(())
        },
    )
}

/// A wider or taller obstacle is never easier to cross.
pub fn prop_psi_monotone() -> Result<(), String> {
    let layouts: Vec<WtLayout> = base_designs()
        .iter()
        .map(|l| {
            let bt = traced(l, 360);
            let fp = find_feature_points(&bt).unwrap();
            multi_wt_layout(&bt, &fp, &LegLayout::quad_trot()).unwrap()
        })
        .chain([cycloid_layout(&LegLayout::biped())])
        .collect();
    check(
        "psi monotone",
        64,
        (
            0..layouts.len(),
            0.0f64..120.0,
            0.0f64..120.0,
            0.0f64..40.0,
            0.0f64..40.0,
        ),
        |(k, a, b, da, db)| {
            let w = &layouts[k];
            for gait in [Gait::Biped, Gait::Quad] {
                let base = crossing_probability(w, a, b, gait).psi;
                let wider = crossing_probability(w, a + da, b, gait).psi;
                let taller = crossing_probability(w, a, b + db, gait).psi;
                prop_assert!(
                    wider <= base + 1e-9,
                    "{gait:?} a {a}+{da}: {wider} > {base}"
                );
                prop_assert!(
                    taller <= base + 1e-9,
                    "{gait:?} b {b}+{db}: {taller} > {base}"
                );
                prop_assert!((0.0..=100.0 + 1e-9).contains(&base));
            }
            Ok(())
        },
    )
}

/// Central-difference velocities converge at second order: on a circle the
/// error times N² is constant, and on traced curves successive grid
/// refinements shrink the change four-fold.
pub fn prop_grid_convergence() -> Result<(), String> {
    let designs = base_designs();
    check(
        "grid convergence",
        16,
        (0..designs.len(), 120usize..400, 10.0f64..200.0),
        |(k, n, r)| {
            let circle = |n: usize| {
                let pts = (0..n)
                    .map(|j| {
                        let a = TAU * j as f64 / n as f64;
                        Vec2::new(r * a.cos(), r * a.sin())
                    })
                    .collect();
                Trajectory::closed(pts, PERIOD).unwrap()
            };
            let exact = TAU * r / PERIOD;
            let e1 = (circle(n).velocity(0).norm() - exact).abs();
            let e2 = (circle(2 * n).velocity(0).norm() - exact).abs();
            prop_assert!((e1 / e2 - 4.0).abs() < 0.05, "circle ratio {}", e1 / e2);
            let l = &designs[k];
            let v = |m: usize| traced(l, m).velocity(0);
            let (v1, v2, v4) = (v(n), v(2 * n), v(4 * n));
            let ratio = (v1 - v2).norm() / (v2 - v4).norm();
            prop_assert!(
                (3.0..5.0).contains(&ratio),
                "traced ratio {ratio} at n = {n}"
            );
            Ok(())
        },
    )
}

struct Toy {
    bounds: Vec<(f64, f64)>,
    m: usize,
}

impl Problem for Toy {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        self.m
    }

    fn evaluate(&self, x: &[f64]) -> Evaluated {
        let g = 1.0 + x[1..].iter().map(|v| v * v).sum::<f64>();
        let mut f = vec![x[0], g * (1.0 - x[0].sqrt())];
        if self.m == 3 {
            f.push(g * (x[0] - 0.5).powi(2));
        }
        Evaluated::new(f, vec![0.3 - x[0] - x[1]])
    }
}

/// No archive member constraint-dominates another.
pub fn prop_archive_nondominated() -> Result<(), String> {
    check(
        "archive non-domination",
        12,
        (any::<u64>(), 2usize..4, 2usize..6),
        |(seed, m, d)| {
            let toy = Toy {
                bounds: vec![(0.0, 1.0); d],
                m,
            };
            let cfg = AlgoConfig {
                population: 24,
                generations: 15,
                seed,
                ..AlgoConfig::default()
            };
            let archive = evolve(&toy, &cfg).unwrap();
            prop_assert!(!archive.individuals.is_empty());
            for a in &archive.individuals {
                for b in &archive.individuals {
                    prop_assert!(
                        !constraint_dominates(a, b),
                        "{:?} dominates {:?}",
                        a.objectives,
                        b.objectives
                    );
                }
            }
            Ok(())
        },
    )
}

/// Each later subtask searches inside the previous subtask's box, and every box holds the incumbent.
pub fn prop_box_nesting() -> Result<(), String> {
    let t = Topology::StephensonI;
    let full = t.default_bounds();
    let genome = full.iter().map(|&(lo, hi)| lo..=hi).collect::<Vec<_>>();
    check("box nesting", 128, genome, |x| {
        let boxes: Vec<_> = [SubtaskSpec::s1(), SubtaskSpec::s2(), SubtaskSpec::s3()]
            .iter()
            .map(|s| s.search_box.unwrap().bounds(t, &x, &full))
            .collect();
        for b in &boxes {
            for (i, (&(lo, hi), &(flo, fhi))) in b.iter().zip(&full).enumerate() {
                prop_assert!(lo <= x[i] && x[i] <= hi);
                prop_assert!(flo <= lo && hi <= fhi);
            }
        }
        for w in boxes.windows(2) {
            for (outer, inner) in w[0].iter().zip(&w[1]) {
                prop_assert!(outer.0 <= inner.0 && inner.1 <= outer.1);
            }
        }
        Ok(())
    })
}

pub fn all_properties() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("scale equivariance", prop_scale()),
        ("translation equivariance", prop_translation()),
        ("psi monotonicity", prop_psi_monotone()),
        ("grid convergence", prop_grid_convergence()),
        ("archive non-domination", prop_archive_nondominated()),
        ("box nesting", prop_box_nesting()),
    ]
}
