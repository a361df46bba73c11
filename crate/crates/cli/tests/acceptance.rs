//! End-to-end acceptance report through the `clm` binary.

mod common;

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use common::{clm, csv_points, fixture, fixtures, json, outputs};

const SEEDS: [u64; 3] = [1, 2, 3];
const CYCLOID_TOL: f64 = 1e-12;
const STEP_LAW_TOL: f64 = 1e-9;
const REPRO_TOL: f64 = 0.10;

enum Status {
    Pass,
    Fail,
    Skip,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn objective(report: &serde_json::Value, label: &str, id: &str) -> Option<f64> {
    report["designs"]
        .as_array()?
        .iter()
        .find(|d| d["label"] == label)?["objectives"]
        .as_array()?
        .iter()
        .find(|p| p[0] == id)?[1]
        .as_f64()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> (i32, std::path::PathBuf) {
    let out = dir.join(name);
    let mut args = vec!["synth", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (clm(&args).code, out)
}

fn ac1(hier: &Path) -> (Status, String) {
    // Swing half of the written target, samples n/2..n, is the cycloid at T − t.
    let pts = csv_points(&hier.join("trace_target.csv"));
    let n = pts.len();
    let (l, h, t_end) = (300.0, 100.0, 2.0);
    let mut worst = 0.0_f64;
    for (k, &(x, y)) in pts.iter().enumerate().skip(n / 2) {
        let t = t_end * (n - k) as f64 / (n / 2) as f64;
        let th = TAU * t / t_end;
        let (ox, oy) = (l * (th - th.sin()) / TAU, -h * (th / 2.0).sin().powi(2));
        worst = worst.max((x - ox).hypot(y - oy) / l);
    }
    (
        status(n > 0 && worst <= CYCLOID_TOL),
        format!("{n} target samples, max rel error {worst:.1e}"),
    )
}

fn ac2(dir: &Path) -> (Status, String) {
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for name in [
        "stephenson1_x0",
        "stephenson1_x1",
        "stephenson1_x2",
        "stephenson1_hierarchical",
    ] {
        let f = fixture(&format!("{name}.json"));
        let out = dir.join(format!("trace_{name}"));
        if clm(&["trace", &f, "--wt", "--out", out.to_str().unwrap()]).code != 0 {
            continue;
        }
        let e = clm(&["eval", &f, "--n", "360", "--json"]);
        let Ok(v) = serde_json::from_str::<serde_json::Value>(&e.stdout) else {
            continue;
        };
        let l_s = v["report"]["l_s"].as_f64().unwrap();
        let wt = csv_points(&out.join("wt.csv"));
        let step = (wt[wt.len() - 1].0 - wt[0].0).abs();
        worst = worst.max((step - 2.0 * l_s).abs() / (2.0 * l_s));
        checked += 1;
    }
    (
        status(checked >= 3 && worst <= STEP_LAW_TOL),
        format!("{checked} fixtures, worst rel error {worst:.1e}"),
    )
}

fn ac3(dir: &Path) -> (Status, String) {
    let (mut traced, mut kinematic, mut invalid, mut other) = (0, 0, 0, Vec::new());
    let mut paths: Vec<_> = std::fs::read_dir(fixtures())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for p in &paths {
        let out = dir.join("ac3");
        let o = clm(&["trace", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        match o.code {
            0 => traced += 1,
            2 => kinematic += 1,
            1 if o.stderr.contains("invalid parameters") => invalid += 1,
            c => other.push(format!(
                "{} exit {c}",
                p.file_stem().unwrap().to_string_lossy()
            )),
        }
    }
    (
        status(other.is_empty() && traced > 0),
        format!(
            "{traced} traced, {kinematic} rejected as kinematically infeasible, \
             {invalid} rejected as invalid input, {} other {other:?}",
            other.len()
        ),
    )
}

fn ac4() -> (Status, String) {
    let o = clm(&["eval", &fixture("stephenson1_x1.json"), "--json"]);
    let Ok(v) = serde_json::from_str::<serde_json::Value>(&o.stdout) else {
        return (Status::Fail, o.stderr);
    };
    let r = &v["report"];
    let f = |k: &str| r[k].as_f64().unwrap_or(f64::NAN);
    let consistent = (f("S") - 100.0 * f("h_s") / f("l_s")).abs() < 1e-9;
    let psi_ok = (0.0..=100.0).contains(&f("psi2")) && (0.0..=100.0).contains(&f("psi4"));
    (
        status(consistent && psi_ok),
        format!(
            "S {:.4} = 100·h_s/l_s: {consistent}; psi2 {:.2} psi4 {:.2}",
            f("S"),
            f("psi2"),
            f("psi4")
        ),
    )
}

fn ac5(runs: &[(u64, i32, std::path::PathBuf)]) -> (Status, String) {
    let bounds = [
        ("f1", 6.0),
        ("f2", 5.0),
        ("f3", 5.0),
        ("f4", 6.5),
        ("f5", 20.0),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    let (mut mse, mut imp) = (Vec::new(), Vec::new());
    for (seed, code, out) in runs {
        let report = json(&out.join("report.json"));
        let x3 = bounds
            .iter()
            .map(|(id, _)| objective(&report, "x3", id))
            .collect::<Option<Vec<_>>>();
        match x3 {
            Some(m) => {
                let sat = m.iter().zip(&bounds).all(|(v, (_, b))| v < b);
                ok &= sat;
                mse.push((objective(&report, "x0", "f1").unwrap(), m[0]));
                imp.push((objective(&report, "x0", "f5").unwrap(), m[4]));
                notes.push(format!(
                    "seed {seed}: x3 f1 {:.2} f4 {:.2} f5 {:.2} (constraints {sat})",
                    m[0], m[3], m[4]
                ));
            }
            None => {
                ok = false;
                let last = report["designs"]
                    .as_array()
                    .and_then(|d| d.last())
                    .map(|d| d["label"].clone());
                let err = json(&out.join("manifest.json"))["error"].clone();
                notes.push(format!("seed {seed}: exit {code}, last {last:?}, {err}"));
            }
        }
    }
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.get(v.len() / 2).copied().unwrap_or(f64::NAN)
    };
    let improved = !mse.is_empty()
        && median(mse.iter().map(|p| p.1).collect()) < median(mse.iter().map(|p| p.0).collect())
        && median(imp.iter().map(|p| p.1).collect())
            < 0.25 * median(imp.iter().map(|p| p.0).collect());
    (status(ok && improved), notes.join(" | "))
}

fn ac6(dir: &Path, runs: &[(u64, i32, std::path::PathBuf)]) -> (Status, String) {
    let mut wins = 0;
    let mut notes = Vec::new();
    for (seed, _, out) in runs {
        let s = seed.to_string();
        let (code, single) = synth(
            dir,
            &format!("single_{seed}"),
            &["--single-level", "--seed", &s, "--generations", "600"],
        );
        let hier = json(&out.join("report.json"));
        let direct = json(&single.join("report.json"));
        let get = |r: &serde_json::Value, label: &str| {
            ["f1", "f4", "f5"].map(|id| objective(r, label, id))
        };
        let d = get(&direct, "min_f1");
        match (get(&hier, "x3"), d) {
            ([Some(a), Some(b), Some(c)], [Some(x), Some(y), Some(z)]) => {
                let (h, s) = ([a, b, c], [x, y, z]);
                let dom =
                    h.iter().zip(&s).all(|(p, q)| p <= q) && h.iter().zip(&s).any(|(p, q)| p < q);
                wins += dom as usize;
                notes.push(format!(
                    "seed {seed}: hier {a:.2}/{b:.2}/{c:.2} vs direct {x:.2}/{y:.2}/{z:.2}"
                ));
            }
            (_, [Some(x), Some(y), Some(z)]) => {
                notes.push(format!("seed {seed}: no x3; direct {x:.2}/{y:.2}/{z:.2}"))
            }
            _ => notes.push(format!("seed {seed}: single-level exit {code}")),
        }
    }
    (
        status(wins >= 2),
        format!("{wins}/3 dominate | {}", notes.join(" | ")),
    )
}

fn ac7(dir: &Path) -> (Status, String) {
    let base = ["--seed", "5", "--population", "16", "--generations", "4"];
    let (c1, a) = synth(dir, "jobs1", &[&base[..], &["--jobs", "1"]].concat());
    let (c8, b) = synth(dir, "jobs8", &[&base[..], &["--jobs", "8"]].concat());
    let (fa, fb) = (outputs(&a), outputs(&b));
    let same = c1 == c8 && !fa.is_empty() && fa == fb;
    (
        status(same),
        format!("{} files, exit {c1}/{c8}, byte-identical: {same}", fa.len()),
    )
}

fn ac8(dir: &Path) -> (Status, String) {
    let (mut reached, mut devs, mut audits, mut notes) = (0, Vec::new(), true, Vec::new());
    for seed in SEEDS {
        let out = dir.join(format!("rtclm_{seed}"));
        let s = seed.to_string();
        let o = clm(&[
            "rtclm",
            "--h6",
            "50",
            "--h4",
            "220",
            "--seed",
            &s,
            "--out",
            out.to_str().unwrap(),
        ]);
        let Ok(text) = std::fs::read_to_string(out.join("result.json")) else {
            notes.push(format!("seed {seed}: exit {} {}", o.code, o.stderr.trim()));
            continue;
        };
        let r: serde_json::Value = serde_json::from_str(&text).unwrap();
        let (d6, d4) = (
            r["deviations"][0].as_f64().unwrap(),
            r["deviations"][1].as_f64().unwrap(),
        );
        let hit = r["stopped_early"] == true && d6.abs() < 0.5 && d4.abs() < 0.5;
        reached += hit as usize;
        devs.push((d6, d4));
        let a = &r["audit"];
        let audit = a["coupling_residual"].as_f64().is_some_and(|v| v < 1e-9)
            && a["switching_gap"].as_f64().is_some_and(|v| v < 1e-9)
            && a["crank_ok"] == true
            && a["sweep_clean"] == true
            && a["constraints_ok"] == true;
        audits &= audit;
        notes.push(format!(
            "seed {seed}: exit {} dh6 {d6:+.3} dh4 {d4:+.3} audit {audit}",
            o.code
        ));
    }
    let n = (2 * devs.len()).max(1) as f64;
    let mabs = devs.iter().map(|(a, b)| a.abs() + b.abs()).sum::<f64>() / n;
    let mrel = devs
        .iter()
        .map(|(a, b)| a.abs() / 50.0 + b.abs() / 220.0)
        .sum::<f64>()
        / n;
    (
        status(reached >= 1 && !devs.is_empty() && mabs <= 1.0 && mrel <= 0.07 && audits),
        format!(
            "{reached}/3 reached, mean |dev| {mabs:.2} mm, rel {:.1} % | {}",
            100.0 * mrel,
            notes.join(" | ")
        ),
    )
}

fn ac9() -> (Status, String) {
    let x3 = clm(&[
        "eval",
        &fixture("stephenson1_x3.json"),
        "--target",
        &fixture("inputs/cycloid.json"),
        "--json",
    ]);
    let case = clm(&["eval", &fixture("rtclm_case1.json"), "--json"]);
    let x3_row = match serde_json::from_str::<serde_json::Value>(&x3.stdout) {
        Ok(v) => {
            let r = &v["report"];
            let got = [r["mse"].as_f64(), r["S"].as_f64(), r["I"].as_f64()];
            let m = got
                .iter()
                .zip([3.97, 1.93, 0.91])
                .all(|(g, p)| g.is_some_and(|g| (g - p).abs() <= REPRO_TOL * p));
            format!(
                "X3 MSE {:?} S {:?} I {:?} (reported 3.97/1.93/0.91, match {m})",
                got[0], got[1], got[2]
            )
        }
        Err(_) => format!("X3 exit {}: {}", x3.code, x3.stderr.trim()),
    };
    let case_row = match serde_json::from_str::<serde_json::Value>(&case.stdout) {
        Ok(v) => format!("case 1 h6 {} h4 {} (reported 50.1/220.1)", v["h6"], v["h4"]),
        Err(_) => format!("case 1 exit {}: {}", case.code, case.stderr.trim()),
    };
    // Either a report or a kinematic diagnosis counts as a recorded outcome.
    let recorded = [&x3, &case].iter().all(|o| o.code == 0 || o.code == 2);
    (status(recorded), format!("{x3_row} | {case_row}"))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut failed = 0;
    let mut print = |id: &str, t: Instant, (s, detail): (Status, String)| {
        let word = match s {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("{id} {word} ({:.1} s) {detail}", t.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    let runs: Vec<_> = SEEDS
        .iter()
        .map(|s| {
            let (code, out) = synth(d, &format!("hier_{s}"), &["--seed", &s.to_string()]);
            (*s, code, out)
        })
        .collect();
    let synth_time = t;

    print("AC-1", Instant::now(), ac1(&runs[0].2));
    print("AC-2", Instant::now(), ac2(d));
    print("AC-3", Instant::now(), ac3(d));
    print("AC-4", Instant::now(), ac4());
    print("AC-5", synth_time, ac5(&runs));
    print("AC-6", Instant::now(), ac6(d, &runs));
    print("AC-7", Instant::now(), ac7(d));
    print("AC-8", Instant::now(), ac8(d));
    print("AC-9", Instant::now(), ac9());
    print(
        "AC-10",
        Instant::now(),
        (
            Status::Skip,
            "property suites are library-level; see clm-core".into(),
        ),
    );
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
